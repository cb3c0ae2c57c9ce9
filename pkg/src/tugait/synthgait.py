"""Seeded generators for validation data.

Three kinds of synthetic input: a 3D walking pose series with known ground
truth, correlated Gaussian samples for checking the dependence estimators,
and a cohort of walking videos whose TUG scores drive gait parameters
through monotone long-tailed curves (skewed toward healthy scores with a
small high-risk tail). Everything is a pure function of its parameter
record, including the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, TugaitError
from .gaitfeat import (
    DEFAULT_THRESHOLD_HZ,
    DEFAULT_WINDOW_S,
    FeatureVector,
    PoseSeries,
    extract_features,
)

_HIP_HALF_WIDTH_M = 0.10
_HIP_HEIGHT_M = 0.90
_HEAD_OFFSET_M = 0.75
_MIN_STRIDE_SPEED_MPS = 0.05


@dataclass(frozen=True)
class WalkerParams:
    """Kinematic parameters of a synthetic straight-line walker."""

    speed_mps: float = 1.0
    step_length_m: float = 0.6
    step_period_s: float = 0.6
    v_amplitude_m: float = 0.02
    ml_amplitude_m: float = 0.02
    speed_jitter_mps: float = 0.0   # per-stride speed standard deviation
    sensor_noise_m: float = 0.0
    duration_s: float = 30.0
    fps: float = 30.0
    seed: int = 0

    def __post_init__(self):
        for name in ("speed_mps", "step_length_m", "step_period_s", "duration_s", "fps"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("v_amplitude_m", "ml_amplitude_m", "speed_jitter_mps", "sensor_noise_m"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be non-negative")
        implied = self.step_length_m / self.step_period_s
        if abs(self.speed_mps - implied) > 0.2 * self.speed_mps:
            raise ParameterError(
                f"speed {self.speed_mps} m/s inconsistent with step_length/step_period "
                f"= {implied:.3f} m/s (>20% off)")


def _step_speeds(params: WalkerParams, rng: np.random.Generator) -> np.ndarray:
    # Per-step draws scaled by sqrt(2) so a stride (two consecutive steps)
    # has mean-speed standard deviation equal to speed_jitter_mps.
    n_steps = int(np.ceil(params.duration_s / params.step_period_s)) + 2
    sigma_step = params.speed_jitter_mps * np.sqrt(2.0)
    speeds = params.speed_mps + sigma_step * rng.standard_normal(n_steps)
    return np.maximum(speeds, _MIN_STRIDE_SPEED_MPS)


def generate_walker_with_truth(params: WalkerParams) -> tuple:
    """Generate a pose series plus the ground truth it was built from.

    The walker translates along world +x with per-stride speeds, with
    sinusoidal vertical oscillation at the step frequency and mediolateral
    sway at half of it. Truth records the realized mean speed, stride time,
    effective step length and stride-speed spread.
    """
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    n = int(round(params.duration_s * params.fps)) + 1
    t = np.arange(n) / params.fps

    stride_period = 2.0 * params.step_period_s
    if params.speed_jitter_mps > 0.0:
        speeds = _step_speeds(params, rng)
        sample_speed = speeds[np.minimum((t / params.step_period_s).astype(int),
                                         speeds.size - 1)]
        ap = np.concatenate([[0.0], np.cumsum(sample_speed[:-1] * np.diff(t))])
        used = speeds[: int(np.ceil(params.duration_s / params.step_period_s))]
        stride_speed_sd = float((0.5 * (used[:-1] + used[1:])).std())
    else:
        ap = params.speed_mps * t  # exact product keeps the motion numerically linear
        stride_speed_sd = 0.0
    ml = params.ml_amplitude_m * np.sin(np.pi * t / params.step_period_s)
    # Cosine phase puts vertical peaks on step boundaries, so detected stride
    # intervals line up with the per-stride speed segments.
    v = _HIP_HEIGHT_M + params.v_amplitude_m * np.cos(2.0 * np.pi * t / params.step_period_s)

    center = np.column_stack([ap, ml, v])
    offset = np.array([0.0, _HIP_HALF_WIDTH_M, 0.0])
    joints = {
        "left_hip": center + offset,
        "right_hip": center - offset,
        "head": center + np.array([0.0, 0.0, _HEAD_OFFSET_M]),
    }
    if params.sensor_noise_m > 0.0:
        for name in sorted(joints):
            joints[name] = joints[name] + params.sensor_noise_m * rng.standard_normal((n, 3))

    series = PoseSeries(timestamps=t, joints=joints, frame_rate=params.fps,
                        subject_id="walker")
    mean_speed = float((ap[-1] - ap[0]) / (t[-1] - t[0]))
    truth = {
        "gait_speed": mean_speed,
        "stride_time": stride_period,
        "step_length": mean_speed * params.step_period_s,
        "stride_frequency": 1.0 / stride_period,
        "speed_variability": stride_speed_sd,
    }
    return series, truth


def generate_walker(params: WalkerParams) -> PoseSeries:
    """Pose series only; see generate_walker_with_truth for the ground truth."""
    return generate_walker_with_truth(params)[0]


def gaussian_samples(rho: float, n: int, seed: int = 0) -> np.ndarray:
    """n draws from a standard bivariate Gaussian with correlation rho."""
    if not abs(rho) < 1.0:
        raise ParameterError(f"|rho| must be < 1, got {rho}")
    if n < 10:
        raise ParameterError(f"n must be >= 10, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    z = rng.standard_normal((n, 2))
    return np.column_stack([z[:, 0], rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]])


@dataclass(frozen=True)
class CohortParams:
    """Shape of a synthetic cohort: score marginal plus score-to-gait coupling."""

    n_videos: int = 146
    seed: int = 0
    duration_s: float = 30.0
    fps: float = 30.0
    window_s: float = DEFAULT_WINDOW_S
    threshold_hz: float = DEFAULT_THRESHOLD_HZ
    healthy_fraction: float = 0.85   # weight of the lognormal bulk
    healthy_median_s: float = 8.5
    healthy_sigma: float = 0.18
    tail_min_s: float = 12.0
    tail_scale_s: float = 22.0
    tug_max_s: float = 45.0
    dependence_strength: float = 1.0  # 0 decouples gait parameters from the score
    n_subjects: int = 40

    def __post_init__(self):
        if self.n_videos < 10:
            raise ParameterError(f"n_videos must be >= 10, got {self.n_videos}")
        if not 0.0 <= self.dependence_strength <= 1.0:
            raise ParameterError("dependence_strength must be in [0, 1]")


# Feature names whose dependence on the score is planted by the cohort,
# strongest first (stride-speed spread, then speed and step length).
PLANTED_FEATURES = ("speed_variability.mean", "gait_speed.mean", "step_length.mean")


def _draw_tug(params: CohortParams, rng: np.random.Generator) -> float:
    if rng.uniform() < params.healthy_fraction:
        tug = rng.lognormal(np.log(params.healthy_median_s), params.healthy_sigma)
    else:
        tug = params.tail_min_s + rng.exponential(params.tail_scale_s)
    return float(np.clip(tug, 3.0, params.tug_max_s))


def _walker_for_tug(tug: float, params: CohortParams, rng: np.random.Generator,
                    seed: int) -> WalkerParams:
    s = params.dependence_strength
    z = rng.standard_normal(3)
    tug_c = min(tug, 40.0)

    # Convex decreasing speed with noise that grows along the tail; the
    # stride-speed spread has the widest relative range and the tightest
    # coupling, so it carries the strongest association with the score.
    speed_curve = 0.4 + 0.95 * np.exp(-(tug_c - 4.0) / 9.0)
    speed = (1.0 - s) * 1.0 + s * speed_curve
    speed *= 1.0 + (0.05 + s * (0.03 + 0.04 * tug_c / 40.0)) * z[0]
    speed = float(np.clip(speed, 0.3, 1.6))

    # Step length proportional to speed (linear pace-speed coupling) keeps
    # the cadence nearly score independent.
    step_length = 0.58 * speed * (1.0 + 0.04 * z[1])
    step_length = float(np.clip(step_length, 0.2, 0.95))
    step_period = step_length / speed

    jitter_curve = 0.008 + 0.40 * max((tug_c - 4.0) / 36.0, 0.0) ** 1.25
    jitter = (1.0 - s) * 0.05 + s * jitter_curve
    jitter *= 1.0 + 0.03 * z[2]
    jitter = float(np.clip(jitter, 0.005, 0.45 * speed))

    return WalkerParams(
        speed_mps=speed, step_length_m=step_length, step_period_s=step_period,
        speed_jitter_mps=jitter, sensor_noise_m=0.002,
        duration_s=params.duration_s, fps=params.fps, seed=seed,
    )


@dataclass(frozen=True)
class CohortVideo:
    video_id: str
    subject_id: str
    tug_s: float
    walker: WalkerParams
    series: PoseSeries
    features: FeatureVector
    attempts: int


def cohort_videos(params: CohortParams):
    """Yield each cohort video with its pose series and extracted features.

    A video whose extraction fails is regenerated with a perturbed seed (the
    attempt count is carried on the video); after 5 failures the error
    propagates.
    """
    rng_tug = np.random.default_rng(np.random.SeedSequence((params.seed, 0)))
    for i in range(params.n_videos):
        tug = _draw_tug(params, rng_tug)
        rng_video = np.random.default_rng(np.random.SeedSequence((params.seed, 1, i)))
        last_error = None
        for attempt in range(5):
            wseed = int(np.random.SeedSequence((params.seed, 2, i, attempt)).generate_state(1)[0])
            walker = _walker_for_tug(tug, params, rng_video, seed=wseed)
            series = generate_walker(walker)
            try:
                features = extract_features(series, window_s=params.window_s,
                                            threshold_hz=params.threshold_hz)
            except TugaitError as exc:
                last_error = exc
                continue
            yield CohortVideo(
                video_id=f"v{i:03d}",
                subject_id=f"s{i % params.n_subjects:02d}",
                tug_s=tug, walker=walker, series=series, features=features,
                attempts=attempt + 1,
            )
            break
        else:
            raise TugaitError(
                f"video {i} failed extraction after 5 attempts: {last_error}")


def generate_cohort(params: CohortParams) -> tuple:
    """Materialize the cohort as a Dataset plus a ground-truth sidecar.

    The sidecar names the planted informative features and records, per
    video, the walker parameters the score was mapped to and how many
    generation attempts were needed.
    """
    from .pipeline import Dataset

    videos = list(cohort_videos(params))
    data = Dataset(
        features=np.vstack([v.features.values for v in videos]),
        feature_names=videos[0].features.names,
        tug_s=np.array([v.tug_s for v in videos]),
        subject_ids=tuple(v.subject_id for v in videos),
        video_ids=tuple(v.video_id for v in videos),
    )
    sidecar = {
        "planted_features": list(PLANTED_FEATURES) if params.dependence_strength > 0 else [],
        "regenerated": int(sum(v.attempts - 1 for v in videos)),
        "per_video": [
            {
                "video_id": v.video_id,
                "subject_id": v.subject_id,
                "tug_s": v.tug_s,
                "speed_mps": v.walker.speed_mps,
                "step_length_m": v.walker.step_length_m,
                "step_period_s": v.walker.step_period_s,
                "speed_jitter_mps": v.walker.speed_jitter_mps,
                "attempts": v.attempts,
            }
            for v in videos
        ],
    }
    return data, sidecar

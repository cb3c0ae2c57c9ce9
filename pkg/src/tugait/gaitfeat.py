"""Gait characteristics from 3D pose time series.

The body center (midpoint of the hip joints) is re-expressed in gait axes:
AP (direction of travel), ML (side to side) and V (vertical, world z up).
The signal is cut into fixed-duration windows and nine characteristics are
computed per window; a recording's feature vector holds each
characteristic's mean and population variance across windows (18 slots).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .errors import (
    IncompleteFeatureError,
    InsufficientGaitEventsError,
    ParameterError,
    SchemaError,
    StationarySubjectError,
    TooShortError,
    UndefinedSpectrumError,
)

# Fixed joint vocabulary for pose files; hips are required for the body center.
JOINT_VOCABULARY = (
    "head", "neck",
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_wrist", "right_wrist",
    "left_hip", "right_hip",
    "left_knee", "right_knee",
    "left_ankle", "right_ankle",
)
REQUIRED_JOINTS = ("left_hip", "right_hip")

CHARACTERISTIC_NAMES = (
    "gait_speed",
    "speed_variability",
    "stride_time",
    "stride_time_variability",
    "stride_frequency",
    "movement_intensity",
    "low_frequency_percentage",
    "acceleration_range",
    "step_length",
)
FEATURE_NAMES = tuple(
    f"{name}.{stat}" for name in CHARACTERISTIC_NAMES for stat in ("mean", "var")
)

DEFAULT_WINDOW_S = 5.0
DEFAULT_THRESHOLD_HZ = 0.7

_MIN_TRAVEL_M = 0.5          # below this the heading is undefined
_HEADING_SMOOTH_S = 0.5
_PEAK_SMOOTH_S = 0.15
_PEAK_MIN_SEPARATION_S = 0.3
_PEAK_PROMINENCE_FACTOR = 0.3
_MIN_SPECTRUM_SAMPLES = 64


@dataclass(frozen=True)
class PoseSeries:
    """Timestamped 3D joint positions for one recording.

    Coordinates are meters in a fixed world frame with z pointing up.
    ``joints`` maps joint name to an (L, 3) position array aligned with
    ``timestamps``.
    """

    timestamps: np.ndarray
    joints: dict
    frame_rate: float
    subject_id: str = ""

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        object.__setattr__(self, "timestamps", t)
        if t.ndim != 1 or t.size < 2:
            raise SchemaError(f"a pose series needs at least 2 frames, got {t.size}")
        if not np.isfinite(t).all() or np.any(np.diff(t) <= 0.0):
            raise SchemaError("timestamps must be finite and strictly increasing")
        if self.frame_rate <= 0.0:
            raise SchemaError(f"frame_rate must be positive, got {self.frame_rate}")
        for name in REQUIRED_JOINTS:
            if name not in self.joints:
                raise SchemaError(f"required joint '{name}' missing from pose series")
        for name, pos in self.joints.items():
            pos = np.asarray(pos, dtype=float)
            self.joints[name] = pos
            if pos.shape != (t.size, 3):
                raise SchemaError(
                    f"joint '{name}' has shape {pos.shape}, expected {(t.size, 3)}")
            if not np.isfinite(pos).all():
                raise SchemaError(f"joint '{name}' contains non-finite coordinates")

    @property
    def duration_s(self) -> float:
        return float(self.timestamps[-1] - self.timestamps[0])


@dataclass(frozen=True)
class BodyFrameSignal:
    """Body-center kinematics resolved into (AP, ML, V) axes.

    ``position``, ``velocity`` and ``acceleration`` are (3, L) arrays in
    meters, m/s and m/s^2; row order is AP, ML, V.
    """

    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    nominal_fps: float

    def __post_init__(self):
        L = self.t.size
        for name in ("position", "velocity", "acceleration"):
            arr = getattr(self, name)
            if arr.shape != (3, L):
                raise SchemaError(f"{name} has shape {arr.shape}, expected {(3, L)}")

    @property
    def duration_s(self) -> float:
        return float(self.t[-1] - self.t[0])

    def slice(self, mask: np.ndarray) -> "BodyFrameSignal":
        return BodyFrameSignal(
            t=self.t[mask],
            position=self.position[:, mask],
            velocity=self.velocity[:, mask],
            acceleration=self.acceleration[:, mask],
            nominal_fps=self.nominal_fps,
        )


@dataclass(frozen=True)
class GaitCharacteristics:
    """The nine per-window gait characteristics; NaN marks a missing field."""

    gait_speed: float
    speed_variability: float
    stride_time: float
    stride_time_variability: float
    stride_frequency: float
    movement_intensity: float
    low_frequency_percentage: float
    acceleration_range: float
    step_length: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in CHARACTERISTIC_NAMES}


@dataclass(frozen=True)
class FeatureVector:
    """18 aggregated values: mean and population variance per characteristic."""

    values: np.ndarray
    names: tuple = FEATURE_NAMES

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.names),):
            raise ParameterError(f"expected {len(self.names)} values, got shape {v.shape}")
        var_slots = v[1::2]
        if np.any(var_slots[np.isfinite(var_slots)] < 0.0):
            raise ParameterError("variance slots must be non-negative")

    def as_dict(self) -> dict:
        return dict(zip(self.names, (float(x) for x in self.values)))


def _smooth(x: np.ndarray, n: int) -> np.ndarray:
    if n <= 1:
        return x
    return uniform_filter1d(x, size=n, mode="nearest", axis=-1)


def _odd_window(duration_s: float, fps: float) -> int:
    n = max(1, int(round(duration_s * fps)))
    return n if n % 2 == 1 else n + 1


def to_body_frame(series: PoseSeries) -> BodyFrameSignal:
    """Resolve the hip-midpoint trajectory into gait axes.

    The heading is the net direction of the smoothed horizontal path, so the
    result is invariant to world-frame yaw. Velocity and acceleration are
    central finite differences on the raw (possibly irregular) timestamps.

    Raises
    ------
    StationarySubjectError
        If the smoothed horizontal travel is below 0.5 m.
    """
    t = series.timestamps
    center = 0.5 * (series.joints["left_hip"] + series.joints["right_hip"])

    win = _odd_window(_HEADING_SMOOTH_S, series.frame_rate)
    horiz = _smooth(center[:, :2].T, win)
    travel = horiz[:, -1] - horiz[:, 0]
    norm = float(np.hypot(travel[0], travel[1]))
    if norm < _MIN_TRAVEL_M:
        raise StationarySubjectError(
            f"horizontal travel {norm:.3f} m < {_MIN_TRAVEL_M} m; heading undefined")
    ap = travel / norm
    ml = np.array([-ap[1], ap[0]])  # V x AP for a right-handed (AP, ML, V) triad

    position = np.vstack([
        center[:, :2] @ ap,
        center[:, :2] @ ml,
        center[:, 2],
    ])
    velocity = np.gradient(position, t, axis=1)
    acceleration = np.gradient(velocity, t, axis=1)
    return BodyFrameSignal(t=t, position=position, velocity=velocity,
                           acceleration=acceleration, nominal_fps=series.frame_rate)


def segment_windows(signal: BodyFrameSignal, window_s: float = DEFAULT_WINDOW_S) -> list:
    """Cut the signal into consecutive non-overlapping windows.

    A trailing remainder shorter than half a window is dropped, otherwise it
    is kept as a final (short) window.
    """
    if window_s <= 0.0:
        raise ParameterError(f"window_s must be positive, got {window_s}")
    duration = signal.duration_s
    if duration < window_s / 2.0:
        raise TooShortError(
            f"signal spans {duration:.3f} s, below half a window ({window_s / 2.0:.3f} s)")
    n_full = int(duration // window_s)
    remainder = duration - n_full * window_s
    n_windows = n_full + (1 if remainder >= window_s / 2.0 else 0)

    rel = signal.t - signal.t[0]
    span = n_windows * window_s
    keep = rel <= span + 1e-9
    idx = np.minimum(np.floor(rel / window_s).astype(int), n_windows - 1)
    windows = []
    for w in range(n_windows):
        mask = keep & (idx == w)
        if np.count_nonzero(mask) >= 2:
            windows.append(signal.slice(mask))
    return windows


def detect_strides(signal: BodyFrameSignal) -> np.ndarray:
    """Times of vertical-position peaks (one peak per step).

    The V trace is detrended by a linear fit, lightly smoothed, and peaks
    must clear a prominence of 0.3x the detrended standard deviation with at
    least 0.3 s separation. Stride times are differences between a peak and
    the second-next one.

    Raises
    ------
    InsufficientGaitEventsError
        If fewer than 3 peaks are found.
    """
    t = signal.t
    v = signal.position[2]
    coeff = np.polyfit(t, v, 1)
    resid = v - np.polyval(coeff, t)
    sigma = float(resid.std())

    dt = float(np.median(np.diff(t)))
    smoothed = _smooth(resid, _odd_window(_PEAK_SMOOTH_S, 1.0 / dt))
    distance = max(1, int(round(_PEAK_MIN_SEPARATION_S / dt)))
    peaks, _ = find_peaks(smoothed, prominence=_PEAK_PROMINENCE_FACTOR * sigma,
                          distance=distance)
    if peaks.size < 3:
        raise InsufficientGaitEventsError(
            f"found {peaks.size} vertical peaks, need at least 3 for stride statistics")
    return t[peaks]


def stride_times(peak_times: np.ndarray) -> np.ndarray:
    """Per-stride durations: peak to second-next peak."""
    return peak_times[2:] - peak_times[:-2]


def spectral_features(signal: BodyFrameSignal,
                      threshold_hz: float = DEFAULT_THRESHOLD_HZ) -> tuple:
    """Stride frequency and low-frequency power fraction from acceleration.

    Acceleration is linearly resampled to the nominal frame rate, mean
    removed per axis, and the power spectrum taken. The stride frequency is
    the median of the ML modal frequency and half the V and AP modal
    frequencies (ML sways once per stride; V and AP oscillate once per
    step). The low-frequency percentage is the V-axis power at
    0 < f <= threshold_hz over the total V power at f > 0.

    Raises
    ------
    TooShortError
        If fewer than 64 samples remain after resampling.
    UndefinedSpectrumError
        If no axis carries any power.
    """
    if threshold_hz <= 0.0:
        raise ParameterError(f"threshold_hz must be positive, got {threshold_hz}")
    fs = signal.nominal_fps
    t0, t1 = float(signal.t[0]), float(signal.t[-1])
    m = int(np.floor((t1 - t0) * fs)) + 1
    if m < _MIN_SPECTRUM_SAMPLES:
        raise TooShortError(
            f"window resamples to {m} points, need >= {_MIN_SPECTRUM_SAMPLES} "
            "for spectral analysis")
    grid = t0 + np.arange(m) / fs
    acc = np.vstack([np.interp(grid, signal.t, signal.acceleration[i]) for i in range(3)])
    acc = acc - acc.mean(axis=1, keepdims=True)

    power = np.abs(np.fft.rfft(acc, axis=1)) ** 2
    freqs = np.fft.rfftfreq(m, d=1.0 / fs)
    positive = freqs > 0.0

    modal = np.full(3, np.nan)
    for axis in range(3):
        p = power[axis]
        if p[positive].sum() > 0.0:
            ix = int(np.argmax(p[1:])) + 1
            modal[axis] = freqs[ix]
    if np.all(np.isnan(modal)):
        raise UndefinedSpectrumError("acceleration carries no power on any axis")

    f_ap, f_ml, f_v = modal
    stride_frequency = float(np.nanmedian([f_ml, f_v / 2.0, f_ap / 2.0]))

    p_v = power[2]
    total_v = p_v[positive].sum()
    if total_v > 0.0:
        low = p_v[positive & (freqs <= threshold_hz + 1e-12)].sum()
        low_frequency_percentage = float(low / total_v)
    else:
        low_frequency_percentage = float("nan")
    return stride_frequency, low_frequency_percentage


def compute_characteristics(window: BodyFrameSignal,
                            threshold_hz: float = DEFAULT_THRESHOLD_HZ) -> GaitCharacteristics:
    """All nine characteristics for one window; failed sub-steps yield NaN fields."""
    speed = np.hypot(window.velocity[0], window.velocity[1])
    gait_speed = float(speed.mean())

    acc_mag = np.linalg.norm(window.acceleration, axis=0)
    movement_intensity = float(acc_mag.std())
    acceleration_range = float(acc_mag.max() - acc_mag.min())

    stride_time = stride_time_var = speed_var = step_length = float("nan")
    try:
        peaks = detect_strides(window)
    except InsufficientGaitEventsError:
        peaks = None
    if peaks is not None:
        st = stride_times(peaks)
        stride_time = float(st.mean())
        # Sample std for the event-level spreads: counts are small and the
        # population form would bias them low. Undefined below 2 strides.
        stride_time_var = float(st.std(ddof=1)) if st.size >= 2 else float("nan")
        per_stride_speed = np.array([
            speed[(window.t >= peaks[i]) & (window.t <= peaks[i + 2])].mean()
            for i in range(peaks.size - 2)
        ])
        speed_var = (float(per_stride_speed.std(ddof=1))
                     if per_stride_speed.size >= 2 else float("nan"))
        peak_xy = np.column_stack([
            np.interp(peaks, window.t, window.position[0]),
            np.interp(peaks, window.t, window.position[1]),
        ])
        steps = np.diff(peak_xy, axis=0)
        step_length = float(np.hypot(steps[:, 0], steps[:, 1]).mean())

    try:
        stride_frequency, low_pct = spectral_features(window, threshold_hz)
    except UndefinedSpectrumError:
        stride_frequency, low_pct = float("nan"), float("nan")

    return GaitCharacteristics(
        gait_speed=gait_speed,
        speed_variability=speed_var,
        stride_time=stride_time,
        stride_time_variability=stride_time_var,
        stride_frequency=stride_frequency,
        movement_intensity=movement_intensity,
        low_frequency_percentage=low_pct,
        acceleration_range=acceleration_range,
        step_length=step_length,
    )


def aggregate_features(per_window: list) -> FeatureVector:
    """Mean and population variance per characteristic across windows.

    Windows with a missing (NaN) field are excluded for that field only; a
    field with no contributing window raises IncompleteFeatureError.
    """
    if not per_window:
        raise IncompleteFeatureError("no windows to aggregate", fields=CHARACTERISTIC_NAMES)
    values = np.empty(len(FEATURE_NAMES))
    missing = []
    for j, name in enumerate(CHARACTERISTIC_NAMES):
        col = np.array([getattr(w, name) for w in per_window], dtype=float)
        col = col[np.isfinite(col)]
        if col.size == 0:
            missing.append(name)
            continue
        values[2 * j] = col.mean()
        values[2 * j + 1] = col.var()
    if missing:
        raise IncompleteFeatureError(
            f"no valid window for field(s): {', '.join(missing)}", fields=tuple(missing))
    return FeatureVector(values=values)


def extract_features(series: PoseSeries,
                     window_s: float = DEFAULT_WINDOW_S,
                     threshold_hz: float = DEFAULT_THRESHOLD_HZ) -> FeatureVector:
    """Full per-recording pipeline: body frame, windows, characteristics, 18-vector."""
    signal = to_body_frame(series)
    windows = segment_windows(signal, window_s=window_s)
    per_window = [compute_characteristics(w, threshold_hz=threshold_hz) for w in windows]
    return aggregate_features(per_window)

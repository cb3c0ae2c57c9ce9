"""Association ranking, feature selection and repeated-split evaluation.

Features are ranked by the copula entropy of each (feature, score) pair,
most negative (strongest dependence) first. Evaluation repeatedly splits
the dataset at a fixed train ratio with seeds derived from a master seed,
fits the requested model on the training rows only, and records the mean
absolute error and the faller/non-faller diagnosis accuracy at the
clinical cutoff per split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import models
from .copent import DEFAULT_K, copula_entropy
from .errors import DegenerateSampleError, InvalidInputError, ParameterError, TugaitError

DEFAULT_N_SPLITS = 100
DEFAULT_TRAIN_RATIO = 0.8
DEFAULT_CUTOFF_S = 13.5
MIN_EVAL_SAMPLES = 10

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Dataset:
    """Feature vectors paired with TUG scores in seconds."""

    features: np.ndarray
    feature_names: tuple
    tug_s: np.ndarray
    subject_ids: tuple = ()
    video_ids: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.tug_s, dtype=float).ravel()
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "tug_s", y)
        if X.ndim != 2:
            raise InvalidInputError(f"features must be 2-D, got {X.ndim} dimensions")
        if X.shape[1] != len(self.feature_names):
            raise InvalidInputError(
                f"{len(self.feature_names)} feature names for {X.shape[1]} columns")
        if X.shape[0] != y.size:
            raise InvalidInputError(f"{X.shape[0]} feature rows but {y.size} scores")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise InvalidInputError("features and scores must be finite")
        if np.any(y <= 0.0):
            raise InvalidInputError("TUG scores must be positive seconds")
        for attr in ("subject_ids", "video_ids"):
            ids = getattr(self, attr)
            if ids and len(ids) != X.shape[0]:
                raise InvalidInputError(f"{attr} has {len(ids)} entries for {X.shape[0]} rows")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class DependenceEntry:
    feature: str
    copula_entropy: float | None   # None when the estimate is unavailable
    rank: int


@dataclass(frozen=True)
class DependenceReport:
    """Per-feature association with the score, ranked strongest first."""

    entries: tuple
    k: int
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": "dependence_report",
            "k": self.k,
            "n_samples": self.n_samples,
            "entries": [
                {"feature": e.feature, "copula_entropy": e.copula_entropy, "rank": e.rank}
                for e in self.entries
            ],
        }


@dataclass(frozen=True)
class SplitResult:
    split: int
    mae: float | None
    diagnosis_accuracy: float | None
    error: str | None = None


@dataclass(frozen=True)
class EvaluationReport:
    model_kind: str
    selected_features: tuple
    per_split: tuple
    cutoff_s: float
    n_splits: int
    train_ratio: float
    master_seed: int
    config: dict = field(default_factory=dict)
    predictions: tuple = ()          # (split, video_id, y_true, y_pred) rows
    models: tuple = ()               # populated only when keep_models=True

    @property
    def summary(self) -> dict:
        maes = np.array([s.mae for s in self.per_split if s.error is None])
        accs = np.array([s.diagnosis_accuracy for s in self.per_split if s.error is None])
        failed = [s.split for s in self.per_split if s.error is not None]
        out = {
            "n_splits": self.n_splits,
            "n_failed": len(failed),
            "failed_splits": failed,
        }
        if maes.size:
            out.update(
                mae_mean=float(maes.mean()), mae_std=float(maes.std()),
                accuracy_mean=float(accs.mean()), accuracy_std=float(accs.std()),
            )
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": "evaluation_report",
            "model": self.model_kind,
            "selected_features": list(self.selected_features),
            "cutoff_s": self.cutoff_s,
            "n_splits": self.n_splits,
            "train_ratio": self.train_ratio,
            "master_seed": self.master_seed,
            "config": self.config,
            "summary": self.summary,
            "per_split": [
                {"split": s.split, "mae": s.mae,
                 "diagnosis_accuracy": s.diagnosis_accuracy, "error": s.error}
                for s in self.per_split
            ],
        }


def rank_features(data: Dataset, k: int = DEFAULT_K) -> DependenceReport:
    """Rank features by the copula entropy of each (feature, score) pair.

    Entries are ordered ascending (most negative first); features whose
    estimate is unavailable (degenerate ties) rank last. Ties break by name.
    """
    if not 1 <= int(k) < data.n_samples:
        raise ParameterError(f"k must satisfy 1 <= k < n; got k={k}, n={data.n_samples}")
    scored, unavailable = [], []
    for j, name in enumerate(data.feature_names):
        pair = np.column_stack([data.features[:, j], data.tug_s])
        try:
            value = copula_entropy(pair, k=k).value
        except DegenerateSampleError:
            unavailable.append(name)
            continue
        scored.append((value, name))
    scored.sort(key=lambda kv: (kv[0], kv[1]))
    unavailable.sort()
    entries = [DependenceEntry(feature=n, copula_entropy=v, rank=r + 1)
               for r, (v, n) in enumerate(scored)]
    entries += [DependenceEntry(feature=n, copula_entropy=None, rank=len(scored) + r + 1)
                for r, n in enumerate(unavailable)]
    return DependenceReport(entries=tuple(entries), k=int(k), n_samples=data.n_samples)


def select_features(report: DependenceReport, top_k: int) -> list:
    """Names of the top_k strongest-association features."""
    if not 1 <= top_k <= len(report.entries):
        raise ParameterError(f"top_k must be in [1, {len(report.entries)}], got {top_k}")
    return [e.feature for e in report.entries[:top_k]]


def mae(y_true, y_pred) -> float:
    """Mean absolute error in seconds."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.size == 0 or y_true.size != y_pred.size:
        raise ParameterError(
            f"need equal nonzero lengths, got {y_true.size} and {y_pred.size}")
    return float(np.mean(np.abs(y_true - y_pred)))


def diagnosis_accuracy(y_true, y_pred, cutoff_s: float = DEFAULT_CUTOFF_S) -> float:
    """Fraction of samples whose faller flag (score strictly above the cutoff)
    agrees between truth and prediction."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.size == 0 or y_true.size != y_pred.size:
        raise ParameterError(
            f"need equal nonzero lengths, got {y_true.size} and {y_pred.size}")
    return float(np.mean((y_true > cutoff_s) == (y_pred > cutoff_s)))


def split_indices(n: int, train_ratio: float, master_seed: int, split: int) -> tuple:
    """Deterministic train/test row indices for one split.

    The permutation depends only on (master_seed, split, n), so reruns and
    parallel schedules see identical splits.
    """
    rng = np.random.default_rng(np.random.SeedSequence((master_seed, split)))
    perm = rng.permutation(n)
    n_train = int(np.floor(train_ratio * n))
    if not 1 <= n_train < n:
        raise ParameterError(
            f"train_ratio {train_ratio} leaves an empty train or test set for n={n}")
    return perm[:n_train], perm[n_train:]


def _fit(model_kind: str, X, y, feature_names, seed, svr_grid, kernel_kind):
    if model_kind == "lr":
        model = models.fit_lr(X, y, feature_names=feature_names)
        return model, lambda Z: models.predict_lr(model, Z)
    if model_kind == "svr":
        model = models.tune_svr(X, y, seed=seed, kernel_kind=kernel_kind, grid=svr_grid,
                                feature_names=feature_names)
        return model, lambda Z: models.predict_svr(model, Z)
    raise ParameterError(f"unknown model kind '{model_kind}'")


def evaluate(data: Dataset, model_kind: str, selected_features,
             n_splits: int = DEFAULT_N_SPLITS,
             train_ratio: float = DEFAULT_TRAIN_RATIO,
             cutoff_s: float = DEFAULT_CUTOFF_S,
             master_seed: int = 0,
             svr_grid: dict | None = None,
             kernel_kind: str = "rbf",
             keep_models: bool = False,
             collect_predictions: bool = False) -> EvaluationReport:
    """Repeated-random-split evaluation of one model on selected features.

    Each split fits on the training rows only (SVR hyperparameter tuning
    included) and scores the held-out rows. Failed splits are recorded with
    their error message, never silently dropped. Identical arguments produce
    an identical report.
    """
    if data.n_samples < MIN_EVAL_SAMPLES:
        raise ParameterError(
            f"need at least {MIN_EVAL_SAMPLES} samples to evaluate, got {data.n_samples}")
    if n_splits < 1:
        raise ParameterError(f"n_splits must be >= 1, got {n_splits}")
    if not 0.0 < train_ratio < 1.0:
        raise ParameterError(f"train_ratio must be in (0, 1), got {train_ratio}")
    selected = list(selected_features)
    unknown = [f for f in selected if f not in data.feature_names]
    if unknown:
        raise ParameterError(f"unknown feature(s): {', '.join(unknown)}")
    cols = [data.feature_names.index(f) for f in selected]
    X = data.features[:, cols]
    y = data.tug_s
    video_ids = data.video_ids or tuple(str(i) for i in range(data.n_samples))

    results, fitted, predictions = [], [], []
    for split in range(1, n_splits + 1):
        train, test = split_indices(data.n_samples, train_ratio, master_seed, split)
        try:
            model, predict = _fit(model_kind, X[train], y[train], tuple(selected),
                                  seed=(master_seed, split, 1),
                                  svr_grid=svr_grid, kernel_kind=kernel_kind)
            y_pred = np.atleast_1d(predict(X[test]))
        except TugaitError as exc:
            results.append(SplitResult(split=split, mae=None, diagnosis_accuracy=None,
                                       error=str(exc)))
            if keep_models:
                fitted.append(None)
            continue
        results.append(SplitResult(
            split=split,
            mae=mae(y[test], y_pred),
            diagnosis_accuracy=diagnosis_accuracy(y[test], y_pred, cutoff_s=cutoff_s),
        ))
        if keep_models:
            fitted.append(model)
        if collect_predictions:
            predictions.extend(
                (split, video_ids[i], float(y[i]), float(p))
                for i, p in zip(test, y_pred))

    config = {
        "model": model_kind, "selected_features": selected, "n_splits": n_splits,
        "train_ratio": train_ratio, "cutoff_s": cutoff_s, "master_seed": master_seed,
        "kernel": kernel_kind if model_kind == "svr" else None,
        "svr_grid": ({k: list(v) for k, v in (svr_grid or models.DEFAULT_SVR_GRID).items()}
                     if model_kind == "svr" else None),
    }
    return EvaluationReport(
        model_kind=model_kind,
        selected_features=tuple(selected),
        per_split=tuple(results),
        cutoff_s=cutoff_s,
        n_splits=n_splits,
        train_ratio=train_ratio,
        master_seed=master_seed,
        config=config,
        predictions=tuple(predictions),
        models=tuple(fitted),
    )

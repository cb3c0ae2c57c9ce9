"""Predictive models: ordinary least squares and kernel support vector regression.

The SVR dual (epsilon-insensitive loss, box constraint C, one equality
constraint) is solved by a pairwise coordinate optimizer with a
maximal-violating-pair working-set rule. Features are standardized inside
the SVR fit so kernel distances are scale comparable; the standardization
is stored in the model, making prediction self-contained.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr

from .errors import ConvergenceError, InvalidInputError, ParameterError, SingularDesignError

DEFAULT_KKT_TOL = 1e-3
DEFAULT_MAX_ITER = 200_000
SUPPORT_WEIGHT_CUTOFF = 1e-8

# Tuning grid: C by epsilon by gamma multiplier (gamma = mult / (d * var)).
DEFAULT_SVR_GRID = {
    "C": (1.0, 10.0, 100.0),
    "epsilon": (0.1, 0.5, 1.0),
    "gamma_scale": (0.5, 1.0, 2.0),
}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters; gamma=None means resolve at fit time."""

    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ParameterError(f"unknown kernel kind '{self.kind}'")
        if self.kind == "rbf" and self.gamma is not None and self.gamma <= 0.0:
            raise ParameterError(f"rbf gamma must be positive, got {self.gamma}")


def kernel_eval(kernel: KernelSpec, a, b) -> float:
    """Evaluate the kernel on a single pair of equally sized vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError(f"kernel arguments differ in shape: {a.shape} vs {b.shape}")
    if kernel.kind == "linear":
        return float(a @ b)
    if kernel.gamma is None:
        raise ParameterError("rbf kernel gamma is unresolved; fit a model or set gamma")
    diff = a - b
    return float(np.exp(-kernel.gamma * (diff @ diff)))


def _gram(kernel: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if kernel.kind == "linear":
        return A @ B.T
    sq = (A ** 2).sum(axis=1)[:, None] + (B ** 2).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-kernel.gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class LRModel:
    coefficients: np.ndarray
    intercept: float
    feature_names: tuple = ()


@dataclass(frozen=True)
class SVRModel:
    support_vectors: np.ndarray      # standardized feature rows
    dual_weights: np.ndarray
    bias: float
    kernel: KernelSpec
    epsilon: float
    C: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    feature_names: tuple = ()
    dual_objective: float = float("nan")


def _check_xy(X, y) -> tuple:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidInputError(f"X must be 2-D, got {X.ndim} dimensions")
    if X.shape[0] != y.size:
        raise InvalidInputError(f"X has {X.shape[0]} rows but y has {y.size} entries")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise InvalidInputError("X and y must be finite")
    return X, y


def fit_lr(X, y, feature_names: tuple = ()) -> LRModel:
    """Least-squares linear fit with an intercept.

    Rank deficiency is detected with a pivoted QR of the design matrix and
    reported as SingularDesignError naming the dependent columns.
    """
    X, y = _check_xy(X, y)
    n, d = X.shape
    if n < d + 1:
        raise ParameterError(f"need at least {d + 1} rows for {d} features, got {n}")
    A = np.column_stack([X, np.ones(n)])

    R, piv = qr(A, mode="r", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(A.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < d + 1:
        names = feature_names if feature_names else tuple(f"x{j}" for j in range(d))
        dep = tuple(names[p] for p in piv[rank:] if p < d)
        raise SingularDesignError(
            f"design matrix is rank deficient (rank {rank} of {d + 1}); "
            f"dependent column(s): {', '.join(dep) or 'intercept'}",
            columns=dep,
        )
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    return LRModel(coefficients=beta[:d], intercept=float(beta[d]),
                   feature_names=tuple(feature_names))


def predict_lr(model: LRModel, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=float)
    d = model.coefficients.size
    if x.ndim == 1:
        if x.size != d:
            raise ParameterError(f"expected {d} features, got {x.size}")
        return float(model.intercept + model.coefficients @ x)
    if x.shape[1] != d:
        raise ParameterError(f"expected {d} features, got {x.shape[1]}")
    return model.intercept + x @ model.coefficients


def _smo_solve(K: np.ndarray, y: np.ndarray, C: float, epsilon: float,
               tol: float, max_iter: int) -> tuple:
    """Pairwise optimizer for the epsilon-insensitive dual.

    Works on 2l stacked variables a (first half for the positive multipliers,
    second half, negated, for the starred ones), minimizing
    0.5 a^T Khat a + q^T a over the box with sum(a) = 0, where Khat tiles K.
    Returns (beta, bias, dual_objective, iterations, final_violation).
    """
    l = y.size
    a = np.zeros(2 * l)
    lo = np.concatenate([np.zeros(l), np.full(l, -C)])
    hi = np.concatenate([np.full(l, C), np.zeros(l)])
    q = np.concatenate([epsilon - y, -epsilon - y])
    net = np.zeros(l)    # K @ beta, maintained incrementally
    g = np.empty(2 * l)  # preallocated gradient buffer
    diag = np.diag(K)

    violation = np.inf
    for it in range(max_iter):
        np.add(net, q[:l], out=g[:l])
        np.add(net, q[l:], out=g[l:])
        g_up = np.where(a < hi - 1e-12, g, np.inf)
        g_dn = np.where(a > lo + 1e-12, g, -np.inf)
        i = int(np.argmin(g_up))
        j = int(np.argmax(g_dn))
        violation = g_dn[j] - g_up[i]
        if violation <= tol:
            break
        ii, jj = i % l, j % l
        eta = max(diag[ii] + diag[jj] - 2.0 * K[ii, jj], 1e-12)
        lam = min(violation / eta, hi[i] - a[i], a[j] - lo[j])
        a[i] += lam
        a[j] -= lam
        if ii != jj:
            net += lam * (K[:, ii] - K[:, jj])
    else:
        raise ConvergenceError(
            f"pairwise optimizer did not reach tolerance {tol} within {max_iter} "
            f"iterations (violation {violation:.3e})", kkt_violation=float(violation))

    beta = a[:l] + a[l:]
    net = K @ beta  # refresh once; incremental updates accumulate rounding
    g = np.concatenate([net, net]) + q
    free = (a > lo + SUPPORT_WEIGHT_CUTOFF) & (a < hi - SUPPORT_WEIGHT_CUTOFF)
    if free.any():
        bias = float(-g[free].mean())
    else:
        g_up = np.where(a < hi - 1e-12, g, np.inf)
        g_dn = np.where(a > lo + 1e-12, g, -np.inf)
        bias = float(-0.5 * (g_up.min() + g_dn.max()))
    objective = float(0.5 * beta @ net + q @ a)
    return beta, bias, objective, it, float(violation)


def fit_svr(X, y, C: float = 1.0, epsilon: float = 0.1,
            kernel: KernelSpec = KernelSpec("rbf"),
            gamma_scale: float = 1.0,
            tol: float = DEFAULT_KKT_TOL,
            max_iter: int = DEFAULT_MAX_ITER,
            feature_names: tuple = ()) -> SVRModel:
    """Fit epsilon-insensitive SVR by solving the dual to the KKT tolerance.

    Features are standardized internally. When the kernel's gamma is
    unresolved, it is set to gamma_scale / (n_features * var) on the
    standardized inputs. Only samples with dual weight above 1e-8 are
    retained as support vectors.
    """
    X, y = _check_xy(X, y)
    if X.shape[0] < 2:
        raise ParameterError(f"need at least 2 samples, got {X.shape[0]}")
    if C <= 0.0:
        raise ParameterError(f"C must be positive, got {C}")
    if epsilon < 0.0:
        raise ParameterError(f"epsilon must be non-negative, got {epsilon}")

    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    scale = np.where(sd > 0.0, sd, 1.0)
    Xs = (X - mean) / scale

    if kernel.kind == "rbf" and kernel.gamma is None:
        var = float(Xs.var())
        gamma = gamma_scale / (X.shape[1] * var) if var > 0.0 else gamma_scale / X.shape[1]
        kernel = KernelSpec("rbf", gamma=gamma)

    K = _gram(kernel, Xs, Xs)
    beta, bias, objective, _, _ = _smo_solve(K, y, C, epsilon, tol, max_iter)

    sv = np.abs(beta) > SUPPORT_WEIGHT_CUTOFF
    return SVRModel(
        support_vectors=Xs[sv],
        dual_weights=beta[sv],
        bias=bias,
        kernel=kernel,
        epsilon=float(epsilon),
        C=float(C),
        feature_mean=mean,
        feature_scale=scale,
        feature_names=tuple(feature_names),
        dual_objective=objective,
    )


def predict_svr(model: SVRModel, x) -> float | np.ndarray:
    """Kernel expansion over the support vectors plus the bias."""
    x = np.asarray(x, dtype=float)
    d = model.feature_mean.size
    single = x.ndim == 1
    if single:
        if x.size != d:
            raise ParameterError(f"expected {d} features, got {x.size}")
        x = x[None, :]
    elif x.shape[1] != d:
        raise ParameterError(f"expected {d} features, got {x.shape[1]}")
    xs = (x - model.feature_mean) / model.feature_scale
    if model.support_vectors.size:
        out = _gram(model.kernel, xs, model.support_vectors) @ model.dual_weights + model.bias
    else:
        out = np.full(xs.shape[0], model.bias)
    return float(out[0]) if single else out


def tune_svr(X, y, seed, kernel_kind: str = "rbf", grid: dict | None = None,
             val_fraction: float = 0.25, tol: float = DEFAULT_KKT_TOL,
             max_iter: int = DEFAULT_MAX_ITER,
             feature_names: tuple = ()) -> SVRModel:
    """Grid-search SVR hyperparameters on a validation split of the given rows.

    The split is drawn deterministically from ``seed`` (int or tuple). The
    combination with the lowest validation mean absolute error wins, ties
    going to the earliest grid entry, and the winner is refit on all rows.
    Rows outside X and y are never touched, so there is no leakage into the
    tuning.
    """
    X, y = _check_xy(X, y)
    grid = dict(DEFAULT_SVR_GRID if grid is None else grid)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = X.shape[0]
    n_val = max(1, int(round(val_fraction * n)))
    if n - n_val < 2:
        raise ParameterError(f"too few samples ({n}) for a {val_fraction:.0%} validation split")
    perm = rng.permutation(n)
    val, tr = perm[:n_val], perm[n_val:]

    gamma_scales = grid.get("gamma_scale", (1.0,)) if kernel_kind == "rbf" else (1.0,)
    combos = list(itertools.product(grid["C"], grid["epsilon"], gamma_scales))
    best = None
    best_score = np.inf
    for C, eps, gs in combos:
        try:
            m = fit_svr(X[tr], y[tr], C=C, epsilon=eps, kernel=KernelSpec(kernel_kind),
                        gamma_scale=gs, tol=tol, max_iter=max_iter)
        except ConvergenceError:
            continue
        score = float(np.mean(np.abs(y[val] - predict_svr(m, X[val]))))
        if score < best_score:
            best, best_score = (C, eps, gs), score
    if best is None:
        raise ConvergenceError("no hyperparameter combination converged")
    C, eps, gs = best
    return fit_svr(X, y, C=C, epsilon=eps, kernel=KernelSpec(kernel_kind), gamma_scale=gs,
                   tol=tol, max_iter=max_iter, feature_names=feature_names)


# --- persistence ---------------------------------------------------------

MODEL_SCHEMA_VERSION = 1


def model_to_dict(model) -> dict:
    if isinstance(model, LRModel):
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": "lr",
            "coefficients": model.coefficients.tolist(),
            "intercept": model.intercept,
            "feature_names": list(model.feature_names),
        }
    if isinstance(model, SVRModel):
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "kind": "svr",
            "kernel": {"kind": model.kernel.kind, "gamma": model.kernel.gamma},
            "epsilon": model.epsilon,
            "C": model.C,
            "support_vectors": model.support_vectors.tolist(),
            "dual_weights": model.dual_weights.tolist(),
            "bias": model.bias,
            "feature_mean": model.feature_mean.tolist(),
            "feature_scale": model.feature_scale.tolist(),
            "feature_names": list(model.feature_names),
            "dual_objective": model.dual_objective,
        }
    raise ParameterError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(doc: dict):
    version = doc.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ParameterError(f"unsupported model schema version {version!r}")
    kind = doc.get("kind")
    if kind == "lr":
        return LRModel(coefficients=np.asarray(doc["coefficients"], dtype=float),
                       intercept=float(doc["intercept"]),
                       feature_names=tuple(doc.get("feature_names", ())))
    if kind == "svr":
        kspec = doc["kernel"]
        return SVRModel(
            support_vectors=np.asarray(doc["support_vectors"], dtype=float).reshape(
                len(doc["dual_weights"]), -1) if doc["dual_weights"] else
                np.zeros((0, len(doc["feature_mean"]))),
            dual_weights=np.asarray(doc["dual_weights"], dtype=float),
            bias=float(doc["bias"]),
            kernel=KernelSpec(kspec["kind"], kspec.get("gamma")),
            epsilon=float(doc["epsilon"]),
            C=float(doc["C"]),
            feature_mean=np.asarray(doc["feature_mean"], dtype=float),
            feature_scale=np.asarray(doc["feature_scale"], dtype=float),
            feature_names=tuple(doc.get("feature_names", ())),
            dual_objective=float(doc.get("dual_objective", float("nan"))),
        )
    raise ParameterError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))

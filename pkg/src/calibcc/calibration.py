"""Platt-scaling calibration maps: fitting, application, scoping, persistence.

The calibrator is p_hat = sigmoid(a * z + b) with z = logit(clamped
confidence), so (a, b) = (1, 0) is the identity map. Fitting minimizes the
L2-regularized mean negative log-likelihood with a damped Newton solver
(exact Hessian; the problem is convex and two-dimensional).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, column_or_1d

from calibcc.labeling import LabeledObservation

#: Clamp width for the logit feature; keeps confidences 1.0 finite.
FEATURE_EPS = 1e-6

DEFAULT_L2 = 1e-6
DEFAULT_MAX_ITER = 100
GRADIENT_TOL = 1e-10


class CalibrationError(ValueError):
    """Raised on invalid calibration inputs (empty data, bad confidence)."""


class ScopeEmptyError(CalibrationError):
    """No observations match the requested calibrator scope."""


@dataclass(frozen=True)
class PlattParams:
    """Fitted slope/intercept of the calibration map plus fit diagnostics."""

    slope_a: float
    intercept_b: float
    n_fit: int = 0
    converged: bool = False
    final_gradient_norm: float = float("nan")

    @staticmethod
    def identity() -> "PlattParams":
        """The raw-confidence passthrough map (a=1, b=0)."""
        return PlattParams(slope_a=1.0, intercept_b=0.0, n_fit=0, converged=True, final_gradient_norm=0.0)


@dataclass(frozen=True)
class CalibratorScope:
    """Which slice of the data a calibrator is trained on.

    kind is one of "general" (no filter), "language" (selector = tag value),
    or "stream" (selector = stream key string).
    """

    kind: str
    selector: str | None = None

    def __post_init__(self):
        if self.kind not in ("general", "language", "stream"):
            raise CalibrationError(f"unknown scope kind {self.kind!r}")
        if self.kind == "general" and self.selector is not None:
            raise CalibrationError("general scope takes no selector")
        if self.kind != "general" and self.selector is None:
            raise CalibrationError(f"{self.kind} scope requires a selector")

    def name(self) -> str:
        return self.kind if self.kind == "general" else f"{self.kind}:{self.selector}"

    @staticmethod
    def parse(name: str) -> "CalibratorScope":
        if name == "general":
            return CalibratorScope("general")
        kind, _, selector = name.partition(":")
        return CalibratorScope(kind, selector)


def feature(conf):
    """Logit of a confidence clamped to [eps, 1 - eps]; accepts scalars or arrays."""
    arr = np.asarray(conf, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr > 1.0):
        raise CalibrationError("confidence out of range (0, 1]")
    clamped = np.clip(arr, FEATURE_EPS, 1.0 - FEATURE_EPS)
    z = np.log(clamped) - np.log1p(-clamped)
    return float(z) if np.isscalar(conf) or arr.ndim == 0 else z


def _sigmoid(u):
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def calibrate(params: PlattParams, conf):
    """Apply a Platt map: sigmoid(a * feature(conf) + b). Result in (0, 1)."""
    z = feature(conf)
    u = params.slope_a * np.asarray(z, dtype=float) + params.intercept_b
    p = _sigmoid(u)
    return float(p) if np.isscalar(conf) or np.asarray(conf).ndim == 0 else p


def nll(theta, z, targets, l2: float = 0.0) -> float:
    """Mean cross-entropy of sigmoid(a*z + b) against targets, plus L2 penalty."""
    a, b = theta
    u = a * z + b
    # softplus(u) - t*u is the stable form of the per-sample cross-entropy
    loss = float(np.mean(np.logaddexp(0.0, u) - targets * u))
    return loss + 0.5 * l2 * (a * a + b * b)


def nll_gradient(theta, z, targets, l2: float = 0.0) -> np.ndarray:
    """Analytic gradient of nll with respect to (a, b)."""
    a, b = theta
    resid = _sigmoid(a * z + b) - targets
    n = len(z)
    return np.array([float(resid @ z) / n + l2 * a, float(np.sum(resid)) / n + l2 * b])


def _nll_hessian(theta, z, targets, l2: float) -> np.ndarray:
    a, b = theta
    p = _sigmoid(a * z + b)
    w = p * (1.0 - p)
    n = len(z)
    h_aa = float(w @ (z * z)) / n + l2
    h_ab = float(w @ z) / n
    h_bb = float(np.sum(w)) / n + l2
    return np.array([[h_aa, h_ab], [h_ab, h_bb]])


def fit_platt(
    data: Iterable[tuple[float, float]] | tuple[np.ndarray, np.ndarray],
    init: PlattParams | None = None,
    l2: float = DEFAULT_L2,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = GRADIENT_TOL,
    smoothing: bool = False,
) -> PlattParams:
    """Fit Platt parameters by damped Newton on the regularized mean NLL.

    data is either a sequence of (confidence, label) pairs or a pair of
    arrays. converged is True iff the gradient infinity-norm fell below tol
    within the iteration budget; a warm start is taken from init when given.
    smoothing applies Platt's (N+ + 1)/(N+ + 2) target correction; off by
    default since the L2 term already bounds separable fits.
    """
    if isinstance(data, tuple) and len(data) == 2 and isinstance(data[0], np.ndarray):
        conf = np.asarray(data[0], dtype=float)
        labels = np.asarray(data[1], dtype=float)
    else:
        pairs = list(data)
        if not pairs:
            raise CalibrationError("cannot fit on empty data")
        conf = np.array([c for c, _ in pairs], dtype=float)
        labels = np.array([y for _, y in pairs], dtype=float)
    if conf.size == 0:
        raise CalibrationError("cannot fit on empty data")
    if conf.shape != labels.shape:
        raise CalibrationError("confidence/label length mismatch")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise CalibrationError("labels must be binary")

    z = np.asarray(feature(conf), dtype=float)
    if smoothing:
        n_pos = float(np.sum(labels))
        n_neg = float(labels.size - n_pos)
        t_pos = (n_pos + 1.0) / (n_pos + 2.0)
        t_neg = 1.0 / (n_neg + 2.0)
        targets = np.where(labels == 1.0, t_pos, t_neg)
    else:
        targets = labels

    theta = np.array(
        [init.slope_a, init.intercept_b] if init is not None else [1.0, 0.0], dtype=float
    )
    obj = nll(theta, z, targets, l2)
    grad = nll_gradient(theta, z, targets, l2)
    converged = False
    for _ in range(max_iter):
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol:
            converged = True
            break
        hess = _nll_hessian(theta, z, targets, l2)
        try:
            direction = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            direction = grad
        step = 1.0
        for _ in range(60):
            candidate = theta - step * direction
            candidate_obj = nll(candidate, z, targets, l2)
            if candidate_obj <= obj:
                break
            step *= 0.5
        else:
            break  # no improving step at machine precision
        if candidate_obj == obj and np.array_equal(candidate, theta):
            break
        theta, obj = candidate, candidate_obj
        grad = nll_gradient(theta, z, targets, l2)
    grad_norm = float(np.max(np.abs(grad)))
    if grad_norm < tol:
        converged = True
    return PlattParams(
        slope_a=float(theta[0]),
        intercept_b=float(theta[1]),
        n_fit=int(conf.size),
        converged=converged,
        final_gradient_norm=grad_norm,
    )


def _scope_filter(obs: LabeledObservation, scope: CalibratorScope) -> bool:
    if scope.kind == "general":
        return True
    if scope.kind == "language":
        return obs.language is not None and obs.language.value == scope.selector
    # stream scope: match "user" or "user/project"
    key = obs.user_id if obs.project_id is None else f"{obs.user_id}/{obs.project_id}"
    return obs.user_id == scope.selector or key == scope.selector


def fit_scoped(
    observations: Sequence[LabeledObservation],
    scope: CalibratorScope,
    init: PlattParams | None = None,
    l2: float = DEFAULT_L2,
    smoothing: bool = False,
) -> PlattParams:
    """Fit a calibrator on the scope-filtered subset of labeled observations."""
    subset = [o for o in observations if _scope_filter(o, scope)]
    if not subset:
        raise ScopeEmptyError(f"no observations match scope {scope.name()!r}")
    return fit_platt(
        [(o.confidence, o.label) for o in subset], init=init, l2=l2, smoothing=smoothing
    )


def save_calibrators(calibrators: dict[str, PlattParams], path: str | Path) -> None:
    """Write a calibrator persistence file: one JSON object per scope per line."""
    lines = []
    for scope_name in sorted(calibrators):
        p = calibrators[scope_name]
        lines.append(
            json.dumps(
                {
                    "scope": scope_name,
                    "slope_a": p.slope_a,
                    "intercept_b": p.intercept_b,
                    "n_fit": p.n_fit,
                    "converged": p.converged,
                },
                separators=(",", ":"),
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_calibrators(path: str | Path) -> dict[str, PlattParams]:
    """Read a calibrator persistence file back into scope -> PlattParams."""
    out: dict[str, PlattParams] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        out[obj["scope"]] = PlattParams(
            slope_a=float(obj["slope_a"]),
            intercept_b=float(obj["intercept_b"]),
            n_fit=int(obj.get("n_fit", 0)),
            converged=bool(obj.get("converged", False)),
        )
    return out


class PlattCalibrator(BaseEstimator):
    """Sklearn-style estimator wrapping the Platt map.

    fit(X, y) takes raw confidences in (0, 1] and binary labels; transform
    returns calibrated probabilities, so the calibrator composes with
    pipelines. predict thresholds at 0.5.
    """

    def __init__(self, l2: float = DEFAULT_L2, max_iter: int = DEFAULT_MAX_ITER, smoothing: bool = False):
        self.l2 = l2
        self.max_iter = max_iter
        self.smoothing = smoothing

    def fit(self, X, y):
        conf = column_or_1d(np.asarray(X, dtype=float).reshape(-1))
        labels = column_or_1d(np.asarray(y, dtype=float))
        self.params_ = fit_platt(
            (conf, labels), l2=self.l2, max_iter=self.max_iter, smoothing=self.smoothing
        )
        self.slope_a_ = self.params_.slope_a
        self.intercept_b_ = self.params_.intercept_b
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        conf = np.asarray(X, dtype=float).reshape(-1)
        return calibrate(self.params_, conf)

    def predict_proba(self, X):
        p = self.transform(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.transform(X) >= 0.5).astype(int)

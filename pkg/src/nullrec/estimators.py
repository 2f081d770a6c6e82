"""Estimators built on the sufficient statistics (y, j).

All of them are linear algebra on a single SufficientStats record: the
maximum-likelihood solve j theta = y behind a positive-definiteness gate, the
same solve on window-restricted statistics, the one-dimensional ratio
estimator for the principal parameter (inconsistent when secondary drift is
present), the quadratic log-likelihood-ratio surface, and the one-step
correction, which reproduces the ML estimate exactly whenever the gate
passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateSampleError, DegenerateWindowError
from .model import ModelSpec, ParamVector, mu_moment_matrix
from .simulate import SufficientStats, score_at

__all__ = [
    "EstimateResult",
    "EPS_PD",
    "mle",
    "restricted_mle",
    "naive_estimator",
    "log_likelihood_ratio",
    "one_step",
]

# Relative eigenvalue floor for the positive-definite gate: the exact-arithmetic
# indicator 1{j strictly positive definite} needs a tolerance in floating point.
EPS_PD = 1e-10


@dataclass
class EstimateResult:
    theta_hat: np.ndarray
    j_invertible: bool
    conditioning: float
    horizon: float


def _gated_solve(j: np.ndarray, rhs: np.ndarray):
    """Solve j x = rhs through an eigendecomposition with the D+ gate.

    Returns (solution or None, smallest eigenvalue).  The gate fails when the
    smallest eigenvalue is not above EPS_PD * trace / dim.
    """
    w, v = np.linalg.eigh(j)
    w_min = float(w[0])
    floor = EPS_PD * float(np.trace(j)) / j.shape[0]
    if w_min <= floor:
        return None, w_min
    return v @ ((v.T @ rhs) / w), w_min


def mle(stats: SufficientStats) -> EstimateResult:
    """ML estimate 1{j in D+} j^{-1} y; zero vector when the gate fails."""
    sol, w_min = _gated_solve(stats.j, stats.y)
    if sol is None:
        return EstimateResult(
            theta_hat=np.zeros_like(stats.y),
            j_invertible=False,
            conditioning=w_min,
            horizon=stats.t,
        )
    return EstimateResult(theta_hat=sol, j_invertible=True,
                          conditioning=w_min, horizon=stats.t)


def restricted_mle(stats: SufficientStats, x0: Optional[float] = None) -> EstimateResult:
    """ML solve on window-restricted statistics.

    The window must be present, and the starting point (stats.x0, or the x0
    argument when given) must lie in its interior.
    """
    if stats.window is None:
        raise DegenerateWindowError("restricted estimator needs windowed statistics")
    a, b = stats.window
    start = stats.x0 if x0 is None else float(x0)
    if not a < start < b:
        raise DegenerateWindowError(
            f"starting point {start} is not interior to the window [{a}, {b}]"
        )
    return mle(stats)


def naive_estimator(stats: SufficientStats, spec: Optional[ModelSpec] = None,
                    theta_true: Optional[ParamVector] = None):
    """One-dimensional ratio estimate y_1/j_11 of the principal parameter.

    When the true parameter is supplied (and a model to integrate under), the
    almost-sure limit of its bias, sum_nu t2_nu mu(f1 f_{2,nu}) / mu(f1^2),
    is evaluated by quadrature and returned alongside.
    """
    j11 = float(stats.j[0, 0])
    if j11 <= 0.0:
        raise DegenerateSampleError("j_11 must be positive for the ratio estimate")
    theta_check = float(stats.y[0]) / j11
    predicted_bias = None
    if theta_true is not None:
        if spec is None:
            raise ValueError("predicted bias needs the model spec")
        if any(c != 0.0 for c in theta_true.theta2):
            lam = mu_moment_matrix(spec, theta_true)
            coefs = np.asarray(theta_true.theta2, dtype=float)
            predicted_bias = float(coefs @ lam[0, 1:] / lam[0, 0])
        else:
            predicted_bias = 0.0
    return theta_check, predicted_bias


def log_likelihood_ratio(stats: SufficientStats, theta_prime, theta) -> float:
    """Quadratic log-likelihood ratio of theta_prime against theta."""
    vp = theta_prime.as_array() if isinstance(theta_prime, ParamVector) else np.asarray(theta_prime, dtype=float)
    v = theta.as_array() if isinstance(theta, ParamVector) else np.asarray(theta, dtype=float)
    if vp.shape != stats.y.shape or v.shape != stats.y.shape:
        raise ValueError("parameter dimensions do not match statistics")
    d = vp - v
    return float(d @ score_at(stats, v) - 0.5 * d @ stats.j @ d)


def one_step(stats: SufficientStats, preliminary) -> EstimateResult:
    """One-step correction T + 1{j in D+} j^{-1}(y - j T).

    Equals the ML estimate whenever the gate passes; returns the preliminary
    value unchanged (rather than the zero-vector convention of the plain ML
    definition) when it does not.
    """
    prelim = np.asarray(preliminary, dtype=float)
    if prelim.shape != stats.y.shape:
        raise ValueError("preliminary estimate has wrong dimension")
    if not np.isfinite(prelim).all():
        raise ValueError("preliminary estimate must be finite")
    sol, w_min = _gated_solve(stats.j, stats.y - stats.j @ prelim)
    if sol is None:
        return EstimateResult(theta_hat=prelim.copy(), j_invertible=False,
                              conditioning=w_min, horizon=stats.t)
    return EstimateResult(theta_hat=prelim + sol, j_invertible=True,
                          conditioning=w_min, horizon=stats.t)

"""Model definition, scale function, invariant density and asymptotic constants.

The diffusion is dX_t = (t1*f1 + sum_nu t2_nu*f_{2,nu})(X_t) dt + sigma dW_t
with f1(x) = x/(1+x^2).  The principal parameter t1 ranges over the open
interval (-sigma^2/2, sigma^2/2), on which the process is null recurrent; the
secondary parameters are unconstrained.  Everything here is a deterministic
function of (model, parameter): drift values, the scale function S and its
inverse, the invariant density, the tail index alpha, the weights Psi+/Psi-
and D, norming sequences, and moment matrices of the invariant measure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from .basis import DriftBasis, make_basis, principal_f1
from .errors import DegenerateWindowError, ParameterDomainError, QuadratureError

__all__ = [
    "ParamVector",
    "ModelSpec",
    "AsymptoticConstants",
    "eval_drift",
    "antiderivative_F",
    "scale_function",
    "scale_inverse",
    "invariant_density",
    "asymptotic_constants",
    "norming",
    "mu_integral",
    "mu_moment_matrix",
    "information_scale_matrix",
    "classify_recurrence",
    "require_valid_theta",
    "theta_in_domain",
]

# Direct quadrature range for antiderivatives without closed form; beyond it
# the cached limit plus an oscillation-weighted tail integral is used.
_F_DIRECT_RANGE = 200.0
_F_PANEL = 25.0

# Accept a moment integral when QUADPACK's error estimate is below this.
# Oscillating integrands over the whole line converge to ~1e-5 true error
# (error reports are conservative); smooth ones reach 1e-12.
_MU_ABSERR_ACCEPT = 1e-3


@dataclass(frozen=True)
class ParamVector:
    """Drift parameter (t1, t2_1..t2_m); t2 stored as a tuple."""

    theta1: float
    theta2: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "theta1", float(self.theta1))
        object.__setattr__(self, "theta2", tuple(float(v) for v in self.theta2))
        if not math.isfinite(self.theta1) or not all(map(math.isfinite, self.theta2)):
            raise ValueError("parameters must be finite")

    @property
    def m(self) -> int:
        return len(self.theta2)

    def as_array(self) -> np.ndarray:
        return np.array((self.theta1,) + self.theta2, dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ParamVector":
        arr = np.asarray(arr, dtype=float).ravel()
        return cls(theta1=float(arr[0]), theta2=tuple(arr[1:]))


@dataclass(frozen=True)
class ModelSpec:
    """Diffusion coefficient, secondary drift basis and starting point."""

    sigma: float
    basis: DriftBasis
    x0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be a positive real")
        if not math.isfinite(self.x0):
            raise ValueError("x0 must be finite")

    @property
    def m(self) -> int:
        return self.basis.m

    @classmethod
    def from_names(cls, sigma: float, basis: str = "none", x0: float = 0.0) -> "ModelSpec":
        return cls(sigma=float(sigma), basis=make_basis(basis), x0=float(x0))


@dataclass(frozen=True)
class AsymptoticConstants:
    lambda1: float
    lambda2: tuple
    alpha: float
    psi_plus: float
    psi_minus: float
    d_weight: float


def theta_in_domain(spec: ModelSpec, theta: ParamVector) -> bool:
    return abs(theta.theta1) < 0.5 * spec.sigma**2


def require_valid_theta(spec: ModelSpec, theta: ParamVector) -> None:
    """Check theta against the model: t1 interior to its interval, sizes match."""
    if theta.m != spec.m:
        raise ValueError(
            f"parameter has {theta.m} secondary components, basis has {spec.m}"
        )
    if not theta_in_domain(spec, theta):
        bound = 0.5 * spec.sigma**2
        raise ParameterDomainError(
            f"theta1={theta.theta1} outside (-{bound}, {bound})"
        )


def _lambdas(spec: ModelSpec, theta: ParamVector):
    lam1 = 2.0 * theta.theta1 / spec.sigma**2
    lam2 = 2.0 * np.asarray(theta.theta2, dtype=float) / spec.sigma**2
    return lam1, lam2


def eval_drift(spec: ModelSpec, theta: ParamVector, x):
    """Drift b(x) = t1*f1(x) + sum_nu t2_nu*f_{2,nu}(x); vectorized in x."""
    if theta.m != spec.m:
        raise ValueError("parameter/basis size mismatch")
    x = np.asarray(x, dtype=float)
    out = theta.theta1 * principal_f1(x)
    for coef, f in zip(theta.theta2, spec.basis.funcs):
        if coef != 0.0:
            out = out + coef * f(x)
    return out if out.shape else float(out)


def _quad_checked(f, a, b, *, epsabs=1e-11, epsrel=1e-11, limit=200, what=""):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, abserr = quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
    if not math.isfinite(val):
        raise QuadratureError(f"quadrature returned non-finite value for {what}")
    return val, abserr


def _antideriv_scalar(basis: DriftBasis, nu: int, x: float) -> float:
    """F_{2,nu}(x) for one point; nu is 1-based."""
    idx = nu - 1
    analytic = basis.antiderivs[idx]
    if analytic is not None:
        return float(analytic(x))
    if x == 0.0:
        return 0.0
    f = basis.funcs[idx]
    sgn = 1.0 if x > 0 else -1.0
    ax = abs(x)
    if ax <= _F_DIRECT_RANGE:
        # panelled to keep per-call oscillation counts small
        edges = np.arange(0.0, ax, _F_PANEL)
        edges = np.append(edges, ax)
        total = 0.0
        err = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            v, e = _quad_checked(f, sgn * lo, sgn * hi, limit=100,
                                 what=f"F_{nu} on panel")
            total += v
            err += e
        if err > 1e-7:
            raise QuadratureError(
                f"antiderivative F_{nu}({x}) quadrature error {err:.2e}"
            )
        return total
    # beyond direct range: limit minus the oscillatory tail
    limit_val = basis.f_limit_pos[idx] if x > 0 else basis.f_limit_neg[idx]
    osc = basis.osc[idx]
    if osc is None:
        # no tail metadata; the limit itself is the best available value
        return float(limit_val)
    kind, wvar, envelope = osc
    if x > 0:
        # F(x) = F(+inf) - int_x^inf env(y) sin/cos(w y) dy
        g = envelope
    else:
        # F(x) = F(-inf) + int_|x|^inf f(-t) dt with
        # f(-t) = -env(-t) sin(w t)  or  env(-t) cos(w t)
        if kind == "sin":
            def g(y, _env=envelope):
                return -_env(-y)
        else:
            def g(y, _env=envelope):
                return _env(-y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tail, abserr = quad(g, ax, np.inf, weight=kind, wvar=wvar)
    if not math.isfinite(tail) or abserr > 1e-6:
        raise QuadratureError(f"tail quadrature for F_{nu}({x}) failed")
    return float(limit_val) - sgn * tail


def antiderivative_F(spec: ModelSpec, nu: int, x):
    """F_{2,nu}(x) = int_0^x f_{2,nu}(y) dy; nu is 1-based; vectorized in x."""
    if not 1 <= nu <= spec.m:
        raise ValueError(f"nu={nu} out of range 1..{spec.m}")
    analytic = spec.basis.antiderivs[nu - 1]
    if analytic is not None:
        out = np.asarray(analytic(np.asarray(x, dtype=float)))
        return out if out.shape else float(out)
    xa = np.asarray(x, dtype=float)
    if xa.shape:
        return np.array([_antideriv_scalar(spec.basis, nu, float(v)) for v in xa.ravel()]).reshape(xa.shape)
    return _antideriv_scalar(spec.basis, nu, float(xa))


def _f_sum(spec: ModelSpec, lam2: np.ndarray, x):
    """sum_nu lam2_nu * F_{2,nu}(x), vectorized."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for nu in range(1, spec.m + 1):
        if lam2[nu - 1] != 0.0:
            total = total + lam2[nu - 1] * antiderivative_F(spec, nu, x)
    return total


def _scale_density(spec: ModelSpec, theta: ParamVector, x):
    """s(x) = (1+x^2)^(-lam1/2) * exp(-sum lam2_nu F_{2,nu}(x))."""
    lam1, lam2 = _lambdas(spec, theta)
    x = np.asarray(x, dtype=float)
    return (1.0 + x * x) ** (-0.5 * lam1) * np.exp(-_f_sum(spec, lam2, x))


def scale_function(spec: ModelSpec, theta: ParamVector, x: float) -> float:
    """S(x) = int_0^x s(y) dy; a strictly increasing bijection onto the line."""
    require_valid_theta(spec, theta)
    x = float(x)
    if x == 0.0:
        return 0.0
    val, abserr = _quad_checked(lambda y: float(_scale_density(spec, theta, y)),
                                0.0, x, limit=300, what="scale function")
    if abserr > 1e-7 * max(1.0, abs(val)):
        raise QuadratureError(f"scale function quadrature error {abserr:.2e}")
    return val


def scale_inverse(spec: ModelSpec, theta: ParamVector, u: float) -> float:
    """Unique root of S(.) = u, found by bracket expansion plus brentq."""
    require_valid_theta(spec, theta)
    u = float(u)
    if u == 0.0:
        return 0.0
    lo, hi = (0.0, 1.0) if u > 0 else (-1.0, 0.0)
    for _ in range(200):
        if u > 0 and scale_function(spec, theta, hi) >= u:
            break
        if u < 0 and scale_function(spec, theta, lo) <= u:
            break
        lo, hi = (hi, hi * 2.0) if u > 0 else (lo * 2.0, lo)
    else:
        raise QuadratureError("scale_inverse bracket expansion failed")
    return float(brentq(lambda z: scale_function(spec, theta, z) - u,
                        lo, hi, xtol=1e-10, rtol=8.9e-16))


def invariant_density(spec: ModelSpec, theta: ParamVector, x):
    """Density of the invariant measure: (1/sigma^2) / s(x); sigma-normalized."""
    require_valid_theta(spec, theta)
    lam1, lam2 = _lambdas(spec, theta)
    x = np.asarray(x, dtype=float)
    out = (1.0 + x * x) ** (0.5 * lam1) * np.exp(_f_sum(spec, lam2, x)) / spec.sigma**2
    return out if out.shape else float(out)


def asymptotic_constants(spec: ModelSpec, theta: ParamVector) -> AsymptoticConstants:
    require_valid_theta(spec, theta)
    lam1, lam2 = _lambdas(spec, theta)
    alpha = 0.5 * (1.0 - lam1)
    psi_plus = float(np.exp(np.dot(lam2, spec.basis.f_limit_pos))) if spec.m else 1.0
    psi_minus = float(np.exp(np.dot(lam2, spec.basis.f_limit_neg))) if spec.m else 1.0
    d_weight = ((2.0 * spec.sigma**2) ** (1.0 + alpha)
                * gamma_fn(alpha) / (2.0 * gamma_fn(1.0 - alpha)))
    return AsymptoticConstants(
        lambda1=lam1,
        lambda2=tuple(lam2),
        alpha=alpha,
        psi_plus=psi_plus,
        psi_minus=psi_minus,
        d_weight=d_weight,
    )


def norming(spec: ModelSpec, theta: ParamVector, n) -> tuple:
    """Norming pair (alpha_n, delta_n) = (n^a * D/(Psi+ + Psi-), n^(-a/2))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    c = asymptotic_constants(spec, theta)
    alpha_n = float(n) ** c.alpha * c.d_weight / (c.psi_plus + c.psi_minus)
    delta_n = float(n) ** (-0.5 * c.alpha)
    return alpha_n, delta_n


def _psi_funcs(spec: ModelSpec):
    return (principal_f1,) + spec.basis.funcs


def mu_integral(spec: ModelSpec, theta: ParamVector, g, window=None) -> float:
    """Integral of g against the invariant measure, over window or the line."""
    require_valid_theta(spec, theta)

    def integrand(x):
        return float(g(x) * invariant_density(spec, theta, x))

    if window is not None:
        a, b = float(window[0]), float(window[1])
        if not a < b:
            raise DegenerateWindowError(f"window [{a}, {b}] has empty interior")
        val, abserr = _quad_checked(integrand, a, b, limit=400, what="mu integral")
    else:
        val, abserr = _quad_checked(integrand, -np.inf, np.inf, limit=800,
                                    what="mu integral")
    if abserr > _MU_ABSERR_ACCEPT:
        raise QuadratureError(f"mu integral error estimate {abserr:.2e} too large")
    return val


def mu_moment_matrix(spec: ModelSpec, theta: ParamVector, window=None) -> np.ndarray:
    """Matrix with entries mu(psi_i psi_j [1_A]) / sigma^4 over the drift basis."""
    psis = _psi_funcs(spec)
    p = len(psis)
    out = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            def g(x, _fi=psis[i], _fj=psis[j]):
                return _fi(x) * _fj(x)
            out[i, j] = out[j, i] = mu_integral(spec, theta, g, window=window)
    return out / spec.sigma**4


def information_scale_matrix(spec: ModelSpec, theta: ParamVector, window=None) -> np.ndarray:
    """Moment matrix premultiplied by D/(Psi+ + Psi-), the limit of J_n/n^a."""
    c = asymptotic_constants(spec, theta)
    return (c.d_weight / (c.psi_plus + c.psi_minus)) * mu_moment_matrix(
        spec, theta, window=window
    )


def classify_recurrence(spec: ModelSpec, theta1: float) -> str:
    """Recurrence class from the principal parameter alone.

    The scale function stays a bijection up to lambda1 = 1 inclusive, so both
    boundary values belong to the recurrent-with-infinite-mass regime.
    """
    lam1 = 2.0 * float(theta1) / spec.sigma**2
    if lam1 > 1.0:
        return "transient"
    if lam1 < -1.0:
        return "positive_recurrent"
    return "null_recurrent"

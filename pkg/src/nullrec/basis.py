"""Drift basis functions.

The principal drift direction is fixed: f1(x) = x / (1 + x^2).  A basis adds
m bounded Lipschitz secondary directions f_{2,1}, ..., f_{2,m} whose
antiderivatives F_{2,nu}(x) = int_0^x f_{2,nu} have finite limits at +-inf.
Built-in families:

  "none"         m = 0, principal direction only
  "sinc"         m = 1, f_2(x) = sin(x)/x
  "fourier-<L>"  m = 2L, pairs f1(x)sin(kx), f1(x)cos(kx) for k = 1..L,
                 with the cosine member of pair k at even slot 2k

All callables are module level (or partials of module-level functions) so a
basis can cross process boundaries when replications run in parallel.
"""

from __future__ import annotations

import functools
import math
import re
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import sici

from .errors import QuadratureError

__all__ = ["DriftBasis", "make_basis", "principal_f1", "sinc"]


def principal_f1(x):
    x = np.asarray(x, dtype=float)
    return x / (1.0 + x * x)


def sinc(x):
    """sin(x)/x with the removable singularity filled in at 0."""
    x = np.asarray(x, dtype=float)
    return np.sinc(x / np.pi)


def si(x):
    """Antiderivative of sinc: the sine integral Si(x)."""
    return sici(np.asarray(x, dtype=float))[0]


def _f1_sin(x, k):
    x = np.asarray(x, dtype=float)
    return x / (1.0 + x * x) * np.sin(k * x)


def _f1_cos(x, k):
    x = np.asarray(x, dtype=float)
    return x / (1.0 + x * x) * np.cos(k * x)


@dataclass(frozen=True)
class DriftBasis:
    """Secondary drift directions plus cached antiderivative limits.

    funcs[nu] is f_{2,nu+1}; antiderivs[nu] is its closed-form antiderivative
    when one exists, else None and quadrature is used.  osc[nu] is either None
    or ("sin"|"cos", frequency, envelope) with f_{2,nu+1}(x) =
    envelope(x)*sin/cos(frequency*x), so antiderivative tails beyond the
    direct-quadrature range can be finished with a weighted (QAWF-style)
    rule.  f_limit_pos/neg store F_{2,nu}(+inf) and F_{2,nu}(-inf).
    """

    name: str
    funcs: tuple = ()
    antiderivs: tuple = ()
    f_limit_pos: tuple = ()
    f_limit_neg: tuple = ()
    osc: tuple = ()

    def __post_init__(self):
        m = len(self.funcs)
        if not (len(self.f_limit_pos) == len(self.f_limit_neg) == m):
            raise ValueError("antiderivative limits must match basis size")
        if len(self.antiderivs) != m or len(self.osc) != m:
            raise ValueError("antiderivs/osc metadata must match basis size")
        if not all(math.isfinite(v) for v in self.f_limit_pos + self.f_limit_neg):
            raise ValueError("antiderivative limits must be finite")

    @property
    def m(self) -> int:
        return len(self.funcs)


@functools.lru_cache(maxsize=None)
def _fourier_limit(kind: str, k: int) -> float:
    """int_0^inf f1(x) sin/cos(kx) dx by an oscillation-weighted rule."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, abserr = quad(principal_f1, 0.0, np.inf, weight=kind, wvar=float(k))
    if not math.isfinite(val) or abserr > 1e-6:
        raise QuadratureError(
            f"tail quadrature for fourier {kind}(k={k}) did not converge "
            f"(abserr={abserr:.2e})"
        )
    return val


def _fourier_basis(ell: int) -> DriftBasis:
    funcs, limits_pos, limits_neg, osc = [], [], [], []
    for k in range(1, ell + 1):
        # slot 2k-1: f1 sin(kx), even function, odd antiderivative
        funcs.append(functools.partial(_f1_sin, k=k))
        lim = _fourier_limit("sin", k)
        limits_pos.append(lim)
        limits_neg.append(-lim)
        osc.append(("sin", float(k), principal_f1))
        # slot 2k: f1 cos(kx), odd function, even antiderivative
        funcs.append(functools.partial(_f1_cos, k=k))
        lim = _fourier_limit("cos", k)
        limits_pos.append(lim)
        limits_neg.append(lim)
        osc.append(("cos", float(k), principal_f1))
    return DriftBasis(
        name=f"fourier-{ell}",
        funcs=tuple(funcs),
        antiderivs=(None,) * (2 * ell),
        f_limit_pos=tuple(limits_pos),
        f_limit_neg=tuple(limits_neg),
        osc=tuple(osc),
    )


def make_basis(name: str) -> DriftBasis:
    """Build a basis from its name ("none", "sinc", "fourier-<L>")."""
    name = name.strip().lower()
    if name in ("none", "empty", ""):
        return DriftBasis(name="none")
    if name == "sinc":
        return DriftBasis(
            name="sinc",
            funcs=(sinc,),
            antiderivs=(si,),
            f_limit_pos=(np.pi / 2,),
            f_limit_neg=(-np.pi / 2,),
            osc=(None,),
        )
    match = re.fullmatch(r"fourier-(\d+)", name)
    if match:
        ell = int(match.group(1))
        if ell < 1:
            raise ValueError("fourier basis order must be >= 1")
        return _fourier_basis(ell)
    raise ValueError(f"unknown basis name {name!r}")

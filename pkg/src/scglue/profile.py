"""Exponential gluing profile, the composition maps B_T, g_T, C_T and smooth cutoff models.

The gluing profile converts a modulus ``r`` in ``(0, 1]`` into a neck length
``R = phi(r) = exp(1/r) - e``.  The maps ``calc_B``, ``calc_g`` and ``calc_C``
are the smooth reparametrisations built from it; all are evaluated in forms
that never form ``exp(1/x)`` for small ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import DomainError, RangeError

E = math.e

#: Smallest modulus accepted by :func:`phi`; below it ``exp(1/r)`` stops being
#: representable on the grids used here.
PHI_MIN_MODULUS = 0.05


def phi(r: float) -> float:
    """Neck length ``exp(1/r) - e`` for a modulus ``r`` in ``[0.05, 1]``."""
    r = float(r)
    if not (0.0 < r <= 1.0):
        raise DomainError(f"phi needs 0 < r <= 1, got {r!r}")
    if r < PHI_MIN_MODULUS:
        raise RangeError(f"phi(r) overflows the supported range for r={r!r} < {PHI_MIN_MODULUS}")
    # e*(exp(1/r - 1) - 1) keeps full relative accuracy as r -> 1
    return E * math.expm1((1.0 - r) / r)


def phi_prime(r: float) -> float:
    """Derivative ``-exp(1/r)/r**2`` of the gluing profile."""
    phi(r)
    return -math.exp(1.0 / r) / (r * r)


def phi_inv(R: float) -> float:
    """Modulus ``1/ln(R + e)`` belonging to a neck length ``R >= 0``."""
    R = float(R)
    if not R >= 0.0:
        raise DomainError(f"phi_inv needs R >= 0, got {R!r}")
    return 1.0 / (1.0 + math.log1p(R / E))


def phi_dm(r: float) -> float:
    """Logarithmic profile ``-ln(r)/(2 pi)``, kept for comparison plots only."""
    if not r > 0.0:
        raise DomainError(f"phi_dm needs r > 0, got {r!r}")
    return -math.log(r) / (2.0 * math.pi)


def _check_T(T: float) -> float:
    T = float(T)
    if not T > 0.0:
        raise DomainError(f"T must be positive, got {T!r}")
    return T


def _check_x(x: float) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    return x


def calc_g(T: float, x: float) -> float:
    """``g_T(x) = x ln(T + (e - T e) exp(-1/x))`` with ``g_T(0) = 0``."""
    T = _check_T(T)
    x = _check_x(x)
    if x == 0.0:
        return 0.0
    D = E * (1.0 - T)
    # (D/T) exp(-1/x) > (1 - T)/T > -1 on (0, 1), so log1p stays finite
    return x * (math.log(T) + math.log1p((D / T) * math.exp(-1.0 / x)))


def calc_B(T: float, x: float) -> float:
    """``B_T(x) = phi_inv(T phi(x))`` evaluated as ``x / (1 + g_T(x))``."""
    g = calc_g(T, x)
    x = float(x)
    if x == 0.0:
        return 0.0
    return x / (1.0 + g)


def calc_C(T: float, x: float, c: float) -> float:
    """``C_T(x, c) = phi_inv(T phi(x) + c)`` with ``C_T(0, c) = 0``.

    Raises :class:`DomainError` when ``x > 0`` and ``T phi(x) + c <= 0``.
    """
    T = _check_T(T)
    x = _check_x(x)
    c = float(c)
    if x == 0.0:
        return 0.0
    inv = 1.0 / x
    if inv < 700.0:
        glued = T * (math.exp(inv) - E) + c
        if not glued > 0.0:
            raise DomainError(f"T*phi(x)+c = {glued!r} must be positive")
    q = ((E * (1.0 - T) + c) / T) * math.exp(-inv)
    return x / (1.0 + x * (math.log(T) + math.log1p(q)))


def calc_B2(x: float, c: float) -> float:
    """Two-variable map ``B(x, c) = phi_inv(phi(x) + c)``, i.e. ``C_1``."""
    return calc_C(1.0, x, c)


@dataclass(frozen=True)
class CutoffModel:
    """Smooth non-increasing ``beta`` with ``beta = 1`` on ``s <= -1``, ``0`` on ``s >= 1``.

    Every model here has the form ``expit(-z(s))`` on ``(-1, 1)`` with an odd,
    increasing ``z`` that blows up at ``+-1``; oddness of ``z`` gives
    ``beta(s) + beta(-s) = 1`` and the blow-up makes all derivatives vanish at
    the ends.
    """

    name: str
    z: Callable[[np.ndarray], np.ndarray]
    z_prime: Callable[[np.ndarray], np.ndarray]

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        out = np.where(s_arr <= -1.0, 1.0, 0.0)
        inner = (s_arr > -1.0) & (s_arr < 1.0)
        if np.any(inner):
            out = np.array(out, dtype=float)
            out[inner] = expit(-self.z(s_arr[inner]))
        if np.ndim(s) == 0:
            return float(out)
        return out

    def prime(self, s):
        s_arr = np.asarray(s, dtype=float)
        out = np.zeros_like(s_arr)
        inner = (s_arr > -1.0) & (s_arr < 1.0)
        if np.any(inner):
            si = s_arr[inner]
            b = expit(-self.z(si))
            out[inner] = -self.z_prime(si) * b * (1.0 - b)
        if np.ndim(s) == 0:
            return float(out)
        return out

    def window(self, s):
        """``sigma(s) = beta(s - 2) (1 - beta(s))``, supported in ``(-1, 3)``."""
        s_arr = np.asarray(s, dtype=float)
        out = np.asarray(self(s_arr - 2.0)) * (1.0 - np.asarray(self(s_arr)))
        if np.ndim(s) == 0:
            return float(out)
        return out


def _z_exp(s):
    return 2.0 * s / (1.0 - s * s)


def _z_exp_prime(s):
    d = 1.0 - s * s
    return 2.0 * (1.0 + s * s) / (d * d)


def _z_tan(s):
    return np.tan(0.5 * np.pi * s)


def _z_tan_prime(s):
    c = np.cos(0.5 * np.pi * s)
    return 0.5 * np.pi / (c * c)


#: ``h(1-s) / (h(1-s) + h(1+s))`` with ``h(t) = exp(-1/t)``, written as a logistic.
EXP_CUTOFF = CutoffModel("exp", _z_exp, _z_exp_prime)

#: Logistic of ``-tan(pi s / 2)``; a second shape used for independence checks.
TAN_CUTOFF = CutoffModel("tan", _z_tan, _z_tan_prime)

CUTOFF_MODELS = {m.name: m for m in (EXP_CUTOFF, TAN_CUTOFF)}

DEFAULT_CUTOFF = EXP_CUTOFF


def beta(s, model: CutoffModel = DEFAULT_CUTOFF):
    return model(s)


def beta_prime(s, model: CutoffModel = DEFAULT_CUTOFF):
    return model.prime(s)


def window_sigma(s, model: CutoffModel = DEFAULT_CUTOFF):
    return model.window(s)

"""Sampled fields on half-cylinders, finite glued cylinders and anti-glued cylinders.

Grids are uniform: ``s_i = i * ds`` in the absolute value of the cylinder
coordinate and ``t_j = j / Nt`` on the circle.  A half-cylinder field keeps
its asymptotic constant ``c`` separately from the decaying part sampled on
the grid; finite and anti-glued fields store total values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .errors import DomainError, GridError
from .profile import phi, phi_inv

#: Relative tolerance used to decide that a real number sits on a grid.
ALIGN_TOL = 1e-9


class TailWarning(UserWarning):
    """The decaying part of a half-cylinder field is not small at the grid end."""


def aligned_index(x: float, step: float, tol: float = ALIGN_TOL) -> int | None:
    """Return ``n`` with ``x == n * step`` up to ``tol`` (relative to ``step``), else ``None``."""
    q = x / step
    n = round(q)
    if abs(q - n) <= tol * max(1.0, abs(q)):
        return int(n)
    return None


def t_grid(nt: int) -> np.ndarray:
    return np.arange(nt) / nt


def shift_t(values: np.ndarray, tau: float, axis: int = 1) -> np.ndarray:
    """Samples of ``t -> u(t - tau)`` from samples of ``u`` on the uniform circle grid.

    Grid-aligned shifts permute samples exactly; other shifts use the
    trigonometric interpolant (exact for band-limited data).
    """
    nt = values.shape[axis]
    m = aligned_index(tau, 1.0 / nt)
    if m is not None:
        return np.roll(values, m % nt, axis=axis)
    spec = np.fft.rfft(values, axis=axis)
    freqs = np.arange(spec.shape[axis])
    phase = np.exp(-2j * np.pi * freqs * tau)
    shape = [1] * values.ndim
    shape[axis] = -1
    spec = spec * phase.reshape(shape)
    if nt % 2 == 0:
        idx = [slice(None)] * values.ndim
        idx[axis] = -1
        spec[tuple(idx)] = spec[tuple(idx)].real
    return np.fft.irfft(spec, n=nt, axis=axis)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightSequence:
    """Strictly increasing exponential weights ``delta_0 < delta_1 < ...``, one per level."""

    deltas: tuple[float, ...]

    def __post_init__(self):
        d = tuple(float(x) for x in self.deltas)
        if not d:
            raise DomainError("weight sequence is empty")
        if d[0] < 0.0:
            raise DomainError("delta_0 must be nonnegative")
        if any(b <= a for a, b in zip(d, d[1:])):
            raise DomainError(f"weights must increase strictly: {d}")
        object.__setattr__(self, "deltas", d)

    def __getitem__(self, m: int) -> float:
        return self.deltas[m]

    def __len__(self) -> int:
        return len(self.deltas)


DEFAULT_WEIGHTS = WeightSequence((0.1, 0.2, 0.3))


class GluingParameter:
    """Modulus ``r`` and angle ``theta`` in ``[0, 1)``, with neck length ``R = phi(r)``.

    ``from_length`` stores an explicit ``R`` exactly (the modulus is then
    ``phi_inv(R)``), which keeps grid alignment exact.  Parameters with
    modulus zero compare equal regardless of their angle.
    """

    __slots__ = ("modulus", "angle", "_length")

    def __init__(self, modulus: float, angle: float = 0.0, length: float | None = None):
        modulus = float(modulus)
        if not (0.0 <= modulus < 1.0):
            raise DomainError(f"modulus must lie in [0, 1), got {modulus!r}")
        if modulus == 0.0:
            length = None
        elif length is None:
            length = phi(modulus)
        else:
            length = float(length)
            if not length > 0.0:
                raise DomainError("neck length must be positive")
        object.__setattr__(self, "modulus", modulus)
        object.__setattr__(self, "angle", float(angle) % 1.0)
        object.__setattr__(self, "_length", length)

    def __setattr__(self, name, value):
        raise AttributeError("GluingParameter is immutable")

    @classmethod
    def from_length(cls, R: float, angle: float = 0.0) -> "GluingParameter":
        R = float(R)
        if not R > 0.0:
            raise DomainError(f"neck length must be positive, got {R!r}")
        return cls(phi_inv(R), angle, length=R)

    @classmethod
    def zero(cls) -> "GluingParameter":
        return cls(0.0)

    @property
    def is_zero(self) -> bool:
        return self.modulus == 0.0

    @property
    def R(self) -> float:
        if self._length is None:
            raise DomainError("the zero gluing parameter has no neck length")
        return self._length

    @property
    def in_standard_disk(self) -> bool:
        """True when the modulus lies below 1/4."""
        return self.modulus < 0.25

    def angle_index(self, nt: int) -> int | None:
        m = aligned_index(self.angle, 1.0 / nt)
        return None if m is None else m % nt

    def __eq__(self, other):
        if not isinstance(other, GluingParameter):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        return self.R == other.R and self.angle == other.angle

    def __hash__(self):
        return hash(None) if self.is_zero else hash((self.R, self.angle))

    def __repr__(self):
        if self.is_zero:
            return "GluingParameter(0)"
        return f"GluingParameter(modulus={self.modulus!r}, angle={self.angle!r}, R={self.R!r})"


def _check_circle(nt: int) -> None:
    if nt < 8 or nt % 2:
        raise GridError(f"Nt must be even and at least 8, got {nt}")


@dataclass(frozen=True, eq=False)
class HalfCylinderField:
    """``c + r(s, t)`` on a half-cylinder; ``sign=+1`` for ``s >= 0``, ``-1`` for ``s <= 0``.

    ``values[i, j]`` holds ``r`` at ``|s| = i * ds`` and ``t = j / Nt``.
    """

    sign: int
    c: np.ndarray
    values: np.ndarray
    ds: float
    weights: WeightSequence = DEFAULT_WEIGHTS
    tail_tol: float = 1e-8
    check_tail: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3:
            raise GridError("values must have shape (Ns, Nt, N)")
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if c.shape != (vals.shape[2],):
            raise GridError(f"constant has shape {c.shape}, expected ({vals.shape[2]},)")
        _check_circle(vals.shape[1])
        if not self.ds > 0.0:
            raise GridError("ds must be positive")
        smax = (vals.shape[0] - 1) * self.ds
        if smax < 5.0 - 1e-12:
            raise GridError(f"S_max must be at least 5, got {smax}")
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "c", _frozen(c))
        object.__setattr__(self, "ds", float(self.ds))
        if self.check_tail:
            tail = np.max(np.abs(vals[-1]))
            scale = max(1.0, float(np.max(np.abs(vals))))
            if tail > self.tail_tol * scale:
                warnings.warn(
                    f"decaying part is {tail:.3g} at S_max={smax:g} (tolerance {self.tail_tol:g})",
                    TailWarning,
                    stacklevel=3,
                )

    @property
    def N(self) -> int:
        return self.values.shape[2]

    @property
    def Nt(self) -> int:
        return self.values.shape[1]

    @property
    def Ns(self) -> int:
        return self.values.shape[0]

    @property
    def Smax(self) -> float:
        return (self.Ns - 1) * self.ds

    @property
    def s_abs(self) -> np.ndarray:
        return np.arange(self.Ns) * self.ds

    @property
    def s(self) -> np.ndarray:
        """Cylinder coordinate of each grid row (negative on the minus side)."""
        return self.sign * self.s_abs

    def total(self) -> np.ndarray:
        return self.c[None, None, :] + self.values

    def replace(self, **changes) -> "HalfCylinderField":
        kw = dict(sign=self.sign, c=self.c, values=self.values, ds=self.ds,
                  weights=self.weights, tail_tol=self.tail_tol, check_tail=False)
        kw.update(changes)
        return HalfCylinderField(**kw)

    def sample_r(self, abs_s: np.ndarray, t_shift: float = 0.0) -> np.ndarray:
        """Decaying part at ``|s| = abs_s`` (zero beyond ``S_max``), shifted as ``r(., t - t_shift)``."""
        abs_s = np.asarray(abs_s, dtype=float)
        if np.any(abs_s < -ALIGN_TOL * self.ds):
            raise GridError("sample points must have |s| >= 0")
        out = np.zeros((abs_s.size, self.Nt, self.N))
        idx = np.rint(abs_s / self.ds)
        on_grid = np.abs(abs_s / self.ds - idx) <= ALIGN_TOL * np.maximum(1.0, idx)
        inside = abs_s <= self.Smax * (1.0 + ALIGN_TOL)
        direct = on_grid & inside
        if np.any(direct):
            out[direct] = self.values[idx[direct].astype(int)]
        interp = (~on_grid) & inside
        if np.any(interp):
            spline = CubicSpline(self.s_abs, self.values, axis=0)
            out[interp] = spline(abs_s[interp])
        if t_shift != 0.0:
            out = shift_t(out, t_shift)
        return out

    def sample(self, abs_s: np.ndarray, t_shift: float = 0.0) -> np.ndarray:
        return self.c[None, None, :] + self.sample_r(abs_s, t_shift)

    def __add__(self, other: "HalfCylinderField") -> "HalfCylinderField":
        _same_grid(self, other)
        return self.replace(c=self.c + other.c, values=self.values + other.values)

    def __sub__(self, other: "HalfCylinderField") -> "HalfCylinderField":
        _same_grid(self, other)
        return self.replace(c=self.c - other.c, values=self.values - other.values)

    def scaled(self, factor: float) -> "HalfCylinderField":
        return self.replace(c=factor * self.c, values=factor * self.values)


def _same_grid(a: HalfCylinderField, b: HalfCylinderField) -> None:
    if a.sign != b.sign or a.values.shape != b.values.shape or a.ds != b.ds:
        raise GridError("fields live on different grids")


def half_field(sign: int, c: Sequence[float], values: np.ndarray, ds: float, **kw) -> HalfCylinderField:
    return HalfCylinderField(sign, np.asarray(c, dtype=float), values, ds, **kw)


def zero_half(sign: int, n: int, nt: int, smax: float, ds: float, **kw) -> HalfCylinderField:
    ns = aligned_index(smax, ds)
    if ns is None:
        raise GridError("S_max must be a multiple of ds")
    return HalfCylinderField(sign, np.zeros(n), np.zeros((ns + 1, nt, n)), ds, **kw)


@dataclass(frozen=True, eq=False)
class FiniteCylinderField:
    """Total values on ``[0, R] x S^1`` in the lower coordinates ``(s, t)``.

    The upper coordinates are ``s' = s - R`` and ``t' = t - theta``.
    """

    param: GluingParameter
    values: np.ndarray
    ds: float

    def __post_init__(self):
        if self.param.is_zero:
            raise DomainError("a finite cylinder needs a nonzero gluing parameter")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3:
            raise GridError("values must have shape (Ns, Nt, N)")
        _check_circle(vals.shape[1])
        n = aligned_index(self.param.R, self.ds)
        if n is None or n != vals.shape[0] - 1:
            raise GridError(f"grid of {vals.shape[0]} rows with ds={self.ds} does not span [0, R={self.param.R}]")
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "ds", float(self.ds))

    @property
    def R(self) -> float:
        return self.param.R

    @property
    def N(self) -> int:
        return self.values.shape[2]

    @property
    def Nt(self) -> int:
        return self.values.shape[1]

    @property
    def Ns(self) -> int:
        return self.values.shape[0]

    @property
    def s(self) -> np.ndarray:
        return np.arange(self.Ns) * self.ds

    def replace(self, **changes) -> "FiniteCylinderField":
        kw = dict(param=self.param, values=self.values, ds=self.ds)
        kw.update(changes)
        return FiniteCylinderField(**kw)

    def sample(self, s_points: np.ndarray, t_shift: float = 0.0) -> np.ndarray:
        """Values at lower coordinates ``s_points`` (inside ``[0, R]``), shifted as ``w(., t - t_shift)``."""
        s_points = np.asarray(s_points, dtype=float)
        lo, hi = -ALIGN_TOL * self.ds, self.R + ALIGN_TOL * self.ds
        if np.any((s_points < lo) | (s_points > hi)):
            raise GridError("sample points outside [0, R]")
        idx = np.rint(s_points / self.ds)
        on_grid = np.abs(s_points / self.ds - idx) <= ALIGN_TOL * np.maximum(1.0, idx)
        out = np.empty((s_points.size, self.Nt, self.N))
        if np.any(on_grid):
            out[on_grid] = self.values[np.clip(idx[on_grid].astype(int), 0, self.Ns - 1)]
        if np.any(~on_grid):
            out[~on_grid] = CubicSpline(self.s, self.values, axis=0)(s_points[~on_grid])
        if t_shift != 0.0:
            out = shift_t(out, t_shift)
        return out


@dataclass(frozen=True, eq=False)
class AntiGluedField:
    """Total values on ``[s0, s0 + (Ns-1) ds] x S^1`` of the infinite anti-glued cylinder.

    Coordinates are the lower ones of the glued pair; ``c`` is the asymptote
    at ``s -> -infinity`` and ``-c`` the asymptote at ``s -> +infinity``.
    """

    param: GluingParameter
    c: np.ndarray
    values: np.ndarray
    s0: float
    ds: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3:
            raise GridError("values must have shape (Ns, Nt, N)")
        _check_circle(vals.shape[1])
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "c", _frozen(np.atleast_1d(self.c)))
        object.__setattr__(self, "s0", float(self.s0))
        object.__setattr__(self, "ds", float(self.ds))

    @property
    def N(self) -> int:
        return self.values.shape[2]

    @property
    def Nt(self) -> int:
        return self.values.shape[1]

    @property
    def Ns(self) -> int:
        return self.values.shape[0]

    @property
    def s(self) -> np.ndarray:
        return self.s0 + np.arange(self.Ns) * self.ds

    def replace(self, **changes) -> "AntiGluedField":
        kw = dict(param=self.param, c=self.c, values=self.values, s0=self.s0, ds=self.ds)
        kw.update(changes)
        return AntiGluedField(**kw)

    def row(self, s_value: float) -> int:
        n = aligned_index(s_value - self.s0, self.ds)
        if n is None or not (0 <= n < self.Ns):
            raise GridError(f"s={s_value} is not a grid row")
        return n


class EmptyAntiGlued:
    """The single element of the anti-glued space over the zero gluing parameter."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY_ANTI"


EMPTY_ANTI = EmptyAntiGlued()


# ---------------------------------------------------------------- operations


def _d_s(v: np.ndarray, ds: float) -> np.ndarray:
    if v.shape[0] < 3:
        return np.zeros_like(v)
    return np.gradient(v, ds, axis=0, edge_order=2)


def _d_t(v: np.ndarray) -> np.ndarray:
    nt = v.shape[1]
    return (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) * (nt / 2.0)


def _d_tt(v: np.ndarray) -> np.ndarray:
    nt = v.shape[1]
    return (np.roll(v, -1, axis=1) - 2.0 * v + np.roll(v, 1, axis=1)) * (nt * nt)


def derivative_terms(values: np.ndarray, ds: float, order: int) -> list[np.ndarray]:
    """All partial derivatives of total order at most ``order`` (capped at 2)."""
    terms = [values]
    if order >= 1:
        vs = _d_s(values, ds)
        terms += [vs, _d_t(values)]
        if order >= 2:
            terms += [_d_s(vs, ds), _d_t(vs), _d_tt(values)]
    return terms


def weighted_norm(f: HalfCylinderField, level: int) -> float:
    """``(|c|^2 + sum_{|a| <= min(m, 2)} int |D^a r|^2 e^{2 delta_m |s|})^{1/2}``."""
    if not (0 <= level < len(f.weights)):
        raise DomainError(f"level {level} outside 0..{len(f.weights) - 1}")
    delta = f.weights[level]
    weight = np.exp(2.0 * delta * f.s_abs)
    total = float(np.dot(f.c, f.c))
    for term in derivative_terms(f.values, f.ds, min(level, 2)):
        total += _kernels.weighted_sq_integral(term, weight, f.ds)
    return math.sqrt(total)


def middle_loop_average(w: FiniteCylinderField) -> np.ndarray:
    """Mean of ``w(R/2, t)`` over the circle grid."""
    n = aligned_index(0.5 * w.R, w.ds)
    if n is None:
        raise GridError(f"R/2 = {0.5 * w.R} is not on the s-grid with ds={w.ds}")
    return w.values[n].mean(axis=0)


def a_loop_average(f: HalfCylinderField, a: GluingParameter, exact: bool = True) -> np.ndarray:
    """``[u]_a``: the asymptotic constant when ``a = 0``, else the mean of ``c + r`` at ``|s| = R/2``."""
    if a.is_zero:
        return np.array(f.c)
    half = 0.5 * a.R
    if half > f.Smax * (1.0 + ALIGN_TOL):
        raise GridError(f"R/2 = {half} lies beyond S_max = {f.Smax}")
    if exact and aligned_index(half, f.ds) is None:
        raise GridError(f"R/2 = {half} is not on the s-grid with ds={f.ds}")
    return f.sample(np.array([half]))[0].mean(axis=0)


def r_shift(fld, amount: float):
    """Additive action on the first target component."""
    if isinstance(fld, HalfCylinderField):
        c = np.array(fld.c)
        c[0] += amount
        return fld.replace(c=c)
    if isinstance(fld, FiniteCylinderField):
        v = np.array(fld.values)
        v[..., 0] += amount
        return fld.replace(values=v)
    if isinstance(fld, AntiGluedField):
        v = np.array(fld.values)
        v[..., 0] += amount
        c = np.array(fld.c)
        c[0] += amount
        return fld.replace(values=v, c=c)
    raise TypeError(f"cannot shift {type(fld).__name__}")


def rotate_t(fld, tau: float):
    """Precompose with the rotation ``t -> t - tau`` (samples move forward by ``tau``)."""
    return fld.replace(values=shift_t(np.asarray(fld.values), tau))


def anchor_average(b: Iterable[float]) -> float:
    b = np.asarray(list(b), dtype=float)
    if b.size == 0:
        raise DomainError("anchor set is empty")
    return float(b.mean())


def anchor_project(fld, anchors: Sequence[tuple[int, int]]):
    """Subtract the anchor average of the first component, sampled at grid indices ``(i, j)``."""
    if len(anchors) == 0:
        raise DomainError("anchor set is empty")
    if isinstance(fld, HalfCylinderField):
        total = fld.total()
    else:
        total = np.asarray(fld.values)
    av = anchor_average(total[i, j, 0] for i, j in anchors)
    return r_shift(fld, -av)

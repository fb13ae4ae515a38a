"""Nodal gluing, its splitting retraction, anti-gluing and the taper maps.

Coordinates: the x half-cylinder uses ``s >= 0``, the y half-cylinder ``s' <= 0``,
and the glued cylinder ``[0, R] x S^1`` identifies ``s = s' + R``, ``t = t' + theta``.
All blends use a :class:`~scglue.profile.CutoffModel` ``beta``:

* glue:    ``w = beta(s - R/2) u_x(s, t) + beta(R/2 - s) u_y(s - R, t - theta)``
* split:   ``eta_x = beta(s - R/2 - 2) w + (1 - beta(s - R/2 - 2)) av(w)`` and the mirror image
* anti:    ``v = -(1 - beta(s - R/2)) (u_x - av) + beta(s - R/2) (u_y(s - R, t - theta) - av)``

Exact mode requires ``R`` and ``R/2`` on the s-grid and ``theta`` on the t-grid,
which turns the retraction identity into pointwise algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .errors import DomainError, GridError
from .fields import (
    ALIGN_TOL,
    DEFAULT_WEIGHTS,
    EMPTY_ANTI,
    AntiGluedField,
    FiniteCylinderField,
    GluingParameter,
    HalfCylinderField,
    WeightSequence,
    a_loop_average,
    aligned_index,
    middle_loop_average,
    shift_t,
)
from .profile import DEFAULT_CUTOFF, CutoffModel

#: Tolerance on ``|c_x - c_y|`` for a pair to count as matched.
MATCH_TOL = 1e-12

#: Smallest neck length for which the split tapers die out inside ``[0, R]``.
MIN_SPLIT_LENGTH = 6.0


class ZeroAntiGlued:
    """The zero vector of the trivial fibre of the hat anti-gluing over ``a = 0``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ZERO_ANTI"


ZERO_ANTI = ZeroAntiGlued()


@dataclass(frozen=True, eq=False)
class GluedPairDecomposition:
    """A gluing parameter with a matched pair of half-cylinder fields."""

    param: GluingParameter
    eta_x: HalfCylinderField
    eta_y: HalfCylinderField

    def __post_init__(self):
        _check_pair(self.eta_x, self.eta_y)

    @property
    def pair(self) -> tuple[HalfCylinderField, HalfCylinderField]:
        return self.eta_x, self.eta_y


def _check_pair(ux: HalfCylinderField, uy: HalfCylinderField, match: bool = True) -> None:
    if ux.sign != 1 or uy.sign != -1:
        raise GridError("expected a (+) field and a (-) field")
    if ux.Nt != uy.Nt or ux.N != uy.N or ux.ds != uy.ds:
        raise GridError("the two half-cylinder grids differ")
    if match:
        gap = float(np.max(np.abs(ux.c - uy.c)))
        if gap > MATCH_TOL * max(1.0, float(np.max(np.abs(ux.c)))):
            raise DomainError(f"asymptotic constants differ by {gap:.3g}")


def _check_zero_constants(*fields: HalfCylinderField) -> None:
    for f in fields:
        if np.any(np.abs(f.c) > 1e-14):
            raise DomainError("hat constructions need vanishing asymptotic constants")


def _exact_grid(a: GluingParameter, ds: float, nt: int, exact: bool) -> tuple[int, float]:
    n_len = aligned_index(a.R, ds)
    if n_len is None or n_len % 2:
        raise GridError(f"R = {a.R} and R/2 must be multiples of ds = {ds}")
    if exact and a.angle_index(nt) is None:
        raise GridError(f"theta = {a.angle} is not on the t-grid with Nt = {nt} (use exact=False)")
    m = a.angle_index(nt)
    theta = m / nt if m is not None else a.angle
    return n_len, theta


def _rows(f: HalfCylinderField, idx: np.ndarray) -> np.ndarray:
    """Decaying-part rows at integer |s| indices, zero past the end of the grid."""
    out = np.zeros((idx.size, f.Nt, f.N))
    ok = (idx >= 0) & (idx < f.Ns)
    out[ok] = f.values[idx[ok]]
    return out


def glue_values(a: GluingParameter, ux: HalfCylinderField, uy: HalfCylinderField,
                s_points: np.ndarray, cutoff: CutoffModel = DEFAULT_CUTOFF) -> np.ndarray:
    """The glued map at lower coordinates ``s_points`` for any (possibly off-grid) ``R``."""
    R, theta = a.R, a.angle
    s_points = np.asarray(s_points, dtype=float)
    bx = cutoff(s_points - 0.5 * R)
    by = cutoff(0.5 * R - s_points)
    X = ux.sample(np.clip(s_points, 0.0, None))
    Y = uy.sample(np.clip(R - s_points, 0.0, None), t_shift=theta)
    return _kernels.blend(bx, X, by, Y)


def oplus(a: GluingParameter, ux: HalfCylinderField, uy: HalfCylinderField,
          cutoff: CutoffModel = DEFAULT_CUTOFF, exact: bool = True):
    """Glue a matched pair; ``a = 0`` returns the pair unchanged.

    With ``exact=False`` an off-grid angle is handled by trigonometric
    interpolation in ``t``; ``R`` must still lie on the s-grid.
    """
    _check_pair(ux, uy)
    if a.is_zero:
        return ux, uy
    n_len, theta = _exact_grid(a, ux.ds, ux.Nt, exact)
    R = n_len * ux.ds
    reach = 0.5 * R + 1.0
    if min(ux.Smax, uy.Smax) < reach - ALIGN_TOL:
        raise GridError(f"half-cylinder grids must reach |s| = R/2 + 1 = {reach}")
    i = np.arange(n_len + 1)
    s = i * ux.ds
    bx = cutoff(s - 0.5 * R)
    by = cutoff(0.5 * R - s)
    X = ux.c + _rows(ux, i)
    Y = uy.c + shift_t(_rows(uy, n_len - i), theta)
    w = _kernels.blend(bx, X, by, Y)
    return FiniteCylinderField(a, w, ux.ds)


def _split_grid(w: FiniteCylinderField) -> tuple[int, float]:
    if w.R < MIN_SPLIT_LENGTH - ALIGN_TOL:
        raise DomainError(f"splitting needs R >= {MIN_SPLIT_LENGTH}, got {w.R}")
    n_len = w.Ns - 1
    if n_len % 2:
        raise GridError("R/2 must lie on the s-grid")
    m = w.param.angle_index(w.Nt)
    theta = m / w.Nt if m is not None else w.param.angle
    return n_len, theta


def split_f(w, cutoff: CutoffModel = DEFAULT_CUTOFF,
            weights: WeightSequence = DEFAULT_WEIGHTS) -> GluedPairDecomposition:
    """Split a glued map into a matched pair whose gluing returns it; pairs pass through."""
    if isinstance(w, tuple):
        return GluedPairDecomposition(GluingParameter.zero(), *w)
    n_len, theta = _split_grid(w)
    av = middle_loop_average(w)
    s = w.s
    taper = cutoff(s - 0.5 * w.R - 2.0)
    AV = np.broadcast_to(av, w.values.shape)
    eta = _kernels.blend(taper, w.values, 1.0 - taper, AV)
    eta_x = HalfCylinderField(1, av, eta - av, w.ds, weights=weights)
    # row j of the y side sits at s' = -j ds, i.e. lower coordinate s = R - j ds
    w_up = shift_t(w.values[::-1], -theta)
    eta_up = _kernels.blend(taper, w_up, 1.0 - taper, AV)
    eta_y = HalfCylinderField(-1, av, eta_up - av, w.ds, weights=weights)
    return GluedPairDecomposition(w.param, eta_x, eta_y)


def oplus_hat(a: GluingParameter, hx: HalfCylinderField, hy: HalfCylinderField,
              cutoff: CutoffModel = DEFAULT_CUTOFF, exact: bool = True):
    _check_zero_constants(hx, hy)
    return oplus(a, hx, hy, cutoff, exact)


def f_hat(w, cutoff: CutoffModel = DEFAULT_CUTOFF,
          weights: WeightSequence = DEFAULT_WEIGHTS) -> GluedPairDecomposition:
    """Plain tapering of a glued map into a pair with zero constants (no average term)."""
    if isinstance(w, tuple):
        _check_zero_constants(*w)
        return GluedPairDecomposition(GluingParameter.zero(), *w)
    n_len, theta = _split_grid(w)
    taper = cutoff(w.s - 0.5 * w.R - 2.0)
    zero = np.zeros(w.N)
    zeros = np.zeros_like(w.values)
    eta_x = _kernels.blend(taper, w.values, 1.0 - taper, zeros)
    w_up = shift_t(w.values[::-1], -theta)
    eta_y = _kernels.blend(taper, w_up, 1.0 - taper, zeros)
    return GluedPairDecomposition(
        w.param,
        HalfCylinderField(1, zero, eta_x, w.ds, weights=weights),
        HalfCylinderField(-1, zero, eta_y, w.ds, weights=weights),
    )


def retract_pair(a: GluingParameter, ux: HalfCylinderField, uy: HalfCylinderField,
                 cutoff: CutoffModel = DEFAULT_CUTOFF) -> GluedPairDecomposition:
    """Split of the glued pair, evaluated on the input grids for any ``R >= 6``.

    Agrees with ``split_f(oplus(a, ux, uy))`` on aligned grids and stays
    smooth in ``R`` when ``R`` moves off the grid.
    """
    _check_pair(ux, uy)
    if a.is_zero:
        return GluedPairDecomposition(a, ux, uy)
    R = a.R
    if R < MIN_SPLIT_LENGTH - ALIGN_TOL:
        raise DomainError(f"splitting needs R >= {MIN_SPLIT_LENGTH}, got {R}")
    av = glue_values(a, ux, uy, np.array([0.5 * R]), cutoff)[0].mean(axis=0)

    def side(f: HalfCylinderField, to_lower: Callable[[np.ndarray], np.ndarray], t_shift: float):
        sa = f.s_abs
        taper = cutoff(sa - 0.5 * R - 2.0)
        live = taper > 0.0
        W = np.zeros_like(f.values)
        if np.any(live):
            W[live] = shift_t(glue_values(a, ux, uy, to_lower(sa[live]), cutoff), t_shift)
        AV = np.broadcast_to(av, W.shape)
        eta = _kernels.blend(taper, W, 1.0 - taper, AV)
        return f.replace(c=av, values=eta - av)

    eta_x = side(ux, lambda sa: sa, 0.0)
    eta_y = side(uy, lambda sa: R - sa, -a.angle)
    return GluedPairDecomposition(a, eta_x, eta_y)


# ---------------------------------------------------------------- anti-gluing


def _anti_values(a: GluingParameter, ux: HalfCylinderField, uy: HalfCylinderField,
                 av: np.ndarray, cutoff: CutoffModel, exact: bool) -> AntiGluedField:
    n_len, theta = _exact_grid(a, ux.ds, ux.Nt, exact)
    ds = ux.ds
    R = n_len * ds
    lo = n_len - (uy.Ns - 1)           # first row, in units of ds
    hi = ux.Ns - 1
    k = np.arange(lo, hi + 1)
    s = k * ds
    b = cutoff(s - 0.5 * R)
    X = np.zeros((k.size, ux.Nt, ux.N))
    xs = k >= 0
    X[xs] = ux.c + _rows(ux, k[xs]) - av
    Y = np.zeros_like(X)
    ys = k <= n_len
    Y[ys] = uy.c + shift_t(_rows(uy, n_len - k[ys]), theta) - av
    v = _kernels.blend(-(1.0 - b), X, b, Y)
    return AntiGluedField(a, uy.c - av, v, lo * ds, ds)


def ominus(a: GluingParameter, ux: HalfCylinderField, uy: HalfCylinderField,
           cutoff: CutoffModel = DEFAULT_CUTOFF, exact: bool = True):
    """Anti-glue a matched pair; ``a = 0`` gives the empty element.

    The output covers every lower coordinate on which one of the inputs is
    sampled, ``[R - S_max(y), S_max(x)]``.
    """
    _check_pair(ux, uy)
    if a.is_zero:
        return EMPTY_ANTI
    av = 0.5 * (a_loop_average(ux, a) + a_loop_average(uy, a))
    return _anti_values(a, ux, uy, av, cutoff, exact)


def ominus_hat(a: GluingParameter, hx: HalfCylinderField, hy: HalfCylinderField,
               cutoff: CutoffModel = DEFAULT_CUTOFF, exact: bool = True):
    """Anti-gluing without averages for fields with zero constants; ``a = 0`` gives zero."""
    _check_pair(hx, hy)
    _check_zero_constants(hx, hy)
    if a.is_zero:
        return ZERO_ANTI
    return _anti_values(a, hx, hy, np.zeros(hx.N), cutoff, exact)


def _unglue_core(w: FiniteCylinderField, v: AntiGluedField, av: np.ndarray,
                 cutoff: CutoffModel) -> tuple[np.ndarray, np.ndarray, int, int, int, float]:
    a = w.param
    if v.param != a:
        raise GridError("glued and anti-glued fields carry different gluing parameters")
    if v.ds != w.ds or v.Nt != w.Nt or v.N != w.N:
        raise GridError("glued and anti-glued grids differ")
    n_len = w.Ns - 1
    lo = aligned_index(v.s0, w.ds)
    if lo is None:
        raise GridError("anti-glued grid is not aligned with the glued grid")
    hi = lo + v.Ns - 1
    if lo > 0 or hi < n_len:
        raise GridError("anti-glued grid must cover [0, R]")
    m = a.angle_index(w.Nt)
    theta = m / w.Nt if m is not None else a.angle
    b = cutoff(w.s - 0.5 * w.R)
    det = b * b + (1.0 - b) * (1.0 - b)
    if det.min() < 0.5 - 1e-12:
        raise ArithmeticError("unglue determinant fell below 1/2")
    V = v.values[-lo: -lo + n_len + 1]
    X, Y = _kernels.unglue_solve(b, w.values - av, V)
    return X, Y, lo, hi, n_len, theta


def _assemble_halves(w, v, X, Y, lo, hi, n_len, theta, c, c_anti, weights):
    """Half-cylinder decaying parts from the solved block plus the single-cover tails."""
    ds = w.ds
    # x side: rows 0..hi; beyond R only the anti-glued field covers the point
    rx = np.empty((hi + 1, w.Nt, w.N))
    rx[: n_len + 1] = X - c_anti
    if hi > n_len:
        rx[n_len + 1:] = -v.values[-lo + n_len + 1:] - c_anti
    # y side: row j sits at lower coordinate R - j ds, rows 0..n_len - lo
    ny = n_len - lo + 1
    lower_rows = np.empty((ny, w.Nt, w.N))
    lower_rows[: n_len + 1] = Y[::-1] - c_anti
    if lo < 0:
        lower_rows[n_len + 1:] = v.values[:-lo][::-1] - c_anti
    ry = shift_t(lower_rows, -theta)
    hx = HalfCylinderField(1, c, rx, ds, weights=weights)
    hy = HalfCylinderField(-1, c, ry, ds, weights=weights)
    return hx, hy


def unglue_pair_hat(w: FiniteCylinderField, v: AntiGluedField,
                    cutoff: CutoffModel = DEFAULT_CUTOFF,
                    weights: WeightSequence = DEFAULT_WEIGHTS):
    """Recover ``(h_x, h_y)`` from their hat gluing and hat anti-gluing."""
    zero = np.zeros(w.N)
    X, Y, lo, hi, n_len, theta = _unglue_core(w, v, zero, cutoff)
    return _assemble_halves(w, v, X, Y, lo, hi, n_len, theta, zero, zero, weights)


def unglue_pair(w: FiniteCylinderField, v: AntiGluedField,
                cutoff: CutoffModel = DEFAULT_CUTOFF,
                weights: WeightSequence = DEFAULT_WEIGHTS):
    """Recover ``(u_x, u_y)`` from their gluing and anti-gluing.

    The common average is the middle-loop mean of ``w``; the asymptotic
    constant is the anti-glued asymptote plus that average.
    """
    av = middle_loop_average(w)
    c_anti = np.asarray(v.c)
    X, Y, lo, hi, n_len, theta = _unglue_core(w, v, av, cutoff)
    return _assemble_halves(w, v, X, Y, lo, hi, n_len, theta, c_anti + av, c_anti, weights)


# ---------------------------------------------------------------- taper maps


@dataclass(frozen=True)
class TaperShape:
    """A profile for the taper maps.

    ``kind="step"``: smooth, constant on ``(-inf, lo]``, zero on ``[hi, inf)``.
    ``kind="bump"``: smooth and zero outside ``(lo, hi)``.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    kind: str
    support: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.support
        if self.kind not in ("step", "bump") or not lo < hi:
            raise DomainError("taper shape needs kind 'step' or 'bump' and lo < hi")
        left = np.linspace(lo - 20.0, lo, 41)
        right = np.linspace(hi, hi + 20.0, 41)
        fl = np.asarray(self.fn(left), dtype=float)
        fr = np.asarray(self.fn(right), dtype=float)
        if np.any(fr != 0.0):
            raise DomainError("taper shape must vanish to the right of its support")
        if self.kind == "bump" and np.any(fl != 0.0):
            raise DomainError("bump shape must vanish to the left of its support")
        if self.kind == "step" and np.any(fl != fl[0]):
            raise DomainError("step shape must be constant to the left of its support")

    @property
    def left_value(self) -> float:
        return float(self.fn(np.array([self.support[0] - 1.0]))[0])

    def __call__(self, s):
        return np.asarray(self.fn(np.asarray(s, dtype=float)), dtype=float)


def step_shape(cutoff: CutoffModel = DEFAULT_CUTOFF) -> TaperShape:
    return TaperShape(cutoff, "step", (-1.0, 1.0))


def bump_shape(cutoff: CutoffModel = DEFAULT_CUTOFF) -> TaperShape:
    return TaperShape(cutoff.window, "bump", (-1.0, 3.0))


TAPER_KINDS = ("gamma1", "gamma2", "gamma3", "gamma4", "M3", "M4", "M5")

_STEP_KINDS = {"gamma1", "gamma2", "M3", "M4"}
_INPUT_SIGN = {"gamma1": 1, "gamma2": -1, "gamma3": -1, "gamma4": 1, "M3": 1, "M4": 1, "M5": -1}
_OUTPUT_SIGN = {"gamma1": 1, "gamma2": -1, "gamma3": 1, "gamma4": -1, "M3": 1, "M4": 1, "M5": 1}


def taper_map(kind: str, shape: TaperShape, a: GluingParameter, h: HalfCylinderField,
              out_smax: float | None = None) -> HalfCylinderField:
    """The taper maps ``Gamma_1``-``Gamma_4`` and ``M3``-``M5`` on sampled fields.

    ``gamma1``/``M4``: ``f(s - R/2) h(s, t)``; ``gamma2``: ``f(-s' - R/2) h(s', t')``;
    ``gamma3``/``M5``: ``g(s - R/2) h(s - R, t - theta)`` (zero for ``s > R``);
    ``gamma4``: ``g(-s' - R/2) h(s' + R, t' + theta)``; ``M3``: ``f(s - R/2) [h]_a``.
    At ``a = 0`` the step kinds give ``f(-inf) h`` (``f(-inf) [h]_0`` for ``M3``)
    and the bump kinds give zero.
    """
    kind = {"G1": "gamma1", "G2": "gamma2", "G3": "gamma3", "G4": "gamma4"}.get(kind, kind)
    if kind not in TAPER_KINDS:
        raise DomainError(f"unknown taper kind {kind!r}")
    want = "step" if kind in _STEP_KINDS else "bump"
    if shape.kind != want:
        raise DomainError(f"{kind} needs a {want} shape, got {shape.kind}")
    if h.sign != _INPUT_SIGN[kind]:
        raise GridError(f"{kind} takes a field on the {'+' if _INPUT_SIGN[kind] > 0 else '-'} side")
    sign_out = _OUTPUT_SIGN[kind]
    if sign_out == h.sign:
        n_out = h.Ns
    else:
        smax = h.Smax if out_smax is None else out_smax
        n = aligned_index(smax, h.ds)
        if n is None:
            raise GridError("output S_max must be a multiple of ds")
        n_out = n + 1
    sa = np.arange(n_out) * h.ds
    zero = np.zeros(h.N)

    def out(c, values):
        return HalfCylinderField(sign_out, c, values, h.ds, weights=h.weights, check_tail=False)

    if a.is_zero:
        if kind == "M3":
            return out(shape.left_value * h.c, np.zeros((n_out, h.Nt, h.N)))
        if kind in _STEP_KINDS:
            return out(shape.left_value * h.c, shape.left_value * h.values)
        return out(zero, np.zeros((n_out, h.Nt, h.N)))

    R = a.R
    prof = shape(sa - 0.5 * R)
    if kind in ("gamma1", "gamma2", "M4"):
        vals = prof[:, None, None] * h.total()
    elif kind == "M3":
        av = a_loop_average(h, a, exact=False)
        vals = prof[:, None, None] * np.broadcast_to(av, (n_out, h.Nt, h.N))
    else:
        live = (prof != 0.0) & (sa <= R * (1.0 + ALIGN_TOL))
        vals = np.zeros((n_out, h.Nt, h.N))
        if np.any(live):
            shift = a.angle if kind in ("gamma3", "M5") else -a.angle
            vals[live] = prof[live][:, None, None] * h.sample(R - sa[live], t_shift=shift)
    return out(zero, vals)

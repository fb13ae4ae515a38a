"""Periodic-orbit gluing: standard maps, the stretched gluing and its coretractions.

Targets are ``R x R^N``; component 0 is the real factor that the additive
action shifts, components ``1..N`` hold the loop.  Standard maps are

* x side (``s >= 0``): ``(T s + c_x, gamma(k (t - theta_x)))``
* y side (``s' <= 0``): ``(T s' + c_y, gamma(k (t' + theta_y)))``

With the glued coordinates ``s = s' + R``, ``t = t' + theta`` and
``theta = theta_x + theta_y`` the two halves agree on the overlap exactly when
``T R = phi(r) + c_y - c_x``; the decoration pair is defined up to the
``Z_k`` action ``(theta_x + j/k, theta_y - j/k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .errors import DomainError, GridError, MembershipError
from .fields import (
    ALIGN_TOL,
    DEFAULT_WEIGHTS,
    FiniteCylinderField,
    GluingParameter,
    HalfCylinderField,
    WeightSequence,
    aligned_index,
    shift_t,
    t_grid,
    weighted_norm,
)
from .gluing import MIN_SPLIT_LENGTH
from .profile import DEFAULT_CUTOFF, CutoffModel, phi, phi_inv

#: Upper bound on the domain modulus produced by the parameter map.
DISK_RADIUS = 0.25


def _circle_dist(x: float) -> float:
    """Distance from ``x`` to the nearest integer."""
    return abs(x - round(x))


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    """A sampled closed embedded loop ``gamma`` with period ``T`` and covering number ``k``."""

    gamma: np.ndarray
    T: float
    k: int = 1
    weights: WeightSequence = DEFAULT_WEIGHTS

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] < 8 or g.shape[0] % 2:
            raise DomainError("gamma must be sampled at an even number >= 8 of points, shape (M, N)")
        if not self.T > 0.0:
            raise DomainError("period T must be positive")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError("covering number k must be a positive integer")
        diff = g[:, None, :] - g[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        dist[np.diag_indices_from(dist)] = np.inf
        if dist.min() <= 1e-12:
            raise DomainError("gamma is not injective on its samples")
        spec = np.abs(np.fft.rfft(g, axis=0)) / g.shape[0]
        m = spec.shape[0]
        tail = spec[(3 * m) // 4:].max() if m > 4 else 0.0
        if tail > 1e-8 * max(1.0, spec.max()):
            raise DomainError(f"gamma is not resolved by its samples (spectral tail {tail:.3g})")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "k", int(self.k))
        coef = np.fft.rfft(g, axis=0) / g.shape[0]
        object.__setattr__(self, "_coef", coef)

    @classmethod
    def circle(cls, N: int = 2, M: int = 32, T: float = 1.0, k: int = 1,
               weights: WeightSequence = DEFAULT_WEIGHTS) -> "PeriodicOrbit":
        """The standard circle ``(cos 2 pi t, sin 2 pi t, 0, ...)`` in ``R^N``."""
        if N < 2:
            raise DomainError("the standard circle needs N >= 2")
        t = t_grid(M)
        g = np.zeros((M, N))
        g[:, 0] = np.cos(2 * np.pi * t)
        g[:, 1] = np.sin(2 * np.pi * t)
        return cls(g, T, k, weights)

    @property
    def N(self) -> int:
        return self.gamma.shape[1]

    def __call__(self, t) -> np.ndarray:
        """Trigonometric interpolant of the samples at the points ``t`` (shape ``(len(t), N)``)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        M = self.gamma.shape[0]
        coef = self._coef
        out = np.repeat(coef[0].real[None, :], t.size, axis=0)
        for m in range(1, coef.shape[0]):
            phase = np.exp(2j * np.pi * m * t)[:, None]
            if 2 * m == M:
                out = out + (coef[m].real[None, :] * np.cos(np.pi * M * t)[:, None])
            else:
                out = out + 2.0 * (coef[m][None, :] * phase).real
        return out


@dataclass(frozen=True, eq=False)
class StandardMap:
    """The pair of standard maps fixed by ``(c_x, c_y)`` and the decorations ``(theta_x, theta_y)``."""

    orbit: PeriodicOrbit
    cx: float
    cy: float
    theta_x: float
    theta_y: float

    def __post_init__(self):
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "theta_x", float(self.theta_x) % 1.0)
        object.__setattr__(self, "theta_y", float(self.theta_y) % 1.0)

    @property
    def angle(self) -> float:
        return (self.theta_x + self.theta_y) % 1.0

    def values(self, side: str, abs_s, t) -> np.ndarray:
        """Samples on the grid ``abs_s x t``; shape ``(len(abs_s), len(t), N + 1)``."""
        abs_s = np.atleast_1d(np.asarray(abs_s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        o = self.orbit
        if side == "x":
            first = o.T * abs_s + self.cx
            loop = o(o.k * (t - self.theta_x))
        elif side == "y":
            first = -o.T * abs_s + self.cy
            loop = o(o.k * (t + self.theta_y))
        else:
            raise DomainError("side must be 'x' or 'y'")
        out = np.empty((abs_s.size, t.size, o.N + 1))
        out[:, :, 0] = first[:, None]
        out[:, :, 1:] = loop[None, :, :]
        return out

    def zk_distance(self, other: "StandardMap") -> float:
        """Largest discrepancy between the two maps modulo the ``Z_k`` action."""
        k = self.orbit.k
        return max(
            abs(self.cx - other.cx),
            abs(self.cy - other.cy),
            _circle_dist(k * (self.theta_x - other.theta_x)) / k,
            _circle_dist(self.angle - other.angle),
        )

    def zk_shift(self, j: int) -> "StandardMap":
        k = self.orbit.k
        return StandardMap(self.orbit, self.cx, self.cy, self.theta_x + j / k, self.theta_y - j / k)

    def shifted(self, amount: float) -> "StandardMap":
        return StandardMap(self.orbit, self.cx + amount, self.cy + amount, self.theta_x, self.theta_y)


def standard_eval(q: StandardMap, side: str, s: float, t: float) -> np.ndarray:
    """``(T s + c, gamma(k (t -+ theta)))`` at a single point; ``s <= 0`` on the y side."""
    if side == "y" and s > 0:
        raise DomainError("y-side points have s <= 0")
    if side == "x" and s < 0:
        raise DomainError("x-side points have s >= 0")
    return q.values(side, [abs(s)], [t])[0, 0]


@dataclass(frozen=True, eq=False)
class OrbitElement:
    """Either a boundary-format element ``(r, q, h_x, h_y)`` or an interior ``(r, w)``."""

    r: float
    q: StandardMap | None = None
    hx: HalfCylinderField | None = None
    hy: HalfCylinderField | None = None
    w: FiniteCylinderField | None = None

    def __post_init__(self):
        r = float(self.r)
        if not (0.0 <= r < 1.0):
            raise DomainError(f"stretch parameter must lie in [0, 1), got {r}")
        object.__setattr__(self, "r", r)
        if self.w is not None:
            if r == 0.0:
                raise DomainError("interior elements need r > 0")
            if self.q is not None or self.hx is not None:
                raise DomainError("interior elements carry only w")
            return
        if self.q is None or self.hx is None or self.hy is None:
            raise DomainError("boundary elements need q, hx and hy")
        if self.hx.sign != 1 or self.hy.sign != -1:
            raise GridError("hx lives on the + side, hy on the - side")
        for h in (self.hx, self.hy):
            if h.N != self.q.orbit.N + 1:
                raise GridError("h fields must have N + 1 components")
            if np.any(h.c != 0.0):
                raise DomainError("h fields must have zero asymptotic constants")
        if self.hx.Nt != self.hy.Nt or self.hx.ds != self.hy.ds:
            raise GridError("hx and hy grids differ")

    @property
    def kind(self) -> str:
        return "interior" if self.w is not None else "boundary"

    @classmethod
    def boundary(cls, r, q, hx, hy) -> "OrbitElement":
        return cls(r, q=q, hx=hx, hy=hy)

    @classmethod
    def interior(cls, r, w) -> "OrbitElement":
        return cls(r, w=w)


def a_param(r: float, cx: float, cy: float, T: float, angle: float,
            max_modulus: float = DISK_RADIUS) -> GluingParameter:
    """Domain gluing parameter with ``T phi(|a|) = phi(r) + c_y - c_x``.

    The neck length is stored exactly as ``(phi(r) + c_y - c_x) / T``.
    """
    if r == 0.0:
        return GluingParameter.zero()
    length = (phi(r) + cy - cx) / T
    if not length > 0.0:
        raise MembershipError(f"glued length {length!r} is not positive")
    modulus = phi_inv(length)
    if not modulus < max_modulus:
        raise MembershipError(f"glued modulus {modulus:.6g} is not below {max_modulus}")
    return GluingParameter(modulus, angle, length=length)


def shift_element(elem: OrbitElement, amount: float) -> OrbitElement:
    """Additive action on the real factor."""
    if elem.kind == "interior":
        v = np.array(elem.w.values)
        v[..., 0] += amount
        return OrbitElement.interior(elem.r, elem.w.replace(values=v))
    return OrbitElement.boundary(elem.r, elem.q.shifted(amount), elem.hx, elem.hy)


def _snap(a: GluingParameter, ds: float, nt: int) -> tuple[float, float]:
    n = aligned_index(a.R, ds)
    R = n * ds if n is not None else a.R
    m = a.angle_index(nt)
    theta = m / nt if m is not None else a.angle
    return R, theta


def _glued_at(elem: OrbitElement, a: GluingParameter, R: float, theta: float,
              s_points: np.ndarray, cutoff: CutoffModel) -> np.ndarray:
    """The stretched gluing of a boundary element at lower coordinates ``s_points``."""
    q, hx, hy = elem.q, elem.hx, elem.hy
    t = t_grid(hx.Nt)
    s_points = np.asarray(s_points, dtype=float)
    X = q.values("x", s_points, t) + hx.sample_r(s_points)
    abs_y = np.clip(R - s_points, 0.0, None)
    Y = q.values("y", abs_y, t - theta) + hy.sample_r(abs_y, t_shift=theta)
    Y[..., 0] += phi(elem.r)
    return _kernels.blend(cutoff(s_points - 0.5 * R), X, cutoff(0.5 * R - s_points), Y)


def bar_oplus(elem: OrbitElement, cutoff: CutoffModel = DEFAULT_CUTOFF,
              exact: bool = True, max_modulus: float = DISK_RADIUS) -> OrbitElement:
    """Stretched gluing; ``r = 0`` and interior elements pass through."""
    if elem.r == 0.0 or elem.kind == "interior":
        return elem
    q = elem.q
    a = a_param(elem.r, q.cx, q.cy, q.orbit.T, q.angle, max_modulus)
    ds, nt = elem.hx.ds, elem.hx.Nt
    n_len = aligned_index(a.R, ds)
    if n_len is None:
        raise GridError(f"glued length {a.R} is not a multiple of ds = {ds}")
    if exact and a.angle_index(nt) is None:
        raise GridError(f"angle {a.angle} is not on the t-grid (use exact=False)")
    R, theta = _snap(a, ds, nt)
    s = np.arange(n_len + 1) * ds
    w = _glued_at(elem, a, R, theta, s, cutoff)
    return OrbitElement.interior(elem.r, FiniteCylinderField(a, w, ds))


# ---------------------------------------------------------------- circle averages


def unwrap_circle(q: np.ndarray) -> tuple[np.ndarray, int]:
    """Lift of circle-valued samples on the uniform grid and its degree."""
    q = np.asarray(q, dtype=float) % 1.0
    steps = np.diff(np.append(q, q[0]))
    red = steps - np.round(steps)
    if np.max(np.abs(red)) >= 0.5 - 1e-12:
        raise DomainError("adjacent circle samples jump by half a turn; the lift is undecidable")
    lift = q[0] + np.concatenate(([0.0], np.cumsum(red[:-1])))
    degree = int(round(float(np.sum(red))))
    return lift, degree


def circle_average(q: np.ndarray) -> float:
    """Mean of a continuous lift over ``[0, 1]`` (trapezoid rule), reduced mod 1."""
    lift, degree = unwrap_circle(q)
    n = lift.size
    return float((lift.mean() + degree / (2.0 * n)) % 1.0)


@dataclass(frozen=True)
class AveragingChart:
    """Angle chart ``Phi(x) = arg(x_1 + i x_2) / 2 pi`` on an annulus around the standard circle."""

    rho_min: float = 0.5
    rho_max: float = 1.5

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (np.arctan2(x[..., 1], x[..., 0]) / (2.0 * np.pi)) % 1.0

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        return (rho > self.rho_min) & (rho < self.rho_max)


MODEL_CHART = AveragingChart()

_WINDOW = 3.0


def _middle_data(r: float, R: float, wfun: Callable[[np.ndarray], np.ndarray], ds: float,
                 T: float, k: int, chart: AveragingChart) -> tuple[float, float, float]:
    n3 = int(math.floor(_WINDOW / ds + ALIGN_TOL))
    s_win = 0.5 * R + ds * np.arange(-n3, n3 + 1)
    if s_win[0] < -ALIGN_TOL or s_win[-1] > R * (1.0 + ALIGN_TOL):
        raise MembershipError("middle annulus leaves the glued cylinder")
    win = wfun(s_win)
    loops = win[..., 1:]
    if not np.all(chart.contains(loops)):
        raise MembershipError("middle annulus leaves the averaging chart")
    for row in loops:
        _, deg = unwrap_circle(chart(row))
        if deg != k:
            raise MembershipError(f"middle loop has degree {deg}, expected {k}")
    mid = win[n3]
    d = circle_average(chart(mid[:, 1:]))
    cx = float(mid[:, 0].mean()) - 0.5 * T * R
    cy = cx + T * R - phi(r)
    return cx, cy, d


def middle_averages(r: float, w: FiniteCylinderField, orbit: PeriodicOrbit,
                    chart: AveragingChart = MODEL_CHART) -> tuple[float, float, float]:
    """``(c_x, c_y, d)`` read off the middle loop of a glued map."""
    if aligned_index(0.5 * w.R, w.ds) is None:
        raise GridError("R/2 is not on the s-grid")
    return _middle_data(r, w.R, w.sample, w.ds, orbit.T, orbit.k, chart)


def _standard_from(orbit: PeriodicOrbit, cx: float, cy: float, d: float, angle: float) -> StandardMap:
    k = orbit.k
    theta_x = ((0.5 * k - d) / k) % 1.0
    return StandardMap(orbit, cx, cy, theta_x, angle - theta_x)


def averaging_A_Phi(elem_or_r, w: FiniteCylinderField | None = None,
                    orbit: PeriodicOrbit | None = None,
                    chart: AveragingChart = MODEL_CHART) -> StandardMap:
    """Best standard-map approximant of a glued map from its middle-loop averages.

    Accepts an :class:`OrbitElement` (``r = 0`` boundary elements return their
    stored standard map) or the pair ``(r, w)`` together with the orbit.
    """
    if isinstance(elem_or_r, OrbitElement):
        elem = elem_or_r
        if elem.kind == "boundary":
            if elem.r == 0.0:
                return elem.q
            raise DomainError("average a glued element; apply bar_oplus first")
        r, w = elem.r, elem.w
    else:
        r = float(elem_or_r)
    if orbit is None or w is None:
        raise DomainError("averaging needs the glued map and the orbit")
    cx, cy, d = middle_averages(r, w, orbit, chart)
    m = w.param.angle_index(w.Nt)
    angle = m / w.Nt if m is not None else w.param.angle
    return _standard_from(orbit, cx, cy, d, angle)


def redecorate_x(w: FiniteCylinderField, tau: float) -> FiniteCylinderField:
    """Express a glued map in the coordinates of the x decoration rotated by ``tau``."""
    p = w.param
    return FiniteCylinderField(GluingParameter(p.modulus, p.angle + tau, length=p.R),
                               shift_t(np.asarray(w.values), tau), w.ds)


# ---------------------------------------------------------------- coretractions


def _taper_to(r: float, R: float, theta: float, wfun: Callable[..., np.ndarray], q: StandardMap,
              abs_x: np.ndarray, abs_y: np.ndarray, nt: int, ds: float, cutoff: CutoffModel,
              weights: WeightSequence) -> tuple[HalfCylinderField, HalfCylinderField]:
    """``h_x = beta(s - R/2 - 2)(w - q^x)`` and the mirrored, downshifted ``h_y``."""
    t = t_grid(nt)
    n = q.orbit.N + 1
    tx = cutoff(abs_x - 0.5 * R - 2.0)
    hx = np.zeros((abs_x.size, nt, n))
    live = tx > 0.0
    if np.any(live):
        diff = wfun(abs_x[live]) - q.values("x", abs_x[live], t)
        hx[live] = tx[live][:, None, None] * diff
    ty = cutoff(abs_y - 0.5 * R - 2.0)
    hy = np.zeros((abs_y.size, nt, n))
    live = ty > 0.0
    if np.any(live):
        up = shift_t(wfun(R - abs_y[live]), -theta)
        up[..., 0] -= phi(r)
        diff = up - q.values("y", abs_y[live], t)
        hy[live] = ty[live][:, None, None] * diff
    zero = np.zeros(n)
    return (HalfCylinderField(1, zero, hx, ds, weights=weights, check_tail=False),
            HalfCylinderField(-1, zero, hy, ds, weights=weights, check_tail=False))


def _interior_parts(elem_or_r, w):
    if isinstance(elem_or_r, OrbitElement):
        if elem_or_r.kind != "interior":
            raise DomainError("expected an interior element")
        return elem_or_r.r, elem_or_r.w
    return float(elem_or_r), w


def coretraction_H(elem_or_r, w: FiniteCylinderField | None = None,
                   orbit: PeriodicOrbit | None = None, cutoff: CutoffModel = DEFAULT_CUTOFF,
                   weights: WeightSequence = DEFAULT_WEIGHTS) -> OrbitElement:
    """Right inverse of the stretched gluing on ``r > 0``, using the reference decoration."""
    r, w = _interior_parts(elem_or_r, w)
    if r == 0.0:
        raise DomainError("H is defined for r > 0 only")
    if orbit is None:
        raise DomainError("H needs the orbit")
    if w.R < MIN_SPLIT_LENGTH - ALIGN_TOL:
        raise DomainError(f"H needs R >= {MIN_SPLIT_LENGTH}")
    R, theta = _snap(w.param, w.ds, w.Nt)
    q0 = StandardMap(orbit, 0.0, orbit.T * w.R - phi(r), 0.0, theta)
    grid = w.s
    hx, hy = _taper_to(r, R, theta, w.sample, q0, grid, grid, w.Nt, w.ds, cutoff, weights)
    return OrbitElement.boundary(r, q0, hx, hy)


def coretraction_K(elem_or_r, w: FiniteCylinderField | None = None,
                   orbit: PeriodicOrbit | None = None, chart: AveragingChart = MODEL_CHART,
                   cutoff: CutoffModel = DEFAULT_CUTOFF,
                   weights: WeightSequence = DEFAULT_WEIGHTS) -> OrbitElement:
    """Right inverse of the stretched gluing near ``r = 0``, built from the averaging map."""
    if isinstance(elem_or_r, OrbitElement) and elem_or_r.kind == "boundary":
        if elem_or_r.r == 0.0:
            return elem_or_r
        raise DomainError("K acts on glued elements")
    r, w = _interior_parts(elem_or_r, w)
    if orbit is None:
        raise DomainError("K needs the orbit")
    if w.R < MIN_SPLIT_LENGTH - ALIGN_TOL:
        raise DomainError(f"K needs R >= {MIN_SPLIT_LENGTH}")
    q = averaging_A_Phi(r, w, orbit, chart)
    R, theta = _snap(w.param, w.ds, w.Nt)
    grid = w.s
    hx, hy = _taper_to(r, R, theta, w.sample, q, grid, grid, w.Nt, w.ds, cutoff, weights)
    return OrbitElement.boundary(r, q, hx, hy)


class _LazyGlue:
    """The stretched gluing of a boundary element, evaluated on demand for any ``R``."""

    def __init__(self, elem: OrbitElement, cutoff: CutoffModel, max_modulus: float):
        q = elem.q
        self.elem = elem
        self.cutoff = cutoff
        self.a = a_param(elem.r, q.cx, q.cy, q.orbit.T, q.angle, max_modulus)
        self.R, self.theta = _snap(self.a, elem.hx.ds, elem.hx.Nt)

    def __call__(self, s_points) -> np.ndarray:
        return _glued_at(self.elem, self.a, self.R, self.theta, np.asarray(s_points, dtype=float),
                         self.cutoff)


def glued_average(elem: OrbitElement, chart: AveragingChart = MODEL_CHART,
                  cutoff: CutoffModel = DEFAULT_CUTOFF,
                  max_modulus: float = DISK_RADIUS) -> StandardMap:
    """``A_Phi`` of the stretched gluing of a boundary element, without an aligned grid."""
    g = _LazyGlue(elem, cutoff, max_modulus)
    o = elem.q.orbit
    cx, cy, d = _middle_data(elem.r, g.R, g, elem.hx.ds, o.T, o.k, chart)
    return _standard_from(o, cx, cy, d, g.theta)


def k_after_baroplus(elem: OrbitElement, chart: AveragingChart = MODEL_CHART,
                     cutoff: CutoffModel = DEFAULT_CUTOFF,
                     max_modulus: float = DISK_RADIUS) -> OrbitElement:
    """``K`` of the stretched gluing, returned on the input element's grids."""
    if elem.r == 0.0:
        return elem
    g = _LazyGlue(elem, cutoff, max_modulus)
    q = glued_average(elem, chart, cutoff, max_modulus)
    hx, hy = _taper_to(elem.r, g.R, g.theta, g, q, elem.hx.s_abs, elem.hy.s_abs,
                       elem.hx.Nt, elem.hx.ds, cutoff, elem.hx.weights)
    return OrbitElement.boundary(elem.r, q, hx, hy)


def h_after_baroplus(elem: OrbitElement, cutoff: CutoffModel = DEFAULT_CUTOFF,
                     max_modulus: float = DISK_RADIUS) -> OrbitElement:
    """``H`` of the stretched gluing, returned on the input element's grids."""
    if elem.r == 0.0:
        raise DomainError("H is defined for r > 0 only")
    g = _LazyGlue(elem, cutoff, max_modulus)
    o = elem.q.orbit
    q0 = StandardMap(o, 0.0, o.T * g.a.R - phi(elem.r), 0.0, g.theta)
    hx, hy = _taper_to(elem.r, g.R, g.theta, g, q0, elem.hx.s_abs, elem.hy.s_abs,
                       elem.hx.Nt, elem.hx.ds, cutoff, elem.hx.weights)
    return OrbitElement.boundary(elem.r, q0, hx, hy)


def compare_D(elem: OrbitElement, chart: AveragingChart = MODEL_CHART,
              cutoff: CutoffModel = DEFAULT_CUTOFF,
              max_modulus: float = DISK_RADIUS) -> tuple[HalfCylinderField, HalfCylinderField]:
    """Tapered difference between the standard part and the re-averaged standard map."""
    if elem.kind != "boundary":
        raise DomainError("the comparison map acts on boundary-format elements")
    hx, hy = elem.hx, elem.hy
    zero = np.zeros(hx.N)
    if elem.r == 0.0:
        return (hx.replace(c=zero, values=np.zeros_like(hx.values)),
                hy.replace(c=zero, values=np.zeros_like(hy.values)))
    p = glued_average(elem, chart, cutoff, max_modulus)
    g = _LazyGlue(elem, cutoff, max_modulus)
    R = g.R
    q = elem.q
    t = t_grid(hx.Nt)
    ax, ay = hx.s_abs, hy.s_abs
    kx = cutoff(ax - 0.5 * R - 2.0)[:, None, None] * (q.values("x", ax, t) - p.values("x", ax, t))
    ky = cutoff(ay - 0.5 * R - 2.0)[:, None, None] * (q.values("y", ay, t) - p.values("y", ay, t))
    return hx.replace(c=zero, values=kx), hy.replace(c=zero, values=ky)


# ---------------------------------------------------------------- convergence classes


@dataclass(frozen=True)
class OrbitFit:
    c: float
    d: float
    residual_norms: tuple[float, ...]


def orbit_class_check(samples: np.ndarray, ds: float, orbit: PeriodicOrbit,
                      weights: WeightSequence | None = None, tail: float = 2.0,
                      chart: AveragingChart = MODEL_CHART) -> OrbitFit:
    """Fit ``(T s + c, gamma_0(k t - k/2 + d))`` to a map on ``[0, S] x S^1`` and weigh the residual.

    ``c`` and ``d`` come from the last ``tail`` units of ``s``; the residual
    norms are the half-cylinder norms of the difference, one per level.
    """
    samples = np.asarray(samples, dtype=float)
    ns, nt, n = samples.shape
    if n != orbit.N + 1:
        raise GridError("samples must have N + 1 components")
    weights = orbit.weights if weights is None else weights
    s = np.arange(ns) * ds
    n_tail = max(2, int(round(tail / ds)) + 1)
    if n_tail > ns:
        raise GridError("tail window longer than the sample range")
    rows = slice(ns - n_tail, ns)
    c = float(np.mean(samples[rows, :, 0] - orbit.T * s[rows, None]))
    ds_vals = np.array([circle_average(chart(samples[i, :, 1:])) for i in range(ns - n_tail, ns)])
    # circular mean of the per-loop phases
    ang = 2.0 * np.pi * ds_vals
    d = float((np.arctan2(np.sin(ang).mean(), np.cos(ang).mean()) / (2.0 * np.pi)) % 1.0)
    k = orbit.k
    t = t_grid(nt)
    model = np.empty_like(samples)
    model[:, :, 0] = orbit.T * s[:, None] + c
    model[:, :, 1:] = orbit(k * t - 0.5 * k + d)[None, :, :]
    resid = samples - model
    amp = np.max(np.abs(resid), axis=(1, 2))
    q = max(1, ns // 4)
    if amp[-q:].max() > 1e-8 and amp[-q:].max() > 1.5 * amp[-2 * q:-q].max():
        raise MembershipError("residual grows along the cylinder; the fit diverges")
    f = HalfCylinderField(1, np.zeros(n), resid, ds, weights=weights, check_tail=False)
    norms = tuple(weighted_norm(f, m) for m in range(len(weights)))
    return OrbitFit(c, d, norms)


def pair_matching(d_x: float, d_y: float, tol: float = 1e-8) -> bool:
    """Directional phase limits of a pair agree on the circle."""
    return _circle_dist(d_x - d_y) <= tol

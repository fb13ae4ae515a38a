"""Cauchy-Riemann operators on weighted cylinders, asymptotic operators and Maslov-type indices.

Symplectic conventions: ``R^{2n}`` carries coordinates ``(x_1, y_1, ..., x_n, y_n)``
and ``J_0`` is block diagonal with blocks ``[[0, -1], [1, 0]]`` (multiplication by
``i`` on ``z_k = x_k + i y_k``).  Direct sums are block-diagonal in this ordering.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, solve_triangular
from scipy.linalg.lapack import dtrcon

from .errors import DomainError, GridError
from .fields import FiniteCylinderField
from .profile import DEFAULT_CUTOFF, CutoffModel

TWO_PI = 2.0 * math.pi

#: Relative singular-value threshold for kernel and cokernel counts.
KERNEL_TOL = 1e-6

#: Required ratio between the smallest uncounted and largest counted singular value.
GAP_RATIO = 1e3

#: Boundary-to-peak ratio separating resolved null vectors from truncation artefacts.
BOUNDARY_TOL = 1e-6


class TruncationWarning(UserWarning):
    """A counted kernel vector does not decay before the end of the truncated line."""


class ConditioningWarning(UserWarning):
    """A discretised operator is close to singular."""


def j0(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    for k in range(n):
        J[2 * k + 1, 2 * k] = 1.0
        J[2 * k, 2 * k + 1] = -1.0
    return J


# ---------------------------------------------------------------- d-bar on a finite cylinder


def _fd_weights(offsets: np.ndarray, order: int = 1) -> np.ndarray:
    """Finite-difference weights at 0 for the given integer offsets (unit spacing)."""
    p = offsets.size
    V = np.vander(offsets.astype(float), p, increasing=True).T
    rhs = np.zeros(p)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _d_s_high(values: np.ndarray, ds: float, width: int = 5) -> np.ndarray:
    """Order-``2 width`` derivative along axis 0: centred inside, one-sided near the ends."""
    ns = values.shape[0]
    p = 2 * width + 1
    if ns < p:
        return np.gradient(values, ds, axis=0, edge_order=2)
    out = np.empty_like(values)
    centre = _fd_weights(np.arange(-width, width + 1))
    acc = np.zeros_like(values[width: ns - width])
    for j, c in enumerate(centre):
        acc += c * values[j: ns - p + 1 + j]
    out[width: ns - width] = acc
    for i in list(range(width)) + list(range(ns - width, ns)):
        start = min(max(i - width, 0), ns - p)
        offs = np.arange(start, start + p) - i
        wts = _fd_weights(offs)
        out[i] = np.tensordot(wts, values[start: start + p], axes=(0, 0))
    return out / ds


def _d_t_spectral(values: np.ndarray) -> np.ndarray:
    nt = values.shape[1]
    spec = np.fft.rfft(values, axis=1)
    m = np.arange(spec.shape[1])
    shape = [1] * values.ndim
    shape[1] = -1
    spec = spec * (2j * np.pi * m).reshape(shape)
    if nt % 2 == 0:
        spec[:, -1] = 0.0
    return np.fft.irfft(spec, n=nt, axis=1)


def dbar_cylinder(u: FiniteCylinderField, J=None) -> FiniteCylinderField:
    """``(u_s + J(u) u_t) / 2`` on a finite cylinder.

    ``J`` is ``None`` for the standard structure on ``C^n`` (components paired
    as real and imaginary parts), a constant ``(N, N)`` matrix, or a callable
    mapping the values array to per-point matrices of shape ``(Ns, Nt, N, N)``.
    """
    if u.ds > 0.5:
        raise GridError(f"ds = {u.ds} is too coarse for the s-derivative (need <= 0.5)")
    vals = np.asarray(u.values)
    us = _d_s_high(vals, u.ds)
    ut = _d_t_spectral(vals)
    if J is None:
        if u.N % 2:
            raise DomainError("the standard structure needs an even number of components")
        jut = np.empty_like(ut)
        jut[..., 0::2] = -ut[..., 1::2]
        jut[..., 1::2] = ut[..., 0::2]
    elif callable(J):
        jut = np.einsum("stab,stb->sta", J(vals), ut)
    else:
        J = np.asarray(J, dtype=float)
        if J.shape != (u.N, u.N):
            raise DomainError("J must be an (N, N) matrix")
        jut = ut @ J.T
    return u.replace(values=0.5 * (us + jut))


# ---------------------------------------------------------------- CR index on the weighted line


@dataclass(frozen=True)
class CRConfig:
    """``d/ds + i d/dt`` on ``C^n``-valued maps of ``R x S^1`` with weight ``e^{-2 delta |s|}``.

    Fourier modes ``|m| <= n_modes`` are kept; the line is truncated to
    ``[-S, S]`` with spacing ``ds``.  Modes whose decay rate is small get a
    longer line automatically so that resolved null vectors decay to roundoff.
    """

    n: int
    delta: float
    n_modes: int = 8
    S: float = 10.0
    ds: float = 0.04
    max_nodes: int = 800

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be positive")
        if self.n_modes < 4:
            raise DomainError("n_modes must be at least 4")
        if not (self.S > 0 and self.ds > 0):
            raise GridError("S and ds must be positive")
        if self.S * self.min_rate < 8.0:
            raise DomainError(
                f"S * min decay rate = {self.S * self.min_rate:.3g} < 8 does not resolve the weight")

    @classmethod
    def resolved(cls, n: int, delta: float, **kw) -> "CRConfig":
        """A config whose base line length satisfies the resolution bound for ``delta``."""
        probe = cls(n, delta, S=math.inf, **{k: v for k, v in kw.items() if k != "S"})
        rate = probe.min_rate
        if rate == 0.0:
            raise DomainError(f"delta = {delta} is a degenerate weight (a multiple of 2 pi)")
        return cls(n, delta, S=max(kw.get("S", 10.0), 8.5 / rate), **{k: v for k, v in kw.items() if k != "S"})

    def rate(self, m: int) -> float:
        """Exponential rate ``min(|2 pi m - delta|, |2 pi m + delta|)`` of the mode-``m`` solutions."""
        return min(abs(TWO_PI * m - self.delta), abs(TWO_PI * m + self.delta))

    @property
    def min_rate(self) -> float:
        return min(self.rate(m) for m in range(-self.n_modes, self.n_modes + 1))

    def line(self, m: int) -> tuple[float, float]:
        """``(S_m, ds_m)`` for mode ``m``; at most ``max_nodes`` interior nodes."""
        rate = self.rate(m)
        if rate == 0.0:
            raise DomainError(f"mode {m} is degenerate at delta = {self.delta}")
        S = max(self.S, 20.0 / rate)
        ds = max(self.ds, 2.0 * S / self.max_nodes)
        return S, ds


def _box_operator(S: float, ds: float, a: Callable[[np.ndarray], np.ndarray]):
    """``v' + a(s) v`` by the box scheme with ``v(-S) = v(S) = 0``.

    Returns the ``(N+1, N)`` matrix, the interior nodes and the midpoints.
    """
    n_cells = int(round(2.0 * S / ds))
    h = 2.0 * S / n_cells
    nodes = -S + h * np.arange(n_cells + 1)
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    am = a(mids)
    N = n_cells - 1
    A = np.zeros((n_cells, N))
    i = np.arange(n_cells)
    # cell i couples interior nodes i-1 and i (nodes 0 and n_cells are Dirichlet)
    left = i - 1
    right = i
    ok = left >= 0
    A[i[ok], left[ok]] = -1.0 / h + 0.5 * am[ok]
    ok = right < N
    A[i[ok], right[ok]] = 1.0 / h + 0.5 * am[ok]
    return A, nodes[1:-1], mids, h


def _weight_sign(s: np.ndarray) -> np.ndarray:
    return np.sign(s)


def mode_operator(config: CRConfig, m: int, line: tuple[float, float] | None = None):
    """Conjugated mode-``m`` operator ``v' + (delta sign(s) - 2 pi m) v``."""
    S, ds = config.line(m) if line is None else line
    return _box_operator(S, ds, lambda s: config.delta * _weight_sign(s) - TWO_PI * m)


@dataclass(frozen=True)
class ModeCount:
    m: int
    kernel: int
    cokernel: int
    gap_ratio: float


def _localised(vec: np.ndarray) -> bool:
    peak = np.max(np.abs(vec))
    return max(abs(vec[0]), abs(vec[-1])) <= BOUNDARY_TOL * peak


def count_mode(config: CRConfig, m: int) -> ModeCount:
    # the per-mode problem does not depend on n
    return _count_mode(config.delta, config.S, config.ds, config.max_nodes, config.n_modes, m)


@functools.lru_cache(maxsize=256)
def _count_mode(delta: float, S: float, ds: float, max_nodes: int, n_modes: int, m: int) -> ModeCount:
    config = CRConfig(1, delta, n_modes, S, ds, max_nodes)
    A, _, _, _ = mode_operator(config, m)
    U, sig, Vt = np.linalg.svd(A, full_matrices=True)
    smax = sig[0]
    small = sig < KERNEL_TOL * smax
    kernel = 0
    for j in np.nonzero(small)[0]:
        if not _localised(Vt[j]):
            warnings.warn(f"mode {m}: kernel vector reaches the truncation boundary", TruncationWarning)
        kernel += 1
    # left singular vectors for small singular values plus the structural null column
    left = [U[:, j] for j in np.nonzero(small)[0]] + [U[:, j] for j in range(sig.size, U.shape[1])]
    cokernel = sum(1 for v in left if _localised(v))
    counted = sig[small]
    rest = sig[~small]
    if counted.size and rest.size:
        ratio = float(rest.min() / max(counted.max(), np.finfo(float).tiny))
    elif rest.size:
        ratio = math.inf
    else:
        ratio = 0.0
    return ModeCount(m, kernel, cokernel, ratio)


@dataclass(frozen=True)
class IndexResult:
    kernel: int
    cokernel: int
    index: int
    gap_ratio: float
    modes: tuple[ModeCount, ...] = field(repr=False, default=())

    def __iter__(self):
        return iter((self.kernel, self.cokernel, self.index))


def cr_index(config: CRConfig) -> IndexResult:
    """Real kernel and cokernel dimensions and the real index, summed over Fourier modes."""
    counts = tuple(count_mode(config, m) for m in range(-config.n_modes, config.n_modes + 1))
    # every complex mode contributes 2 real dimensions per complex component
    k = 2 * config.n * sum(c.kernel for c in counts)
    c = 2 * config.n * sum(c.cokernel for c in counts)
    ratios = [c.gap_ratio for c in counts if c.kernel or c.cokernel]
    ratio = min(ratios) if ratios else math.inf
    if ratio < GAP_RATIO:
        warnings.warn(f"singular-value gap ratio {ratio:.3g} is below {GAP_RATIO:g}", ConditioningWarning)
    return IndexResult(k, c, k - c, ratio, counts)


def index_sweep(n: int, deltas: Sequence[float], **kw) -> list[tuple[float, IndexResult]]:
    return [(float(d), cr_index(CRConfig.resolved(n, float(d), **kw))) for d in deltas]


# ---------------------------------------------------------------- the ap-isomorphism


@dataclass(frozen=True)
class APGrid:
    """Common grid for the ap-solver: nodes carry the decaying part, midpoints the right side."""

    nodes: np.ndarray
    mids: np.ndarray
    h: float
    nt: int

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.nt) / self.nt


def ap_grid(config: CRConfig) -> APGrid:
    n_cells = int(round(2.0 * config.S / config.ds))
    h = 2.0 * config.S / n_cells
    nodes = -config.S + h * np.arange(n_cells + 1)
    return APGrid(nodes, 0.5 * (nodes[1:] + nodes[:-1]), h, 2 * config.n_modes + 2)


@dataclass(frozen=True)
class APSolution:
    """``u = r + (1 - 2 beta(s)) c``; ``r`` is sampled on all nodes (zero at the ends)."""

    c: np.ndarray
    r: np.ndarray
    grid: APGrid


def _check_ap(config: CRConfig) -> None:
    if not (0.0 < config.delta < TWO_PI):
        raise DomainError("the ap-isomorphism needs 0 < delta < 2 pi")


def _modes(config: CRConfig):
    K = config.n_modes
    return list(range(-K, K + 1))


def _ap_matrix(config: CRConfig, grid: APGrid, m: int, cutoff: CutoffModel) -> np.ndarray:
    """Mode-``m`` matrix acting on ``(zeta_interior, c)`` (the ``c`` column only for ``m = 0``)."""
    A, _, mids, h = _box_operator(config.S, grid.h, lambda s: -(config.delta * np.sign(s) + TWO_PI * m))
    if m != 0:
        return A
    col = -2.0 * np.exp(config.delta * np.abs(mids)) * cutoff.prime(mids)
    return np.hstack([A, col[:, None]])


def _to_modes(values: np.ndarray, config: CRConfig) -> dict[int, np.ndarray]:
    """Fourier coefficients along axis 1 for ``|m| <= K``."""
    spec = np.fft.fft(values, axis=1) / values.shape[1]
    nt = values.shape[1]
    return {m: spec[:, m % nt] for m in _modes(config)}


def _from_modes(coeffs: dict[int, np.ndarray], nt: int) -> np.ndarray:
    first = next(iter(coeffs.values()))
    spec = np.zeros((first.shape[0], nt) + first.shape[1:], dtype=complex)
    for m, v in coeffs.items():
        spec[:, m % nt] = v
    return np.fft.ifft(spec, axis=1) * nt


def cr_apply_ap(config: CRConfig, sol: APSolution, cutoff: CutoffModel = DEFAULT_CUTOFF) -> np.ndarray:
    """Discrete ``d-bar`` of ``r + (1 - 2 beta) c`` at the midpoints, shape ``(Nmid, Nt, n)``."""
    _check_ap(config)
    g = sol.grid
    w = np.exp(config.delta * np.abs(g.nodes))
    zeta = sol.r * w[:, None, None]
    modes = _to_modes(zeta[1:-1], config)
    out = {}
    for m in _modes(config):
        M = _ap_factor(config, m, cutoff)[0]
        x = modes[m]
        if m == 0:
            x = np.vstack([x, sol.c[None, :]])
        out[m] = M @ x
    ghat = _from_modes(out, g.nt)
    return ghat * np.exp(-config.delta * np.abs(g.mids))[:, None, None]


@functools.lru_cache(maxsize=128)
def _ap_factor(config: CRConfig, m: int, cutoff: CutoffModel):
    """QR factors of the mode-``m`` matrix and its reciprocal 1-norm condition number."""
    g = ap_grid(config)
    M = _ap_matrix(config, g, m, cutoff)
    Q, R = np.linalg.qr(M)
    rcond, _ = dtrcon(R, norm="1", uplo="U", diag="N")
    return M, Q, R, float(rcond)


def cr_solve_ap(config: CRConfig, rhs: np.ndarray, cutoff: CutoffModel = DEFAULT_CUTOFF) -> APSolution:
    """Solve ``d-bar(r + (1 - 2 beta) c) = g`` with ``r`` decaying like ``e^{-delta |s|}``.

    ``rhs`` holds ``g`` at the midpoints of :func:`ap_grid`, shape ``(Nmid, Nt, n)``;
    only the Fourier modes ``|m| <= n_modes`` are used.  The mode-0 system is
    square (the constant ``c`` is the extra unknown); the others are solved in
    the least-squares sense.
    """
    _check_ap(config)
    g = ap_grid(config)
    rhs = np.asarray(rhs)
    if rhs.shape != (g.mids.size, g.nt, config.n):
        raise GridError(f"rhs must have shape {(g.mids.size, g.nt, config.n)}")
    ghat = rhs * np.exp(config.delta * np.abs(g.mids))[:, None, None]
    modes = _to_modes(ghat, config)
    zeta = {}
    c = np.zeros(config.n, dtype=complex)
    for m in _modes(config):
        _, Q, R, rcond = _ap_factor(config, m, cutoff)
        if rcond < 1e-8:
            warnings.warn(f"mode {m}: condition estimate {1.0 / max(rcond, 1e-300):.3g}",
                          ConditioningWarning)
        x = solve_triangular(R, Q.T @ modes[m])
        if m == 0:
            zeta[m] = x[:-1]
            c = x[-1]
        else:
            zeta[m] = x
    z = _from_modes(zeta, g.nt)
    r = np.zeros((g.nodes.size, g.nt, config.n), dtype=complex)
    r[1:-1] = z * np.exp(-config.delta * np.abs(g.nodes[1:-1]))[:, None, None]
    return APSolution(np.asarray(c), r, g)


def random_ap_element(config: CRConfig, rng: np.random.Generator) -> APSolution:
    """Band-limited ``(c, r)`` with ``r`` a smooth bump times ``e^{-delta |s|}``."""
    g = ap_grid(config)
    K = config.n_modes
    coeffs = {}
    env = np.exp(-0.5 * g.nodes[1:-1] ** 2 / 4.0)
    for m in range(-K, K + 1):
        a = rng.normal(size=config.n) + 1j * rng.normal(size=config.n)
        coeffs[m] = env[:, None] * a[None, :] / (1 + m * m)
    z = _from_modes(coeffs, g.nt)
    r = np.zeros((g.nodes.size, g.nt, config.n), dtype=complex)
    r[1:-1] = z * np.exp(-config.delta * np.abs(g.nodes[1:-1]))[:, None, None]
    c = rng.normal(size=config.n) + 1j * rng.normal(size=config.n)
    return APSolution(c, r, g)


def iso_residual(config: CRConfig, probes: int = 4, seed: int = 0,
                 cutoff: CutoffModel = DEFAULT_CUTOFF) -> float:
    """Largest relative error of ``solve(apply(x))`` over random probe elements."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        x = random_ap_element(config, rng)
        y = cr_solve_ap(config, cr_apply_ap(config, x, cutoff), cutoff)
        num = max(np.max(np.abs(y.r - x.r)), np.max(np.abs(y.c - x.c)))
        den = max(np.max(np.abs(x.r)), np.max(np.abs(x.c)))
        worst = max(worst, float(num / den))
    return worst


# ---------------------------------------------------------------- asymptotic operators


def _spectral_tail(samples: np.ndarray) -> float:
    spec = np.abs(np.fft.rfft(samples, axis=0)) / samples.shape[0]
    m = spec.shape[0]
    top = spec.max()
    if top == 0.0 or m <= 4:
        return 0.0
    return float(spec[(3 * m) // 4:].max() / max(1.0, top))


@dataclass(frozen=True, eq=False)
class LoopOperator:
    """``h -> -J_0 h' - A(t) h`` on loops in ``R^{2n}`` for a sampled symmetric loop ``A``."""

    A: np.ndarray
    n: int

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim == 2:
            A = np.broadcast_to(A, (8,) + A.shape).copy()
        if A.ndim != 3 or A.shape[1:] != (2 * self.n, 2 * self.n):
            raise DomainError(f"A must have shape (M, {2 * self.n}, {2 * self.n})")
        if A.shape[0] < 2 or A.shape[0] % 2:
            raise DomainError("A must be sampled at an even number of points")
        asym = np.max(np.abs(A - np.swapaxes(A, 1, 2)))
        if asym > 1e-12:
            raise DomainError(f"A is not symmetric (defect {asym:.3g})")
        tail = _spectral_tail(A.reshape(A.shape[0], -1))
        if tail > 1e-8:
            raise DomainError(f"A is not resolved by its samples (spectral tail {tail:.3g})")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @classmethod
    def constant(cls, S: np.ndarray) -> "LoopOperator":
        S = np.asarray(S, dtype=float)
        return cls(np.broadcast_to(S, (8,) + S.shape), S.shape[0] // 2)

    def resample(self, q: int) -> np.ndarray:
        """Trigonometric resampling of ``A`` onto ``q`` points."""
        M = self.A.shape[0]
        if q == M:
            return np.array(self.A)
        spec = np.fft.rfft(self.A, axis=0)
        if M % 2 == 0:
            spec[-1] *= 0.5
        return np.fft.irfft(spec, n=q, axis=0) * (q / M)


def _fourier_basis(K: int, t: np.ndarray) -> np.ndarray:
    """Orthonormal real basis ``1, sqrt2 cos, sqrt2 sin`` up to mode ``K``; shape ``(2K+1, Q)``."""
    rows = [np.ones_like(t)]
    for m in range(1, K + 1):
        rows.append(math.sqrt(2.0) * np.cos(TWO_PI * m * t))
        rows.append(math.sqrt(2.0) * np.sin(TWO_PI * m * t))
    return np.array(rows)


def _derivative_matrix(K: int) -> np.ndarray:
    """``<phi_a, phi_b'>`` in the real Fourier basis."""
    D = np.zeros((2 * K + 1, 2 * K + 1))
    for m in range(1, K + 1):
        c, s = 2 * m - 1, 2 * m
        D[s, c] = -TWO_PI * m      # (cos)' = -2 pi m sin
        D[c, s] = TWO_PI * m       # (sin)' =  2 pi m cos
    return D


def galerkin_matrix(L: LoopOperator, K: int) -> np.ndarray:
    """Matrix of ``-J_0 d/dt - A`` on the ``(2K+1) 2n``-dimensional Fourier space."""
    n2 = 2 * L.n
    Q = max(L.A.shape[0], 4 * K + 4) + L.A.shape[0]
    Q += Q % 2
    t = np.arange(Q) / Q
    A = L.resample(Q)
    B = _fourier_basis(K, t)
    # <phi_a e_i, A phi_b e_j> = mean_t phi_a phi_b A_ij
    mult = np.einsum("aq,bq,qij->aibj", B, B, A) / Q
    mult = mult.reshape((2 * K + 1) * n2, (2 * K + 1) * n2)
    D = _derivative_matrix(K)
    # ordering: basis index major, component minor
    deriv = np.kron(D, -j0(L.n))
    return deriv - mult


@dataclass(frozen=True)
class SpectrumResult:
    """Sorted eigenvalue clusters and the spectral gap around zero."""

    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    gap: tuple[float, float]
    n: int
    K: int

    def __post_init__(self):
        if any(m > 2 * self.n for m in self.multiplicities):
            raise ArithmeticError(f"a cluster exceeds multiplicity 2n = {2 * self.n}")

    @property
    def halfwidth(self) -> float:
        a, b = self.gap
        return max(0.0, min(-a, b))

    def within(self, bound: float) -> list[tuple[float, int]]:
        return [(v, m) for v, m in zip(self.eigenvalues, self.multiplicities) if abs(v) <= bound]


def _cluster(values: np.ndarray, tol: float) -> tuple[list[float], list[int]]:
    vals, mult = [], []
    group = [values[0]]
    for v in values[1:]:
        if abs(v - group[-1]) <= tol * max(1.0, abs(v)):
            group.append(v)
        else:
            vals.append(float(np.mean(group)))
            mult.append(len(group))
            group = [v]
    vals.append(float(np.mean(group)))
    mult.append(len(group))
    return vals, mult


def asymptotic_spectrum(L: LoopOperator, K: int = 16, cluster_tol: float = 1e-7,
                        zero_tol: float = 1e-9) -> SpectrumResult:
    """Galerkin eigenvalues of the asymptotic operator with the gap around zero."""
    if K < 2:
        raise DomainError("K must be at least 2")
    H = galerkin_matrix(L, K)
    asym = np.max(np.abs(H - H.T))
    if asym > 1e-10 * max(1.0, np.max(np.abs(H))):
        raise ArithmeticError(f"Galerkin matrix is not symmetric (defect {asym:.3g})")
    ev = np.linalg.eigvalsh(0.5 * (H + H.T))
    vals, mult = _cluster(ev, cluster_tol)
    arr = np.array(vals)
    if np.any(np.abs(arr) <= zero_tol):
        gap = (0.0, 0.0)
    else:
        neg = arr[arr < 0]
        pos = arr[arr > 0]
        gap = (float(neg.max()) if neg.size else -math.inf, float(pos.min()) if pos.size else math.inf)
    return SpectrumResult(tuple(vals), tuple(mult), gap, L.n, K)


def admissible_weight(spec: SpectrumResult, cap: float = TWO_PI) -> float | None:
    """A weight strictly inside the gap and strictly below ``cap``; ``None`` when 0 is an eigenvalue."""
    hw = spec.halfwidth
    if hw <= 0.0:
        return None
    return min(0.9 * hw, 0.9 * cap)


def weight_is_admissible(spec: SpectrumResult, delta: float) -> bool:
    """True when no eigenvalue lies in ``[-|delta|, |delta|]`` and ``|delta| < 2 pi``."""
    d = abs(delta)
    if d >= TWO_PI:
        return False
    return all(abs(v) > d for v in spec.eigenvalues)


# ---------------------------------------------------------------- symplectic paths


def is_symplectic(M: np.ndarray, tol: float = 1e-10) -> bool:
    n2 = M.shape[-1]
    J = j0(n2 // 2)
    return bool(np.max(np.abs(M.T @ J @ M - J)) <= tol * max(1.0, np.max(np.abs(M)) ** 2))


@dataclass(frozen=True, eq=False)
class SymplecticPath:
    """Samples ``Phi(t_i)`` of a path in ``Sp(2n)`` on ``t_i = i / (M - 1)``."""

    samples: np.ndarray

    def __post_init__(self):
        P = np.array(self.samples, dtype=float)
        if P.ndim != 3 or P.shape[1] != P.shape[2] or P.shape[1] % 2 or P.shape[0] < 2:
            raise DomainError("samples must have shape (M, 2n, 2n) with M >= 2")
        J = j0(P.shape[1] // 2)
        defect = np.max(np.abs(np.einsum("mji,jk,mkl->mil", P, J, P) - J), axis=(1, 2))
        scale = np.maximum(1.0, np.max(np.abs(P), axis=(1, 2)) ** 2)
        if np.any(defect > 1e-10 * scale):
            raise DomainError(f"sample {int(np.argmax(defect / scale))} is not symplectic")
        P.setflags(write=False)
        object.__setattr__(self, "samples", P)

    @property
    def n(self) -> int:
        return self.samples.shape[1] // 2

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.M)

    @property
    def starts_at_identity(self) -> bool:
        return bool(np.max(np.abs(self.samples[0] - np.eye(2 * self.n))) <= 1e-10)

    @property
    def is_closed(self) -> bool:
        return bool(np.max(np.abs(self.samples[0] - self.samples[-1])) <= 1e-10)

    def end_nondegenerate(self, tol: float = 1e-8) -> bool:
        end = self.samples[-1]
        return bool(np.linalg.svd(end - np.eye(2 * self.n), compute_uv=False).min() > tol)

    @classmethod
    def from_generator(cls, S, M: int = 401) -> "SymplecticPath":
        """``Phi' = J_0 S(t) Phi`` from the identity; ``S`` constant or a callable of ``t``.

        Constant generators give ``expm(t J_0 S)`` exactly; time-dependent ones
        use a product of midpoint exponentials, which is symplectic at every step.
        """
        t = np.linspace(0.0, 1.0, M)
        if not callable(S):
            S = np.asarray(S, dtype=float)
            J = j0(S.shape[0] // 2)
            return cls(np.array([expm(ti * J @ S) for ti in t]))
        S0 = np.asarray(S(0.0), dtype=float)
        J = j0(S0.shape[0] // 2)
        out = [np.eye(S0.shape[0])]
        for a, b in zip(t[:-1], t[1:]):
            Sm = np.asarray(S(0.5 * (a + b)), dtype=float)
            out.append(expm((b - a) * J @ (0.5 * (Sm + Sm.T))) @ out[-1])
        return cls(np.array(out))

    def compose(self, other: "SymplecticPath") -> "SymplecticPath":
        """Pointwise product ``self(t) other(t)``."""
        if other.samples.shape != self.samples.shape:
            raise DomainError("paths must share dimension and sampling")
        return SymplecticPath(self.samples @ other.samples)

    def inverse(self) -> "SymplecticPath":
        """Pointwise inverse ``-J_0 Phi^T J_0``."""
        J = j0(self.n)
        return SymplecticPath(-J @ np.swapaxes(self.samples, 1, 2) @ J)

    def direct_sum(self, other: "SymplecticPath") -> "SymplecticPath":
        if other.M != self.M:
            raise DomainError("paths must share sampling")
        a, b = 2 * self.n, 2 * other.n
        out = np.zeros((self.M, a + b, a + b))
        out[:, :a, :a] = self.samples
        out[:, a:, a:] = other.samples
        return SymplecticPath(out)


def rotation_loop(n: int, M: int = 401, winding: int = 1) -> SymplecticPath:
    """``e^{2 pi i w t}`` on the first complex factor, identity on the rest."""
    out = np.repeat(np.eye(2 * n)[None], M, axis=0)
    th = TWO_PI * winding * np.linspace(0.0, 1.0, M)
    out[:, 0, 0] = np.cos(th)
    out[:, 0, 1] = -np.sin(th)
    out[:, 1, 0] = np.sin(th)
    out[:, 1, 1] = np.cos(th)
    return SymplecticPath(out)


def _complex_det_unitary(P: np.ndarray) -> np.ndarray:
    W, _, Vt = np.linalg.svd(P)
    U = W @ Vt
    Uc = U[:, 0::2, 0::2] + 1j * U[:, 1::2, 0::2]
    return np.linalg.det(Uc)


def _lift(phases: np.ndarray) -> float:
    """Total argument change of a sampled unit-circle path."""
    steps = np.angle(phases[1:] / phases[:-1])
    if np.any(np.abs(steps) >= 0.45 * TWO_PI):
        raise DomainError("phase jumps by about half a turn between samples; refine the sampling")
    return float(np.sum(steps))


def maslov_loop(alpha: SymplecticPath) -> int:
    """Winding number of ``det_C`` of the unitary polar factor along a closed loop."""
    if not alpha.is_closed:
        raise DomainError("the Maslov index is defined for closed loops")
    d = _complex_det_unitary(alpha.samples)
    total = _lift(d / np.abs(d)) / TWO_PI
    w = round(total)
    if abs(total - w) > 1e-6:
        raise ArithmeticError(f"winding {total} is not an integer")
    return int(w)


def _rho_and_elliptic(A: np.ndarray, tol: float = 1e-7) -> tuple[complex, list[float]]:
    """Rotation function value and the angles in ``(0, 2 pi)`` of the Krein-positive unit eigenvalues."""
    n2 = A.shape[0]
    J = j0(n2 // 2)
    lam, vec = np.linalg.eig(A)
    rho = 1.0 + 0j
    neg = 0
    angles = []
    for k, l in enumerate(lam):
        if abs(l.imag) <= tol and l.real < 0:
            neg += 1
            continue
        if abs(abs(l) - 1.0) <= tol and abs(l.imag) > tol:
            v = vec[:, k]
            if (np.conj(v) @ J @ v).imag > 0:
                rho *= l / abs(l)
                angles.append(float(np.angle(l)) % TWO_PI)
    if neg % 2:
        raise ArithmeticError("odd number of negative real eigenvalues; the sample is not symplectic")
    if (neg // 2) % 2:
        rho = -rho
    return rho, angles


def conley_zehnder(path: SymplecticPath, maslov: bool = False) -> int:
    """Conley-Zehnder index of a path from the identity with nondegenerate endpoint.

    The rotation function is followed continuously along the samples; the
    endpoint is then pushed, within the nondegenerate matrices, to one with no
    eigenvalues on the unit circle, which adds ``pi - theta`` for every
    Krein-positive endpoint eigenvalue ``e^{i theta}``.  With ``maslov=True`` a
    closed path returns its Maslov index instead.
    """
    if maslov:
        return maslov_loop(path)
    if not path.starts_at_identity:
        raise DomainError("the path must start at the identity")
    if not path.end_nondegenerate():
        raise DomainError("the endpoint has eigenvalue 1")
    rhos = []
    for P in path.samples:
        r, _ = _rho_and_elliptic(P)
        rhos.append(r)
    delta = _lift(np.array(rhos))
    _, angles = _rho_and_elliptic(path.samples[-1])
    total = delta / math.pi + sum(1.0 - th / math.pi for th in angles)
    mu = round(total)
    if abs(total - mu) > 1e-6:
        raise ArithmeticError(f"index estimate {total} is not an integer")
    return int(mu)

"""Random smooth test fields and orbit elements on the standard grids."""

from __future__ import annotations

import numpy as np

from .fields import DEFAULT_WEIGHTS, HalfCylinderField, WeightSequence, aligned_index, t_grid
from .orbit import OrbitElement, PeriodicOrbit, StandardMap


def smooth_loop(rng: np.random.Generator, nt: int, n: int, modes: int = 3) -> np.ndarray:
    """A random trigonometric polynomial of low degree, shape ``(Nt, N)``."""
    t = t_grid(nt)
    out = rng.normal(size=n) * 0.5
    out = np.broadcast_to(out, (nt, n)).copy()
    for m in range(1, modes + 1):
        a, b = rng.normal(size=(2, n)) / (m * m)
        out += np.cos(2 * np.pi * m * t)[:, None] * a + np.sin(2 * np.pi * m * t)[:, None] * b
    return out


def decaying_values(rng: np.random.Generator, nt: int, n: int, smax: float, ds: float,
                    rate: float = 1.0, modes: int = 3) -> np.ndarray:
    """``sum_k exp(-rate_k s) p_k(t)`` with two random loop profiles."""
    ns = aligned_index(smax, ds)
    if ns is None:
        raise ValueError("S_max must be a multiple of ds")
    s = np.arange(ns + 1) * ds
    p1 = smooth_loop(rng, nt, n, modes)
    p2 = smooth_loop(rng, nt, n, modes)
    return (np.exp(-rate * s)[:, None, None] * p1[None]
            + np.exp(-1.5 * rate * s)[:, None, None] * (s[:, None, None] * 0.3) * p2[None])


def random_half(rng: np.random.Generator, sign: int, c: np.ndarray, nt: int, smax: float,
                ds: float, rate: float = 1.0, weights: WeightSequence = DEFAULT_WEIGHTS,
                amplitude: float = 1.0) -> HalfCylinderField:
    vals = amplitude * decaying_values(rng, nt, len(c), smax, ds, rate)
    return HalfCylinderField(sign, np.asarray(c, dtype=float), vals, ds, weights=weights,
                             check_tail=False)


def random_pair(rng: np.random.Generator, n: int = 2, nt: int = 16, smax: float = 30.0,
                ds: float = 0.25, rate: float = 1.0, matched: bool = True, zero_c: bool = False,
                weights: WeightSequence = DEFAULT_WEIGHTS):
    c = np.zeros(n) if zero_c else rng.normal(size=n)
    cy = c if matched else rng.normal(size=n)
    return (random_half(rng, 1, c, nt, smax, ds, rate, weights),
            random_half(rng, -1, cy, nt, smax, ds, rate, weights))


def random_orbit_element(rng: np.random.Generator, r: float, T: float = 1.0, k: int = 1,
                         nt: int = 32, smax: float = 30.0, ds: float = 0.25,
                         length: float | None = None, theta_x: float | None = None,
                         theta_y: float | None = None, amplitude: float = 0.05,
                         rate: float = 1.0, N: int = 2,
                         weights: WeightSequence = DEFAULT_WEIGHTS) -> OrbitElement:
    """A boundary element near the standard circle.

    When ``length`` is given, ``c_y`` is chosen so the glued neck length is
    exactly ``length``; the decorations default to random grid angles.
    """
    from .profile import phi

    orbit = PeriodicOrbit.circle(N=N, M=max(32, 2 * nt), T=T, k=k, weights=weights)
    cx = float(rng.normal())
    if length is None:
        cy = cx + float(rng.uniform(0.0, 1.0))
    else:
        cy = cx + T * length - (phi(r) if r > 0 else 0.0)
    if theta_x is None:
        theta_x = int(rng.integers(nt)) / nt
    if theta_y is None:
        theta_y = int(rng.integers(nt)) / nt
    q = StandardMap(orbit, cx, cy, theta_x, theta_y)
    zero = np.zeros(N + 1)
    hx = random_half(rng, 1, zero, nt, smax, ds, rate, weights, amplitude)
    hy = random_half(rng, -1, zero, nt, smax, ds, rate, weights, amplitude)
    return OrbitElement.boundary(r, q, hx, hy)

"""Grid kernels with a numba path and a pure-numpy path.

The backend is chosen at import from ``SCGLUE_NUMBA`` (``1``/``0``; numba is
used by default when importable) and can be switched at runtime with
:func:`set_backend`.  Both paths compute the same formulas in the same
operation order, so results agree to rounding.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba as _nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    _nb = None

_JIT = {"cache": True, "nogil": True}


def _env_default() -> str:
    flag = os.environ.get("SCGLUE_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "no", "off") or _nb is None:
        return "numpy"
    return "numba"


_backend = _env_default()


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` for all subsequent kernel calls."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and _nb is None:
        raise RuntimeError("numba is not installed")
    _backend = name


def backend() -> str:
    return _backend


# ---------------------------------------------------------------- numpy path


def _np_blend(wa, A, wb, B):
    return wa[:, None, None] * A + wb[:, None, None] * B


def _np_unglue_solve(b, W, V):
    bb = b[:, None, None]
    cb = 1.0 - bb
    det = bb * bb + cb * cb
    X = (bb * W - cb * V) / det
    Y = (cb * W + bb * V) / det
    return X, Y


def _np_weighted_sq_integral(values, weight, ds):
    # mean over t and components summed, then trapezoid in s
    per_s = np.sum(values * values, axis=2).mean(axis=1) * weight
    if per_s.shape[0] < 2:
        return 0.0
    return float(ds * (per_s.sum() - 0.5 * (per_s[0] + per_s[-1])))


# ---------------------------------------------------------------- numba path

if _nb is not None:

    @_nb.njit(**_JIT)
    def _nb_blend(wa, A, wb, B):
        ns, nt, nc = A.shape
        out = np.empty((ns, nt, nc))
        for i in range(ns):
            a = wa[i]
            c = wb[i]
            for j in range(nt):
                for k in range(nc):
                    out[i, j, k] = a * A[i, j, k] + c * B[i, j, k]
        return out

    @_nb.njit(**_JIT)
    def _nb_unglue_solve(b, W, V):
        ns, nt, nc = W.shape
        X = np.empty((ns, nt, nc))
        Y = np.empty((ns, nt, nc))
        for i in range(ns):
            bb = b[i]
            cb = 1.0 - bb
            det = bb * bb + cb * cb
            for j in range(nt):
                for k in range(nc):
                    X[i, j, k] = (bb * W[i, j, k] - cb * V[i, j, k]) / det
                    Y[i, j, k] = (cb * W[i, j, k] + bb * V[i, j, k]) / det
        return X, Y

    @_nb.njit(**_JIT)
    def _nb_weighted_sq_integral(values, weight, ds):
        ns, nt, nc = values.shape
        if ns < 2:
            return 0.0
        total = 0.0
        first = 0.0
        last = 0.0
        for i in range(ns):
            acc = 0.0
            for j in range(nt):
                for k in range(nc):
                    v = values[i, j, k]
                    acc += v * v
            val = acc / nt * weight[i]
            total += val
            if i == 0:
                first = val
            if i == ns - 1:
                last = val
        return ds * (total - 0.5 * (first + last))


def _c3(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def blend(wa, A, wb, B):
    """``wa[i] * A[i] + wb[i] * B[i]`` for s-indexed weights on ``(Ns, Nt, N)`` grids."""
    wa = _c3(wa)
    wb = _c3(wb)
    A = _c3(A)
    B = _c3(B)
    if _backend == "numba":
        return _nb_blend(wa, A, wb, B)
    return _np_blend(wa, A, wb, B)


def unglue_solve(b, W, V):
    """Pointwise inverse of ``W = b X + (1-b) Y``, ``V = -(1-b) X + b Y``."""
    b = _c3(b)
    W = _c3(W)
    V = _c3(V)
    if _backend == "numba":
        return _nb_unglue_solve(b, W, V)
    return _np_unglue_solve(b, W, V)


def weighted_sq_integral(values, weight, ds):
    """Trapezoid-in-s, mean-in-t integral of ``|values|^2 * weight(s)``."""
    values = _c3(values)
    weight = _c3(weight)
    if _backend == "numba":
        return float(_nb_weighted_sq_integral(values, weight, float(ds)))
    return _np_weighted_sq_integral(values, weight, float(ds))

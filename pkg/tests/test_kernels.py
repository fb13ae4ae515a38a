import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scglue import _kernels as K


def both(fn, *args):
    prev = K.backend()
    try:
        out = {}
        for b in ("numpy", "numba"):
            K.set_backend(b)
            out[b] = fn(*args)
        return out
    finally:
        K.set_backend(prev)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.integers(1, 9), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_backends_agree(ns, nt, n, seed):
    rng = np.random.default_rng(seed)
    A, B = rng.normal(size=(2, ns, nt, n))
    wa = rng.uniform(size=ns)
    out = both(K.blend, wa, A, 1.0 - wa, B)
    np.testing.assert_allclose(out["numba"], out["numpy"], rtol=1e-15, atol=1e-15)

    X, Y = both(K.unglue_solve, wa, A, B).values()
    np.testing.assert_allclose(X[0], Y[0], rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(X[1], Y[1], rtol=1e-14, atol=1e-14)

    w = np.exp(0.1 * np.arange(ns))
    out = both(K.weighted_sq_integral, A, w, 0.25)
    assert out["numba"] == pytest.approx(out["numpy"], rel=1e-13, abs=1e-300)


def test_unglue_solve_inverts_blend(kernel_backend, rng):
    b = rng.uniform(size=12)
    X, Y = rng.normal(size=(2, 12, 8, 3))
    W = K.blend(b, X, 1.0 - b, Y)
    V = K.blend(-(1.0 - b), X, b, Y)
    X2, Y2 = K.unglue_solve(b, W, V)
    np.testing.assert_allclose(X2, X, atol=1e-14)
    np.testing.assert_allclose(Y2, Y, atol=1e-14)


def test_weighted_integral_trapezoid(kernel_backend):
    # |v|^2 = 1 everywhere, weight 1: the integral is the length of the s-range
    vals = np.ones((5, 4, 1))
    assert K.weighted_sq_integral(vals, np.ones(5), 0.5) == pytest.approx(2.0)
    assert K.weighted_sq_integral(vals[:1], np.ones(1), 0.5) == 0.0


def test_blend_accepts_non_contiguous(kernel_backend, rng):
    A = rng.normal(size=(6, 8, 2))[:, ::2]
    w = np.linspace(0.0, 1.0, 6)
    np.testing.assert_allclose(K.blend(w, A, w, A), 2 * w[:, None, None] * A)


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        K.set_backend("fortran")


@pytest.mark.parametrize("flag, want", [("0", "numpy"), ("off", "numpy"), ("1", "numba")])
def test_env_flag_selects_backend(flag, want):
    env = dict(os.environ, SCGLUE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from scglue import _kernels; print(_kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == want

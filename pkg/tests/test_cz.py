import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from scglue import operators as Op
from scglue.errors import DomainError
from scglue.verify import cz_corpus


def scalar_path(a, M=801):
    """``e^{2 pi i a t}`` on C."""
    return Op.SymplecticPath.from_generator(2 * math.pi * a * np.eye(2), M)


@pytest.fixture(scope="module")
def corpus():
    return cz_corpus(2, 20, seed=0)


def test_half_turn_has_index_one():
    assert Op.conley_zehnder(Op.SymplecticPath.from_generator(math.pi * np.eye(2), 401)) == 1


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-3.0, max_value=3.0).filter(lambda a: abs(a - round(a)) > 0.02))
def test_scalar_rotation_index(a):
    assert Op.conley_zehnder(scalar_path(a)) == 2 * math.floor(a) + 1


@pytest.mark.parametrize("lam, mu", [(2.0, 0), (-2.0, 0)])
def test_hyperbolic_path_index(lam, mu):
    # diag(e^{lam t}, e^{-lam t}) never meets eigenvalue 1 after t = 0, so its index is 0
    S = np.array([[0.0, lam], [lam, 0.0]])
    assert Op.conley_zehnder(Op.SymplecticPath.from_generator(S, 201)) == mu


def test_loop_axiom_on_corpus(corpus):
    alpha = Op.rotation_loop(2, corpus[0].M)
    assert Op.maslov_loop(alpha) == 1
    for P in corpus:
        assert Op.conley_zehnder(alpha.compose(P)) - Op.conley_zehnder(P) == 2


def test_loop_axiom_with_winding_two(corpus):
    alpha = Op.rotation_loop(2, corpus[0].M, winding=2)
    for P in corpus[:5]:
        assert Op.conley_zehnder(alpha.compose(P)) - Op.conley_zehnder(P) == 4


def test_inverse_antisymmetry(corpus):
    for P in corpus:
        assert Op.conley_zehnder(P.inverse()) == -Op.conley_zehnder(P)


def test_direct_sum_additivity(corpus):
    small = cz_corpus(1, 5, seed=1)
    for P, Q in zip(small, corpus):
        assert Op.conley_zehnder(P.direct_sum(Q)) == Op.conley_zehnder(P) + Op.conley_zehnder(Q)


def test_homotopy_invariance(corpus):
    # P(t) expm(eps sin(pi t) J0 Q) keeps both endpoints and is homotopic to P through eps -> 0
    rng = np.random.default_rng(11)
    J = Op.j0(2)
    for P in corpus[:5]:
        Q = rng.normal(size=(4, 4))
        Q = Q + Q.T
        bend = np.array([expm(2.0 * math.sin(math.pi * t) * J @ Q) for t in P.t])
        other = Op.SymplecticPath(P.samples @ bend)
        np.testing.assert_allclose(other.samples[-1], P.samples[-1], atol=1e-10)
        assert Op.conley_zehnder(other) == Op.conley_zehnder(P)


def test_reparametrisation_invariance():
    S = np.diag([1.3, 2.0 * math.pi * 1.7])
    base = Op.SymplecticPath.from_generator(S, 801)
    slow = Op.SymplecticPath(np.array([expm(t * t * Op.j0(1) @ S) for t in base.t]))
    assert Op.conley_zehnder(slow) == Op.conley_zehnder(base)


def test_time_dependent_generator_is_symplectic():
    P = Op.SymplecticPath.from_generator(lambda t: (1.0 + t) * np.eye(2) * math.pi, 401)
    assert all(Op.is_symplectic(m) for m in P.samples[::50])
    # the rotation angle is int_0^1 pi (1 + t) dt = 1.5 pi, a total of 0.75 turns
    assert Op.conley_zehnder(P) == 1


def test_maslov_constant_loop_is_zero():
    P = Op.SymplecticPath(np.repeat(np.eye(4)[None], 11, axis=0))
    assert Op.maslov_loop(P) == 0
    assert Op.conley_zehnder(P, maslov=True) == 0


@pytest.mark.parametrize("p, q", [(1, 1), (2, -1), (-3, 0)])
def test_maslov_product_is_additive(p, q):
    a = Op.rotation_loop(1, 401, winding=p)
    b = Op.rotation_loop(1, 401, winding=q)
    assert Op.maslov_loop(a.compose(b)) == p + q


def test_maslov_of_non_unitary_loop():
    # conjugating the generator loop by a fixed symplectic shear keeps its index
    G = expm(Op.j0(1) @ np.array([[0.7, 0.2], [0.2, -0.4]]))
    Gi = np.linalg.inv(G)
    a = Op.rotation_loop(1, 401)
    P = Op.SymplecticPath(G @ a.samples @ Gi)
    assert Op.maslov_loop(P) == 1


def test_maslov_requires_closed_loop():
    with pytest.raises(DomainError):
        Op.maslov_loop(scalar_path(0.5))


def test_maslov_rejects_coarse_sampling():
    with pytest.raises(DomainError):
        Op.maslov_loop(Op.rotation_loop(1, 5, winding=2))


def test_cz_preconditions():
    with pytest.raises(DomainError):
        Op.conley_zehnder(scalar_path(1.0))  # endpoint is the identity
    shifted = Op.SymplecticPath(scalar_path(0.5).samples[::-1].copy())
    with pytest.raises(DomainError):
        Op.conley_zehnder(shifted)


def test_path_rejects_non_symplectic():
    bad = np.repeat(np.eye(2)[None], 3, axis=0)
    bad[1] *= 2.0
    with pytest.raises(DomainError):
        Op.SymplecticPath(bad)
    with pytest.raises(DomainError):
        Op.SymplecticPath(np.zeros((3, 3, 3)))


def test_inverse_is_pointwise():
    P = scalar_path(0.3, 51)
    prod = P.compose(P.inverse()).samples
    np.testing.assert_allclose(prod, np.repeat(np.eye(2)[None], 51, axis=0), atol=1e-12)

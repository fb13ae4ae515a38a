import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scglue import orbit as O
from scglue.errors import DomainError, MembershipError
from scglue.fields import GluingParameter, HalfCylinderField, t_grid, weighted_norm
from scglue.profile import phi
from scglue.sampling import random_half, random_orbit_element
from scglue.verify import orbit_length

RS = (0.12, 0.16, 0.2, 0.24)


def pure_element(r, T=1.0, k=1, nt=32, theta_x=0.25, theta_y=0.125, cx=0.3):
    orbit = O.PeriodicOrbit.circle(T=T, k=k, M=nt)
    L = orbit_length(r, T)
    q = O.StandardMap(orbit, cx, cx + T * L - phi(r), theta_x, theta_y)
    zero = np.zeros(3)
    hx = HalfCylinderField(1, zero, np.zeros((121, nt, 3)), 0.25)
    hy = HalfCylinderField(-1, zero, np.zeros((121, nt, 3)), 0.25)
    return O.OrbitElement.boundary(r, q, hx, hy)


# ---------------------------------------------------------------- orbits and standard maps


def test_orbit_validation():
    with pytest.raises(DomainError):
        O.PeriodicOrbit(np.zeros((16, 2)), 1.0)  # not injective
    with pytest.raises(DomainError):
        O.PeriodicOrbit.circle(T=-1.0)
    t = t_grid(16)
    rough = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t) + 0.1 * np.cos(2 * np.pi * 7 * t)], -1)
    with pytest.raises(DomainError):
        O.PeriodicOrbit(rough, 1.0)


def test_orbit_interpolates_circle():
    o = O.PeriodicOrbit.circle(N=3, M=16)
    t = np.array([0.03, 0.4, 0.91])
    want = np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t), 0 * t], -1)
    np.testing.assert_allclose(o(t), want, atol=1e-14)


def test_standard_eval_examples():
    o = O.PeriodicOrbit.circle(T=2.0)
    q = O.StandardMap(o, 0.0, 0.0, 0.0, 0.0)
    np.testing.assert_allclose(O.standard_eval(q, "x", 0.0, 0.0), [0.0, 1.0, 0.0], atol=1e-15)
    q = O.StandardMap(o, 1.0, 0.0, 0.3, 0.1)
    assert O.standard_eval(q, "x", 3.0, 0.7)[0] == 7.0
    with pytest.raises(DomainError):
        O.standard_eval(q, "y", 1.0, 0.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_zk_action_leaves_evaluations(k):
    o = O.PeriodicOrbit.circle(k=k)
    q = O.StandardMap(o, 0.5, -1.0, 0.1, 0.35)
    t = t_grid(32)
    for j in range(k):
        p = q.zk_shift(j)
        for side in "xy":
            np.testing.assert_allclose(p.values(side, [0.0, 2.0], t), q.values(side, [0.0, 2.0], t),
                                       atol=1e-12)
        assert q.zk_distance(p) <= 1e-12


# ---------------------------------------------------------------- parameter map and gluing


def test_a_param_examples():
    assert O.a_param(0.0, 1.0, 2.0, 1.0, 0.3).is_zero
    a = O.a_param(0.2, 0.7, 0.7, 1.0, 0.3)
    assert a.modulus == pytest.approx(0.2, rel=1e-14)
    a = O.a_param(0.2, 0.0, 0.0, 2.0, 0.0)
    assert a.modulus == pytest.approx(0.23121372595911020, rel=1e-13)


def test_a_param_membership():
    with pytest.raises(MembershipError):
        O.a_param(0.2, 200.0, 0.0, 1.0, 0.0)  # nonpositive glued length
    with pytest.raises(MembershipError):
        O.a_param(0.3, 0.0, 0.0, 1.0, 0.0)  # modulus above 1/4
    assert O.a_param(0.3, 0.0, 0.0, 1.0, 0.0, max_modulus=1.0).modulus == pytest.approx(0.3)


def test_bar_oplus_pure_map_has_no_wrinkles():
    for r in RS:
        el = pure_element(r)
        w = O.bar_oplus(el).w
        s = w.s
        want = np.broadcast_to((el.q.orbit.T * s + el.q.cx)[:, None], w.values.shape[:2])
        np.testing.assert_allclose(w.values[:, :, 0], want, rtol=0, atol=1e-12 * max(1.0, w.R))


def test_bar_oplus_at_zero_is_identity():
    el = random_orbit_element(np.random.default_rng(0), 0.0)
    assert O.bar_oplus(el) is el


def test_bar_oplus_commutes_with_shift():
    el = random_orbit_element(np.random.default_rng(1), 0.2, length=orbit_length(0.2, 1.0))
    a = O.bar_oplus(O.shift_element(el, 2.5)).w.values
    b = O.shift_element(O.bar_oplus(el), 2.5).w.values
    np.testing.assert_allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("r", RS)
@pytest.mark.parametrize("T", [1.0, 2.0])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_coretractions(r, T, k):
    rng = np.random.default_rng([int(r * 100), int(T), k])
    el = random_orbit_element(rng, r, T=T, k=k, length=orbit_length(r, T))
    w = O.bar_oplus(el)
    tol = 1e-10
    h = O.coretraction_H(w, orbit=el.q.orbit)
    assert h.q.cx == 0.0
    assert np.max(np.abs(O.bar_oplus(h).w.values - w.w.values)) <= tol
    kk = O.coretraction_K(w, orbit=el.q.orbit)
    assert np.max(np.abs(O.bar_oplus(kk).w.values - w.w.values)) <= tol
    again = O.coretraction_K(O.bar_oplus(kk), orbit=el.q.orbit)
    assert np.max(np.abs(again.hx.values - kk.hx.values)) <= tol
    assert again.q.zk_distance(kk.q) <= tol


def test_H_of_pure_map_recovers_it():
    el = pure_element(0.2, theta_x=0.0, cx=0.0)
    h = O.coretraction_H(O.bar_oplus(el), orbit=el.q.orbit)
    tol = 1e-11 * max(1.0, orbit_length(0.2, 1.0))
    assert np.max(np.abs(h.hx.values)) <= tol
    assert np.max(np.abs(h.hy.values)) <= tol


def test_K_of_pure_map_has_no_h_part():
    el = pure_element(0.16, k=2)
    kk = O.coretraction_K(O.bar_oplus(el), orbit=el.q.orbit)
    tol = 1e-10
    assert np.max(np.abs(kk.hx.values)) <= tol * max(1.0, orbit_length(0.16, 1.0))
    assert kk.q.zk_distance(el.q) <= tol


def test_H_rejects_r_zero():
    el = pure_element(0.2)
    w = O.bar_oplus(el).w
    with pytest.raises(DomainError):
        O.coretraction_H(0.0, w, orbit=el.q.orbit)


# ---------------------------------------------------------------- circle averages


def test_circle_average_examples():
    t = t_grid(64)
    assert O.circle_average((t + 0.3) % 1.0) == pytest.approx(0.8, abs=1e-14)
    assert O.circle_average(np.full(16, 0.37)) == pytest.approx(0.37, abs=1e-15)
    with pytest.raises(DomainError):
        O.circle_average(np.array([0.0, 0.5, 0.0, 0.5]))


@given(st.integers(1, 3), st.floats(0, 1), st.floats(0, 1))
def test_circle_average_shift(k, c, tau):
    t = t_grid(64)
    q = (k * t + 0.05 * np.sin(2 * np.pi * t) + c) % 1.0
    q_tau = (k * (t + tau) + 0.05 * np.sin(2 * np.pi * (t + tau)) + c) % 1.0
    # shifting the argument by tau moves the average by k tau; the sin term averages to 0
    got = O.circle_average(q_tau) - O.circle_average(q) - k * tau
    assert O._circle_dist(got) <= 1e-10


def test_chart_inverts_standard_circle():
    o = O.PeriodicOrbit.circle(M=32)
    t = t_grid(32)
    diff = O.MODEL_CHART(o(t)) - t
    assert max(O._circle_dist(x) for x in diff) <= 1e-15


@pytest.mark.parametrize("k", [1, 2, 3])
def test_averaging_recovers_pure_map(k):
    for r in RS:
        el = pure_element(r, k=k, theta_x=0.3, theta_y=0.2)
        q = O.averaging_A_Phi(O.bar_oplus(el), orbit=el.q.orbit)
        assert q.zk_distance(el.q) <= 1e-10


def test_averaging_r_zero_passes_through():
    el = random_orbit_element(np.random.default_rng(2), 0.0)
    assert O.averaging_A_Phi(el) is el.q


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("tau", [0.1, 0.37])
def test_decoration_shift(k, tau):
    el = pure_element(0.2, k=k)
    g = O.bar_oplus(el)
    cx, cy, d = O.middle_averages(g.r, g.w, el.q.orbit)
    cx2, cy2, d2 = O.middle_averages(g.r, O.redecorate_x(g.w, tau), el.q.orbit)
    assert O._circle_dist(d2 - (d - k * tau)) <= 1e-10
    assert abs(cx2 - cx) <= 1e-12 and abs(cy2 - cy) <= 1e-12


def test_averaging_linear_response():
    el = pure_element(0.2)
    g = O.bar_oplus(el)
    orbit = el.q.orbit
    base = O.middle_averages(g.r, g.w, orbit)
    v = np.array(g.w.values)
    v[..., 0] += 0.01
    shifted = O.middle_averages(g.r, g.w.replace(values=v), orbit)
    assert shifted[0] - base[0] == pytest.approx(0.01, abs=1e-12)
    assert abs(shifted[2] - base[2]) <= 1e-15
    # a mean-zero radial bump in the loop does not move the angle average
    t = t_grid(g.w.Nt)
    v = np.array(g.w.values)
    v[..., 1:] *= (1.0 + 0.05 * np.cos(2 * np.pi * 3 * t))[None, :, None]
    bumped = O.middle_averages(g.r, g.w.replace(values=v), orbit)
    assert abs(bumped[2] - base[2]) <= 1e-12


def test_averaging_rejects_wrong_degree():
    el = pure_element(0.2, k=2)
    g = O.bar_oplus(el)
    with pytest.raises(MembershipError):
        O.averaging_A_Phi(g, orbit=O.PeriodicOrbit.circle(k=1))


# ---------------------------------------------------------------- comparison map


def test_compare_D_trivial_cases():
    el = pure_element(0.2)
    kx, ky = O.compare_D(el)
    assert np.max(np.abs(kx.values)) <= 1e-10 * orbit_length(0.2, 1.0)
    z = random_orbit_element(np.random.default_rng(3), 0.0)
    kx, ky = O.compare_D(z)
    assert np.all(kx.values == 0.0) and np.all(ky.values == 0.0)


def test_compare_D_decays_as_r_shrinks():
    rng = np.random.default_rng(4)
    orbit = O.PeriodicOrbit.circle(M=32)
    zero = np.zeros(3)
    hx = random_half(rng, 1, zero, 32, 60.0, 0.25, amplitude=0.05)
    hy = random_half(rng, -1, zero, 32, 60.0, 0.25, amplitude=0.05)
    q = O.StandardMap(orbit, 0.0, -50.0, 0.25, 0.0)
    norms = []
    for r in (0.24, 0.2, 0.16, 0.12):
        kx, _ = O.compare_D(O.OrbitElement.boundary(r, q, hx, hy), max_modulus=1.0)
        norms.append(weighted_norm(kx, 0))
    assert norms[0] > 1e-6
    for a, b in zip(norms, norms[1:]):
        assert b < a or b <= 1e-12


# ---------------------------------------------------------------- convergence classes


def _standard_samples(orbit, c, d, S=20.0, ds=0.05, nt=32):
    s = np.arange(int(round(S / ds)) + 1) * ds
    t = t_grid(nt)
    k = orbit.k
    out = np.empty((s.size, nt, orbit.N + 1))
    out[:, :, 0] = orbit.T * s[:, None] + c
    out[:, :, 1:] = orbit(k * t - 0.5 * k + d)[None]
    return s, out


def test_orbit_class_exact_map():
    orbit = O.PeriodicOrbit.circle(T=1.5, k=2)
    _, x = _standard_samples(orbit, 0.4, 0.3)
    fit = O.orbit_class_check(x, 0.05, orbit)
    assert fit.c == pytest.approx(0.4, abs=1e-12)
    assert O._circle_dist(fit.d - 0.3) <= 1e-12
    assert fit.residual_norms[0] <= 1e-12
    # higher levels difference the roundoff and carry e^{2 delta s} weights
    assert max(fit.residual_norms) <= 1e-8


def test_orbit_class_exponential_noise_matches_tail_integral():
    orbit = O.PeriodicOrbit.circle()
    s, x = _standard_samples(orbit, -0.2, 0.6)
    rng = np.random.default_rng(5)
    p = rng.normal(size=(32, 3)) * 0.01
    p -= p.mean(axis=0)
    x = x + np.exp(-s)[:, None, None] * p[None]
    fit = O.orbit_class_check(x, 0.05, orbit)
    delta = orbit.weights[0]
    S = s[-1]
    rate = 2.0 * (1.0 - delta)
    want = math.sqrt(np.mean(np.sum(p * p, axis=1)) * (1.0 - math.exp(-rate * S)) / rate)
    assert fit.residual_norms[0] == pytest.approx(want, rel=0.05)


def test_orbit_class_divergent_fit():
    orbit = O.PeriodicOrbit.circle()
    s, x = _standard_samples(orbit, 0.0, 0.0)
    t = t_grid(x.shape[1])
    x[:, :, 1] += 1e-4 * np.exp(0.5 * s)[:, None] * np.cos(2 * np.pi * 2 * t)[None, :]
    with pytest.raises(MembershipError):
        O.orbit_class_check(x, 0.05, orbit)


def test_pair_matching():
    assert O.pair_matching(0.2, 1.2)
    assert not O.pair_matching(0.2, 0.5)

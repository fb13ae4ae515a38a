import math

import numpy as np
import pytest

from scglue import scharness as H
from scglue.errors import DomainError
from scglue.fields import DEFAULT_WEIGHTS, HalfCylinderField, weighted_norm
from scglue.profile import TAN_CUTOFF, phi, phi_inv, phi_prime


def half(values, sign=1, ds=0.25):
    return HalfCylinderField(sign, np.zeros(values.shape[2]), values, ds, check_tail=False)


def decaying(rate=1.0, smax=30.0, ds=0.25, nt=8, seed=0):
    rng = np.random.default_rng(seed)
    s = np.arange(int(round(smax / ds)) + 1) * ds
    prof = rng.normal(size=(nt, 2))
    return np.exp(-rate * s)[:, None, None] * prof[None]


def linear_probe(M):
    x0 = half(decaying(seed=1))
    d1 = half(decaying(seed=2))
    d2 = half(decaying(seed=3))

    def fam(modulus, h):
        return H.FieldTuple((h.replace(values=h.values @ M.T),))

    return H.ScaleFamilyProbe("linear", fam, DEFAULT_WEIGHTS, (0.2, x0), ((0.0, d1), (0.0, d2)),
                              H._perturb_half)


def test_empty_suite_passes():
    rep = H.run_suite([])
    assert rep.results == ()
    assert rep.passed
    assert rep.render().startswith("SUMMARY ")


def test_single_target_plumbing():
    rep = H.run_suite(["gamma1"])
    (res,) = rep.results
    assert res.target == "gamma1"
    assert res.sc0 is not None
    assert len(res.sc1) == len(DEFAULT_WEIGHTS) - 1
    rows = [r for r in rep.lines() if r.startswith("gamma1 ")]
    assert len(rows) == 3 * 4 + sum(len(r.rows) for r in res.sc1)


def test_unknown_target_rejected():
    with pytest.raises(DomainError):
        H.run_suite(["gamma9"])
    with pytest.raises(DomainError):
        H.make_probe("nope")


def test_default_suite_passes():
    rep = H.run_suite()
    assert rep.passed, rep.render()
    assert rep.summary()["targets"]["gamma1"]["verdict"] == H.VERDICT_OK


def test_report_is_deterministic():
    a = H.run_suite(["gamma3", "f_after_oplus", "D_map"], seed=4).render()
    b = H.run_suite(["gamma3", "f_after_oplus", "D_map"], seed=4).render()
    assert a == b


def test_report_never_claims_sc1():
    text = H.run_suite(["gamma2"]).render()
    assert "consistent with sc1" in text
    assert '"sc1"' in text  # the key exists; every verdict carries the hedge
    assert H.VERDICT_BAD.startswith("not ")


def test_tan_cutoff_suite_passes():
    assert H.run_suite(cutoff=TAN_CUTOFF).passed


def test_constant_family_has_zero_table():
    x0 = half(decaying())
    probe = H.ScaleFamilyProbe("const", lambda a, x: H.FieldTuple((x0,)), DEFAULT_WEIGHTS, (0.2, x0),
                               ((1.0, x0),), H._perturb_half)
    table = H.check_sc0_limit(probe)
    assert all(v == 0.0 for _, _, v in table.rows)
    assert table.passed


def test_linear_family_quotient_is_exact():
    M = np.array([[2.0, -1.0], [0.5, 3.0]])
    probe = linear_probe(M)
    rep = H.check_sc1_quotient(probe, 1)
    # exact up to rounding amplified by 1 / h
    assert all(v <= 1e-10 for _, _, v in rep.rows)
    assert rep.linearity_defect <= 1e-10
    assert rep.passed
    _, dx = probe.directions[0]
    q = H._quotients(probe, 0.0, dx, H.STEPS)
    want = dx.values @ M.T
    for qi in q:
        np.testing.assert_allclose(qi.fields[0].values, want, atol=1e-10)


def test_quotient_needs_level_one():
    with pytest.raises(DomainError):
        H.check_sc1_quotient(linear_probe(np.eye(2)), 0)


def test_no_limit_family_is_rejected():
    probe = H.make_probe("H_after_baroplus")
    assert not probe.has_limit
    with pytest.raises(DomainError):
        H.check_sc0_limit(probe)
    assert H.run_target("H_after_baroplus").sc0 is None


def test_gamma1_decays_at_every_level():
    table = H.check_sc0_limit(H.make_probe("gamma1"))
    assert table.verdicts == (True, True, True)


def test_gamma3_decay_envelope():
    # inputs decay like e^{-s}; the bump reads them near s = R/2, so level m decays like
    # e^{-(1 - delta_m) R / 2}; the envelope allows a 20% margin on that rate
    table = H.check_sc0_limit(H.make_probe("gamma3"))
    for m, delta in enumerate(DEFAULT_WEIGHTS.deltas):
        rows = [(R, v) for lvl, R, v in table.rows if lvl == m]
        R0, v0 = rows[0]
        for R, v in rows[1:]:
            assert v <= v0 * math.exp(-(1.0 - delta) * (R - R0) / 2 * 0.8)


def test_modulus_derivative_follows_chain_rule():
    # R(r) = phi(r) carried as an extra; its modulus quotient must be phi'(r) = -e^{1/r} / r^2
    x0 = half(decaying())
    r0 = 0.2

    def fam(modulus, x):
        return H.FieldTuple((x,), np.array([phi(modulus)]))

    probe = H.ScaleFamilyProbe("phi", fam, DEFAULT_WEIGHTS, (r0, x0), ((1.0, x0.scaled(0.0)),),
                               H._perturb_half)
    q = H._quotients(probe, 1.0, x0.scaled(0.0), (1e-7,))[0]
    want = -math.exp(1.0 / r0) / r0 ** 2
    assert want == pytest.approx(phi_prime(r0), rel=1e-14)
    assert abs(q.extras[0] - want) <= 1e-3 * abs(want)


def test_level_ordering_guard():
    bad = H.Sc0Table("x", (), (False, True))
    with pytest.raises(ArithmeticError):
        H._check_level_ordering(bad)
    H._check_level_ordering(H.Sc0Table("x", (), (True, False)))


def test_strict_decrease_ignores_roundoff_floor():
    assert H._strictly_decreasing([1.0, 0.5, 1e-14, 2e-14], 1.0)
    assert not H._strictly_decreasing([1.0, 0.5, 0.6], 1.0)


def test_field_tuple_norm_combines_parts():
    x = half(decaying())
    ft = H.FieldTuple((x, x), np.array([3.0, 4.0]))
    assert ft.norm(0) == pytest.approx(math.sqrt(25.0 + 2 * weighted_norm(x, 0) ** 2))
    assert (ft - ft).norm(2) == 0.0


def test_modulus_direction_moves_neck_by_one():
    da = H._modulus_direction(12.0)
    r = phi_inv(12.0)
    assert phi(r + 1e-3 * da) - 12.0 == pytest.approx(-1e-3, rel=1e-2)

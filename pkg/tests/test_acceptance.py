"""Acceptance criteria 1-10, one test each, at the stated tolerances and time budgets.

Every test prints a single ``criterion N ... PASS|FAIL`` line (shown even
without ``-s``).  Run ``python3 -m pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest

from scglue import operators as Op
from scglue import scharness as SH
from scglue import verify as V
from scglue.profile import CUTOFF_MODELS, DEFAULT_CUTOFF, TAN_CUTOFF


@pytest.fixture
def report(capsys):
    def emit(n, title, checks, elapsed, budget):
        ok = all(c.passed for c in checks) and elapsed <= budget
        worst = "; ".join(c.line() for c in checks)
        with capsys.disabled():
            print(f"\ncriterion {n} {title}: {worst}; {elapsed:.1f}s/{budget:g}s {'PASS' if ok else 'FAIL'}")
        for c in checks:
            assert c.passed, c.line()
        assert elapsed <= budget, f"took {elapsed:.1f}s, budget {budget:g}s"
    return emit


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_1_gluing_retraction(report):
    cfg = V.VerifyConfig(pairs=50)
    res, dt = timed(lambda: [V.check_glue_retraction(cfg)])
    report(1, "oplus after f is the identity", res, dt, 10.0)


def test_criterion_2_hat_round_trips(report):
    cfg = V.VerifyConfig(pairs=50)
    res, dt = timed(lambda: [V.check_hat_retraction(cfg), V.check_unglue_hat(cfg), V.check_unglue(cfg)])
    report(2, "hat retraction and unglue round trips", res, dt, 20.0)


def test_criterion_3_orbit_retractions(report):
    res, dt = timed(lambda: V.check_orbit_retractions(V.VerifyConfig()))
    report(3, "baroplus after H and K is the identity", res, dt, 60.0)


def test_criterion_4_averaging(report):
    res, dt = timed(lambda: V.check_averaging(V.VerifyConfig()))
    report(4, "averaging identities", res, dt, 30.0)


def test_criterion_5_calculus(report):
    res, dt = timed(V.check_calculus)
    report(5, "one-sided slopes of B, g and C at 0", res, dt, 1.0)


def test_criterion_6_cr_index(report):
    def run():
        out = []
        for n in (1, 3):
            r = Op.cr_index(Op.CRConfig.resolved(n, math.pi))
            out.append(V.CheckResult(f"(k,c,i) n={n} = {tuple(r)}",
                                     float(tuple(r) != (2 * n, 0, 2 * n)), 0.0, exact=True))
            out.append(V.CheckResult(f"gap ratio n={n} {r.gap_ratio:.3g} >= 1e3",
                                     float(r.gap_ratio < Op.GAP_RATIO), 0.0, exact=True))
        iso = max(Op.iso_residual(Op.CRConfig.resolved(1, d), probes=4) for d in (1.0, math.pi, 5.0))
        out.append(V.CheckResult("ap-isomorphism residual", iso, 1e-6))
        return out
    res, dt = timed(run)
    report(6, "CR index and ap-isomorphism", res, dt, 60.0)


def test_criterion_7_asymptotic_spectra(report):
    def run():
        out = []
        K = 32
        bound = 2 * math.pi * (K / 2 - 2)
        spec = Op.asymptotic_spectrum(Op.LoopOperator.constant(np.zeros((2, 2))), K)
        rows = spec.within(bound + 1e-6)
        err = max(abs(v - 2 * math.pi * round(v / (2 * math.pi))) for v, _ in rows)
        mults = {m for _, m in rows}
        count = len(rows) == 2 * (K // 2 - 2) + 1
        out.append(V.CheckResult("B=0 spectrum is 2 pi Z", err, 1e-10))
        out.append(V.CheckResult("B=0 multiplicities are 2", float(mults != {2} or not count), 0.0, exact=True))
        err = 0.0
        for a in (0.1, 0.3, -0.45, 1.2):
            s = Op.asymptotic_spectrum(Op.LoopOperator.constant(2 * math.pi * a * np.eye(2)), K)
            for v, _ in s.within(bound):
                err = max(err, abs(v - 2 * math.pi * (round(v / (2 * math.pi) + a) - a)))
        out.append(V.CheckResult("B=2 pi a I matches 2 pi (Z - a)", err, 1e-8))
        rng = np.random.default_rng(0)
        worst_mult = 0.0
        worst_w = 0.0
        for n in (1, 2, 3):
            for _ in range(10):
                S = rng.normal(size=(2 * n, 2 * n)) * 4.0
                s = Op.asymptotic_spectrum(Op.LoopOperator.constant(S + S.T), 12)
                worst_mult = max(worst_mult, float(max(s.multiplicities) > 2 * n))
                w = Op.admissible_weight(s)
                if w is not None:
                    worst_w = max(worst_w, float(w >= 2 * math.pi))
        huge = Op.SpectrumResult((-40.0, 40.0), (2, 2), (-40.0, 40.0), 1, 4)
        worst_w = max(worst_w, float(Op.admissible_weight(huge) >= 2 * math.pi))
        out.append(V.CheckResult("no multiplicity above 2n", worst_mult, 0.0, exact=True))
        out.append(V.CheckResult("admissible weight below 2 pi", worst_w, 0.0, exact=True))
        return out
    res, dt = timed(run)
    report(7, "asymptotic spectra", res, dt, 30.0)


def test_criterion_8_cz_axioms(report):
    def run():
        return [r for r in V.suite_operators(V.VerifyConfig())
                if r.name.startswith(("μ_", "loop", "inverse", "direct"))]
    res, dt = timed(run)
    assert len(res) == 5
    report(8, "CZ and Maslov axioms", res, dt, 10.0)


def test_criterion_9_sc_shadow_suite(report):
    rep, dt = timed(lambda: SH.run_suite(SH.TARGETS))
    checks = []
    for r in rep.results:
        levels = "n/a" if r.sc0 is None else "".join("+" if v else "-" for v in r.sc0.verdicts)
        checks.append(V.CheckResult(f"{r.target}[sc0 {levels}]", float(not r.passed), 0.0, exact=True))
    report(9, "sc-shadow suite", checks, dt, 300.0)


def test_criterion_10_cutoff_independence(report):
    def run():
        out = []
        for name, model in sorted(CUTOFF_MODELS.items()):
            cfg = V.VerifyConfig(pairs=50, cutoff=model)
            for r in ([V.check_glue_retraction(cfg), V.check_hat_retraction(cfg), V.check_unglue_hat(cfg),
                       V.check_unglue(cfg)] + V.check_orbit_retractions(cfg)):
                out.append(V.CheckResult(f"[{name}] {r.name}", r.error, r.tol))
        return out
    assert {DEFAULT_CUTOFF, TAN_CUTOFF} <= set(CUTOFF_MODELS.values())
    res, dt = timed(run)
    report(10, "identity suites 1-3 under both cutoffs", res, dt, 120.0)

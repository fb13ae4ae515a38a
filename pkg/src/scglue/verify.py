"""Identity suites shared by the ``verify`` command and the acceptance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gluing as G
from . import operators as Op
from . import orbit as O
from .fields import GluingParameter, HalfCylinderField, a_loop_average, middle_loop_average
from .profile import DEFAULT_CUTOFF, CutoffModel, calc_B, calc_C, calc_g, phi
from .sampling import random_orbit_element, random_pair


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tol: float
    exact: bool = False

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.exact:
            return f"{self.name} {status}"
        return f"{self.name} max_err={self.error:.3e} tol={self.tol:.0e} {status}"


@dataclass(frozen=True)
class VerifyConfig:
    Nt: int = 16
    ds: float = 0.25
    Smax: float = 30.0
    seed: int = 0
    pairs: int = 50
    lengths: tuple[float, ...] = (8.0, 12.0, 16.0, 20.0)
    orbit_nt: int = 32
    cutoff: CutoffModel = field(default=DEFAULT_CUTOFF)


def _angles(rng: np.random.Generator, nt: int) -> list[float]:
    return [0.0, 0.25, int(rng.integers(nt)) / nt]


def _half_err(a: HalfCylinderField, b: HalfCylinderField) -> float:
    return float(max(np.max(np.abs(a.c - b.c)), np.max(np.abs(a.values - b.values))))


# ---------------------------------------------------------------- nodal gluing


def check_glue_retraction(cfg: VerifyConfig) -> CheckResult:
    rng = np.random.default_rng([cfg.seed, 1])
    err = 0.0
    for R in cfg.lengths:
        for th in _angles(rng, cfg.Nt):
            a = GluingParameter.from_length(R, th)
            for _ in range(cfg.pairs):
                ux, uy = random_pair(rng, nt=cfg.Nt, smax=cfg.Smax, ds=cfg.ds)
                w = G.oplus(a, ux, uy, cfg.cutoff)
                dec = G.split_f(w, cfg.cutoff)
                w2 = G.oplus(dec.param, *dec.pair, cfg.cutoff)
                err = max(err, float(np.max(np.abs(w2.values - w.values))))
    return CheckResult("oplus(f(w)) = w", err, 1e-12)


def check_hat_retraction(cfg: VerifyConfig) -> CheckResult:
    rng = np.random.default_rng([cfg.seed, 2])
    err = 0.0
    for R in cfg.lengths:
        for th in _angles(rng, cfg.Nt):
            a = GluingParameter.from_length(R, th)
            for _ in range(max(1, cfg.pairs // 5)):
                hx, hy = random_pair(rng, nt=cfg.Nt, smax=cfg.Smax, ds=cfg.ds, zero_c=True)
                w = G.oplus_hat(a, hx, hy, cfg.cutoff)
                dec = G.f_hat(w, cfg.cutoff)
                w2 = G.oplus_hat(dec.param, *dec.pair, cfg.cutoff)
                err = max(err, float(np.max(np.abs(w2.values - w.values))))
    return CheckResult("oplus_hat(f_hat(w)) = w", err, 1e-12)


def check_unglue_hat(cfg: VerifyConfig) -> CheckResult:
    rng = np.random.default_rng([cfg.seed, 3])
    err = 0.0
    for R in cfg.lengths:
        for th in _angles(rng, cfg.Nt):
            a = GluingParameter.from_length(R, th)
            for _ in range(max(1, cfg.pairs // 5)):
                hx, hy = random_pair(rng, nt=cfg.Nt, smax=cfg.Smax, ds=cfg.ds, zero_c=True)
                w = G.oplus_hat(a, hx, hy, cfg.cutoff)
                v = G.ominus_hat(a, hx, hy, cfg.cutoff)
                bx, by = G.unglue_pair_hat(w, v, cfg.cutoff)
                err = max(err, _half_err(bx, hx), _half_err(by, hy))
    return CheckResult("unglue_hat(oplus_hat, ominus_hat) = id", err, 1e-10)


def check_unglue(cfg: VerifyConfig) -> CheckResult:
    rng = np.random.default_rng([cfg.seed, 4])
    err = 0.0
    for R in cfg.lengths:
        for th in _angles(rng, cfg.Nt):
            a = GluingParameter.from_length(R, th)
            for _ in range(max(1, cfg.pairs // 5)):
                ux, uy = random_pair(rng, nt=cfg.Nt, smax=cfg.Smax, ds=cfg.ds)
                w = G.oplus(a, ux, uy, cfg.cutoff)
                v = G.ominus(a, ux, uy, cfg.cutoff)
                bx, by = G.unglue_pair(w, v, cfg.cutoff)
                av_true = 0.5 * (a_loop_average(ux, a) + a_loop_average(uy, a))
                av_rec = middle_loop_average(w)
                err = max(err, _half_err(bx, ux), _half_err(by, uy),
                          float(np.max(np.abs(av_true - av_rec))))
    return CheckResult("unglue(oplus, ominus) = id", err, 1e-9)


def check_calculus(h: float = 1e-4) -> list[CheckResult]:
    out = []
    err = max(abs(calc_B(T, h) / h - 1.0) for T in (0.5, 2.0, 10.0))
    out.append(CheckResult("slope of B_T at 0 = 1", err, 1e-3))
    err = max(abs(calc_g(T, h) / h - math.log(T)) for T in (0.5, 2.0, 10.0))
    out.append(CheckResult("slope of g_T at 0 = ln T", err, 1e-3))
    err = max(abs(calc_C(T, h, c) / h - 1.0) for T in (0.5, 2.0, 10.0) for c in (-0.5, 0.0, 3.0))
    out.append(CheckResult("d/dx C_T(0, c) = 1", err, 1e-3))
    return out


def suite_nodal(cfg: VerifyConfig) -> list[CheckResult]:
    return [check_glue_retraction(cfg), check_hat_retraction(cfg), check_unglue_hat(cfg),
            check_unglue(cfg)] + check_calculus()


# ---------------------------------------------------------------- orbits


ORBIT_RS = (0.12, 0.16, 0.2, 0.24)


def orbit_length(r: float, T: float, ds: float = 0.25, floor: float = 60.0) -> float:
    """An aligned neck length close to ``phi(r) / T`` and beyond the standard disk."""
    L = max(phi(r) / T, floor)
    step = 2.0 * ds
    return step * math.ceil(L / step)


def _orbit_cases(cfg: VerifyConfig, rng, Ts=(1.0, 2.0), ks=(1, 2, 3)):
    for r in ORBIT_RS:
        for T in Ts:
            for k in ks:
                L = orbit_length(r, T, cfg.ds)
                yield r, T, k, random_orbit_element(rng, r, T=T, k=k, nt=cfg.orbit_nt, smax=cfg.Smax,
                                                    ds=cfg.ds, length=L)


def check_orbit_retractions(cfg: VerifyConfig) -> list[CheckResult]:
    rng = np.random.default_rng([cfg.seed, 5])
    eh = ek = 0.0
    for r, T, k, el in _orbit_cases(cfg, rng):
        w = O.bar_oplus(el, cfg.cutoff)
        orbit = el.q.orbit
        h = O.coretraction_H(w, orbit=orbit, cutoff=cfg.cutoff)
        eh = max(eh, float(np.max(np.abs(O.bar_oplus(h, cfg.cutoff).w.values - w.w.values))))
        kk = O.coretraction_K(w, orbit=orbit, cutoff=cfg.cutoff)
        ek = max(ek, float(np.max(np.abs(O.bar_oplus(kk, cfg.cutoff).w.values - w.w.values))))
    return [CheckResult("baroplus(H(w)) = w", eh, 1e-10), CheckResult("baroplus(K(w)) = w", ek, 1e-10)]


def check_averaging(cfg: VerifyConfig) -> list[CheckResult]:
    rng = np.random.default_rng([cfg.seed, 6])
    e_avg = e_shift = e_c = 0.0
    for r, T, k, el in _orbit_cases(cfg, rng):
        # the identity concerns the pure standard map, so drop the h part
        zero = el.hx.replace(values=np.zeros_like(el.hx.values))
        zero_y = el.hy.replace(values=np.zeros_like(el.hy.values))
        pure = O.OrbitElement.boundary(el.r, el.q, zero, zero_y)
        w = O.bar_oplus(pure, cfg.cutoff)
        orbit = el.q.orbit
        p = O.averaging_A_Phi(w, orbit=orbit)
        e_avg = max(e_avg, p.zk_distance(el.q))
        cx, cy, d = O.middle_averages(w.r, w.w, orbit)
        for tau in (0.1, 0.37):
            w2 = O.redecorate_x(w.w, tau)
            cx2, cy2, d2 = O.middle_averages(w.r, w2, orbit)
            e_shift = max(e_shift, O._circle_dist(d2 - (d - k * tau)))
            e_c = max(e_c, abs(cx2 - cx), abs(cy2 - cy))
    return [CheckResult("A_Phi(baroplus(r, q)) = q mod Z_k", e_avg, 1e-10),
            CheckResult("d after decoration shift = d - k tau", e_shift, 1e-10),
            CheckResult("(c_x, c_y) decoration invariant", e_c, 1e-12)]


def suite_orbit(cfg: VerifyConfig) -> list[CheckResult]:
    return check_orbit_retractions(cfg) + check_averaging(cfg)


# ---------------------------------------------------------------- operators


def cz_corpus(n: int, count: int, seed: int, M: int = 801) -> list[Op.SymplecticPath]:
    """Random constant-generator paths with nondegenerate endpoints."""
    rng = np.random.default_rng([seed, 7, n])
    out = []
    while len(out) < count:
        S = rng.normal(size=(2 * n, 2 * n)) * 2.0
        S = 0.5 * (S + S.T)
        P = Op.SymplecticPath.from_generator(S, M)
        if np.linalg.svd(P.samples[-1] - np.eye(2 * n), compute_uv=False).min() > 1e-3:
            out.append(P)
    return out


def suite_operators(cfg: VerifyConfig) -> list[CheckResult]:
    out = []
    half = Op.SymplecticPath.from_generator(math.pi * np.eye(2), 401)
    mu = Op.conley_zehnder(half)
    out.append(CheckResult("μ_CZ(e^{πit})=1", float(abs(mu - 1)), 0.0, exact=True))
    gen = Op.maslov_loop(Op.rotation_loop(2))
    out.append(CheckResult("μ_M(generator loop)=1", float(abs(gen - 1)), 0.0, exact=True))
    corpus = cz_corpus(2, 20, cfg.seed)
    alpha = Op.rotation_loop(2, corpus[0].M)
    bad = sum(Op.conley_zehnder(alpha.compose(P)) - Op.conley_zehnder(P) != 2 for P in corpus)
    out.append(CheckResult("loop axiom on 20 paths", float(bad), 0.0, exact=True))
    bad = sum(Op.conley_zehnder(P.inverse()) + Op.conley_zehnder(P) != 0 for P in corpus[:10])
    out.append(CheckResult("inverse antisymmetry", float(bad), 0.0, exact=True))
    one = cz_corpus(1, 5, cfg.seed + 1)
    bad = sum(Op.conley_zehnder(P.direct_sum(Q)) != Op.conley_zehnder(P) + Op.conley_zehnder(Q)
              for P, Q in zip(one, corpus[:5]))
    out.append(CheckResult("direct-sum additivity", float(bad), 0.0, exact=True))
    res = Op.cr_index(Op.CRConfig(1, math.pi))
    out.append(CheckResult("CR index n=1 delta=pi is (2,0,2)",
                           float(tuple(res) != (2, 0, 2)), 0.0, exact=True))
    L = Op.LoopOperator.constant(np.zeros((2, 2)))
    spec = Op.asymptotic_spectrum(L, 16)
    err = max(abs(v - Op.TWO_PI * round(v / Op.TWO_PI)) for v, _ in spec.within(Op.TWO_PI * 6))
    out.append(CheckResult("spectrum of -J d/dt is 2 pi Z", err, 1e-10))
    return out


SUITES = {"nodal": suite_nodal, "orbit": suite_orbit, "operators": suite_operators}


def run(suite: str, cfg: VerifyConfig) -> list[CheckResult]:
    if suite == "all":
        return [r for name in ("nodal", "orbit", "operators") for r in SUITES[name](cfg)]
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    return SUITES[suite](cfg)

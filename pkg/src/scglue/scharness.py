"""Finite numerical shadows of sc-continuity and sc-differentiability.

A probe evaluates a family ``(modulus, x) -> value`` on sampled half-cylinder
fields and measures it in the weighted norms of each level.  Two observables
are reported:

* sc0 tables: ``|F(a_i, x0) - F(0, x0)|_m`` along a schedule of neck lengths,
  with a strict-decay verdict per level;
* sc1 quotients: difference quotients in the norm one level down for steps
  1e-2, 1e-3, 1e-4, with a Cauchy verdict and a linearity defect.

Passing both is reported as "consistent with sc1"; nothing stronger is claimed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ._parallel import parallel_map
from .errors import DomainError
from .fields import (
    DEFAULT_WEIGHTS,
    GluingParameter,
    HalfCylinderField,
    WeightSequence,
    weighted_norm,
)
from .gluing import bump_shape, retract_pair, step_shape, taper_map
from .orbit import (
    OrbitElement,
    PeriodicOrbit,
    StandardMap,
    compare_D,
    h_after_baroplus,
    k_after_baroplus,
)
from .profile import DEFAULT_CUTOFF, CutoffModel, phi_inv, phi_prime

R_SCHEDULE = (8.0, 12.0, 16.0, 20.0)
STEPS = (1e-2, 1e-3, 1e-4)
CAUCHY_FACTOR = 5.0
LINEARITY_TOL = 5e-3
#: Norms below this (relative to the base value) count as exact zeros.
FLOOR = 1e-12
VERDICT_OK = "consistent with sc1"
VERDICT_BAD = "not consistent with sc1"


@dataclass(frozen=True, eq=False)
class FieldTuple:
    """Half-cylinder fields plus finitely many real parameters, measured together."""

    fields: tuple[HalfCylinderField, ...]
    extras: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __sub__(self, other: "FieldTuple") -> "FieldTuple":
        if len(self.fields) != len(other.fields):
            raise DomainError("field tuples differ in length")
        return FieldTuple(tuple(a - b for a, b in zip(self.fields, other.fields)),
                          np.asarray(self.extras) - np.asarray(other.extras))

    def scaled(self, factor: float) -> "FieldTuple":
        return FieldTuple(tuple(f.scaled(factor) for f in self.fields), factor * np.asarray(self.extras))

    def norm(self, level: int) -> float:
        total = float(np.dot(self.extras, self.extras))
        for f in self.fields:
            total += weighted_norm(f, level) ** 2
        return math.sqrt(total)


Family = Callable[[float, object], FieldTuple]
Perturb = Callable[[object, object, float], object]


@dataclass(frozen=True, eq=False)
class ScaleFamilyProbe:
    """A family ``(modulus, x) -> FieldTuple`` with a base point and probe directions.

    ``perturb(x, dx, h)`` returns ``x + h dx``; directions are pairs
    ``(d_modulus, dx)``.  ``has_limit`` is False for families undefined at 0.
    """

    name: str
    family: Family
    levels: WeightSequence
    base: tuple[float, object]
    directions: tuple[tuple[float, object], ...]
    perturb: Perturb
    angle: float = 0.0
    has_limit: bool = True

    def __call__(self, modulus: float, x) -> FieldTuple:
        return self.family(modulus, x)


@dataclass(frozen=True)
class Sc0Table:
    target: str
    rows: tuple[tuple[int, float, float], ...]   # (level, R, norm)
    verdicts: tuple[bool, ...]

    @property
    def passed(self) -> bool:
        return all(self.verdicts)


@dataclass(frozen=True)
class Sc1Report:
    target: str
    level: int
    rows: tuple[tuple[int, float, float], ...]   # (direction, step, |Q_h - Q_{h/10}|)
    cauchy: bool
    linearity_defect: float

    @property
    def passed(self) -> bool:
        return self.cauchy and self.linearity_defect <= LINEARITY_TOL

    @property
    def verdict(self) -> str:
        return VERDICT_OK if self.passed else VERDICT_BAD


def _strictly_decreasing(values: Sequence[float], scale: float) -> bool:
    floor = FLOOR * max(1.0, scale)
    for a, b in zip(values, values[1:]):
        if b <= floor:
            continue
        if not b < a:
            return False
    return True


def check_sc0_limit(probe: ScaleFamilyProbe, limit: FieldTuple | None = None,
                    R_schedule: Sequence[float] = R_SCHEDULE) -> Sc0Table:
    """Distance to the ``a = 0`` value along the neck-length schedule, per level."""
    if not probe.has_limit:
        raise DomainError(f"{probe.name} has no value at a = 0")
    _, x0 = probe.base
    lim = probe(0.0, x0) if limit is None else limit
    scale = max(lim.norm(m) for m in range(len(probe.levels)))
    rows = []
    verdicts = []
    for m in range(len(probe.levels)):
        col = []
        for R in R_schedule:
            val = (probe(phi_inv(R), x0) - lim).norm(m)
            rows.append((m, float(R), val))
            col.append(val)
        verdicts.append(_strictly_decreasing(col, scale))
    return Sc0Table(probe.name, tuple(rows), tuple(verdicts))


def _quotients(probe: ScaleFamilyProbe, da: float, dx, steps: Sequence[float]) -> list[FieldTuple]:
    a0, x0 = probe.base
    f0 = probe(a0, x0)
    out = []
    for h in steps:
        f1 = probe(a0 + h * da, probe.perturb(x0, dx, h))
        out.append((f1 - f0).scaled(1.0 / h))
    return out


def check_sc1_quotient(probe: ScaleFamilyProbe, level: int,
                       steps: Sequence[float] = STEPS) -> Sc1Report:
    """Cauchy behaviour of difference quotients measured at ``level - 1``."""
    if level < 1:
        raise DomainError("quotient checks start at level 1")
    m = level - 1
    rows = []
    cauchy = True
    finals = []
    for d, (da, dx) in enumerate(probe.directions):
        qs = _quotients(probe, da, dx, steps)
        qnorm = max(q.norm(m) for q in qs)
        diffs = [(qs[i + 1] - qs[i]).norm(m) for i in range(len(qs) - 1)]
        for h, v in zip(steps[1:], diffs):
            rows.append((d, float(h), v))
        floor = 1e-9 * max(1.0, qnorm)
        for a, b in zip(diffs, diffs[1:]):
            if b > floor and not a >= CAUCHY_FACTOR * b:
                cauchy = False
        finals.append(qs[-1])
    defect = 0.0
    if len(probe.directions) >= 2:
        (da1, dx1), (da2, dx2) = probe.directions[:2]
        combo = ScaleFamilyProbe(probe.name, probe.family, probe.levels, probe.base,
                                 ((da1 + da2, _add_directions(probe, dx1, dx2)),), probe.perturb,
                                 probe.angle, probe.has_limit)
        q12 = _quotients(combo, da1 + da2, combo.directions[0][1], steps[-1:])[0]
        ref = FieldTuple(tuple(a + b for a, b in zip(finals[0].fields, finals[1].fields)),
                         finals[0].extras + finals[1].extras)
        den = max(ref.norm(m), FLOOR)
        defect = (q12 - ref).norm(m) / den
    return Sc1Report(probe.name, level, tuple(rows), cauchy, float(defect))


def _add_directions(probe: ScaleFamilyProbe, dx1, dx2):
    # directions live in the same space as the base point; perturb(dx1, dx2, 1) = dx1 + dx2
    return probe.perturb(dx1, dx2, 1.0)


# ---------------------------------------------------------------- default targets


@dataclass(frozen=True)
class ProbeGrid:
    Nt: int = 16
    ds: float = 0.25
    Smax: float = 30.0
    weights: WeightSequence = DEFAULT_WEIGHTS
    R0: float = 12.0
    angle: float = 0.25


def _decaying(rng: np.random.Generator, g: ProbeGrid, n: int, rate: float = 1.0) -> np.ndarray:
    s = np.arange(int(round(g.Smax / g.ds)) + 1) * g.ds
    t = np.arange(g.Nt) / g.Nt
    prof = np.zeros((g.Nt, n))
    for m in range(3):
        a, b = rng.normal(size=(2, n)) / (1 + m * m)
        prof += np.cos(2 * np.pi * m * t)[:, None] * a + np.sin(2 * np.pi * m * t)[:, None] * b
    return np.exp(-rate * s)[:, None, None] * prof[None]


def _half(rng, g: ProbeGrid, sign: int, n: int, c=None) -> HalfCylinderField:
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    return HalfCylinderField(sign, c, _decaying(rng, g, n), g.ds, weights=g.weights, check_tail=False)


def _perturb_half(x: HalfCylinderField, dx: HalfCylinderField, h: float) -> HalfCylinderField:
    return x.replace(c=x.c + h * dx.c, values=x.values + h * dx.values)


def _perturb_pair(x, dx, h):
    return tuple(_perturb_half(a, b, h) for a, b in zip(x, dx))


def _perturb_elem(x: OrbitElement, dx: OrbitElement, h: float) -> OrbitElement:
    return OrbitElement.boundary(x.r, x.q, _perturb_half(x.hx, dx.hx, h), _perturb_half(x.hy, dx.hy, h))


def _modulus_direction(R0: float) -> float:
    """Modulus step that moves the neck length by about one unit."""
    return 1.0 / abs(phi_prime(phi_inv(R0)))


def _param(modulus: float, angle: float) -> GluingParameter:
    if modulus == 0.0:
        return GluingParameter.zero()
    return GluingParameter(modulus, angle)


def _taper_probe(kind: str, g: ProbeGrid, rng: np.random.Generator, cutoff: CutoffModel) -> ScaleFamilyProbe:
    step = kind in ("gamma1", "gamma2", "M3", "M4")
    shape = step_shape(cutoff) if step else bump_shape(cutoff)
    sign = {"gamma1": 1, "gamma2": -1, "gamma3": -1, "gamma4": 1, "M3": 1, "M4": 1, "M5": -1}[kind]
    n = 2
    # inputs are decaying parts; for M3 the limit at a = 0 is f(-inf) [r]_0 = 0
    h0 = _half(rng, g, sign, n)
    d1 = _half(rng, g, sign, n)
    d2 = _half(rng, g, sign, n)
    da = _modulus_direction(g.R0)

    def fam(modulus, h):
        return FieldTuple((taper_map(kind, shape, _param(modulus, g.angle), h, out_smax=g.Smax),))

    return ScaleFamilyProbe(kind, fam, g.weights, (phi_inv(g.R0), h0),
                            ((da, d1), (0.0, d2)), _perturb_half, g.angle)


def _glue_probe(g: ProbeGrid, rng: np.random.Generator, cutoff: CutoffModel) -> ScaleFamilyProbe:
    n = 2
    c = rng.normal(size=n)
    pair = (_half(rng, g, 1, n, c), _half(rng, g, -1, n, c))
    dc = rng.normal(size=n)
    d1 = (_half(rng, g, 1, n, dc), _half(rng, g, -1, n, dc))
    d2 = (_half(rng, g, 1, n), _half(rng, g, -1, n))
    da = _modulus_direction(g.R0)

    def fam(modulus, x):
        dec = retract_pair(_param(modulus, g.angle), x[0], x[1], cutoff)
        return FieldTuple(dec.pair)

    return ScaleFamilyProbe("f_after_oplus", fam, g.weights, (phi_inv(g.R0), pair),
                            ((da, d1), (0.0, d2)), _perturb_pair, g.angle)


def _orbit_base(g: ProbeGrid, rng: np.random.Generator, amplitude: float = 0.05):
    orbit = PeriodicOrbit.circle(N=2, M=max(32, 2 * g.Nt), T=1.0, k=1, weights=g.weights)
    q = StandardMap(orbit, 0.3, 0.3, 0.125, 0.125)

    def h(sign):
        return HalfCylinderField(sign, np.zeros(3), amplitude * _decaying(rng, g, 3), g.ds,
                                 weights=g.weights, check_tail=False)

    return q, h


def _elem_tuple(e: OrbitElement) -> FieldTuple:
    q = e.q
    return FieldTuple((e.hx, e.hy), np.array([q.cx, q.cy, q.theta_x, q.theta_y]))


def _orbit_probe(target: str, g: ProbeGrid, rng: np.random.Generator,
                 cutoff: CutoffModel) -> ScaleFamilyProbe:
    q, h = _orbit_base(g, rng)
    base = OrbitElement.boundary(phi_inv(g.R0), q, h(1), h(-1))
    _, dh = _orbit_base(g, rng)
    d1 = OrbitElement.boundary(base.r, q, dh(1), dh(-1))
    d2 = OrbitElement.boundary(base.r, q, dh(1), dh(-1))
    da = _modulus_direction(g.R0)

    def with_r(x: OrbitElement, r: float) -> OrbitElement:
        return OrbitElement.boundary(r, x.q, x.hx, x.hy)

    if target == "K_after_baroplus":
        def fam(r, x):
            out = k_after_baroplus(with_r(x, r), cutoff=cutoff, max_modulus=1.0)
            return _angle_safe(_elem_tuple(out), q)
        has_limit = True
    elif target == "H_after_baroplus":
        def fam(r, x):
            out = h_after_baroplus(with_r(x, r), cutoff=cutoff, max_modulus=1.0)
            return _angle_safe(_elem_tuple(out), q)
        has_limit = False
    elif target == "D_map":
        def fam(r, x):
            return FieldTuple(compare_D(with_r(x, r), cutoff=cutoff, max_modulus=1.0))
        has_limit = True
    else:  # pragma: no cover - guarded by the caller
        raise DomainError(target)
    return ScaleFamilyProbe(target, fam, g.weights, (base.r, base), ((da, d1), (0.0, d2)),
                            _perturb_elem, 0.25, has_limit)


def _angle_safe(ft: FieldTuple, q: StandardMap) -> FieldTuple:
    """Express decorations relative to the base map, reduced to ``(-1/2, 1/2]``."""
    ex = np.array(ft.extras, dtype=float)
    ex[2] -= q.theta_x
    ex[3] -= q.theta_y
    ex[2:] -= np.round(ex[2:])
    return FieldTuple(ft.fields, ex)


TARGETS = ("gamma1", "gamma2", "gamma3", "gamma4", "M3", "M4", "M5",
           "f_after_oplus", "H_after_baroplus", "K_after_baroplus", "D_map")


def make_probe(target: str, grid: ProbeGrid | None = None, seed: int = 0,
               cutoff: CutoffModel = DEFAULT_CUTOFF) -> ScaleFamilyProbe:
    grid = ProbeGrid() if grid is None else grid
    rng = np.random.default_rng([seed, TARGETS.index(target) if target in TARGETS else 99])
    if target in ("gamma1", "gamma2", "gamma3", "gamma4", "M3", "M4", "M5"):
        return _taper_probe(target, grid, rng, cutoff)
    if target == "f_after_oplus":
        return _glue_probe(grid, rng, cutoff)
    if target in ("H_after_baroplus", "K_after_baroplus", "D_map"):
        return _orbit_probe(target, grid, rng, cutoff)
    raise DomainError(f"unknown probe target {target!r}; choose from {', '.join(TARGETS)}")


@dataclass(frozen=True)
class TargetResult:
    target: str
    sc0: Sc0Table | None
    sc1: tuple[Sc1Report, ...]

    @property
    def passed(self) -> bool:
        ok0 = self.sc0 is None or self.sc0.passed
        return ok0 and all(r.passed for r in self.sc1)


@dataclass(frozen=True)
class SuiteReport:
    results: tuple[TargetResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        out = []
        for res in self.results:
            if res.sc0 is None:
                out.append(f"{res.target} sc0 n/a")
            else:
                for level, R, v in res.sc0.rows:
                    out.append(f"{res.target} {level} {R:g} {v:.6e}")
            for rep in res.sc1:
                for d, h, v in rep.rows:
                    out.append(f"{res.target} {rep.level - 1} {h:g} {v:.6e}")
        return out

    def summary(self) -> dict:
        out = {}
        for res in self.results:
            entry = {
                "sc0": "n/a" if res.sc0 is None else ("pass" if res.sc0.passed else "fail"),
                "sc0_levels": None if res.sc0 is None else list(res.sc0.verdicts),
                "sc1": {str(r.level): {"cauchy": r.cauchy,
                                       "linearity_defect": round(r.linearity_defect, 12),
                                       "verdict": r.verdict} for r in res.sc1},
                "verdict": VERDICT_OK if res.passed else VERDICT_BAD,
            }
            out[res.target] = entry
        return {"targets": out, "passed": self.passed}

    def render(self) -> str:
        return "\n".join(self.lines() + ["SUMMARY " + json.dumps(self.summary(), sort_keys=True)]) + "\n"


def run_target(target: str, grid: ProbeGrid | None = None, seed: int = 0,
               cutoff: CutoffModel = DEFAULT_CUTOFF) -> TargetResult:
    probe = make_probe(target, grid, seed, cutoff)
    sc0 = check_sc0_limit(probe) if probe.has_limit else None
    if sc0 is not None:
        _check_level_ordering(sc0)
    sc1 = tuple(check_sc1_quotient(probe, m) for m in range(1, len(probe.levels)))
    return TargetResult(target, sc0, sc1)


def _check_level_ordering(sc0: Sc0Table) -> None:
    """A decay verdict at one level must persist at every lower level."""
    v = sc0.verdicts
    for m in range(1, len(v)):
        if v[m] and not all(v[:m]):
            raise ArithmeticError(f"{sc0.target}: level {m} decays but a lower level does not")


def run_suite(targets: Iterable[str] = TARGETS, grid: ProbeGrid | None = None, seed: int = 0,
              cutoff: CutoffModel = DEFAULT_CUTOFF) -> SuiteReport:
    targets = list(targets)
    for t in targets:
        if t not in TARGETS:
            raise DomainError(f"unknown probe target {t!r}; choose from {', '.join(TARGETS)}")
    results = parallel_map(lambda t: run_target(t, grid, seed, cutoff), targets)
    return SuiteReport(tuple(results))

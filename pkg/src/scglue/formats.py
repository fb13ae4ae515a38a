"""Text formats for fields, orbits, orbit elements, symplectic paths and loops.

All floats are written with ``repr`` (shortest round-trip decimal), so a
write/read cycle reproduces every sample bit for bit.

* ``SCFIELD kind=half|finite|anti sign=+|- N= Nt= Ns= Smax=|R= theta= c=`` then
  ``Ns * Nt`` rows ``s t v1 .. vN`` (s outer).  Half fields store the decaying
  part; finite and anti-glued fields store totals.  Anti-glued headers carry
  ``R=`` and their ``c`` is the asymptote at ``s -> -infinity``.  Writers add
  ``ds=`` so the spacing survives exactly; an optional ``weights=`` key lists
  the level weights.
* ``SCORBIT N= Nt= T= k=`` then ``Nt`` rows ``t g1 .. gN``.
* ``SCORBELEM r= kind=boundary|interior`` (boundary adds ``cx= cy= theta_x= theta_y=``)
  followed by an SCORBIT block and the SCFIELD blocks (``h_x``, ``h_y`` or ``w``).
* ``SCPATH n= M=`` then ``M`` blocks of ``2n x 2n`` row-major floats.
* ``SCLOOP n= Nt=`` then ``Nt`` symmetric ``2n x 2n`` blocks sampled at ``t = j / Nt``.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterator, TextIO

import numpy as np

from .errors import ParseError
from .fields import (
    AntiGluedField,
    FiniteCylinderField,
    GluingParameter,
    HalfCylinderField,
    WeightSequence,
    DEFAULT_WEIGHTS,
)
from .operators import LoopOperator, SymplecticPath
from .orbit import OrbitElement, PeriodicOrbit, StandardMap


def _f(x: float) -> str:
    return repr(float(x))


class _Lines:
    """Non-blank lines with 1-based numbers; ``#`` starts a comment."""

    def __init__(self, text: str):
        self._items = []
        for i, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                self._items.append((i, line))
        self._pos = 0

    def peek(self) -> tuple[int, str] | None:
        return self._items[self._pos] if self._pos < len(self._items) else None

    def next(self, what: str) -> tuple[int, str]:
        item = self.peek()
        if item is None:
            last = self._items[-1][0] if self._items else 0
            raise ParseError(f"unexpected end of input, expected {what}", last + 1)
        self._pos += 1
        return item

    def tokens(self) -> Iterator[tuple[int, str]]:
        while self.peek() is not None:
            ln, line = self.next("tokens")
            for tok in line.split():
                yield ln, tok

    @property
    def done(self) -> bool:
        return self.peek() is None


def _header(lines: _Lines, tag: str) -> tuple[int, dict[str, str]]:
    ln, line = lines.next(f"{tag} header")
    parts = line.split()
    if parts[0] != tag:
        raise ParseError(f"expected '{tag}', found '{parts[0]}'", ln)
    kv = {}
    for p in parts[1:]:
        if "=" not in p:
            raise ParseError(f"malformed header entry '{p}'", ln)
        k, v = p.split("=", 1)
        kv[k] = v
    return ln, kv


def _get(kv: dict, key: str, ln: int, conv=str):
    if key not in kv:
        raise ParseError(f"missing header key '{key}'", ln)
    try:
        return conv(kv[key])
    except ValueError:
        raise ParseError(f"bad value for '{key}': {kv[key]!r}", ln) from None


def _floats(text: str, ln: int) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")]) if text else np.zeros(0)
    except ValueError:
        raise ParseError(f"bad float list {text!r}", ln) from None


def _row(lines: _Lines, width: int, what: str) -> tuple[int, np.ndarray]:
    ln, line = lines.next(what)
    parts = line.split()
    if len(parts) != width:
        raise ParseError(f"expected {width} numbers in {what}, found {len(parts)}", ln)
    try:
        return ln, np.array([float(x) for x in parts])
    except ValueError:
        raise ParseError(f"non-numeric entry in {what}", ln) from None


# ---------------------------------------------------------------- fields


def write_field(fld, out: TextIO) -> None:
    if isinstance(fld, HalfCylinderField):
        head = (f"SCFIELD kind=half sign={'+' if fld.sign > 0 else '-'} N={fld.N} Nt={fld.Nt} "
                f"Ns={fld.Ns} Smax={_f(fld.Smax)} theta=0.0 c={','.join(_f(x) for x in fld.c)}")
        s_vals, vals = fld.s, fld.values
    elif isinstance(fld, FiniteCylinderField):
        head = (f"SCFIELD kind=finite sign=+ N={fld.N} Nt={fld.Nt} Ns={fld.Ns} R={_f(fld.R)} "
                f"theta={_f(fld.param.angle)} c={','.join('0.0' for _ in range(fld.N))}")
        s_vals, vals = fld.s, fld.values
    elif isinstance(fld, AntiGluedField):
        head = (f"SCFIELD kind=anti sign=+ N={fld.N} Nt={fld.Nt} Ns={fld.Ns} R={_f(fld.param.R)} "
                f"theta={_f(fld.param.angle)} c={','.join(_f(x) for x in fld.c)}")
        s_vals, vals = fld.s, fld.values
    else:
        raise TypeError(f"cannot write {type(fld).__name__}")
    head += f" ds={_f(fld.ds)}"
    weights = getattr(fld, "weights", None)
    if weights is not None and weights != DEFAULT_WEIGHTS:
        head += " weights=" + ",".join(_f(d) for d in weights.deltas)
    out.write(head + "\n")
    nt = vals.shape[1]
    for i, s in enumerate(s_vals):
        for j in range(nt):
            out.write(" ".join([_f(s), _f(j / nt)] + [_f(v) for v in vals[i, j]]) + "\n")


def _read_field(lines: _Lines):
    ln, kv = _header(lines, "SCFIELD")
    kind = _get(kv, "kind", ln)
    if kind not in ("half", "finite", "anti"):
        raise ParseError(f"unknown field kind '{kind}'", ln)
    sign_txt = _get(kv, "sign", ln)
    if sign_txt not in ("+", "-"):
        raise ParseError(f"sign must be + or -, got '{sign_txt}'", ln)
    sign = 1 if sign_txt == "+" else -1
    N = _get(kv, "N", ln, int)
    Nt = _get(kv, "Nt", ln, int)
    Ns = _get(kv, "Ns", ln, int)
    if N < 1 or Nt < 1 or Ns < 2:
        raise ParseError("N, Nt must be positive and Ns at least 2", ln)
    theta = float(kv.get("theta", "0"))
    c = _floats(_get(kv, "c", ln), ln)
    if c.size != N:
        raise ParseError(f"c has {c.size} entries, expected N={N}", ln)
    weights = DEFAULT_WEIGHTS
    if "weights" in kv:
        try:
            weights = WeightSequence(tuple(_floats(kv["weights"], ln)))
        except ValueError as exc:
            raise ParseError(str(exc), ln) from None
    vals = np.empty((Ns, Nt, N))
    s_col = np.empty(Ns)
    for i in range(Ns):
        for j in range(Nt):
            rl, row = _row(lines, N + 2, "field row")
            if j == 0:
                s_col[i] = row[0]
            elif row[0] != s_col[i]:
                raise ParseError(f"s changes inside a circle block ({row[0]!r} != {s_col[i]!r})", rl)
            if abs(row[1] - j / Nt) > 1e-12:
                raise ParseError(f"t = {row[1]!r} does not match the grid value {j / Nt!r}", rl)
            vals[i, j] = row[2:]
    try:
        if kind == "half":
            smax = _get(kv, "Smax", ln, float)
            ds = float(kv["ds"]) if "ds" in kv else smax / (Ns - 1)
            return HalfCylinderField(sign, c, vals, ds, weights=weights, check_tail=False)
        R = _get(kv, "R", ln, float)
        param = GluingParameter.from_length(R, theta)
        ds = float(kv["ds"]) if "ds" in kv else (s_col[-1] - s_col[0]) / (Ns - 1)
        if kind == "finite":
            return FiniteCylinderField(param, vals, ds)
        return AntiGluedField(param, c, vals, s_col[0], ds)
    except ValueError as exc:
        raise ParseError(str(exc), ln) from None


def read_field(source):
    lines = _Lines(_text(source))
    fld = _read_field(lines)
    if not lines.done:
        raise ParseError("trailing content after the field", lines.peek()[0])
    return fld


def read_fields(source) -> list:
    lines = _Lines(_text(source))
    out = []
    while not lines.done:
        out.append(_read_field(lines))
    return out


# ---------------------------------------------------------------- orbits


def write_orbit(orbit: PeriodicOrbit, out: TextIO) -> None:
    M = orbit.gamma.shape[0]
    out.write(f"SCORBIT N={orbit.N} Nt={M} T={_f(orbit.T)} k={orbit.k}\n")
    for j in range(M):
        out.write(" ".join([_f(j / M)] + [_f(v) for v in orbit.gamma[j]]) + "\n")


def _read_orbit(lines: _Lines, weights: WeightSequence = DEFAULT_WEIGHTS) -> PeriodicOrbit:
    ln, kv = _header(lines, "SCORBIT")
    N = _get(kv, "N", ln, int)
    M = _get(kv, "Nt", ln, int)
    T = _get(kv, "T", ln, float)
    k = _get(kv, "k", ln, int)
    g = np.empty((M, N))
    for j in range(M):
        rl, row = _row(lines, N + 1, "orbit row")
        if abs(row[0] - j / M) > 1e-12:
            raise ParseError(f"t = {row[0]!r} does not match the grid value {j / M!r}", rl)
        g[j] = row[1:]
    try:
        return PeriodicOrbit(g, T, k, weights)
    except ValueError as exc:
        raise ParseError(str(exc), ln) from None


def read_orbit(source) -> PeriodicOrbit:
    return _read_orbit(_Lines(_text(source)))


def write_element(elem: OrbitElement, out: TextIO, orbit: PeriodicOrbit | None = None) -> None:
    if elem.kind == "boundary":
        q = elem.q
        out.write(f"SCORBELEM r={_f(elem.r)} kind=boundary cx={_f(q.cx)} cy={_f(q.cy)} "
                  f"theta_x={_f(q.theta_x)} theta_y={_f(q.theta_y)}\n")
        write_orbit(q.orbit, out)
        write_field(elem.hx, out)
        write_field(elem.hy, out)
    else:
        out.write(f"SCORBELEM r={_f(elem.r)} kind=interior\n")
        if orbit is not None:
            write_orbit(orbit, out)
        write_field(elem.w, out)


def read_element(source) -> tuple[OrbitElement, PeriodicOrbit | None]:
    """An orbit element and the orbit stored with it (``None`` if absent)."""
    lines = _Lines(_text(source))
    ln, kv = _header(lines, "SCORBELEM")
    r = _get(kv, "r", ln, float)
    kind = _get(kv, "kind", ln)
    orbit = None
    nxt = lines.peek()
    if nxt is not None and nxt[1].startswith("SCORBIT"):
        orbit = _read_orbit(lines)
    try:
        if kind == "boundary":
            if orbit is None:
                raise ParseError("boundary elements need an SCORBIT block", ln)
            q = StandardMap(orbit, _get(kv, "cx", ln, float), _get(kv, "cy", ln, float),
                            _get(kv, "theta_x", ln, float), _get(kv, "theta_y", ln, float))
            hx = _read_field(lines)
            hy = _read_field(lines)
            elem = OrbitElement.boundary(r, q, hx, hy)
        elif kind == "interior":
            elem = OrbitElement.interior(r, _read_field(lines))
        else:
            raise ParseError(f"unknown element kind '{kind}'", ln)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), ln) from None
    if not lines.done:
        raise ParseError("trailing content after the element", lines.peek()[0])
    return elem, orbit


# ---------------------------------------------------------------- paths and loops


def _matrix_blocks(lines: _Lines, count: int, dim: int, ln: int) -> np.ndarray:
    need = count * dim * dim
    vals = []
    last = ln
    for tl, tok in lines.tokens():
        last = tl
        try:
            vals.append(float(tok))
        except ValueError:
            raise ParseError(f"non-numeric token {tok!r}", tl) from None
        if len(vals) > need:
            raise ParseError(f"more than {need} numbers after the header", tl)
    if len(vals) != need:
        raise ParseError(f"expected {need} numbers, found {len(vals)}", last)
    return np.array(vals).reshape(count, dim, dim)


def write_path(path: SymplecticPath, out: TextIO) -> None:
    out.write(f"SCPATH n={path.n} M={path.M}\n")
    for P in path.samples:
        for row in P:
            out.write(" ".join(_f(v) for v in row) + "\n")


def read_path(source) -> SymplecticPath:
    lines = _Lines(_text(source))
    ln, kv = _header(lines, "SCPATH")
    n = _get(kv, "n", ln, int)
    M = _get(kv, "M", ln, int)
    if n < 1 or M < 2:
        raise ParseError("need n >= 1 and M >= 2", ln)
    blocks = _matrix_blocks(lines, M, 2 * n, ln)
    try:
        return SymplecticPath(blocks)
    except ValueError as exc:
        raise ParseError(str(exc), ln) from None


def write_loop(L: LoopOperator, out: TextIO) -> None:
    out.write(f"SCLOOP n={L.n} Nt={L.A.shape[0]}\n")
    for A in L.A:
        for row in A:
            out.write(" ".join(_f(v) for v in row) + "\n")


def read_loop(source) -> LoopOperator:
    lines = _Lines(_text(source))
    ln, kv = _header(lines, "SCLOOP")
    n = _get(kv, "n", ln, int)
    M = _get(kv, "Nt", ln, int)
    if n < 1 or M < 2:
        raise ParseError("need n >= 1 and Nt >= 2", ln)
    blocks = _matrix_blocks(lines, M, 2 * n, ln)
    try:
        return LoopOperator(blocks, n)
    except ValueError as exc:
        raise ParseError(str(exc), ln) from None


# ---------------------------------------------------------------- CSV tables


SPECTRUM_HEADER = "param,eigenvalue,multiplicity"
INDEX_HEADER = "delta,kernel,cokernel,index"


def spectrum_csv(rows) -> str:
    """``rows`` of ``(param, eigenvalue, multiplicity)``."""
    buf = io.StringIO()
    buf.write(SPECTRUM_HEADER + "\n")
    for p, v, m in rows:
        buf.write(f"{_f(p)},{_f(v)},{int(m)}\n")
    return buf.getvalue()


def index_csv(rows) -> str:
    """``rows`` of ``(delta, kernel, cokernel, index)``."""
    buf = io.StringIO()
    buf.write(INDEX_HEADER + "\n")
    for d, k, c, i in rows:
        buf.write(f"{_f(d)},{int(k)},{int(c)},{int(i)}\n")
    return buf.getvalue()


def _text(source) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if hasattr(source, "read"):
        return source.read()
    return str(source)


def dumps(writer, obj, **kw) -> str:
    buf = io.StringIO()
    writer(obj, buf, **kw)
    return buf.getvalue()

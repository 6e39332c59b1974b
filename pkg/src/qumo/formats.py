"""Native ``.qumo`` text format and the G-Set edge-list format.

Native layout::

    qumo 1
    [meta]
    n 3
    domain zero_one
    kinds b b c
    name "example"
    [Q]
    0 1 -2.5
    [b]
    2 1
    [const]
    0.5
    [constraints]
    -inf 3 2 0 1 1 1

Extra meta keys hold JSON values.  ``[Q]`` lists the upper triangle
(diagonal included) as 0-based ``i j value`` triplets; each constraint line
is ``lo hi count`` followed by ``count`` index/coefficient pairs.  Lines
starting with ``#`` are comments.  Numbers are written with 17 significant
digits so parsing reproduces every value bit for bit.
"""

import json
import math

import numpy as np

from .errors import ParseError
from .model import Domain, Kind, QumoProblem
from .transforms import ConstrainedProblem, LinearConstraint, maxcut_to_ising

VERSION = 1
_SECTIONS = ("meta", "Q", "b", "const", "constraints")


def fmt(v):
    """17-significant-digit decimal; ``inf``/``-inf`` spelled out."""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _jsonable(v):
    if isinstance(v, (bool, int, float, str)) or v is None:
        return True
    if isinstance(v, (list, tuple)):
        return all(_jsonable(x) for x in v)
    if isinstance(v, dict):
        return all(isinstance(k, str) and _jsonable(x) for k, x in v.items())
    return False


def dumps_native(obj):
    if isinstance(obj, ConstrainedProblem):
        p, cons = obj.base, obj.constraints
    else:
        p, cons = obj, None
    if p.n == 0:
        raise ValueError("cannot write an empty problem")
    lines = [f"qumo {VERSION}", "[meta]", f"n {p.n}", f"domain {p.domain.value}",
             "kinds " + " ".join("b" if k is Kind.BINARY else "c" for k in p.kinds)]
    for key in sorted(p.meta):
        v = p.meta[key]
        if isinstance(v, np.ndarray):
            v = v.tolist()
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        if key in ("n", "domain", "kinds") or not _jsonable(v) or " " in key:
            continue
        lines.append(f"{key} {json.dumps(v, sort_keys=True)}")
    lines.append("[Q]")
    Q = p.dense_Q()
    iu, ju = np.nonzero(np.triu(Q))
    for i, j in zip(iu, ju):
        lines.append(f"{i} {j} {fmt(Q[i, j])}")
    lines.append("[b]")
    for i in np.flatnonzero(p.b):
        lines.append(f"{i} {fmt(p.b[i])}")
    lines.append("[const]")
    lines.append(fmt(p.c0))
    if cons is not None:
        lines.append("[constraints]")
        for c in cons:
            items = sorted(c.coeffs.items())
            body = " ".join(f"{i} {fmt(a)}" for i, a in items)
            lines.append(f"{fmt(c.lo)} {fmt(c.hi)} {len(items)} {body}".rstrip())
    return "\n".join(lines) + "\n"


def write_native(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_native(obj))


def _float(tok, ln):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", ln) from None


def _int(tok, ln):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"not an integer: {tok!r}", ln) from None


def loads_native(text):
    """Parse native text into a QumoProblem or ConstrainedProblem."""
    rows = []
    for ln, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s and not s.startswith("#"):
            rows.append((ln, s))
    if not rows:
        raise ParseError("empty file", 1)
    ln, head = rows[0]
    parts = head.split()
    if len(parts) != 2 or parts[0] != "qumo":
        raise ParseError("missing 'qumo <version>' header", ln)
    if parts[1] != str(VERSION):
        raise ParseError(f"unsupported version {parts[1]} (expected {VERSION})", ln)
    section = None
    meta, n, domain, kinds = {}, None, None, None
    entries, bvals, const, cons = [], [], None, None
    seen = set()
    for ln, s in rows[1:]:
        if s.startswith("["):
            if not s.endswith("]") or s[1:-1] not in _SECTIONS:
                raise ParseError(f"unknown section {s}", ln)
            section = s[1:-1]
            if section in seen:
                raise ParseError(f"duplicate section {s}", ln)
            seen.add(section)
            if section == "constraints":
                cons = []
            if section != "meta" and n is None:
                raise ParseError("[meta] with n must come first", ln)
            continue
        if section is None:
            raise ParseError("data before the first section", ln)
        tok = s.split()
        if section == "meta":
            key, _, rest = s.partition(" ")
            rest = rest.strip()
            if key == "n":
                n = _int(rest, ln)
                if n < 1:
                    raise ParseError("n must be >= 1", ln)
            elif key == "domain":
                try:
                    domain = Domain(rest)
                except ValueError:
                    raise ParseError(f"unknown domain {rest!r}", ln) from None
            elif key == "kinds":
                ks = rest.split()
                if any(k not in ("b", "c") for k in ks):
                    raise ParseError("kinds must be 'b' or 'c'", ln)
                kinds = tuple(Kind.BINARY if k == "b" else Kind.CONTINUOUS for k in ks)
            else:
                try:
                    meta[key] = json.loads(rest)
                except json.JSONDecodeError:
                    raise ParseError(f"bad meta value for {key!r}", ln) from None
        elif section == "Q":
            if len(tok) != 3:
                raise ParseError("Q entries need 'i j value'", ln)
            i, j, v = _int(tok[0], ln), _int(tok[1], ln), _float(tok[2], ln)
            if not (0 <= i < n and 0 <= j < n):
                raise ParseError(f"index ({i}, {j}) out of range", ln)
            if i > j:
                raise ParseError("Q entries must be upper triangular (i <= j)", ln)
            entries.append((i, j, v, ln))
        elif section == "b":
            if len(tok) != 2:
                raise ParseError("b entries need 'i value'", ln)
            i, v = _int(tok[0], ln), _float(tok[1], ln)
            if not 0 <= i < n:
                raise ParseError(f"index {i} out of range", ln)
            bvals.append((i, v))
        elif section == "const":
            if const is not None or len(tok) != 1:
                raise ParseError("[const] holds exactly one value", ln)
            const = _float(tok[0], ln)
        else:
            if len(tok) < 3:
                raise ParseError("constraint needs 'lo hi count ...'", ln)
            lo, hi, k = _float(tok[0], ln), _float(tok[1], ln), _int(tok[2], ln)
            if len(tok) != 3 + 2 * k:
                raise ParseError(f"constraint declares {k} terms but has {(len(tok) - 3) / 2}", ln)
            coeffs = {}
            for t in range(k):
                i = _int(tok[3 + 2 * t], ln)
                if not 0 <= i < n:
                    raise ParseError(f"index {i} out of range", ln)
                coeffs[i] = _float(tok[4 + 2 * t], ln)
            try:
                cons.append(LinearConstraint(coeffs, lo, hi))
            except ValueError as exc:
                raise ParseError(str(exc), ln) from None
    if n is None or domain is None or kinds is None:
        raise ParseError("[meta] must define n, domain and kinds", rows[-1][0])
    if len(kinds) != n:
        raise ParseError(f"kinds lists {len(kinds)} variables, n is {n}", rows[-1][0])
    Q = np.zeros((n, n))
    used = set()
    for i, j, v, ln in entries:
        if (i, j) in used:
            raise ParseError(f"duplicate Q entry ({i}, {j})", ln)
        used.add((i, j))
        Q[i, j] = v
        Q[j, i] = v
    b = np.zeros(n)
    for i, v in bvals:
        b[i] = v
    p = QumoProblem(Q, b, 0.0 if const is None else const, kinds, domain, meta)
    if cons is not None:
        return ConstrainedProblem(p, cons)
    return p


def parse_native(path):
    with open(path, encoding="utf-8") as f:
        return loads_native(f.read())


def loads_gset(text):
    """G-Set edge list (``n m`` header, then ``i j w`` 1-based) as a max-cut Ising problem.

    Duplicate edges are summed.
    """
    lines = [(ln, s.strip()) for ln, s in enumerate(text.splitlines(), 1) if s.strip()]
    if not lines:
        raise ParseError("empty file", 1)
    ln, head = lines[0]
    tok = head.split()
    if len(tok) != 2:
        raise ParseError("header must be 'n m'", ln)
    n, m = _int(tok[0], ln), _int(tok[1], ln)
    if n < 1 or m < 0:
        raise ParseError("invalid header counts", ln)
    edges = []
    for ln, s in lines[1:]:
        tok = s.split()
        if len(tok) not in (2, 3):
            raise ParseError("edge lines need 'i j w'", ln)
        i, j = _int(tok[0], ln), _int(tok[1], ln)
        w = _float(tok[2], ln) if len(tok) == 3 else 1.0
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"vertex out of range 1..{n}", ln)
        if i == j:
            raise ParseError("self-loop", ln)
        edges.append((i - 1, j - 1, w))
    if len(edges) != m:
        raise ParseError(f"header declares {m} edges, found {len(edges)}", lines[-1][0])
    p = maxcut_to_ising(edges, n)
    meta = dict(p.meta)
    meta.update({"format": "gset", "n": n, "declared_edges": m})
    return QumoProblem(p.Q, p.b, p.c0, p.kinds, p.domain, meta)


def parse_gset(path):
    with open(path, encoding="utf-8") as f:
        return loads_gset(f.read())


def read_problem(path, fmt_name=None):
    """Dispatch on ``fmt_name`` or the file extension."""
    name = fmt_name or ("gset" if not str(path).endswith(".qumo") else "native")
    if name == "gset":
        return parse_gset(path)
    if name == "native":
        return parse_native(path)
    raise ValueError(f"unknown format {name!r}")

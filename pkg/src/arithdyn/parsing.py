"""Text syntax for numbers, points, polynomials and map specifications.

Expressions use + - * / ^ (or **), parentheses, rational literals and implicit
multiplication ("2x^2", "3(x+1)", "xy" when x and y are both variables).
Errors carry the column where parsing failed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from flint import fmpq_mpoly_ctx, fmpq_poly

from ._poly import fq, fr, mpoly_terms
from .errors import ParseError

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^(),\[\]]))")


@dataclass
class _Tok:
    kind: str      # "num", "name", "op", "end"
    text: str
    pos: int


def _tokenize(text: str, variables, field=None) -> list[_Tok]:
    out = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos, field)
        start = m.start(m.lastindex)
        num, name, op = m.groups()
        if num is not None:
            out.append(_Tok("num", num, start))
        elif name is not None:
            if name in variables:
                out.append(_Tok("name", name, start))
            elif all(ch in variables for ch in name):
                # "xy" -> x * y when every letter is a variable
                for k, ch in enumerate(name):
                    out.append(_Tok("name", ch, start + k))
            else:
                raise ParseError(f"unknown symbol {name!r}", text, start, field)
        else:
            out.append(_Tok("op", "^" if op == "**" else op, start))
        pos = m.end()
    out.append(_Tok("end", "", n))
    return out


class _Parser:
    """Recursive descent over rational functions in the given variables."""

    def __init__(self, text, variables, field=None):
        self.text = text
        self.field = field
        self.vars = tuple(variables)
        self.ctx = fmpq_mpoly_ctx.get(self.vars or ("_",), "lex")
        self.toks = _tokenize(text, set(self.vars), field)
        self.i = 0

    def error(self, msg, tok=None):
        tok = tok or self.toks[self.i]
        raise ParseError(msg, self.text, tok.pos, self.field)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self, text=None) -> _Tok:
        t = self.tok
        if text is not None and t.text != text:
            self.error(f"expected {text!r}")
        self.i += 1
        return t

    def parse(self):
        if self.tok.kind == "end":
            self.error("empty expression")
        val = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return val

    # values are (numerator, denominator) pairs of flint polynomials
    def const(self, c):
        return (self.ctx.from_dict({(0,) * self.ctx.nvars(): fq(c)} if c else {}),
                self.ctx.from_dict({(0,) * self.ctx.nvars(): fq(1)}))

    def expr(self):
        sign = 1
        while self.tok.text in "+-" and self.tok.kind == "op":
            if self.take().text == "-":
                sign = -sign
        val = self.term()
        if sign < 0:
            val = (-val[0], val[1])
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            n = val[0] * rhs[1] + (rhs[0] * val[1] if op == "+" else -rhs[0] * val[1])
            val = (n, val[1] * rhs[1])
        return val

    def term(self):
        val = self.power()
        while True:
            t = self.tok
            if t.kind == "op" and t.text in ("*", "/"):
                self.take()
                if self.tok.kind == "op" and self.tok.text in ("+", "-"):
                    sign_tok = self.take()
                    rhs = self.power()
                    if sign_tok.text == "-":
                        rhs = (-rhs[0], rhs[1])
                else:
                    rhs = self.power()
                if t.text == "*":
                    val = (val[0] * rhs[0], val[1] * rhs[1])
                else:
                    if rhs[0] == 0:
                        self.error("division by zero", t)
                    val = (val[0] * rhs[1], val[1] * rhs[0])
            elif t.kind in ("num", "name") or (t.kind == "op" and t.text == "("):
                rhs = self.power()                       # implicit multiplication
                val = (val[0] * rhs[0], val[1] * rhs[1])
            else:
                return val

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            neg = False
            if self.tok.kind == "op" and self.tok.text == "-":
                self.take()
                neg = True
            t = self.tok
            if t.kind != "num" or "." in t.text:
                self.error("exponent must be an integer literal")
            self.take()
            e = int(t.text)
            if e > 1 << 16:
                self.error("exponent too large", t)
            if neg:
                if base[0] == 0:
                    self.error("zero to a negative power", t)
                base = (base[1], base[0])
            base = (base[0] ** e, base[1] ** e)
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            return self.const(Fraction(t.text))
        if t.kind == "name":
            self.take()
            k = self.vars.index(t.text)
            one = self.const(1)[1]
            return (self.ctx.gens()[k], one)
        if t.kind == "op" and t.text == "(":
            self.take()
            val = self.expr()
            if self.tok.text != ")":
                self.error("missing ')'")
            self.take()
            return val
        if t.kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {t.text!r}")


def _parse_fraction_pair(text, variables, field=None):
    p = _Parser(text, variables, field)
    num, den = p.parse()
    g = num.gcd(den)
    if g != 0 and not g.is_one():
        num, den = num / g, den / g
    return p.ctx, num, den


def parse_rational(text: str, field=None) -> Fraction:
    ctx, num, den = _parse_fraction_pair(text.strip(), (), field)
    n, d = mpoly_terms(num), mpoly_terms(den)
    if any(any(k) for k in list(n) + list(d)):
        raise ParseError("expected a number", text, 0, field)
    return n.get((0,), Fraction(0)) / d[(0,)]


def parse_mpoly(text: str, variables=("x", "y"), field=None) -> dict:
    """Polynomial as {exponent tuple: Fraction}; division only by constants."""
    ctx, num, den = _parse_fraction_pair(text, variables, field)
    dterms = mpoly_terms(den)
    if len(dterms) != 1 or any(next(iter(dterms))):
        raise ParseError("division by a non-constant", text, _first_slash(text), field)
    c = next(iter(dterms.values()))
    return {k: v / c for k, v in mpoly_terms(num).items()}


def _first_slash(text):
    i = text.find("/")
    return i if i >= 0 else 0


def parse_upoly(text: str, var: str | None = None, field=None) -> fmpq_poly:
    """One-variable polynomial; the variable defaults to whichever letter appears."""
    var = var or _guess_var(text)
    terms = parse_mpoly(text, (var,), field)
    deg = max((k[0] for k in terms), default=0)
    return fmpq_poly([fq(terms.get((i,), 0)) for i in range(deg + 1)])


def parse_rational_function(text: str, var: str = "x", field=None):
    """Numerator and denominator coefficient lists (lowest degree first)."""
    ctx, num, den = _parse_fraction_pair(text, (var,), field)
    out = []
    for p in (num, den):
        t = mpoly_terms(p)
        deg = max((k[0] for k in t), default=0)
        out.append([t.get((i,), Fraction(0)) for i in range(deg + 1)])
    return out[0], out[1]


def _guess_var(text: str) -> str:
    names = set(re.findall(r"[A-Za-z_][A-Za-z_0-9]*", text))
    if len(names) == 1:
        name = names.pop()
        if len(set(name)) == 1:
            return name[0]
    return "x"


# points ----------------------------------------------------------------


def parse_point(text: str, field=None) -> tuple:
    """A rational, "inf", or a parenthesised tuple of rationals."""
    from .p1dyn import INF

    s = text.strip()
    if s.lower() in ("inf", "infinity", "oo"):
        return (INF,)
    if not s.startswith("("):
        return (parse_rational(s, field),)
    if not s.endswith(")"):
        raise ParseError("missing ')'", text, len(text), field)
    inner_start = text.index("(") + 1
    inner = text[inner_start:text.rindex(")")]
    parts, start = [], 0
    for k, ch in enumerate(inner + ","):
        if ch == ",":
            piece = inner[start:k]
            if not piece.strip():
                raise ParseError("empty coordinate", text, inner_start + k, field)
            if piece.strip().lower() in ("inf", "infinity", "oo"):
                parts.append(INF)
            else:
                try:
                    parts.append(parse_rational(piece, field))
                except ParseError as exc:
                    lead = len(piece) - len(piece.lstrip())
                    raise ParseError(exc.message, text, inner_start + start + lead + (exc.position or 0),
                                     field) from None
            start = k + 1
    return tuple(parts)


def format_rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_point(pt) -> str:
    items = [str(c) if not isinstance(c, (int, Fraction)) else format_rational(c) for c in pt]
    return items[0] if len(items) == 1 else "(" + ", ".join(items) + ")"


# formatting ------------------------------------------------------------


def _format_terms(terms, render) -> str:
    """terms: list of (coefficient, monomial string) from highest to lowest."""
    out = ""
    for c, mono in terms:
        c = Fraction(c)
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if mono:
            body = mono if a == 1 else f"{format_rational(a)}*{mono}"
        else:
            body = format_rational(a)
        if not out:
            out = body if sign == "+" else "-" + body
        else:
            out += f" {sign} {body}"
    return out or "0"


def format_upoly(coeffs, var: str = "x") -> str:
    terms = []
    for k in range(len(coeffs) - 1, -1, -1):
        mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
        terms.append((coeffs[k], mono))
    return _format_terms(terms, None)


def format_mpoly(poly, variables=("x", "y")) -> str:
    terms = mpoly_terms(poly) if not isinstance(poly, dict) else poly
    rows = []
    for exps in sorted(terms, key=lambda e: (-sum(e), [-v for v in e])):
        parts = []
        for v, e in zip(variables, exps):
            if e == 1:
                parts.append(v)
            elif e > 1:
                parts.append(f"{v}^{e}")
        rows.append((terms[exps], "*".join(parts)))
    return _format_terms(rows, None)


# map specifications ----------------------------------------------------


def _split_top(text: str, sep: str) -> list[tuple[str, int]]:
    """Split on sep outside brackets; returns (piece, offset) pairs."""
    out, depth, start = [], 0, 0
    for k, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == sep and depth == 0:
            out.append((text[start:k], start))
            start = k + 1
    out.append((text[start:], start))
    return out


def _keyed(piece: str, offset: int, text: str, field) -> tuple[str, str, int]:
    if "=" not in piece:
        raise ParseError("expected key = value", text, offset, field)
    k = piece.index("=")
    key = piece[:k].strip().lower()
    return key, piece[k + 1:], offset + k + 1


def _sub(parser_fn, value: str, offset: int, text: str, field):
    try:
        return parser_fn(value)
    except ParseError as exc:
        pos = offset + (exc.position or 0)
        raise ParseError(exc.message, text, pos, field) from None


def parse_map(text: str, field: str | None = None):
    """Parse "kind: body" into a map object.

    kinds: p1 (rational map), poly (polynomial on the line), henon, skew,
    poly2 (pair of polynomials in x, y) and split (components separated by ';',
    optional "perm = [..]").
    """
    if ":" not in text:
        raise ParseError("expected 'kind: ...'", text, 0, field)
    colon = text.index(":")
    kind = text[:colon].strip().lower()
    body = text[colon + 1:]
    base = colon + 1
    if kind in ("p1", "poly", "a1"):
        from .p1dyn import RationalMapP1

        num, den = _sub(lambda s: parse_rational_function(s, "x"), body, base, text, field)
        if kind != "p1" and len(den) > 1:
            raise ParseError("expected a polynomial", text, base, field)
        try:
            return RationalMapP1(num, den)
        except ValueError as exc:
            raise ParseError(str(exc), text, base, field) from None
    if kind == "henon":
        from .henon import HenonMap

        factors = []
        for piece, off in _split_top(body, ";"):
            P = delta = None
            for item, off2 in _split_top(piece, ","):
                key, val, voff = _keyed(item, base + off + off2, text, field)
                if key == "p":
                    P = _sub(lambda s: parse_upoly(s, "y"), val, voff, text, field)
                elif key == "delta":
                    delta = _sub(parse_rational, val, voff, text, field)
                else:
                    raise ParseError(f"unknown key {key!r}", text, base + off + off2, field)
            if P is None or delta is None:
                raise ParseError("each factor needs P and delta", text, base + off, field)
            try:
                factors.append(([fr(c) for c in P.coeffs()], delta))
            except ValueError as exc:
                raise ParseError(str(exc), text, base + off, field) from None
        try:
            return HenonMap(factors)
        except ValueError as exc:
            raise ParseError(str(exc), text, base, field) from None
    if kind == "skew":
        from .skewprod import SkewProduct

        p = q = sigma = None
        for item, off in _split_top(body, ";"):
            if not item.strip():
                continue
            key, val, voff = _keyed(item, base + off, text, field)
            if key == "p":
                terms = _sub(lambda s: parse_mpoly(s, ("x",)), val, voff, text, field)
                deg = max(k[0] for k in terms) if terms else 0
                p = [terms.get((i,), 0) for i in range(deg + 1)]
            elif key == "q":
                q = _sub(lambda s: parse_mpoly(s, ("x", "y")), val, voff, text, field)
            elif key == "sigma":
                sigma = _sub(_parse_sigma, val, voff, text, field)
            else:
                raise ParseError(f"unknown key {key!r}", text, base + off, field)
        if p is None or q is None:
            raise ParseError("skew products need p and q", text, base, field)
        try:
            return SkewProduct(p, q, sigma)
        except ValueError as exc:
            raise ParseError(str(exc), text, base, field) from None
    if kind == "poly2":
        from .polymap import PolyMap2

        parts = _split_top(body, ",")
        if len(parts) != 2:
            raise ParseError("poly2 needs exactly two components", text, base, field)
        comps = [_sub(lambda s: parse_mpoly(s, ("x", "y")), v, base + o, text, field)
                 for v, o in parts]
        return PolyMap2(*comps)
    if kind == "split":
        from .p1dyn import RationalMapP1, SplitEndo

        comps, perm = [], None
        for item, off in _split_top(body, ";"):
            if "=" in item and item.split("=")[0].strip().lower() == "perm":
                _, val, voff = _keyed(item, base + off, text, field)
                perm = _sub(_parse_int_list, val, voff, text, field)
                continue
            num, den = _sub(lambda s: parse_rational_function(s, _guess_var(s)), item, base + off,
                            text, field)
            comps.append(RationalMapP1(num, den))
        try:
            return SplitEndo(comps, perm)
        except ValueError as exc:
            raise ParseError(str(exc), text, base, field) from None
    raise ParseError(f"unknown map kind {kind!r}", text, 0, field)


def _parse_int_list(s: str) -> list[int]:
    s = s.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError("expected [i, j, ...]", s, 0)
    out = []
    for piece, off in _split_top(s[1:-1], ","):
        q = parse_rational(piece)
        if q.denominator != 1:
            raise ParseError("expected an integer", s, off + 1)
        out.append(int(q))
    return out


def _parse_sigma(s: str):
    """[[a, b], [c, d]], [e, f]  ->  (matrix, translation)."""
    pieces = _split_top(s.strip(), ",")
    if len(pieces) != 2:
        raise ParseError("sigma needs a matrix and a translation", s, 0)
    (mtext, moff), (ttext, toff) = pieces
    rows = mtext.strip()
    if not (rows.startswith("[") and rows.endswith("]")):
        raise ParseError("expected [[a, b], [c, d]]", s, moff)
    matrix = []
    for row, off in _split_top(rows[1:-1], ","):
        row = row.strip()
        if not (row.startswith("[") and row.endswith("]")):
            raise ParseError("expected a row [a, b]", s, moff + off + 1)
        matrix.append(tuple(parse_rational(v) for v, _ in _split_top(row[1:-1], ",")))
    t = ttext.strip()
    if not (t.startswith("[") and t.endswith("]")):
        raise ParseError("expected a translation [e, f]", s, toff)
    trans = tuple(parse_rational(v) for v, _ in _split_top(t[1:-1], ","))
    if len(matrix) != 2 or any(len(r) != 2 for r in matrix) or len(trans) != 2:
        raise ParseError("sigma must be 2x2 plus a 2-vector", s, 0)
    return (tuple(matrix), trans)


def format_map(obj) -> str:
    """Inverse of parse_map for the supported kinds."""
    from .henon import HenonMap
    from .p1dyn import RationalMapP1, SplitEndo
    from .polymap import PolyMap2
    from .skewprod import SkewProduct

    if isinstance(obj, RationalMapP1):
        return "p1: " + obj.to_string()
    if isinstance(obj, HenonMap):
        return "henon: " + "; ".join(
            f"P = {format_upoly(list(f.P), 'y')}, delta = {format_rational(f.delta)}"
            for f in obj.factors)
    if isinstance(obj, SkewProduct):
        out = f"skew: p = {format_upoly(list(obj.p))}; q = {format_mpoly(obj.q)}"
        if obj.sigma is not None:
            m, t = obj.sigma
            rows = ", ".join("[" + ", ".join(format_rational(c) for c in r) + "]" for r in m)
            out += f"; sigma = [{rows}], [{', '.join(format_rational(c) for c in t)}]"
        return out
    if isinstance(obj, PolyMap2):
        return f"poly2: {format_mpoly(obj.f1)}, {format_mpoly(obj.f2)}"
    if isinstance(obj, SplitEndo):
        out = "split: " + "; ".join(c.to_string() for c in obj.components)
        if obj.permutation != tuple(range(obj.dimension)):
            out += "; perm = [" + ", ".join(map(str, obj.permutation)) + "]"
        return out
    raise TypeError(f"cannot format {type(obj).__name__}")

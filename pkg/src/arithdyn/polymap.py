"""Polynomial endomorphisms of the affine plane with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction

from ._poly import CTX2, fq, fr, mpoly_terms


class PolyMap2:
    """(x, y) -> (f1(x, y), f2(x, y)); components are flint polynomials over Q in x, y."""

    def __init__(self, f1, f2):
        self.f1 = _coerce(f1)
        self.f2 = _coerce(f2)

    @classmethod
    def from_skew(cls, s) -> "PolyMap2":
        x, y = CTX2.gens()
        p = CTX2.from_dict({(k, 0): fq(c) for k, c in enumerate(s.p) if c})
        q = CTX2.from_dict({(i, j): fq(c) for (i, j), c in s.q.items()})
        return cls(p, q)

    @classmethod
    def from_henon(cls, h) -> "PolyMap2":
        return cls(*h.as_polys())

    @classmethod
    def identity(cls) -> "PolyMap2":
        return cls(*CTX2.gens())

    def to_skew(self):
        """The same map as a SkewProduct, or None when it is not of the form (p(x), q(x, y))."""
        from .errors import NotRegular
        from .skewprod import SkewProduct

        t1 = mpoly_terms(self.f1)
        if any(j for _, j in t1):
            return None
        deg = max((i for i, _ in t1), default=0)
        try:
            return SkewProduct([t1.get((i, 0), 0) for i in range(deg + 1)], mpoly_terms(self.f2))
        except NotRegular:
            return None

    @property
    def degree(self) -> int:
        return max(_total_degree(self.f1), _total_degree(self.f2))

    def compose(self, other: "PolyMap2") -> "PolyMap2":
        """self o other."""
        return PolyMap2(self.f1.compose(other.f1, other.f2), self.f2.compose(other.f1, other.f2))

    def __call__(self, point):
        x, y = (fq(c) for c in point)
        return (fr(self.f1(x, y)), fr(self.f2(x, y)))

    def eval_mod(self, point, modulus: int):
        """Evaluate at integer coordinates modulo a prime (for cheap sampling)."""
        x, y = point
        out = []
        for f in (self.f1, self.f2):
            acc = 0
            for (i, j), c in mpoly_terms(f).items():
                acc += c.numerator * pow(c.denominator, -1, modulus) * pow(x, i, modulus) * pow(y, j, modulus)
            out.append(acc % modulus)
        return tuple(out)

    def __eq__(self, other):
        return isinstance(other, PolyMap2) and self.f1 == other.f1 and self.f2 == other.f2

    def __hash__(self):
        return hash((str(self.f1), str(self.f2)))

    def __repr__(self):
        return f"PolyMap2({self.f1}, {self.f2})"

    def to_string(self) -> str:
        from .parsing import format_mpoly

        return f"({format_mpoly(self.f1)}, {format_mpoly(self.f2)})"


def _coerce(f):
    if isinstance(f, dict):
        return CTX2.from_dict({k: fq(v) for k, v in f.items() if v})
    if isinstance(f, (int, Fraction)):
        return CTX2.from_dict({(0, 0): fq(f)} if f else {})
    return f


def _total_degree(f) -> int:
    return max(int(f.total_degree()), 0)

"""Weil heights of rational and algebraic points; Mahler-measure heights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from flint import fmpq_poly, fmpz_poly

from ._poly import (
    charpoly_norm_exponents,
    complex_roots,
    fr,
    primitive_int,
    upoly,
)
from .errors import ReducibleMinimalPolynomial, ZeroInput
from .places import LOG_ULP, factor_int, log_abs


@dataclass(frozen=True)
class HeightValue:
    """archimedean +- archimedean_error + sum_p finite[p]*log p, up to truncation_error."""

    archimedean: float = 0.0
    archimedean_error: float = 0.0
    finite_items: tuple = ()
    truncation_error: float = 0.0

    @classmethod
    def make(cls, archimedean=0.0, archimedean_error=0.0, finite=None, truncation_error=0.0):
        items = tuple(sorted((int(p), Fraction(e)) for p, e in (finite or {}).items() if e))
        return cls(float(archimedean), float(archimedean_error), items, float(truncation_error))

    @classmethod
    def zero(cls) -> "HeightValue":
        return cls()

    @property
    def finite(self) -> dict[int, Fraction]:
        return dict(self.finite_items)

    def finite_total(self) -> float:
        return math.fsum(float(e) * math.log(p) for p, e in self.finite_items)

    def total(self) -> float:
        return self.archimedean + self.finite_total()

    def error_bound(self) -> float:
        return self.archimedean_error + self.truncation_error

    def is_exact_zero(self) -> bool:
        return (self.archimedean == 0.0 and self.archimedean_error == 0.0
                and not self.finite_items and self.truncation_error == 0.0)

    def __add__(self, other: "HeightValue") -> "HeightValue":
        fin = self.finite
        for p, e in other.finite_items:
            fin[p] = fin.get(p, 0) + e
        return HeightValue.make(self.archimedean + other.archimedean,
                                self.archimedean_error + other.archimedean_error,
                                fin, self.truncation_error + other.truncation_error)

    def scale(self, c) -> "HeightValue":
        c = Fraction(c)
        return HeightValue.make(self.archimedean * float(c), self.archimedean_error * abs(float(c)),
                                {p: e * c for p, e in self.finite_items},
                                self.truncation_error * abs(float(c)))

    def to_dict(self) -> dict:
        return {
            "total": self.total(),
            "archimedean": self.archimedean,
            "archimedean_error": self.archimedean_error,
            "finite": {str(p): str(e) for p, e in self.finite_items},
            "truncation_error": self.truncation_error,
        }

    def __float__(self):
        return self.total()


def log_plus(x: float) -> float:
    return math.log(x) if x > 1.0 else 0.0


def _arch_log_plus(x: Fraction) -> tuple[float, float]:
    if abs(x.numerator) <= x.denominator:
        return 0.0, 0.0
    val = log_abs(x)
    return val, LOG_ULP * (val + 1.0)


def weil_height(x) -> HeightValue:
    x = Fraction(x)
    arch, err = _arch_log_plus(x)
    fin = {p: e for p, e in factor_int(x.denominator)}
    return HeightValue.make(arch, err, fin)


def weil_height_affine(point) -> HeightValue:
    coords = [Fraction(c) for c in point]
    if not coords:
        return HeightValue.zero()
    big = max(coords, key=abs)
    arch, err = _arch_log_plus(abs(big))
    fin: dict[int, int] = {}
    for c in coords:
        for p, e in factor_int(c.denominator):
            fin[p] = max(fin.get(p, 0), e)
    return HeightValue.make(arch, err, fin)


def weil_height_projective(coords) -> HeightValue:
    """Height of [x0 : ... : xn] with rational entries, not all zero."""
    coords = [Fraction(c) for c in coords]
    if not any(coords):
        raise ZeroInput("projective point with all coordinates zero")
    den = 1
    for c in coords:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in coords]
    g = 0
    for i in ints:
        g = math.gcd(g, abs(i))
    top = max(abs(i) for i in ints) // g
    return HeightValue.make(math.log(top), LOG_ULP * (math.log(top) + 1.0))


class AlgebraicNumber:
    """A root of an irreducible integer polynomial, selected by canonical index.

    Roots are ordered by (real part, imaginary part) of their isolating balls.
    """

    __slots__ = ("minpoly", "index", "__dict__")

    def __init__(self, minpoly, index: int = 0, check: bool = True):
        ints = primitive_int(minpoly)
        while ints and ints[-1] == 0:
            ints.pop()
        if len(ints) < 2:
            raise ZeroInput("minimal polynomial must have degree at least 1")
        if check:
            _, factors = fmpz_poly(ints).factor()
            if len(factors) != 1 or factors[0][1] != 1:
                raise ReducibleMinimalPolynomial(f"{ints} is not irreducible over Q")
        self.minpoly = tuple(ints)
        if not 0 <= index < len(ints) - 1:
            raise IndexError("root index out of range")
        self.index = index

    @classmethod
    def from_rational(cls, q) -> "AlgebraicNumber":
        q = Fraction(q)
        return cls([-q.numerator, q.denominator], 0, check=False)

    @property
    def degree(self) -> int:
        return len(self.minpoly) - 1

    @property
    def is_rational(self) -> bool:
        return self.degree == 1

    def rational_value(self) -> Fraction:
        return Fraction(-self.minpoly[0], self.minpoly[1])

    @cached_property
    def roots(self) -> list[tuple[complex, float]]:
        return complex_roots(self.minpoly)

    def value(self) -> complex:
        return self.roots[self.index][0]

    def poly(self) -> fmpq_poly:
        return fmpq_poly(list(self.minpoly))

    def conjugates(self) -> list["AlgebraicNumber"]:
        return [AlgebraicNumber(self.minpoly, i, check=False) for i in range(self.degree)]

    def __eq__(self, other):
        return (isinstance(other, AlgebraicNumber) and self.minpoly == other.minpoly
                and self.index == other.index)

    def __hash__(self):
        return hash((self.minpoly, self.index))

    def __repr__(self):
        if self.is_rational:
            return f"AlgebraicNumber({self.rational_value()})"
        return f"AlgebraicNumber(minpoly={list(self.minpoly)}, index={self.index})"


def height_algebraic(alpha) -> HeightValue:
    """h(alpha) = (log|a_n| + sum log+|root|) / n, finite part exact."""
    if not isinstance(alpha, AlgebraicNumber):
        alpha = AlgebraicNumber(alpha)
    n = alpha.degree
    if n == 1:
        return weil_height(alpha.rational_value())
    fin = {p: Fraction(e, n) for p, e in factor_int(alpha.minpoly[-1])}
    total, err = 0.0, 0.0
    terms = []
    for z, rad in alpha.roots:
        a = abs(z)
        if a + rad > 1.0:
            lo = max(a - rad, 1.0)
            terms.append(log_plus(a))
            err += math.log((a + rad) / lo) + LOG_ULP * (abs(math.log(a)) + 1.0)
    total = math.fsum(terms)
    return HeightValue.make(total / n, err / n, fin)


def newton_slopes(int_coeffs, p: int) -> list[tuple[Fraction, int]]:
    """(s, m) pairs: m roots with log|root|_p = s*log p, from the p-adic Newton polygon."""
    from .places import ord_p

    pts = [(k, ord_p(c, p)) for k, c in enumerate(int_coeffs) if c]
    hull: list[tuple[int, int]] = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    out = []
    if pts[0][0] > 0:
        # roots at zero have log|0|_p = -infinity; they never contribute to log+
        out.append((None, pts[0][0]))
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        out.append((Fraction(y2 - y1, x2 - x1), x2 - x1))
    return out


@dataclass(frozen=True)
class AlgebraicPoint:
    """A point of affine space with algebraic coordinates.

    Either independent coordinates (product-of-orbits convention) or a joint
    parametrization: coordinates are polynomials in a root theta of ``field``.
    """

    coordinates: tuple = ()
    field: tuple | None = None
    params: tuple = ()

    @classmethod
    def joint(cls, r, params) -> "AlgebraicPoint":
        r_int = tuple(primitive_int(r))
        ps = tuple(tuple(fr(c) for c in (upoly(p) if not isinstance(p, fmpq_poly) else p).coeffs())
                   for p in params)
        return cls((), r_int, ps)

    @property
    def is_joint(self) -> bool:
        return self.field is not None

    @property
    def degree(self) -> int:
        if self.is_joint:
            return len(self.field) - 1
        d = 1
        for c in self.coordinates:
            d *= c.degree if isinstance(c, AlgebraicNumber) else 1
        return d

    def field_poly(self) -> fmpq_poly:
        return fmpq_poly(list(self.field))

    def param_polys(self) -> list:
        return [upoly(p) for p in self.params]

    def numeric_conjugates(self) -> list[tuple[tuple, float]]:
        """All conjugate points as complex tuples with a coordinate error bound."""
        if self.is_joint:
            out = []
            for z, rad in complex_roots(self.field):
                pts, err = [], 0.0
                for p in self.params:
                    val = 0j
                    dval = 0.0
                    for c in reversed(p):
                        dval = dval * abs(z) + abs(val)
                        val = val * z + float(c)
                    pts.append(val)
                    err = max(err, dval * rad + 1e-15 * (1 + abs(val)))
                out.append((tuple(pts), err))
            return out
        import itertools

        choices = []
        for c in self.coordinates:
            if isinstance(c, AlgebraicNumber):
                choices.append([(z, rad) for z, rad in c.roots])
            else:
                choices.append([(complex(float(Fraction(c))), 0.0)])
        out = []
        for combo in itertools.product(*choices):
            out.append((tuple(z for z, _ in combo), max(r for _, r in combo)))
        return out


def height_algebraic_point(point: AlgebraicPoint) -> HeightValue:
    """Weil height of an algebraic point of affine space (orbit average)."""
    if not point.is_joint:
        coords = point.coordinates
        if all(not isinstance(c, AlgebraicNumber) or c.is_rational for c in coords):
            vals = [c.rational_value() if isinstance(c, AlgebraicNumber) else Fraction(c)
                    for c in coords]
            return weil_height_affine(vals)
        # product convention: orbit of the tuple = product of coordinate orbits
        n = point.degree
        arch, err = [], 0.0
        for pts, e in point.numeric_conjugates():
            m = max(abs(z) for z in pts)
            arch.append(log_plus(m))
            if m > 1.0:
                err = max(err, e / max(m - e, 1e-300))
        return HeightValue.make(math.fsum(arch) / n, err, _product_finite_part(coords))
    n = point.degree
    arch, err = [], 0.0
    for pts, e in point.numeric_conjugates():
        m = max(abs(z) for z in pts)
        arch.append(log_plus(m))
        if m + e > 1.0:
            err += math.log((m + e) / max(m - e, 1.0)) + LOG_ULP
    r = point.field_poly()
    exps = charpoly_norm_exponents(r, point.param_polys())
    fin = {p: Fraction(e, n) for p, e in exps.items()}
    return HeightValue.make(math.fsum(arch) / n, err / n, fin)


def _product_finite_part(coords) -> dict[int, Fraction]:
    """Exact orbit-averaged finite part of log+ max |x_i|_p under the product convention."""
    import itertools

    polys = []
    for c in coords:
        polys.append(c.minpoly if isinstance(c, AlgebraicNumber)
                     else (-Fraction(c).numerator, Fraction(c).denominator))
    primes = set()
    for poly in polys:
        primes.update(p for p, _ in factor_int(poly[-1]))
    fin = {}
    for p in sorted(primes):
        per_coord = []
        for poly in polys:
            per_coord.append([(max(Fraction(0), s) if s is not None else Fraction(0), m)
                              for s, m in newton_slopes(poly, p)])
        acc, weight = Fraction(0), 0
        for combo in itertools.product(*per_coord):
            mult = 1
            for _, m in combo:
                mult *= m
            acc += mult * max(s for s, _ in combo)
            weight += mult
        if acc:
            fin[p] = acc / weight
    return fin


def minpoly_of_rational(q) -> tuple[int, int]:
    q = Fraction(q)
    return (-q.numerator, q.denominator)

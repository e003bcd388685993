"""Small exact-arithmetic helpers on top of python-flint and Fraction."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce

from flint import fmpq, fmpq_mpoly_ctx, fmpq_poly, fmpz_poly

CTX2 = fmpq_mpoly_ctx.get(("x", "y"), "lex")
CTX3 = fmpq_mpoly_ctx.get(("x", "y", "z"), "lex")


def fq(x) -> fmpq:
    if isinstance(x, fmpq):
        return x
    x = Fraction(x)
    return fmpq(x.numerator, x.denominator)


def fr(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, int):
        return Fraction(q)
    return Fraction(int(q.p), int(q.q))


def upoly(coeffs) -> fmpq_poly:
    """fmpq_poly from coefficients listed lowest degree first."""
    return fmpq_poly([fq(c) for c in coeffs])


def ucoeffs(poly: fmpq_poly) -> list[Fraction]:
    return [fr(c) for c in poly.coeffs()]


def horner(coeffs, x):
    """Evaluate a coefficient list (lowest first) at x."""
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def primitive_int(coeffs) -> list[int]:
    """Scale rationals to coprime integers with positive last nonzero entry."""
    coeffs = [Fraction(c) for c in coeffs]
    nz = [c for c in coeffs if c]
    if not nz:
        return [0] * len(coeffs)
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (c.denominator for c in nz), 1)
    ints = [int(c * den) for c in coeffs]
    g = reduce(math.gcd, (abs(i) for i in ints if i))
    ints = [i // g for i in ints]
    if nz[-1] < 0:
        ints = [-i for i in ints]
    return ints


def content_exponents(coeffs) -> dict[int, int]:
    """For rationals c_k, return p -> -min_k ord_p(c_k) for primes where it is positive.

    For a monic polynomial this is log_p of its Gauss norm.
    """
    from .places import factor_int

    nz = [Fraction(c) for c in coeffs if c]
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (c.denominator for c in nz), 1)
    out = {}
    for p, _ in factor_int(den):
        worst = 0
        for c in nz:
            e = 0
            d = c.denominator
            while d % p == 0:
                d //= p
                e += 1
            worst = max(worst, e)
        if worst:
            out[p] = worst
    return out


def mpoly_from_dict(ctx, terms: dict):
    return ctx.from_dict({k: fq(v) for k, v in terms.items() if v})


def mpoly_terms(poly) -> dict:
    return {tuple(int(e) for e in k): fr(v) for k, v in poly.to_dict().items()}


def lcm_den(values) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b),
                  (Fraction(v).denominator for v in values), 1)


def complex_roots(int_coeffs) -> list[tuple[complex, float]]:
    """Certified complex roots of an integer polynomial without repeated factors.

    Returns (center, radius) pairs in canonical order: by real part, then imaginary part.
    """
    from .errors import RootIsolationFailure

    poly = fmpz_poly([int(c) for c in int_coeffs])
    try:
        raw = poly.complex_roots()
    except Exception as exc:  # flint raises on non-convergence
        raise RootIsolationFailure(str(exc)) from exc
    out = []
    for ball, mult in raw:
        if mult != 1:
            raise RootIsolationFailure("repeated root in a squarefree polynomial")
        z = complex(ball)
        rad = float(ball.rad()) + 2.0 ** -52 * abs(z)
        out.append((z, rad))
    out.sort(key=lambda zr: (round(zr[0].real, 12), round(zr[0].imag, 12)))
    return out


class NumberField:
    """Q[t]/(r) for an irreducible r; elements are fmpq_poly reduced mod r."""

    def __init__(self, r: fmpq_poly):
        self.r = r
        self.degree = r.degree()

    def reduce(self, a) -> fmpq_poly:
        if not isinstance(a, fmpq_poly):
            a = fmpq_poly([fq(a)])
        return a % self.r

    def mul(self, a, b):
        return (a * b) % self.r

    def inv(self, a):
        g, s, _ = a.xgcd(self.r)
        if g.degree() != 0:
            raise ZeroDivisionError("non-invertible element")
        return (s / g.coeffs()[0]) % self.r

    def gen(self):
        return fmpq_poly([0, 1]) % self.r

    def eval_poly(self, coeffs, a):
        """Evaluate a rational coefficient list at the field element a."""
        acc = fmpq_poly([])
        for c in reversed(coeffs):
            acc = (acc * a + fq(c)) % self.r
        return acc

    def eval_mpoly(self, poly, values):
        """Evaluate a flint multivariate polynomial at field elements."""
        powers = [dict() for _ in values]
        acc = fmpq_poly([])
        for exps, c in poly.to_dict().items():
            term = fmpq_poly([c])
            for i, e in enumerate(exps):
                e = int(e)
                if e:
                    cache = powers[i]
                    if e not in cache:
                        cache[e] = self.power(values[i], e)
                    term = (term * cache[e]) % self.r
            acc += term
        return acc % self.r

    def power(self, a, e: int):
        result = fmpq_poly([1])
        base = a % self.r
        while e:
            if e & 1:
                result = (result * base) % self.r
            e >>= 1
            if e:
                base = (base * base) % self.r
        return result


def charpoly_affine(r: fmpq_poly, coords: list):
    """Monic chi(z, T1..Tk) = prod over roots theta of r of (z - X0(theta) - sum Ti Xi(theta)).

    coords are fmpq_poly in t. The Gauss norm of chi at p equals the product over
    the conjugates of max(1, |X0|_p, ..., |Xk|_p).
    """
    k = len(coords)
    names = ("t", "z") + tuple(f"T{i}" for i in range(1, k))
    ctx = fmpq_mpoly_ctx.get(names, "lex")
    gens = ctx.gens()
    t, z = gens[0], gens[1]

    def lift(poly):
        acc = ctx.from_dict({})
        for i, c in enumerate(poly.coeffs()):
            if c:
                acc += c * t ** i
        return acc

    g = z - lift(coords[0])
    for i in range(1, k):
        g -= gens[i + 1] * lift(coords[i])
    rr = lift(r)
    if g.degrees()[0] == 0:
        chi = g ** r.degree()
    else:
        chi = rr.resultant(g, "t")
        lc = r.coeffs()[-1]
        chi = chi / (lc ** g.degrees()[0])
    return chi


def charpoly_norm_exponents(r: fmpq_poly, coords: list) -> dict[int, int]:
    """p -> log_p of the product over conjugates of max(1, |coords|_p)."""
    chi = charpoly_affine(r, coords)
    return content_exponents([fr(v) for v in chi.to_dict().values()])


def norm_form_exponents(r: fmpq_poly, coords: list) -> dict[int, int]:
    """p -> log_p of the product over conjugates of max_i |coords_i|_p (no 1 inside).

    Uses the norm of X0 + T1 X1 + ... as a polynomial in the T's, whose Gauss norm
    is multiplicative. All prime exponents, positive or negative, are returned.
    """
    from .places import factor_int

    k = len(coords)
    names = ("t",) + tuple(f"T{i}" for i in range(1, k + 1))
    ctx = fmpq_mpoly_ctx.get(names, "lex")
    gens = ctx.gens()
    t = gens[0]

    def lift(poly):
        acc = ctx.from_dict({})
        for i, c in enumerate(poly.coeffs()):
            if c:
                acc += c * t ** i
        return acc

    g = lift(coords[0])
    for i in range(1, k):
        g += gens[i] * lift(coords[i])
    if g.degrees()[0] == 0:
        norm = g ** r.degree()
    else:
        lc = r.coeffs()[-1]
        norm = lift(r).resultant(g, "t") / (lc ** g.degrees()[0])
    vals = [fr(v) for v in norm.to_dict().values() if v]
    if not vals:
        raise ZeroDivisionError("point has all coordinates zero")
    g = reduce(math.gcd, (abs(v.numerator) for v in vals))
    primes = {p for p, _ in factor_int(g)} | {p for p, _ in factor_int(lcm_den(vals))}
    out = {}
    for p in sorted(primes):
        best = None
        for v in vals:
            e = _ord(v, p)
            best = e if best is None else min(best, e)
        if best:
            out[p] = -best
    return out


def _ord(v: Fraction, p: int) -> int:
    e = 0
    n, d = v.numerator, v.denominator
    while n % p == 0:
        n //= p
        e += 1
    while d % p == 0:
        d //= p
        e -= 1
    return e

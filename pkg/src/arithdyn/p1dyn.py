"""Rational maps on P^1 and split maps on (P^1)^n: canonical heights, preperiodicity."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import flint
from flint import fmpq_mat, fmpq_poly, fmpz_mat

from ._poly import NumberField, fq, fr, norm_form_exponents, primitive_int, upoly
from .errors import DegreeOne, PrecisionExhausted, ZeroInput
from .heights import (
    AlgebraicNumber,
    HeightValue,
    height_algebraic,
    newton_slopes,
)
from .places import ARCH, LOG_ULP, Place, factor_int, ord_p

BIT_BUDGET = 1 << 20


class _Infinity:
    __slots__ = ()

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_infinity, ())


def _infinity():
    return INF


INF = _Infinity()


def _proj(x) -> tuple[int, int]:
    """Coprime integer pair (a, b) for x = a/b, with INF = (1, 0)."""
    if x is INF:
        return (1, 0)
    x = Fraction(x)
    return (x.numerator, x.denominator)


def _unproj(a: int, b: int):
    if b == 0:
        return INF
    return Fraction(a, b)


def _hom_eval(coeffs, X, Z, d):
    """sum_k c_k X^k Z^(d-k) by Horner in X/Z without division."""
    acc = 0
    zp = 1
    # coefficients are lowest X-degree first; Horner from the top
    acc = coeffs[d]
    for k in range(d - 1, -1, -1):
        zp *= Z
        acc = acc * X + coeffs[k] * zp
    return acc


def _hom_eval_scalar(coeffs, X, Z, d):
    acc = coeffs[d]
    zp = 1
    for k in range(d - 1, -1, -1):
        zp = zp * Z
        acc = acc * X + coeffs[k] * zp
    return acc


@dataclass(frozen=True)
class HeightBoundC:
    """|h(f(x)) - d h(x)| <= max(c_plus, c_minus) for every x."""

    c_plus: float
    c_minus: float

    @property
    def value(self) -> float:
        return max(self.c_plus, self.c_minus)


@dataclass(frozen=True)
class LocalConstants:
    """log(U_v) and log(B_v): log||F(X)||_v - d log||X||_v lies in [-log B_v, log U_v]."""

    place: Place
    log_upper: float
    log_lower: float
    exponent_lower: int = 0  # finite places: log B_p = exponent_lower * log p

    @property
    def tail(self) -> float:
        return max(abs(self.log_upper), abs(self.log_lower))


@dataclass(frozen=True)
class GreenValue:
    """A local Green value G_v(X). Finite places keep an exact exponent of log p."""

    place: Place
    value: float
    exponent: Fraction | None = None
    error: float = 0.0
    truncation_error: float = 0.0
    iterations: int = 0

    def is_exact_zero(self) -> bool:
        return self.value == 0.0 and self.error == 0.0 and self.truncation_error == 0.0


@dataclass(frozen=True)
class PreperiodicityCertificate:
    value: bool
    tail: int | None = None
    cycle: int | None = None
    orbit: tuple = ()
    reason: str = ""

    def __bool__(self):
        return self.value


class RationalMapP1:
    """f = num/den with exact rational coefficients (lists lowest degree first)."""

    def __init__(self, num, den=(1,)):
        n = num if isinstance(num, fmpq_poly) else upoly(num)
        m = den if isinstance(den, fmpq_poly) else upoly(den)
        if m.is_zero():
            raise ZeroInput("zero denominator")
        g = n.gcd(m)
        if g.degree() > 0:
            n, m = n / g, m / g
            n = fmpq_poly(n) if not isinstance(n, fmpq_poly) else n
        lc = m.coeffs()[-1]
        n, m = n / lc, m / lc
        self.num = n
        self.den = m
        self.degree = max(n.degree(), m.degree())
        if self.degree < 1:
            raise DegreeOne("constant map")
        d = self.degree
        nc = [fr(c) for c in n.coeffs()] + [Fraction(0)] * (d + 1 - len(n.coeffs()))
        dc = [fr(c) for c in m.coeffs()] + [Fraction(0)] * (d + 1 - len(m.coeffs()))
        ints = primitive_int(nc + dc)
        if not any(ints[d + 1:]):
            raise ZeroInput("zero denominator")
        # the lift (F0, F1) as integer coefficient lists of X^k Z^(d-k)
        self.F0 = tuple(ints[: d + 1])
        self.F1 = tuple(ints[d + 1:])

    @classmethod
    def polynomial(cls, coeffs) -> "RationalMapP1":
        return cls(coeffs, (1,))

    @property
    def is_polynomial(self) -> bool:
        return self.den.degree() == 0

    def num_coeffs(self) -> list[Fraction]:
        return [fr(c) for c in self.num.coeffs()]

    def den_coeffs(self) -> list[Fraction]:
        return [fr(c) for c in self.den.coeffs()]

    def __eq__(self, other):
        return isinstance(other, RationalMapP1) and self.F0 == other.F0 and self.F1 == other.F1

    def __hash__(self):
        return hash((self.F0, self.F1))

    def __repr__(self):
        if self.is_polynomial:
            return f"RationalMapP1({self.num.str('x')})"
        return f"RationalMapP1(({self.num.str('x')}) / ({self.den.str('x')}))"

    def to_string(self) -> str:
        from .parsing import format_upoly

        if self.is_polynomial:
            return format_upoly(self.num_coeffs())
        return f"({format_upoly(self.num_coeffs())}) / ({format_upoly(self.den_coeffs())})"

    # exact evaluation -------------------------------------------------

    def lift(self, X: int, Z: int) -> tuple[int, int]:
        d = self.degree
        return (_hom_eval(self.F0, X, Z, d), _hom_eval(self.F1, X, Z, d))

    def __call__(self, x):
        a, b = _proj(x)
        A, B = self.lift(a, b)
        g = math.gcd(A, B)
        return _unproj(A // g, B // g)

    def compose(self, other: "RationalMapP1") -> "RationalMapP1":
        """self o other."""
        if self.is_polynomial and other.is_polynomial:
            return RationalMapP1(self.num(other.num), (1,))
        d = self.degree
        on, od = other.num, other.den
        A = fmpq_poly([])
        B = fmpq_poly([])
        for k in range(d + 1):
            term = on ** k * od ** (d - k)
            A += fq(self.F0[k]) * term
            B += fq(self.F1[k]) * term
        return RationalMapP1(A, B)

    def iterate(self, n: int) -> "RationalMapP1":
        g = self
        for _ in range(n - 1):
            g = g.compose(self)
        return g

    # reduction data ----------------------------------------------------

    @cached_property
    def resultant(self) -> int:
        d = self.degree
        rows = []
        for shift in range(d):
            rows.append([0] * shift + list(reversed(self.F0)) + [0] * (d - 1 - shift))
        for shift in range(d):
            rows.append([0] * shift + list(reversed(self.F1)) + [0] * (d - 1 - shift))
        return int(fmpz_mat(rows).det())

    def bad_primes(self) -> list[int]:
        primes = set(p for p, _ in factor_int(self.resultant))
        for c in self.num_coeffs() + self.den_coeffs():
            primes.update(p for p, _ in factor_int(c.denominator))
        return sorted(primes)

    @cached_property
    def _nullstellensatz(self):
        """Coefficient lists (g0, g1) with g0 F0 + g1 F1 = X^(2d-1), and the Z version."""
        d = self.degree
        size = 2 * d
        # unknown coefficients of g0, g1 in the basis X^j Z^(d-1-j)
        cols = []
        for j in range(d):
            col = [0] * size
            for k, c in enumerate(self.F0):
                col[j + k] += c
            cols.append(col)
        for j in range(d):
            col = [0] * size
            for k, c in enumerate(self.F1):
                col[j + k] += c
            cols.append(col)
        M = fmpq_mat(size, size, [cols[c][r] for r in range(size) for c in range(size)])
        out = []
        for target in (size - 1, 0):
            rhs = fmpq_mat(size, 1, [1 if r == target else 0 for r in range(size)])
            sol = M.solve(rhs)
            vals = [fr(sol[i, 0]) for i in range(size)]
            out.append((vals[:d], vals[d:]))
        return out

    def local_constants(self, v: Place) -> LocalConstants:
        if v.is_archimedean:
            up = max(sum(abs(c) for c in self.F0), sum(abs(c) for c in self.F1))
            low = max(float(sum(abs(c) for c in g0) + sum(abs(c) for c in g1))
                      for g0, g1 in self._nullstellensatz)
            return LocalConstants(v, math.log(up), math.log(low))
        e = 0
        for g0, g1 in self._nullstellensatz:
            for c in g0 + g1:
                if c:
                    e = max(e, -ord_p(c, v.p))
        return LocalConstants(v, 0.0, e * math.log(v.p), e)

    # green functions ------------------------------------------------------

    def green(self, x, v: Place, tol: float = 1e-10) -> GreenValue:
        """G_v(x, 1) for rational x (INF uses the lift point (1, 0))."""
        return green_p1(self, x, v, tol)


def height_bound(f: RationalMapP1, samples: int = 1000, seed: int = 0) -> HeightBoundC:
    if f.degree < 2:
        raise DegreeOne("height bound needs degree >= 2")
    places = [ARCH] + [Place(p) for p in f.bad_primes()]
    consts = [f.local_constants(v) for v in places]
    c_plus = max(0.0, math.fsum(c.log_upper for c in consts))
    c_minus = max(0.0, math.fsum(c.log_lower for c in consts))
    bound = HeightBoundC(c_plus, c_minus)
    if samples:
        _check_height_bound(f, bound, samples, seed)
    return bound


def _check_height_bound(f, bound, samples, seed):
    rng = random.Random(seed)
    d = f.degree
    slack = 1e-9
    for _ in range(samples):
        x = Fraction(rng.randint(-10 ** 6, 10 ** 6), rng.randint(1, 10 ** 6))
        y = f(x)
        hy = 0.0 if y is INF else projective_height(y)
        if abs(hy - d * projective_height(x)) > bound.value + slack:
            raise AssertionError(f"height bound violated at {x}")


def projective_height(x) -> float:
    a, b = _proj(x)
    return math.log(max(abs(a), abs(b)))


def _n_for(tail: float, d: int, tol: float) -> int:
    if tail <= 0.0:
        return 0
    n = 0
    while tail / (d ** n * (d - 1)) > tol:
        n += 1
    return n


def _arch_green(f: RationalMapP1, X: complex, Z: complex, log_norm: float, N: int) -> tuple[float, float]:
    """log||X|| + sum_{n<N} d^-(n+1) log||F(X_n)|| with normalized X_n."""
    d = f.degree
    F0 = [float(c) for c in f.F0]
    F1 = [float(c) for c in f.F1]
    total = log_norm
    terms = []
    scale = 1.0
    err = LOG_ULP * (abs(log_norm) + 1.0)
    for n in range(N):
        A = _hom_eval_scalar(F0, X, Z, d)
        B = _hom_eval_scalar(F1, X, Z, d)
        m = max(abs(A), abs(B))
        scale /= d
        s = math.log(m)
        terms.append(scale * s)
        err += scale * 1e-14 * (abs(s) + 1.0)
        X, Z = A / m, B / m
    return total + math.fsum(terms), err


def _padic_green(f: RationalMapP1, a: int, b: int, p: int, N: int, e_lower: int) -> Fraction:
    """Exact exponent E with G_p(a/b, 1)-contribution E*log p after N steps."""
    d = f.degree
    # (a, b) is coprime, hence already a p-adic unit vector; X = (a/b, 1) = (a, b)/b and
    # log||X||_p = ord_p(b)
    K = N * max(e_lower, 1) + 8
    while True:
        mod = p ** K
        A, B = a, b
        exponent = Fraction(_ord_int(b, p)) if b else Fraction(0)
        A %= mod
        B %= mod
        prec = K
        scale = Fraction(1)
        ok = True
        for _ in range(N):
            A2 = _hom_eval(f.F0, A, B, d) % (p ** prec)
            B2 = _hom_eval(f.F1, A, B, d) % (p ** prec)
            m = min(_ord_mod(A2, p, prec), _ord_mod(B2, p, prec))
            if m >= prec:
                ok = False
                break
            scale /= d
            exponent -= m * scale
            prec -= m
            A, B = (A2 // p ** m) % (p ** prec), (B2 // p ** m) % (p ** prec)
        if ok:
            return exponent
        K *= 2


def _ord_int(n: int, p: int) -> int:
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _ord_mod(n: int, p: int, prec: int) -> int:
    if n == 0:
        return prec
    v = 0
    while n % p == 0 and v < prec:
        n //= p
        v += 1
    return v


def green_p1(f: RationalMapP1, x, v: Place, tol: float = 1e-10) -> GreenValue:
    """Local Green value G_v(x, 1) of the primitive integral lift (INF: lift point (1, 0))."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = f.degree
    if d < 2:
        raise DegreeOne("Green functions need degree >= 2")
    c = f.local_constants(v)
    N = _n_for(c.tail, d, tol)
    trunc = c.tail / (d ** N * (d - 1)) if c.tail > 0 else 0.0
    if x is INF:
        a, b = 1, 0
    else:
        x = Fraction(x)
        a, b = x.numerator, x.denominator
    if v.is_archimedean:
        if b == 0:
            X, Z, ln = 1.0, 0.0, 0.0
        else:
            xa = Fraction(a, b)
            if abs(xa) > 1:
                X, Z, ln = (1.0 if xa > 0 else -1.0), float(1 / xa), math.log(abs(a)) - math.log(b)
            else:
                X, Z, ln = float(xa), 1.0, 0.0
        val, err = _arch_green(f, X, Z, ln, N)
        return GreenValue(v, val, None, err, trunc, N)
    p = v.p
    if c.exponent_lower == 0:
        # good reduction: G = log+ of the sup norm, exactly
        e = Fraction(_ord_int(b, p)) if b else Fraction(0)
        return GreenValue(v, float(e) * math.log(p), e, 0.0, 0.0, 0)
    e = _padic_green(f, a, b, p, N, c.exponent_lower)
    return GreenValue(v, float(e) * math.log(p), e, 0.0, trunc, N)


# preperiodicity ---------------------------------------------------------


def preperiodic_cutoff(f: RationalMapP1) -> float:
    C = height_bound(f, samples=0).value
    return C / (f.degree - 1) + 1.0


def is_preperiodic_p1(f: RationalMapP1, x, cutoff: float | None = None) -> PreperiodicityCertificate:
    if f.degree < 2:
        raise DegreeOne("preperiodicity test needs degree >= 2")
    if cutoff is None:
        cutoff = preperiodic_cutoff(f)
    seen: dict = {}
    orbit = []
    y = x if x is INF else Fraction(x)
    while True:
        if y in seen:
            tail = seen[y]
            return PreperiodicityCertificate(True, tail, len(orbit) - tail, tuple(orbit))
        if y is not INF and projective_height(y) > cutoff:
            return PreperiodicityCertificate(False, orbit=tuple(orbit + [y]),
                                             reason=f"orbit height exceeds {cutoff:.6g}")
        seen[y] = len(orbit)
        orbit.append(y)
        y = f(y)


def is_preperiodic_algebraic(f: RationalMapP1, alpha: AlgebraicNumber,
                             max_steps: int = 64) -> PreperiodicityCertificate:
    """Exact test through the minimal polynomials of the forward orbit.

    Two orbit points with the same minimal polynomial are Galois conjugate, which forces
    a cycle; a height above the cutoff rules preperiodicity out.
    """
    if alpha.is_rational:
        return is_preperiodic_p1(f, alpha.rational_value())
    cutoff = preperiodic_cutoff(f)
    seen = {}
    polys = []
    m = alpha.minpoly
    for step in range(max_steps):
        if m in seen:
            return PreperiodicityCertificate(True, seen[m], step - seen[m], tuple(polys),
                                             reason="minimal polynomials repeat up to conjugacy")
        h = height_algebraic(AlgebraicNumber(m, 0, check=False)).total()
        if h > cutoff:
            return PreperiodicityCertificate(False, orbit=tuple(polys),
                                             reason=f"orbit height exceeds {cutoff:.6g}")
        seen[m] = step
        polys.append(m)
        m = _image_minpoly(f, m)
        if m is None:
            # the orbit reached infinity, which then behaves like a rational point
            cert = is_preperiodic_p1(f, INF)
            return PreperiodicityCertificate(cert.value, reason="orbit passes through infinity")
    raise PrecisionExhausted("no decision within the step budget")


def _image_minpoly(f: RationalMapP1, m: tuple):
    """Minimal polynomial of f(theta) for theta a root of m (None if f(theta) is infinite)."""
    r = fmpq_poly(list(m))
    K = NumberField(r)
    t = K.gen()
    den = K.eval_poly(f.den_coeffs(), t)
    if den.is_zero():
        return None
    val = K.mul(K.eval_poly(f.num_coeffs(), t), K.inv(den))
    ctx = flint.fmpq_mpoly_ctx.get(("t", "z"), "lex")
    tt, zz = ctx.gens()
    rr = ctx.from_dict({(i, 0): c for i, c in enumerate(r.coeffs()) if c})
    g = zz - ctx.from_dict({(i, 0): c for i, c in enumerate(val.coeffs()) if c})
    chi = rr.resultant(g, "t") if val.degree() > 0 else g ** r.degree()
    coeffs = [0] * (r.degree() + 1)
    for (i, j), c in chi.to_dict().items():
        coeffs[int(j)] += c
    poly = fmpq_poly(coeffs)
    _, facs = poly.factor()
    base = facs[0][0]
    return tuple(primitive_int([fr(c) for c in base.coeffs()]))


# canonical heights -----------------------------------------------------


def canonical_height_p1(f: RationalMapP1, x, tol: float = 1e-9,
                        check_preperiodic: bool = True) -> HeightValue:
    """Canonical height as a sum of local Green values of the lift at (x, 1)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = f.degree
    if d < 2:
        raise DegreeOne("canonical heights need degree >= 2")
    if isinstance(x, AlgebraicNumber):
        if x.is_rational:
            x = x.rational_value()
        else:
            return _canonical_height_algebraic(f, x, tol, check_preperiodic)
    if check_preperiodic and is_preperiodic_p1(f, x).value:
        return HeightValue.zero()
    primes = set(f.bad_primes())
    if x is not INF:
        primes.update(p for p, _ in factor_int(Fraction(x).denominator))
    places = [ARCH] + [Place(p) for p in sorted(primes)]
    share = tol / len(places)
    arch, arch_err, trunc = 0.0, 0.0, 0.0
    fin = {}
    for v in places:
        g = green_p1(f, x, v, share)
        trunc += g.truncation_error
        if v.is_archimedean:
            arch, arch_err = g.value, g.error
        else:
            fin[v.p] = g.exponent
    return HeightValue.make(arch, arch_err, fin, trunc)


def _canonical_height_algebraic(f, alpha: AlgebraicNumber, tol, check_preperiodic):
    if check_preperiodic:
        try:
            if is_preperiodic_algebraic(f, alpha).value:
                return HeightValue.zero()
        except PrecisionExhausted:
            pass
    n = alpha.degree
    d = f.degree
    bad = f.bad_primes()
    share = tol / (1 + len(bad))
    # archimedean: average of the Green values over the conjugates
    c = f.local_constants(ARCH)
    N = _n_for(c.tail, d, share)
    vals, err = [], 0.0
    for z, rad in alpha.roots:
        if abs(z) > 1:
            X, Z, ln = z / abs(z), 1.0 / abs(z) + 0j, math.log(abs(z))
        else:
            X, Z, ln = z, 1.0 + 0j, 0.0
        val, e = _arch_green(f, complex(X), complex(Z), ln, N)
        vals.append(val)
        err += e + _green_lipschitz(f, rad)
    trunc = c.tail / (d ** N * (d - 1)) if c.tail > 0 else 0.0
    arch = math.fsum(vals) / n
    fin: dict[int, Fraction] = {}
    # good primes: sum of log+|sigma alpha|_p from the Newton polygon of the minimal polynomial
    for p, e in factor_int(alpha.minpoly[-1]):
        if p not in bad:
            fin[p] = Fraction(sum(m * max(Fraction(0), s) for s, m in newton_slopes(alpha.minpoly, p)
                                  if s is not None), n)
    for p in bad:
        e, t = _bad_prime_algebraic(f, alpha, p, share)
        fin[p] = e
        trunc += t
    return HeightValue.make(arch, err / n, fin, trunc)


def _green_lipschitz(f, rad):
    # root balls are ~1e-16 wide; the Green function moves by at most a small multiple
    return 0.0 if rad == 0 else 1e3 * rad


def _bad_prime_algebraic(f: RationalMapP1, alpha: AlgebraicNumber, p: int, tol: float):
    """Orbit-averaged G_p via k exact steps in Q(alpha) and the Gauss norm of the norm form."""
    d = f.degree
    c = f.local_constants(Place(p))
    k = _n_for(c.tail, d, tol)
    K = NumberField(alpha.poly())
    A, B = K.gen(), K.reduce(1)
    n = alpha.degree
    for _ in range(k):
        A, B = _hom_eval_nf(K, f.F0, A, B, d), _hom_eval_nf(K, f.F1, A, B, d)
        bits = max(max((int(abs(cf.p)).bit_length() + int(cf.q).bit_length() for cf in P.coeffs()),
                       default=0) for P in (A, B))
        if bits > BIT_BUDGET:
            raise PrecisionExhausted(f"coefficient size exceeded at prime {p}")
    exps = norm_form_exponents(K.r, [A, B])
    # log||X||_p for X = (alpha, 1): sum over conjugates of log max(|alpha|, 1)
    e = Fraction(exps.get(p, 0), d ** k * n)
    trunc = c.tail / (d ** k * (d - 1))
    return e, trunc


def _hom_eval_nf(K, coeffs, A, B, d):
    acc = K.reduce(coeffs[d])
    bp = K.reduce(1)
    for j in range(d - 1, -1, -1):
        bp = K.mul(bp, B)
        acc = K.mul(acc, A) + K.mul(K.reduce(coeffs[j]), bp)
    return acc % K.r


# split maps ----------------------------------------------------------------


class SplitEndo:
    """F(x1..xn) = (f1(x_s(1)), ..., fn(x_s(n))) with s an optional index permutation."""

    def __init__(self, components, permutation=None):
        comps = [c if isinstance(c, RationalMapP1) else RationalMapP1(c) for c in components]
        if not comps:
            raise ValueError("need at least one component")
        degs = {c.degree for c in comps}
        if len(degs) != 1:
            raise ValueError("all components must have the same degree")
        self.components = tuple(comps)
        self.degree = degs.pop()
        n = len(comps)
        perm = tuple(range(n)) if permutation is None else tuple(int(i) for i in permutation)
        if sorted(perm) != list(range(n)):
            raise ValueError("permutation must rearrange 0..n-1")
        self.permutation = perm

    @property
    def dimension(self) -> int:
        return len(self.components)

    def __call__(self, X):
        if len(X) != self.dimension:
            raise ValueError("point dimension does not match")
        return tuple(f(X[s]) for f, s in zip(self.components, self.permutation))

    def untwisted(self) -> tuple[tuple, int]:
        """Components of the first iterate F^k whose permutation is the identity, and k."""
        n, s = self.dimension, self.permutation
        k, t = 1, s
        while t != tuple(range(n)):
            t = tuple(s[j] for j in t)
            k += 1
        comps = []
        for i in range(n):
            g, j = self.components[i], s[i]
            for _ in range(k - 1):
                g = g.compose(self.components[j])
                j = s[j]
            comps.append(g)
        return tuple(comps), k

    def bad_primes(self) -> list[int]:
        out = set()
        for c in self.components:
            out.update(c.bad_primes())
        return sorted(out)

    def __eq__(self, other):
        return (isinstance(other, SplitEndo) and self.components == other.components
                and self.permutation == other.permutation)

    def __hash__(self):
        return hash((self.components, self.permutation))

    def __repr__(self):
        return f"SplitEndo({list(self.components)}, permutation={self.permutation})"


def split_height(F: SplitEndo, X, tol: float = 1e-9) -> HeightValue:
    if len(X) != F.dimension:
        raise ValueError("component count does not match the point")
    comps = F.components
    if F.permutation != tuple(range(F.dimension)):
        # F^k with s^k = id splits without permutation, and its components' canonical
        # heights (normalized by their own degree d^k) already give h_F
        comps, _ = F.untwisted()
    total = HeightValue.zero()
    for f, x in zip(comps, X):
        total = total + canonical_height_p1(f, x, tol / F.dimension)
    return total


def eval_p1(f: RationalMapP1, x):
    return f(x)

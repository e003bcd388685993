"""Exact solutions of F^m(p) = C(p) and F^m(p) = G^n(p) = C(p), and experiments on them.

Zero-dimensional solution sets are stored as Galois orbits: an irreducible
polynomial r(t) together with the coordinates written as polynomials in a root
of r. Every orbit is checked by substitution modulo r before it is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from flint import fmpq_mat, fmpq_mpoly_ctx, fmpq_poly, nmod_poly

from ._poly import CTX2, NumberField, charpoly_affine, complex_roots, fq, fr, lcm_den, mpoly_terms, primitive_int
from .errors import DegreeBudgetExceeded, PositiveDimensional, RootIsolationFailure
from .heights import AlgebraicNumber, AlgebraicPoint, HeightValue
from .henon import HenonMap
from .places import is_prime
from .p1dyn import INF, RationalMapP1, SplitEndo, canonical_height_p1
from .polymap import PolyMap2
from .skewprod import SkewProduct, height_skew

DEGREE_BUDGET = 4096
BIT_BUDGET = 1 << 16
T = fmpq_poly([0, 1])


# solution varieties ---------------------------------------------------------


@dataclass(frozen=True)
class Orbit:
    """A Galois orbit of points: coordinates are polynomials in a root of ``field``.

    A coordinate may be INF (the point at infinity of a P^1 factor).
    """

    field: tuple
    coords: tuple
    multiplicity: int = 1

    @classmethod
    def make(cls, r: fmpq_poly, coords, multiplicity: int = 1) -> "Orbit":
        r = r / r.coeffs()[-1]
        cs = []
        for c in coords:
            if c is INF:
                cs.append(INF)
            else:
                c = c if isinstance(c, fmpq_poly) else fmpq_poly([fq(c)])
                cs.append(tuple(fr(v) for v in (c % r).coeffs()))
        return cls(tuple(fr(v) for v in r.coeffs()), tuple(cs), multiplicity)

    @property
    def degree(self) -> int:
        return len(self.field) - 1

    def field_poly(self) -> fmpq_poly:
        return fmpq_poly([fq(c) for c in self.field])

    def coord_polys(self) -> list:
        return [c if c is INF else fmpq_poly([fq(v) for v in c]) for c in self.coords]

    def rational_point(self):
        """The point itself when the orbit has degree 1."""
        if self.degree != 1:
            return None
        root = -self.field[0]
        out = []
        for c in self.coord_polys():
            out.append(INF if c is INF else fr(c(fq(root))))
        return tuple(out)

    def numeric_points(self) -> list[tuple]:
        roots = complex_roots(primitive_int(self.field))
        pts = []
        for z, _ in roots:
            pt = []
            for c in self.coords:
                if c is INF:
                    pt.append(complex("inf"))
                    continue
                acc = 0j
                for v in reversed(c):
                    acc = acc * z + float(v)
                pt.append(acc)
            pts.append(tuple(pt))
        return pts

    def to_dict(self) -> dict:
        return {"field": [int(c) for c in primitive_int(self.field)],
                "coords": ["inf" if c is INF else [str(v) for v in c] or ["0"] for c in self.coords],
                "degree": self.degree, "multiplicity": self.multiplicity}


@dataclass
class SolutionVariety:
    """Solutions of a zero-dimensional system as a list of Galois orbits.

    For maps of (P^1)^n the orbits of the factors are combined as a product:
    ``product_parts`` then lists per-coordinate orbit lists and ``orbits`` is empty.
    """

    dimension: int
    orbits: list = field(default_factory=list)
    elimination: fmpq_poly | None = None
    product_parts: list | None = None

    @property
    def count(self) -> int:
        if self.product_parts is not None:
            return math.prod(sum(o.degree for o in part) for part in self.product_parts)
        return sum(o.degree for o in self.orbits)

    def rational_points(self) -> list[tuple]:
        if self.product_parts is not None:
            from itertools import product

            per = [[o.rational_point()[0] for o in part if o.degree == 1] for part in self.product_parts]
            return sorted(product(*per), key=_point_key)
        return sorted((o.rational_point() for o in self.orbits if o.degree == 1), key=_point_key)

    def to_dict(self) -> dict:
        out = {"dimension": self.dimension, "count": self.count}
        if self.elimination is not None:
            out["elimination"] = [int(c) for c in primitive_int([fr(c) for c in self.elimination.coeffs()])]
        if self.product_parts is not None:
            out["product_parts"] = [[o.to_dict() for o in part] for part in self.product_parts]
        else:
            out["orbits"] = [o.to_dict() for o in self.orbits]
        return out


def _point_key(pt):
    return tuple((1, 0) if c is INF else (0, c) for c in pt)


# systems ------------------------------------------------------------------


def _as_plane(m):
    if isinstance(m, PolyMap2):
        return m
    if isinstance(m, SkewProduct):
        if m.sigma is not None:
            raise ValueError("solve skew products in their normalized coordinates")
        return PolyMap2.from_skew(m)
    if isinstance(m, HenonMap):
        return PolyMap2.from_henon(m)
    return None


def _iterate(m, k: int):
    out = m
    for _ in range(k - 1):
        out = out.compose(m)
    return out


def _check_degree(deg: int):
    if deg > DEGREE_BUDGET:
        raise DegreeBudgetExceeded(f"equation degree {deg} exceeds {DEGREE_BUDGET}")


def solve_equalizer(F, m: int, C=None) -> SolutionVariety:
    """All p with F^m(p) = C(p); C defaults to the identity."""
    if m < 1:
        raise ValueError("m must be positive")
    if isinstance(F, SplitEndo):
        return _solve_split([F], [m], C)
    if isinstance(F, RationalMapP1):
        _check_degree(F.degree ** m)
        Fm = _iterate(F, m)
        C = C if C is not None else RationalMapP1([0, 1])
        return _solve_p1([(Fm, C)])
    P = _as_plane(F)
    if P is None:
        raise TypeError(f"unsupported map type {type(F).__name__}")
    _check_degree(P.degree ** m)
    Pm = _iterate(P, m)
    Cm = _as_plane(C) if C is not None else PolyMap2.identity()
    return _solve_plane([Pm.f1 - Cm.f1, Pm.f2 - Cm.f2])


def solve_common(F, G, C=None, m: int = 1, n: int = 1) -> SolutionVariety:
    """All p with F^m(p) = G^n(p) = C(p)."""
    if isinstance(F, SplitEndo) and isinstance(G, SplitEndo):
        return _solve_split([F, G], [m, n], C)
    if isinstance(F, RationalMapP1) and isinstance(G, RationalMapP1):
        _check_degree(max(F.degree ** m, G.degree ** n))
        C = C if C is not None else RationalMapP1([0, 1])
        return _solve_p1([(_iterate(F, m), C), (_iterate(G, n), C)])
    P, Q = _as_plane(F), _as_plane(G)
    if P is None or Q is None:
        raise TypeError("F and G must act on the same space")
    _check_degree(max(P.degree ** m, Q.degree ** n))
    Cm = _as_plane(C) if C is not None else PolyMap2.identity()
    Pm, Qn = _iterate(P, m), _iterate(Q, n)
    eqs = [Pm.f1 - Cm.f1, Pm.f2 - Cm.f2, Qn.f1 - Cm.f1, Qn.f2 - Cm.f2]
    return _solve_plane(eqs)


# one variable -------------------------------------------------------------


def _hom_equation(A: RationalMapP1, C: RationalMapP1):
    """Homogeneous H(X, Z) whose zeros are the points of P^1 where A and C agree."""
    dA, dC = A.degree, C.degree
    # lifts as homogeneous coefficient lists; H = A0*C1 - A1*C0 has degree dA + dC
    def hom(coeffs, d):
        return [Fraction(c) for c in coeffs] + [Fraction(0)] * (d + 1 - len(coeffs))

    A0, A1 = hom(A.F0, dA), hom(A.F1, dA)
    C0, C1 = hom(C.F0, dC), hom(C.F1, dC)
    H = [Fraction(0)] * (dA + dC + 1)
    for i, a in enumerate(A0):
        for j, c in enumerate(C1):
            H[i + j] += a * c
    for i, a in enumerate(A1):
        for j, c in enumerate(C0):
            H[i + j] -= a * c
    return H


def _solve_p1(pairs) -> SolutionVariety:
    """Common zeros in P^1 of the equations A = C for every (A, C) in pairs."""
    G = None
    at_inf = True
    for A, C in pairs:
        H = _hom_equation(A, C)
        if not any(H):
            continue                      # A = C identically
        poly = fmpq_poly([fq(c) for c in H])
        G = poly if G is None else G.gcd(poly)
        at_inf = at_inf and H[-1] == 0    # the coefficient of X^deg vanishes at (1 : 0)
    if G is None:
        raise PositiveDimensional("the equations hold identically")
    orbits = _orbits_univariate(G, _residual_check(pairs))
    if at_inf:
        orbits.append(Orbit.make(T, [INF]))
    return SolutionVariety(1, orbits, G)


def _residual_check(pairs):
    def check(r, theta):
        K = NumberField(r)
        for A, C in pairs:
            H = _hom_equation(A, C)
            if K.eval_poly(H, theta) != 0:
                return False
        return True
    return check


def _orbits_univariate(G: fmpq_poly, check=None) -> list[Orbit]:
    out = []
    if G.degree() <= 0:
        return out
    _, facs = G.factor()
    for r, e in facs:
        r = r / r.coeffs()[-1]
        if check is not None and not check(r, T % r):
            raise AssertionError("solution failed exact verification")
        out.append(Orbit.make(r, [T], e))
    out.sort(key=_orbit_key)
    return out


def _orbit_key(o: Orbit):
    return (o.degree, [str(c) for c in o.field], str(o.coords))


def _solve_split(maps, exps, C) -> SolutionVariety:
    """Product solutions for split maps with identity permutations."""
    n = maps[0].dimension
    for M in maps:
        if M.permutation != tuple(range(n)) or M.dimension != n:
            raise ValueError("split maps must share dimension and have identity permutation")
    comps_C = C.components if C is not None else [RationalMapP1([0, 1])] * n
    parts = []
    for i in range(n):
        pairs = []
        for M, k in zip(maps, exps):
            _check_degree(M.components[i].degree ** k)
            pairs.append((_iterate(M.components[i], k), comps_C[i]))
        parts.append(_solve_p1(pairs).orbits)
    return SolutionVariety(n, [], None, parts)


# two variables -------------------------------------------------------------


_CTX_UY = fmpq_mpoly_ctx.get(("u", "y"), "lex")


def _shift(E, lam: int):
    """E(u - lam*y, y) in the (u, y) ring."""
    u, y = _CTX_UY.gens()
    P = _CTX_UY.from_dict({k: v for k, v in E.to_dict().items()})
    return P.compose(u - lam * y, y)


def _solve_plane(eqs) -> SolutionVariety:
    eqs = [E for E in eqs if E != 0]
    if not eqs:
        raise PositiveDimensional("every equation vanishes identically")
    if len(eqs) == 1:
        raise PositiveDimensional("a single equation defines a curve")
    orbits, R = _solve_system(eqs, 0)
    unique = {}
    for o in orbits:
        if not _satisfies(o, eqs):
            raise AssertionError("solution failed exact verification")
        unique[(o.field, o.coords)] = o
    return SolutionVariety(2, sorted(unique.values(), key=_orbit_key), R)


def _satisfies(o: Orbit, eqs) -> bool:
    r = o.field_poly()
    K = NumberField(r)
    X, Y = o.coord_polys()
    return all(K.eval_mpoly(E, [X, Y]) == 0 for E in eqs)


def _lambda_at(k: int) -> int:
    return (k + 1) // 2 * (1 if k % 2 else -1)


MAX_SHIFTS = 64


def _solve_system(eqs, first: int):
    """Orbits of common zeros, eliminating with u = x + lam*y for lam = _lambda_at(first), ...

    Factors of the eliminant over which u does not separate the points are solved
    again with the extra equation r(x + lam*y) = 0 and the next shifts.
    """
    pairs = [(i, j) for i in range(len(eqs)) for j in range(i + 1, len(eqs))]
    pairs.sort(key=lambda ij: int(eqs[ij[0]].total_degree()) * int(eqs[ij[1]].total_degree()))
    for i, j in pairs:
        if int(eqs[i].gcd(eqs[j]).total_degree()) <= 0:
            break
    else:
        raise PositiveDimensional("the equations share a curve component")
    E1, E2 = eqs[i], eqs[j]
    rest = [E for k, E in enumerate(eqs) if k not in (i, j)]
    bezout = int(E1.total_degree()) * int(E2.total_degree())
    if bezout > DEGREE_BUDGET:
        raise DegreeBudgetExceeded(f"elimination degree bound {bezout} exceeds {DEGREE_BUDGET}")
    for k in range(first, first + MAX_SHIFTS):
        lam = _lambda_at(k)
        A, B = _shift(E1, lam), _shift(E2, lam)
        Ru = _eliminant(A, B)
        if Ru.degree() <= 0:
            return [], Ru
        orbits, unresolved = [], []
        for r, e in Ru.factor()[1]:
            r = r / r.coeffs()[-1]
            kind, Y = _common_root(A, B, r)
            if kind == "none":
                continue                      # no finite point over this factor
            if kind == "many":
                unresolved.append(r)          # u does not separate the points over r
                continue
            X = (T - lam * Y) % r
            o = Orbit.make(r, [X, Y], e)
            if _satisfies(o, rest):
                orbits.append(o)
        if unresolved and not orbits:
            continue
        for r in unresolved:
            x, y = CTX2.gens()
            line = _upoly_at(r, x + lam * y)
            sub, _ = _solve_system(eqs + [line], k + 1)
            orbits += sub
        return orbits, Ru
    raise DegreeBudgetExceeded("no separating linear form within the shift budget")


def _upoly_at(r: fmpq_poly, arg):
    acc = CTX2.from_dict({})
    for c in reversed(r.coeffs()):
        acc = acc * arg + CTX2.from_dict({(0, 0): c} if c != 0 else {})
    return acc


def _eliminant(A, B) -> fmpq_poly:
    R = A.resultant(B, "y")
    terms = mpoly_terms(R)
    if not terms:
        raise PositiveDimensional("resultant vanishes identically")
    deg = max(k[0] for k in terms)
    Ru = fmpq_poly([fq(terms.get((i, 0), 0)) for i in range(deg + 1)])
    bits = max(int(c.p).bit_length() + int(c.q).bit_length() for c in Ru.coeffs())
    if bits > BIT_BUDGET:
        raise DegreeBudgetExceeded("elimination coefficients exceed the bit budget")
    return Ru


def _common_root(A, B, r):
    """("none" | "one" | "many", Y): common roots in y of A(theta, y), B(theta, y), theta a root of r.

    The gcd is computed modulo word-size primes and lifted by CRT and rational
    reconstruction; a single root is accepted only after exact substitution.
    Unlucky primes can only raise the gcd degree, so "many" is confirmed on two primes.
    """
    a, b = _coeffs_in_y(A, r), _coeffs_in_y(B, r)
    if not a or not b:
        return _classify_exact(A, B, r)
    def ints(e):
        return [int(fr(c) * den) for c in e.coeffs()]

    den = lcm_den([fr(c) for P in (a, b, [r]) for e in P for c in e.coeffs()])
    ri, ai, bi = ints(r), [ints(e) for e in a], [ints(e) for e in b]
    K = NumberField(r)
    degs, residues, modulus, last = [], None, 1, None
    for p in _primes():
        res = _gcd_mod_p(ai, bi, ri, p)
        if res is None:
            continue
        g, distinct, rp = res
        if distinct == 0:
            return "none", None
        if distinct >= 2:
            degs.append(distinct)
            if len(degs) >= 2:
                return "many", None
            continue
        # g = (y - Y)^k, so Y = -g[k-1] / k
        k = len(g) - 1
        y0 = (g[k - 1] * nmod_poly([pow(k, -1, p)], p)) % rp
        vec = [int(c) for c in _pad(y0, r.degree())]
        if residues is None:
            residues, modulus = vec, p
        else:
            residues = [_crt(x, modulus, y, p) for x, y in zip(residues, vec)]
            modulus *= p
        cand = _reconstruct(residues, modulus)
        if cand is not None and cand == last:
            Y = -fmpq_poly([fq(c) for c in cand])
            if K.eval_mpoly(A, [T % r, Y]) == 0 and K.eval_mpoly(B, [T % r, Y]) == 0:
                return "one", Y % r
        last = cand
        if modulus.bit_length() > 4 * BIT_BUDGET:
            break
    return _classify_exact(A, B, r)


def _classify_exact(A, B, r):
    K = NumberField(r)
    g = _gcd_in_y(A, B, r)
    if len(g) <= 1:
        return "none", None
    deriv = _trim([(c * i) % r for i, c in enumerate(g)][1:])
    h = _kgcd(g, deriv, K)
    if (len(g) - 1) - (len(h) - 1) >= 2:
        return "many", None
    k = len(g) - 1
    return "one", (-g[k - 1] / k) % r


def _primes(start: int = (1 << 62) - 1):
    n = start
    while True:
        if is_prime(n):
            yield n
        n -= 2


def _pad(e, n: int) -> list:
    cs = e.coeffs() if hasattr(e, "coeffs") else list(e)
    return list(cs) + [0] * (n - len(cs))


def _crt(x: int, m: int, y: int, p: int) -> int:
    t = ((y - x) * pow(m, -1, p)) % p
    return x + m * t


def _reconstruct(residues, modulus):
    """Rational reconstruction of every residue, or None if one fails."""
    out = []
    bound = math.isqrt(modulus // 2)
    for a in residues:
        r0, r1, s0, s1 = modulus, a % modulus, 0, 1
        while r1 > bound:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            s0, s1 = s1, s0 - q * s1
        if s1 == 0 or abs(s1) > bound or math.gcd(r1, abs(s1)) != 1:
            return None
        out.append(Fraction(r1, s1))
    return out


def _gcd_mod_p(ai, bi, ri, p):
    """(monic gcd, number of distinct roots, r mod p) over F_p[t]/(r)[y], or None for an unlucky prime."""
    rp = nmod_poly(ri, p)
    if rp.degree() != len(ri) - 1:
        return None
    a = _trim([nmod_poly(c, p) % rp for c in ai])
    b = _trim([nmod_poly(c, p) % rp for c in bi])
    if len(a) != len(ai) or len(b) != len(bi):
        return None                           # leading coefficient vanished mod p
    try:
        g = _gcd_lists_mod(a, b, rp)
        deriv = _trim([(c * i) % rp for i, c in enumerate(g)][1:])
        h = _gcd_lists_mod(g, deriv, rp) if deriv else g
    except ZeroDivisionError:
        return None
    return g, (len(g) - 1) - (len(h) - 1), rp


def _gcd_lists_mod(a, b, rp):
    while b:
        a, b = b, _prem_mod(a, b, rp)
    inv = _inv_mod(a[-1], rp)
    return [(c * inv) % rp for c in a]


def _inv_mod(a, rp):
    g, s, _ = a.xgcd(rp)
    if g.degree() != 0:
        raise ZeroDivisionError
    p = rp.modulus()
    return (s * nmod_poly([pow(int(g.coeffs()[0]), -1, p)], p)) % rp


def _prem_mod(a, b, rp):
    a = list(a)
    inv = _inv_mod(b[-1], rp)
    while len(a) >= len(b):
        q = (a[-1] * inv) % rp
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] = (a[shift + i] - q * c) % rp
        a.pop()
        a = _trim(a)
    return a


def _coeffs_in_y(P, r):
    """P(theta, y) as a list of field elements, lowest y-degree first."""
    by = {}
    for (eu, ey), c in mpoly_terms(P).items():
        by[ey] = by.get(ey, fmpq_poly([])) + fq(c) * T ** eu
    deg = max(by) if by else -1
    return _trim([by.get(k, fmpq_poly([])) % r for k in range(deg + 1)])


def _trim(P):
    while P and P[-1] == 0:
        P.pop()
    return P


def _gcd_in_y(A, B, r):
    """Monic gcd over Q[t]/(r) of A(t, y) and B(t, y) as a coefficient list."""
    return _kgcd(_coeffs_in_y(A, r), _coeffs_in_y(B, r), NumberField(r))


def _kgcd(a, b, K):
    while b:
        a, b = b, _prem(a, b, K)
    if not a:
        return []
    inv = K.inv(a[-1])
    return [K.mul(c, inv) for c in a]


def _prem(a, b, K):
    a = list(a)
    inv = K.inv(b[-1])
    while len(a) >= len(b):
        q = K.mul(a[-1], inv)
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] = (a[shift + i] - K.mul(q, c)) % K.r
        a.pop()
        a = _trim(a)
    return a


# heights along solution sets ---------------------------------------------


@dataclass(frozen=True)
class DecayRow:
    m: int
    count: int
    max_height: float
    scaled: float            # d^m * max height
    scaled_net: float        # (d^m - deg C) * max height
    error: float

    def to_dict(self) -> dict:
        return {"m": self.m, "count": self.count, "max_height": self.max_height,
                "d^m_times_max": self.scaled, "net_times_max": self.scaled_net,
                "error_bound": self.error}


def orbit_height(F, o: Orbit, tol: float = 1e-9) -> HeightValue:
    """Canonical height (for F) of any point of the orbit."""
    if isinstance(F, RationalMapP1):
        c = o.coord_polys()[0]
        if c is INF:
            return canonical_height_p1(F, INF, tol)
        if o.degree == 1:
            return canonical_height_p1(F, o.rational_point()[0], tol)
        if c != T:
            raise ValueError("expected the orbit generator as coordinate")
        return canonical_height_p1(F, AlgebraicNumber(primitive_int(o.field)), tol)
    if isinstance(F, PolyMap2) and F.to_skew() is not None:
        F = F.to_skew()
    if isinstance(F, SkewProduct):
        if o.degree == 1:
            return height_skew(F, o.rational_point(), tol)
        pt = AlgebraicPoint.joint([fr(c) for c in o.field], o.coord_polys())
        return height_skew(F, pt, tol)
    raise TypeError("heights along solution sets need a P^1 map or a skew product")


def height_decay_report(F, C, m_range, tol: float = 1e-9) -> list[DecayRow]:
    """For each m: the largest canonical height among solutions of F^m = C, scaled by d^m."""
    d = F.degree
    degC = C.degree if C is not None else 1
    rows = []
    for m in m_range:
        var = solve_equalizer(F, m, C)
        best, err = 0.0, 0.0
        for o in var.orbits:
            h = orbit_height(F, o, tol)
            if h.total() >= best:
                best, err = h.total(), h.error_bound()
        rows.append(DecayRow(m, var.count, best, d ** m * best, (d ** m - degC) * best,
                             d ** m * err))
    return rows


# Zariski density -----------------------------------------------------------


@dataclass
class DensityReport:
    counts: dict
    orbits: list
    curve_degree: int | None
    curves: list                 # each a dict {(i, j): Fraction}
    max_heights: dict = field(default_factory=dict)
    degree: int = 1

    @property
    def found(self) -> bool:
        return self.curve_degree is not None

    @property
    def total_points(self) -> int:
        return sum(o.degree for o in self.orbits)

    def points_on(self, curve: dict) -> int:
        """How many accumulated points lie on the curve sum c_ij x^i y^j = 0."""
        return sum(o.degree for o in self.orbits if _curve_vanishes(curve, o))

    def rows(self) -> list[dict]:
        out = []
        for (m, n), c in sorted(self.counts.items()):
            h = self.max_heights.get((m, n))
            out.append({"m": m, "n": n, "count": c, "max_height": h,
                        "d^m_times_max": None if h is None else self.degree ** m * h,
                        "curve_found": self.found})
        return out


def density_report(F, G, C=None, m_range=(1,), n_range=(1,), curve_degree_cap: int = 3,
                   tol: float = 1e-9) -> DensityReport:
    """Accumulate solutions over (m, n) and find the lowest-degree curves through all of them."""
    counts, heights = {}, {}
    orbits: list[Orbit] = []
    seen = set()
    for m in m_range:
        for n in n_range:
            var = solve_common(F, G, C, m, n)
            counts[(m, n)] = var.count
            heights[(m, n)] = _max_height(F, var.orbits, tol)
            for o in var.orbits:
                key = _orbit_identity(o)
                if key not in seen:
                    seen.add(key)
                    orbits.append(o)
    d = _as_plane(F).degree
    if not orbits:
        return DensityReport(counts, [], None, [], heights, d)
    for D in range(1, curve_degree_cap + 1):
        curves = _curves_through(orbits, D)
        if curves:
            for cv in curves:
                if not all(_curve_vanishes(cv, o) for o in orbits):
                    raise AssertionError("curve failed exact verification")
            return DensityReport(counts, orbits, D, curves, heights, d)
    return DensityReport(counts, orbits, None, [], heights, d)


def _orbit_identity(o: Orbit):
    """Key depending on the point set only, not on the chosen primitive element."""
    finite = [i for i, c in enumerate(o.coords) if c is not INF]
    if not finite:
        return (o.degree, ())
    polys = o.coord_polys()
    chi = charpoly_affine(o.field_poly(), [polys[i] for i in finite])
    return (o.degree, tuple(finite), str(chi))


def _max_height(F, orbits, tol):
    """Largest canonical height among the orbits, or None when F has no height engine."""
    try:
        return max((orbit_height(F, o, tol).total() for o in orbits), default=0.0)
    except TypeError:
        return None


def _monomials(D):
    return [(i, s - i) for s in range(D + 1) for i in range(s, -1, -1)]


def _curves_through(orbits, D) -> list[dict]:
    monos = _monomials(D)
    rows = []
    for o in orbits:
        K = NumberField(o.field_poly())
        X, Y = o.coord_polys()
        vals = [K.mul(K.power(X, i), K.power(Y, j)) for i, j in monos]
        for k in range(o.degree):
            rows.append([v.coeffs()[k] if k < len(v.coeffs()) else 0 for v in vals])
    basis = _nullspace(rows, len(monos))
    return [{mono: c for mono, c in zip(monos, vec) if c} for vec in basis]


def _nullspace(rows, ncols) -> list[list[Fraction]]:
    if not rows:
        rows = [[0] * ncols]
    M = fmpq_mat(len(rows), ncols, [fq(c) for row in rows for c in row])
    R, rank = M.rref()
    pivots = []
    for i in range(rank):
        for j in range(ncols):
            if R[i, j] != 0:
                pivots.append(j)
                break
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for fj in free:
        vec = [Fraction(0)] * ncols
        vec[fj] = Fraction(1)
        for i, pj in enumerate(pivots):
            vec[pj] = -fr(R[i, fj])
        basis.append(vec)
    return basis


def _curve_vanishes(curve: dict, o: Orbit) -> bool:
    K = NumberField(o.field_poly())
    X, Y = o.coord_polys()
    E = CTX2.from_dict({k: fq(v) for k, v in curve.items()})
    return K.eval_mpoly(E, [X, Y]) == 0


# equidistribution ---------------------------------------------------------


@dataclass(frozen=True)
class Law:
    """A reference law on a one-dimensional projection of the periodic points."""

    name: str
    projection: object
    cdf: object
    atom: float | None = None


def uniform_circle() -> Law:
    return Law("circle", lambda z: (np.angle(z) % (2 * np.pi)) / (2 * np.pi), lambda t: np.clip(t, 0, 1))


def arcsine(a: float = -2.0, b: float = 2.0) -> Law:
    mid, half = (a + b) / 2, (b - a) / 2
    return Law("arcsine", lambda z: np.real(z),
               lambda t: 0.5 + np.arcsin(np.clip((t - mid) / half, -1, 1)) / np.pi)


def dirac(point: complex) -> Law:
    return Law("dirac", lambda z: np.abs(z - point), lambda t: (np.asarray(t) >= 0).astype(float), 0.0)


@dataclass(frozen=True)
class EquidistResult:
    law: str
    n: int
    points: int
    ks: float
    histogram: list              # (bin_center, empirical_mass, reference_mass)


def periodic_points(f: RationalMapP1, n: int, max_iter: int = 500) -> np.ndarray:
    """All finite solutions of f^n(x) = x, numerically, with multiplicity."""
    if f.is_polynomial:
        return _aberth_periodic(f, n, max_iter)
    g = _iterate(f, n)
    H = _hom_equation(g, RationalMapP1([0, 1]))
    poly = fmpq_poly([fq(c) for c in H])
    roots = []
    for r, e in poly.factor()[1]:
        ints = primitive_int([fr(c) for c in r.coeffs()])
        roots += [z for z, _ in complex_roots(ints)] * e
    return np.array(roots, dtype=complex)


def _aberth_periodic(f: RationalMapP1, n: int, max_iter: int) -> np.ndarray:
    coeffs = [float(c) for c in f.num_coeffs()]
    d = f.degree
    N = d ** n
    dcoeffs = [k * c for k, c in enumerate(coeffs)][1:]

    def ev(z):
        der = np.ones_like(z)
        w = z.copy()
        for _ in range(n):
            fw = np.zeros_like(w)
            dw = np.zeros_like(w)
            for c in reversed(coeffs):
                fw = fw * w + c
            for c in reversed(dcoeffs):
                dw = dw * w + c
            der = der * dw
            w = fw
        return w - z, der - 1

    radius = 1 + max(abs(c) for c in coeffs[:-1]) / abs(coeffs[-1])
    k = np.arange(N)
    z = radius * np.exp(2j * np.pi * (k + 0.25) / N + 0.4j)
    for _ in range(max_iter):
        with np.errstate(all="ignore"):
            g, dg = ev(z)
            ratio = g / dg
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1)
            s = (1 / diff).sum(axis=1) - 1
            w = ratio / (1 - ratio * s)
        w = np.where(np.isfinite(w), w, 0)
        z = z - w
        if np.max(np.abs(w)) < 1e-14 * max(1.0, np.max(np.abs(z))):
            break
    else:
        raise RootIsolationFailure("Aberth iteration did not converge")
    if not np.all(np.isfinite(z)):
        raise RootIsolationFailure("Aberth iteration diverged")
    return z


def ks_statistic(samples: np.ndarray, law: Law) -> float:
    x = np.sort(np.asarray(law.projection(samples), dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    if law.atom is not None:
        return float(np.mean(x > 1e-9))
    F = law.cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def equidistribution_check(f: RationalMapP1, n: int, reference: Law, bins: int = 32) -> EquidistResult:
    pts = periodic_points(f, n)
    ks = ks_statistic(pts, reference)
    x = np.asarray(reference.projection(pts), dtype=float)
    if reference.atom is not None:
        edges = np.linspace(0, 1, bins + 1)
    else:
        lo, hi = (0.0, 1.0) if reference.name == "circle" else (float(x.min()), float(x.max()))
        if reference.name == "arcsine":
            lo, hi = -2.0, 2.0
        edges = np.linspace(lo, hi, bins + 1)
    hist, _ = np.histogram(np.clip(x, edges[0], edges[-1]), bins=edges)
    cdf = reference.cdf(edges)
    if reference.atom is not None:
        cdf[0] = 0.0  # the atom belongs to the first bin
    ref = np.diff(cdf)
    rows = [(float((edges[k] + edges[k + 1]) / 2), float(hist[k] / len(x)), float(ref[k]))
            for k in range(bins)]
    return EquidistResult(reference.name, n, len(pts), ks, rows)

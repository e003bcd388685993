"""Exact classification of one-variable polynomials up to linear maps.

Chebyshev and power-map conjugacy, linear relatedness, x^s h(x^t) normal
forms, the symmetry group G(f), linear extraction from A o C = D o B and
common normal forms. Linear maps may live in a number field Q(theta); their
coefficients are then fmpq_poly in theta reduced modulo the field polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

from flint import fmpq, fmpq_poly, fmpz_poly

from ._poly import CTX2, fq, fr, mpoly_terms
from .errors import DegreeOne, PowerMapDegenerate, PreconditionViolated, SpecialInput

X = fmpq_poly([0, 1])


def as_poly(f) -> fmpq_poly:
    if isinstance(f, fmpq_poly):
        return f
    if isinstance(f, str):
        from .parsing import parse_upoly

        return parse_upoly(f)
    if hasattr(f, "den") and hasattr(f, "num"):
        if not f.is_polynomial:
            raise ValueError("expected a polynomial map")
        return f.num / f.den.coeffs()[0]
    return fmpq_poly([fq(c) for c in f])


def _need_degree(f: fmpq_poly, at_least: int = 2):
    if f.degree() < at_least:
        raise DegreeOne(f"polynomial of degree {f.degree()} (need >= {at_least})")


def format_poly(f: fmpq_poly, var: str = "x") -> str:
    from .parsing import format_upoly

    return format_upoly([fr(c) for c in f.coeffs()], var)


# number-field coefficients ----------------------------------------------


def _red(a: fmpq_poly, r):
    return a % r if r is not None else a


def _const(c) -> fmpq_poly:
    return fmpq_poly([fq(c)]) if not isinstance(c, fmpq_poly) else c


def _kpoly(f: fmpq_poly) -> list:
    return [fmpq_poly([c]) for c in f.coeffs()]


def _kpoly_trim(P):
    P = list(P)
    while P and P[-1] == 0:
        P.pop()
    return P


def _kpoly_add(P, Q, r):
    n = max(len(P), len(Q))
    out = []
    for i in range(n):
        a = P[i] if i < len(P) else fmpq_poly([])
        b = Q[i] if i < len(Q) else fmpq_poly([])
        out.append(_red(a + b, r))
    return _kpoly_trim(out)


def _kpoly_mul(P, Q, r):
    if not P or not Q:
        return []
    out = [fmpq_poly([]) for _ in range(len(P) + len(Q) - 1)]
    for i, a in enumerate(P):
        if a == 0:
            continue
        for j, b in enumerate(Q):
            out[i + j] += a * b
    return _kpoly_trim([_red(c, r) for c in out])


def _kpoly_compose(P, Q, r):
    acc = []
    for c in reversed(P):
        acc = _kpoly_add(_kpoly_mul(acc, Q, r), [c], r)
    return acc


def _kpoly_scale(P, s, r):
    return _kpoly_trim([_red(c * s, r) for c in P])


@dataclass(frozen=True)
class LinearMap:
    """x -> a*x + b. With ``field`` set, a and b are elements of Q[theta]/(field)."""

    a: object
    b: object = 0
    field: tuple | None = None

    def __post_init__(self):
        if self.field is None:
            a, b = Fraction(_as_fraction(self.a)), Fraction(_as_fraction(self.b))
            if a == 0:
                raise ValueError("linear map needs a nonzero slope")
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)
        else:
            r = fmpq_poly([fq(c) for c in self.field])
            object.__setattr__(self, "field", tuple(fr(c) for c in r.coeffs()))
            object.__setattr__(self, "a", tuple(fr(c) for c in (_const(self.a) % r).coeffs()))
            object.__setattr__(self, "b", tuple(fr(c) for c in (_const(self.b) % r).coeffs()))

    @classmethod
    def identity(cls) -> "LinearMap":
        return cls(1, 0)

    @property
    def is_rational(self) -> bool:
        return self.field is None

    @property
    def modulus(self):
        return None if self.field is None else fmpq_poly([fq(c) for c in self.field])

    def _ab(self):
        if self.field is None:
            return _const(self.a), _const(self.b)
        return (fmpq_poly([fq(c) for c in self.a]), fmpq_poly([fq(c) for c in self.b]))

    def kpoly(self):
        a, b = self._ab()
        return _kpoly_trim([b, a])

    def inverse(self) -> "LinearMap":
        a, b = self._ab()
        r = self.modulus
        if r is None:
            return LinearMap(1 / self.a, -self.b / self.a)
        ia = _nf_inv(a, r)
        return LinearMap(ia, _red(-b * ia, r), self.field)

    def compose(self, other: "LinearMap") -> "LinearMap":
        """self o other."""
        r = _common_field(self, other)
        a1, b1 = self._ab()
        a2, b2 = other._ab()
        fld = None if r is None else tuple(fr(c) for c in r.coeffs())
        if r is None:
            return LinearMap(self.a * other.a, self.a * other.b + self.b)
        return LinearMap(_red(a1 * a2, r), _red(a1 * b2 + b1, r), fld)

    def __call__(self, value):
        if self.field is not None:
            raise TypeError("evaluate number-field maps through kpoly")
        return self.a * value + self.b

    def __str__(self):
        if self.field is None:
            return format_poly(fmpq_poly([fq(self.b), fq(self.a)]))
        fa = format_poly(fmpq_poly([fq(c) for c in self.a]), "t")
        fb = format_poly(fmpq_poly([fq(c) for c in self.b]), "t")
        fr_ = format_poly(self.modulus, "t")
        return f"({fa})*x + ({fb}) where {fr_} = 0"


def _as_fraction(c):
    if isinstance(c, fmpq_poly):
        cs = c.coeffs()
        if len(cs) > 1:
            raise ValueError("rational linear map got a non-constant coefficient")
        return fr(cs[0]) if cs else Fraction(0)
    if isinstance(c, fmpq):
        return fr(c)
    return c


def _nf_inv(a, r):
    g, s, _ = a.xgcd(r)
    return (s / g.coeffs()[0]) % r


def _common_field(*maps):
    fields = {m.field for m in maps if m.field is not None}
    if len(fields) > 1:
        raise ValueError("linear maps live in different number fields")
    if not fields:
        return None
    return fmpq_poly([fq(c) for c in fields.pop()])


def conjugate(l: LinearMap, f: fmpq_poly):
    """l o f o l^-1 as a polynomial over the field of l (a list of coefficients)."""
    r = l.modulus
    return _kpoly_compose(_kpoly_compose(l.kpoly(), _kpoly(f), r), l.inverse().kpoly(), r)


def _kpoly_equal(P, Q, r) -> bool:
    return _kpoly_add(P, _kpoly_scale(Q, fmpq_poly([-1]), r), r) == []


def _kpoly_to_rational(P) -> fmpq_poly | None:
    coeffs = []
    for c in P:
        if c.degree() > 0:
            return None
        coeffs.append(c.coeffs()[0] if c.coeffs() else fmpq(0))
    return fmpq_poly(coeffs)


def verify_conjugation(l: LinearMap, f, g) -> bool:
    """Exact check of l o f = g o l."""
    f, g = as_poly(f), as_poly(g)
    r = l.modulus
    lhs = _kpoly_compose(l.kpoly(), _kpoly(f), r)
    rhs = _kpoly_compose(_kpoly(g), l.kpoly(), r)
    return _kpoly_equal(lhs, rhs, r)


def verify_relation(f, l1: LinearMap, g, l2: LinearMap) -> bool:
    """Exact check of f = l1 o g o l2."""
    f, g = as_poly(f), as_poly(g)
    r = _common_field(l1, l2)
    rhs = _kpoly_compose(_kpoly_compose(l1.kpoly(), _kpoly(g), r), l2.kpoly(), r)
    return _kpoly_equal(_kpoly(f), rhs, r)


# Chebyshev -------------------------------------------------------------


def chebyshev(d: int) -> fmpq_poly:
    """T_d with T_d(u + 1/u) = u^d + u^-d."""
    if d < 1:
        raise ValueError("d must be positive")
    prev, cur = fmpq_poly([2]), X
    for _ in range(d - 1):
        prev, cur = cur, X * cur - prev
    return cur


# conjugation solver -----------------------------------------------------


def linear_conjugation_solve(f, g) -> list[LinearMap]:
    """All linear l = a x + b (over Q or a number field) with l o f o l^-1 = g.

    A solution with ``field`` of degree k stands for the k conjugate solutions.
    """
    f, g = as_poly(f), as_poly(g)
    d = f.degree()
    if g.degree() != d:
        raise ValueError("degrees differ")
    _need_degree(f)
    fc, gc = f.coeffs(), g.coeffs()
    r = fc[d] / gc[d]                          # a^(d-1) = r
    x, al = CTX2.gens()
    beta = (al * fc[d - 1] - gc[d - 1] * r) / (d * gc[d] * r)
    lin = al * x + beta
    comp = CTX2.from_dict({})
    for c in reversed(gc):
        comp = comp * lin + c
    lhs = CTX2.from_dict({})
    for c in reversed(fc):
        lhs = lhs * x + c
    E = al * lhs + beta - comp
    modulus = fmpq_poly([-r] + [0] * (d - 2) + [1])
    by_x = {}
    for (ex, ea), c in mpoly_terms(E).items():
        by_x.setdefault(ex, {})[ea] = c
    G = modulus
    for coeffs in by_x.values():
        poly = fmpq_poly([fq(coeffs.get(i, 0)) for i in range(max(coeffs) + 1)]) % modulus
        G = G.gcd(poly) if poly != 0 else G
        if G.degree() == 0:
            return []
    beta_poly = fmpq_poly([fq(-gc[d - 1] * r / (d * gc[d] * r)), fq(fc[d - 1] / (d * gc[d] * r))])
    out = []
    for m in _factor_q(G):
        if m.degree() == 1:
            a = -m.coeffs()[0] / m.coeffs()[1]
            b = beta_poly(a)
            sol = LinearMap(fr(a), fr(b))
        else:
            sol = LinearMap(X, beta_poly % m, tuple(fr(c) for c in m.coeffs()))
        if not verify_conjugation(sol, f, g):
            raise AssertionError("conjugation solution failed exact verification")
        out.append(sol)
    return sorted(out, key=_solution_key)


def _factor_q(G: fmpq_poly) -> list[fmpq_poly]:
    """Monic irreducible factors over Q."""
    _, facs = G.factor()
    out = []
    for m, _ in facs:
        out.append(m / m.coeffs()[-1])
    return out


def _solution_key(l: LinearMap):
    if l.field is None:
        return (0, l.a != 1, l.a < 0, abs(l.a), l.a, l.b)
    return (len(l.field), True, True, 0, Fraction(0), Fraction(0))


# linear relatedness --------------------------------------------------------


@dataclass(frozen=True)
class _Decomposition:
    """f = A o N o C with N monic, no x^(d-1) term, N(0) = 0."""

    A: LinearMap
    N: fmpq_poly
    C: LinearMap


def _decompose(f: fmpq_poly) -> _Decomposition:
    d = f.degree()
    cs = f.coeffs()
    c = cs[d - 1] / (d * cs[d])
    C = LinearMap(1, fr(c))
    shifted = f(X - c)            # f o C^-1
    lead = shifted.coeffs()[d]
    const = shifted.coeffs()[0]
    N = (shifted - const) / lead
    return _Decomposition(LinearMap(fr(lead), fr(const)), N, C)


def is_power_related(f) -> bool:
    """True when f = l1 o x^d o l2 for linear l1, l2."""
    f = as_poly(f)
    _need_degree(f)
    return _decompose(f).N == X ** f.degree()


@dataclass(frozen=True)
class Relation:
    l1: LinearMap
    l2: LinearMap

    def __iter__(self):
        return iter((self.l1, self.l2))


def linearly_related(f, g) -> Relation | None:
    """l1, l2 with f = l1 o g o l2, or None; rational relators are preferred."""
    f, g = as_poly(f), as_poly(g)
    d = f.degree()
    if g.degree() != d:
        raise ValueError("degrees differ")
    _need_degree(f)
    Df, Dg = _decompose(f), _decompose(g)
    nf, ng = Df.N.coeffs(), Dg.N.coeffs()
    # N_f(x) = N_g(u x) / u^d  <=>  c_k(f) u^(d-k) = c_k(g)
    U = None
    for k in range(1, d - 1):
        a = nf[k] if k < len(nf) else 0
        b = ng[k] if k < len(ng) else 0
        if (a == 0) != (b == 0):
            return None
        if a == 0:
            continue
        eq = fmpq_poly([-b] + [0] * (d - k - 1) + [a])
        U = eq if U is None else U.gcd(eq)
        if U.degree() == 0:
            return None
    if U is None:
        u, field_ = fmpq(1), None
    else:
        facs = sorted(_factor_q(U), key=lambda m: (m.degree(), _rat_root_key(m)))
        m = facs[0]
        if m.degree() == 1:
            u, field_ = -m.coeffs()[0], None
        else:
            u, field_ = X, m
    fld = None if field_ is None else tuple(fr(c) for c in field_.coeffs())
    if fld is None:
        S = LinearMap(fr(u), 0)
        D = LinearMap(1 / fr(u) ** d, 0)
    else:
        S = LinearMap(X, 0, fld)
        D = LinearMap(_nf_inv(X ** d % field_, field_), 0, fld)
    l1 = _lift(Df.A, fld).compose(D).compose(_lift(Dg.A.inverse(), fld))
    l2 = _lift(Dg.C.inverse(), fld).compose(S).compose(_lift(Df.C, fld))
    if not verify_relation(f, l1, g, l2):
        raise AssertionError("relation failed exact verification")
    return Relation(l1, l2)


def _rat_root_key(m):
    if m.degree() != 1:
        return (1, 0)
    root = fr(-m.coeffs()[0] / m.coeffs()[1])
    return (root != 1, root < 0, abs(root))


def _lift(l: LinearMap, fld):
    if fld is None or l.field is not None:
        return l
    return LinearMap(_const(fq(l.a)), _const(fq(l.b)), fld)


# special polynomials ----------------------------------------------------


@dataclass(frozen=True)
class SpecialVerdict:
    """kind is "Power", "Chebyshev" or "NotSpecial"; l o f o l^-1 is the model map."""

    kind: str
    conjugator: LinearMap | None = None
    sign: int = 1

    def model(self, d: int) -> fmpq_poly | None:
        if self.kind == "Power":
            return X ** d
        if self.kind == "Chebyshev":
            return self.sign * chebyshev(d)
        return None

    def __str__(self):
        if self.kind == "NotSpecial":
            return "NotSpecial"
        if self.kind == "Power":
            return f"PowerConjugate({self.conjugator})"
        return f"ChebyshevConjugate({self.conjugator}, sign={self.sign:+d})"


def is_special(f) -> SpecialVerdict:
    f = as_poly(f)
    _need_degree(f)
    d = f.degree()
    for kind, sign, model in (("Power", 1, X ** d), ("Chebyshev", 1, chebyshev(d)),
                              ("Chebyshev", -1, -chebyshev(d))):
        sols = linear_conjugation_solve(f, model)
        if sols:
            return SpecialVerdict(kind, sols[0], sign)
    return SpecialVerdict("NotSpecial")


# x^s h(x^t) normal form ------------------------------------------------


@dataclass(frozen=True)
class NormalFormXSHXT:
    """phi o f o phi^-1 = x^s h(x^t)."""

    s: int
    t: int
    h: fmpq_poly
    phi: LinearMap

    def expand(self) -> fmpq_poly:
        return X ** self.s * self.h(X ** self.t)

    def __str__(self):
        return f"s={self.s}, t={self.t}, h={format_poly(self.h, 'u')}, phi={self.phi}"


def _shape(g: fmpq_poly) -> tuple[int, int, fmpq_poly]:
    cs = g.coeffs()
    exps = [k for k, c in enumerate(cs) if c != 0]
    s = exps[0]
    t = reduce(math.gcd, (e - s for e in exps[1:]), 0)
    if t == 0:
        return s, 0, fmpq_poly([cs[s]])
    h = fmpq_poly([cs[s + j * t] if s + j * t < len(cs) else 0
                   for j in range((exps[-1] - s) // t + 1)])
    return s, t, h


def _centering(f: fmpq_poly) -> LinearMap:
    d = f.degree()
    cs = f.coeffs()
    return LinearMap(1, fr(cs[d - 1] / (d * cs[d])))


def normal_form_xsht(f) -> NormalFormXSHXT:
    f = as_poly(f)
    _need_degree(f)
    if is_power_related(f):
        raise PowerMapDegenerate("f is linearly related to a power map")
    C = _centering(f)
    centered = _kpoly_to_rational(conjugate(C, f))
    s, t, h = _shape(centered)
    if t >= 2:
        nf = NormalFormXSHXT(s, t, h, C)
    else:
        # t >= 2 forces a vanishing x^(d-1) term, so only the centering can give it
        cs = f.coeffs()
        s = next(k for k, c in enumerate(cs) if c != 0)
        nf = NormalFormXSHXT(s, 1, fmpq_poly(list(cs[s:])), LinearMap.identity())
    if _kpoly_to_rational(conjugate(nf.phi, f)) != nf.expand():
        raise AssertionError("normal form failed exact verification")
    return nf


# symmetry group --------------------------------------------------------


def cyclotomic(n: int) -> fmpq_poly:
    return fmpq_poly(list(fmpz_poly.cyclotomic(n).coeffs()))


@dataclass(frozen=True)
class SymmetryGroup:
    """G(f). kind "Finite" lists all elements (each a family when over a number
    field: one element per root of its field polynomial). kind "AllScalings" means
    every x -> c(x - center) + center lies in G(f); ``stabilizer`` then lists the
    finitely many mu with f o mu = f."""

    kind: str
    elements: tuple = ()
    center: Fraction = Fraction(0)
    stabilizer: tuple = ()
    order: int = 0

    def __contains__(self, mu: LinearMap) -> bool:
        if self.kind == "AllScalings":
            return mu.is_rational and mu(self.center) == self.center
        return mu in self.elements


def symmetry_group(f) -> SymmetryGroup:
    f = as_poly(f)
    _need_degree(f)
    dec = _decompose(f)
    d = f.degree()
    C = dec.C
    Cinv = C.inverse()
    if dec.N == X ** d:
        center = Cinv(Fraction(0))
        stab = tuple(mu for mu in _root_of_unity_maps(2, C) if _fixes(f, mu))
        return SymmetryGroup("AllScalings", (), center, stab, 0)
    cs = dec.N.coeffs()
    t = reduce(math.gcd, (d - k for k, c in enumerate(cs) if c != 0 and k < d), 0)
    elements = _root_of_unity_maps(t, C)
    for mu in elements:
        if not _in_group(f, mu):
            raise AssertionError("symmetry failed exact verification")
    stab = tuple(mu for mu in elements if mu.is_rational and _fixes(f, mu))
    return SymmetryGroup("Finite", tuple(elements), C.inverse()(Fraction(0)), stab, t)


def _root_of_unity_maps(t: int, C: LinearMap) -> list[LinearMap]:
    """C^-1 o (zeta x) o C for every t-th root of unity zeta, grouped by field."""
    out = []
    for n in sorted(k for k in range(1, t + 1) if t % k == 0):
        if n <= 2:
            zeta = 1 if n == 1 else -1
            out.append(C.inverse().compose(LinearMap(zeta, 0)).compose(C))
        else:
            phi = cyclotomic(n)
            fld = tuple(fr(c) for c in phi.coeffs())
            zeta = LinearMap(X, 0, fld)
            out.append(_lift(C.inverse(), fld).compose(zeta).compose(_lift(C, fld)))
    return out


def _fixes(f, mu: LinearMap) -> bool:
    return _kpoly_equal(_kpoly_compose(_kpoly(f), mu.kpoly(), mu.modulus), _kpoly(f), mu.modulus)


def _in_group(f, mu: LinearMap) -> bool:
    """Some linear nu has nu o f = f o mu."""
    r = mu.modulus
    lhs = _kpoly_compose(_kpoly(f), mu.kpoly(), r)
    d = f.degree()
    lead_f = f.coeffs()[d]
    a = _red(lhs[d] * _nf_inv(_const(lead_f), r) if r is not None else lhs[d] / lead_f, r)
    b = _red(lhs[0] - a * f.coeffs()[0], r)
    nu = _kpoly_trim([b, a])
    return _kpoly_equal(lhs, _kpoly_compose(nu, _kpoly(f), r), r)


# Ritt extraction --------------------------------------------------------


def ritt_first_step(A, C, D, B, strict: bool = True) -> list[LinearMap]:
    """Linear mu with A = D o mu and C = mu^-1 o B, given A o C = D o B."""
    A, C, D, B = (as_poly(p) for p in (A, C, D, B))
    if A.degree() != D.degree() or C.degree() != B.degree() or min(A.degree(), C.degree()) < 2:
        raise PreconditionViolated("degrees must match pairwise and be at least 2")
    if strict and A(C) != D(B):
        raise PreconditionViolated("A o C differs from D o B")
    # mu o C = B determines mu
    n = C.degree()
    alpha = B.coeffs()[n] / C.coeffs()[n]
    rest = B - alpha * C
    if rest.degree() > 0:
        return []
    beta = rest.coeffs()[0] if rest.coeffs() else fmpq(0)
    mu = LinearMap(fr(alpha), fr(beta))
    if D(fmpq_poly([beta, alpha])) != A:
        return []
    return [mu]


# common normal form ----------------------------------------------------


@dataclass(frozen=True)
class CommonNormalForm:
    """phi o f o phi^-1 = eps1 R and phi o g o phi^-1 = eps2 R with R = x^s h(x^t)."""

    phi: LinearMap
    eps1: int
    eps2: int
    R: fmpq_poly
    s: int
    t: int


def common_normal_form(f, g) -> CommonNormalForm | None:
    f, g = as_poly(f), as_poly(g)
    d = f.degree()
    if g.degree() != d:
        raise ValueError("degrees differ")
    _need_degree(f)
    for p in (f, g):
        if is_special(p).kind != "NotSpecial":
            raise SpecialInput(f"{format_poly(p)} is special")
    # g = L o f forces L(x) = zeta x + c
    zeta = g.coeffs()[d] / f.coeffs()[d]
    rest = g - zeta * f
    if rest.degree() > 0:
        return None
    c = rest.coeffs()[0] if rest.coeffs() else fmpq(0)
    if zeta == 1:
        if c != 0:
            return None
        try:
            nf = normal_form_xsht(f)
            phi, R, s, t = nf.phi, nf.expand(), nf.s, nf.t
        except PowerMapDegenerate:
            phi = _centering(f)
            R = _kpoly_to_rational(conjugate(phi, f))
            s, t, _ = _shape(R)
        return _checked(CommonNormalForm(phi, 1, 1, R, s, t), f, g)
    if zeta == -1:
        phi = LinearMap(1, -fr(c) / 2)
        R = _kpoly_to_rational(conjugate(phi, f))
        s, t, _ = _shape(R)
        if t == 0 or t % 2:
            return None
        return _checked(CommonNormalForm(phi, 1, -1, R, s, t), f, g)
    return None


def _checked(res: CommonNormalForm, f, g) -> CommonNormalForm:
    for p, e in ((f, res.eps1), (g, res.eps2)):
        if _kpoly_to_rational(conjugate(res.phi, p)) != e * res.R:
            raise AssertionError("common normal form failed exact verification")
    return res

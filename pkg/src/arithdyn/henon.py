"""Hénon-type automorphisms of the affine plane: Green functions, heights, periodicity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from ._padic import PAdic, poly_eval
from .errors import CoefficientBlowup, PrecisionExhausted
from .heights import HeightValue, weil_height_affine
from .p1dyn import GreenValue, PreperiodicityCertificate
from .places import ARCH, LOG_ULP, Place, factor_int, ord_p

BIT_BUDGET = 1 << 20


@dataclass(frozen=True)
class HenonFactor:
    """(x, y) -> (y, P(y) - delta*x); P is a coefficient list, lowest degree first."""

    P: tuple
    delta: Fraction

    def __post_init__(self):
        P = tuple(Fraction(c) for c in self.P)
        while len(P) > 1 and P[-1] == 0:
            P = P[:-1]
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "delta", Fraction(self.delta))
        if len(P) < 3:
            raise ValueError("each factor needs deg P >= 2")
        if self.delta == 0:
            raise ValueError("delta must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.P) - 1

    def evalP(self, y):
        acc = 0
        for c in reversed(self.P):
            acc = acc * y + c
        return acc

    def __call__(self, x, y):
        return y, self.evalP(y) - self.delta * x

    def inverse(self, x, y):
        return (self.evalP(x) - y) / self.delta, x

    def conjugated_inverse(self) -> "HenonFactor":
        """t o h^-1 o t with t(x, y) = (y, x), again of this form."""
        return HenonFactor(tuple(c / self.delta for c in self.P), 1 / self.delta)


class HenonMap:
    """f = h_m o ... o h_1; h_1 acts first."""

    def __init__(self, factors):
        fs = []
        for fac in factors:
            fs.append(fac if isinstance(fac, HenonFactor) else HenonFactor(*fac))
        if not fs:
            raise ValueError("need at least one factor")
        self.factors = tuple(fs)
        d = 1
        for f in fs:
            d *= f.degree
        self.degree = d

    def __eq__(self, other):
        return isinstance(other, HenonMap) and self.factors == other.factors

    def __hash__(self):
        return hash(self.factors)

    def __repr__(self):
        parts = [f"(P={list(map(str, f.P))}, delta={f.delta})" for f in self.factors]
        return f"HenonMap([{', '.join(parts)}])"

    def __call__(self, p):
        x, y = p
        for h in self.factors:
            x, y = h(x, y)
        return (x, y)

    def inverse(self, p):
        x, y = p
        for h in reversed(self.factors):
            x, y = h.inverse(x, y)
        return (x, y)

    @cached_property
    def conjugated_inverse(self) -> "HenonMap":
        """g = t o f^-1 o t; G^-_f(x, y) = G^+_g(y, x)."""
        return HenonMap([h.conjugated_inverse() for h in reversed(self.factors)])

    def bad_primes(self) -> list[int]:
        primes = set()
        for h in self.factors:
            for c in h.P:
                primes.update(p for p, _ in factor_int(c.denominator))
            lead = h.P[-1]
            primes.update(p for p, _ in factor_int(lead.numerator))
            primes.update(p for p, _ in factor_int(h.delta.numerator))
            primes.update(p for p, _ in factor_int(h.delta.denominator))
        return sorted(primes)

    def as_polys(self):
        """The map as a pair of bivariate flint polynomials in x, y."""
        from ._poly import CTX2, fq

        x, y = CTX2.gens()
        X, Y = x, y
        for h in self.factors:
            Py = CTX2.from_dict({})
            for c in reversed(h.P):
                Py = Py * Y + fq(c)
            X, Y = Y, Py - fq(h.delta) * X
        return X, Y


def henon_iterate(h: HenonMap, p, n: int):
    q = (Fraction(p[0]), Fraction(p[1]))
    step = h if n >= 0 else h.inverse
    for _ in range(abs(n)):
        q = step(q) if n >= 0 else h.inverse(q)
        bits = max(c.numerator.bit_length() + c.denominator.bit_length() for c in q)
        if bits > BIT_BUDGET:
            raise CoefficientBlowup("orbit coefficients exceed the bit budget")
    return q


# local constants -----------------------------------------------------------


@dataclass(frozen=True)
class _ArchData:
    R: float
    c_upper: float        # log+||f(q)|| <= d log+||q|| + c_upper
    inc_bound: float      # |increment of log|y|| per full step| inside the escape region
    kappa_plus: float     # lower increment deficit, for the comparison constant


def _arch_data(h: HenonMap) -> _ArchData:
    R = 1.0
    for fac in h.factors:
        a = abs(float(fac.P[-1]))
        S = sum(abs(float(c)) for c in fac.P[:-1]) + abs(float(fac.delta))
        R = max(R, (S + 2.0) / a, 1.0 + S + a)
    c_up, inc, kap = 0.0, 0.0, 0.0
    mult = 1
    for fac in reversed(h.factors):
        a = abs(float(fac.P[-1]))
        S = sum(abs(float(c)) for c in fac.P[:-1]) + abs(float(fac.delta))
        T = sum(abs(float(c)) for c in fac.P) + abs(float(fac.delta))
        c_up += mult * math.log(max(1.0, T))
        eps = S / (a * R)
        lo = math.log(a * (1.0 - eps))
        hi = math.log(a * (1.0 + eps))
        inc += mult * max(abs(lo), abs(hi))
        kap += mult * max(0.0, -lo)
        mult *= fac.degree
    return _ArchData(R, c_up, inc, kap)


@dataclass(frozen=True)
class _PData:
    p: int
    logR: int             # R = p^logR
    c_upper: Fraction     # in units of log p
    kappa: Fraction       # exact increment of log|y| per full step in the escape region
    good: bool


def _p_data(h: HenonMap, p: int) -> _PData:
    logR = 0
    good = True
    for fac in h.factors:
        va = ord_p(fac.P[-1], p)
        if va != 0 or ord_p(fac.delta, p) != 0 or any(c and ord_p(c, p) < 0 for c in fac.P):
            good = False
        # R = max(1, 1/|a|, max(|a_k|, |delta|)/|a|) in exponents of p
        cand = [0, va]
        for c in list(fac.P[:-1]) + [fac.delta]:
            if c:
                cand.append(va - ord_p(c, p))
        logR = max(logR, max(cand))
    c_up, kap = Fraction(0), Fraction(0)
    mult = 1
    for fac in reversed(h.factors):
        top = max([0] + [-ord_p(c, p) for c in list(fac.P) + [fac.delta] if c])
        c_up += mult * top
        kap += mult * (-ord_p(fac.P[-1], p))
        mult *= fac.degree
    return _PData(p, logR, c_up, kap, good)


# Green functions ----------------------------------------------------------


def _arch_green_plus(h: HenonMap, q, tol: float, max_iter: int = 4000) -> GreenValue:
    data = _arch_data(h)
    d = h.degree
    facs = [([float(c) for c in fac.P], float(fac.delta), fac.degree) for fac in h.factors]
    x, y = float(q[0]), float(q[1])
    scale = 1.0
    for n in range(max_iter):
        if abs(y) >= max(abs(x), data.R):
            return _arch_escaped(facs, d, data, x, y, scale, n, tol)
        norm = max(abs(x), abs(y))
        bound = scale * (math.log(norm) if norm > 1 else 0.0) + scale * data.c_upper / (d - 1)
        if bound <= tol:
            return GreenValue(ARCH, bound / 2, None, LOG_ULP, bound / 2, n)
        for P, delta, _ in facs:
            acc = 0.0
            for c in reversed(P):
                acc = acc * y + c
            x, y = y, acc - delta * x
        scale /= d
        if not (math.isfinite(x) and math.isfinite(y)):
            raise PrecisionExhausted("float overflow before reaching the escape region")
    raise PrecisionExhausted("no decision within the iteration budget")


def _arch_escaped(facs, d, data, x, y, scale, n0, tol):
    L = math.log(abs(y))
    u = 1.0 / y
    r = x / y
    terms = [L]
    w = 1.0
    M = 0
    err = LOG_ULP * (abs(L) + 1.0)
    while scale * data.inc_bound * w / (d - 1) > tol:
        inc = 0.0
        mult_total = d
        for P, delta, dj in facs:
            mult_total //= dj
            # Q = sum a_k u^(dj-k) - delta r u^(dj-1)
            Q = 0.0
            for k, c in enumerate(P):
                Q += c * u ** (dj - k)
            Q -= delta * r * u ** (dj - 1)
            inc += mult_total * math.log(abs(Q))
            u, r = u ** dj / Q, u ** (dj - 1) / Q
        w /= d
        terms.append(w * inc)
        err += w * 1e-14 * (abs(inc) + 1.0)
        M += 1
    trunc = scale * data.inc_bound * w / (d - 1) if data.inc_bound else 0.0
    return GreenValue(ARCH, scale * math.fsum(terms), None, scale * err, trunc, n0 + M)


def _padic_green_plus(h: HenonMap, q, p: int, tol: float, max_iter: int = 2000) -> GreenValue:
    data = _p_data(h, p)
    place = Place(p)
    x0, y0 = Fraction(q[0]), Fraction(q[1])
    d = h.degree
    logp = math.log(p)
    K = 40
    while K <= 4000:
        try:
            return _padic_run(h, data, x0, y0, p, K, tol, max_iter, place, logp, d)
        except PrecisionExhausted:
            K *= 2
    raise PrecisionExhausted(f"p-adic precision budget exhausted at {p}")


def _padic_run(h, data, x0, y0, p, K, tol, max_iter, place, logp, d):
    coeffs = [([PAdic.from_rational(c, p, K) for c in fac.P], PAdic.from_rational(fac.delta, p, K))
              for fac in h.factors]
    zero = PAdic.from_rational(0, p, K)
    x, y = PAdic.from_rational(x0, p, K), PAdic.from_rational(y0, p, K)
    scale = Fraction(1)
    for n in range(max_iter):
        ly = None if y.is_zero else -y.v
        lx = None if x.is_zero else -x.v
        if ly is not None and ly > data.logR and (lx is None or ly >= lx):
            # escaped: log|y_n| evolves affinely, so the limit is exact
            e = scale * (ly + data.kappa / (d - 1))
            return GreenValue(place, float(e) * logp, e, 0.0, 0.0, n)
        top = max([0] + [l for l in (lx, ly) if l is not None])
        if y.is_zero and -y.v > top:
            top = -y.v
        if x.is_zero and -x.v > top:
            top = -x.v
        bound = scale * (top + data.c_upper / (d - 1))
        if float(bound) * logp <= tol:
            e = bound / 2
            return GreenValue(place, float(e) * logp, e, 0.0, float(e) * logp, n)
        for P, delta in coeffs:
            x, y = y, poly_eval(P, y, zero) - delta * x
        if x.is_zero and y.is_zero and x.v < 1 and y.v < 1:
            raise PrecisionExhausted("orbit lost p-adic precision")
        scale /= d
    raise PrecisionExhausted("no decision within the iteration budget")


@dataclass(frozen=True)
class GreenPair:
    place: Place
    g_plus: GreenValue
    g_minus: GreenValue

    @property
    def g(self) -> GreenValue:
        return self.g_plus if self.g_plus.value >= self.g_minus.value else self.g_minus


def green_henon(h: HenonMap, p, v: Place, tol: float = 1e-9,
                detect_period: bool = True) -> GreenPair:
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = (Fraction(p[0]), Fraction(p[1]))
    if detect_period and _short_period(h, q):
        z = GreenValue(v, 0.0, None if v.is_archimedean else Fraction(0))
        return GreenPair(v, z, z)
    gp = _green_plus(h, q, v, tol)
    gm = _green_plus(h.conjugated_inverse, (q[1], q[0]), v, tol)
    return GreenPair(v, gp, gm)


def _green_plus(h, q, v, tol):
    if v.is_archimedean:
        return _arch_green_plus(h, q, tol)
    return _padic_green_plus(h, q, v.p, tol)


def _short_period(h: HenonMap, q, steps: int = 64) -> int:
    """Period of q if the exact forward orbit returns within ``steps`` (0 otherwise)."""
    y = q
    for n in range(1, steps + 1):
        y = h(y)
        if y == q:
            return n
        if max(c.numerator.bit_length() + c.denominator.bit_length() for c in y) > 4096:
            return 0
    return 0


# heights ---------------------------------------------------------------


def _places_for(h: HenonMap, q) -> list[Place]:
    primes = set(h.bad_primes())
    for c in q:
        primes.update(p for p, _ in factor_int(Fraction(c).denominator))
    return [ARCH] + [Place(p) for p in sorted(primes)]


def canonical_heights_henon(h: HenonMap, p, tol: float = 1e-9) -> tuple[HeightValue, HeightValue]:
    """(h_hat, h_tilde): sums over places of G+ + G- and of max(G+, G-)."""
    q = (Fraction(p[0]), Fraction(p[1]))
    if is_periodic_henon(h, q).value:
        return HeightValue.zero(), HeightValue.zero()
    places = _places_for(h, q)
    share = tol / (2 * len(places))
    hat = HeightValue.zero()
    tilde = HeightValue.zero()
    for v in places:
        pair = green_henon(h, q, v, share, detect_period=False)
        gp, gm = pair.g_plus, pair.g_minus
        both = gp.truncation_error + gm.truncation_error
        if v.is_archimedean:
            hat = hat + HeightValue.make(gp.value + gm.value, gp.error + gm.error, None, both)
            g = pair.g
            tilde = tilde + HeightValue.make(g.value, gp.error + gm.error, None,
                                             max(gp.truncation_error, gm.truncation_error))
        else:
            hat = hat + HeightValue.make(0, 0, {v.p: gp.exponent + gm.exponent}, both)
            g = gp if gp.exponent >= gm.exponent else gm
            tilde = tilde + HeightValue.make(0, 0, {v.p: g.exponent}, max(gp.truncation_error,
                                                                          gm.truncation_error))
    return hat, tilde


def comparison_constant(h: HenonMap) -> float:
    """B with |h_tilde(q) - h(q)| <= B for all rational q (sum of per-place constants)."""
    d = h.degree
    total = 0.0
    fwd, bwd = _arch_data(h), _arch_data(h.conjugated_inverse)
    upper = max(fwd.c_upper, bwd.c_upper) / (d - 1)
    lower = max(math.log(max(fwd.R, bwd.R)), max(fwd.kappa_plus, bwd.kappa_plus) / (d - 1))
    total += max(upper, lower)
    for p in h.bad_primes():
        a, b = _p_data(h, p), _p_data(h.conjugated_inverse, p)
        up = float(max(a.c_upper, b.c_upper)) / (d - 1)
        low = max(max(a.logR, b.logR), float(max(Fraction(0), -a.kappa, -b.kappa)) / (d - 1))
        total += max(up, low) * math.log(p)
    return total


def is_periodic_henon(h: HenonMap, p, max_steps: int = 100000) -> PreperiodicityCertificate:
    """Exact two-sided orbit walk; stops once an orbit height exceeds the comparison bound."""
    q = (Fraction(p[0]), Fraction(p[1]))
    cutoff = comparison_constant(h) + 1.0
    fwd, bwd = q, q
    for n in range(1, max_steps + 1):
        fwd = h(fwd)
        if fwd == q:
            return PreperiodicityCertificate(True, 0, n, reason="forward orbit returns")
        if _height(fwd) > cutoff:
            return PreperiodicityCertificate(False, reason=f"forward orbit height exceeds {cutoff:.6g}")
        bwd = h.inverse(bwd)
        if bwd == q:
            return PreperiodicityCertificate(True, 0, n, reason="backward orbit returns")
        if _height(bwd) > cutoff:
            return PreperiodicityCertificate(False, reason=f"backward orbit height exceeds {cutoff:.6g}")
    raise PrecisionExhausted("no decision within the step budget")


def _height(q) -> float:
    return weil_height_affine(q).total()


# filled Julia set membership ------------------------------------------------


@dataclass(frozen=True)
class JuliaVerdict:
    kind: str            # "Bounded", "Escaped" or "Undecided"
    steps: int = 0


def filled_julia_verdict(h: HenonMap, p, v: Place, max_iter: int = 200) -> JuliaVerdict:
    """Two-sided boundedness: escape of either orbit decides; an exact cycle proves boundedness."""
    q = (Fraction(p[0]), Fraction(p[1]))
    per = _short_period(h, q)
    if per:
        return JuliaVerdict("Bounded", per)
    for g, start in ((h, q), (h.conjugated_inverse, (q[1], q[0]))):
        n = _escape_time(g, start, v, max_iter)
        if n is not None:
            return JuliaVerdict("Escaped", n)
    return JuliaVerdict("Undecided", max_iter)


def _escape_time(h: HenonMap, q, v: Place, max_iter: int):
    if v.is_archimedean:
        R = _arch_data(h).R
        x, y = float(q[0]), float(q[1])
        for n in range(max_iter):
            if abs(y) >= max(abs(x), R):
                return n
            x, y = h((x, y))
            if not (math.isfinite(x) and math.isfinite(y)):
                return n
        return None
    data = _p_data(h, v.p)
    x, y = q
    for n in range(max_iter):
        if y != 0:
            ly = -ord_p(y, v.p)
            lx = -ord_p(x, v.p) if x != 0 else None
            if ly > data.logR and (lx is None or ly >= lx):
                return n
        x, y = h((x, y))
        if max(c.numerator.bit_length() + c.denominator.bit_length() for c in (x, y)) > 1 << 14:
            return None
    return None

"""Regular polynomial skew products (x, y) -> (p(x), q(x, y)) on the affine plane."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from ._poly import NumberField, charpoly_norm_exponents, upoly
from .errors import NotPeriodic, NotRegular, PrecisionExhausted
from .heights import AlgebraicPoint, HeightValue, weil_height_affine
from .p1dyn import GreenValue, PreperiodicityCertificate
from .places import ARCH, LOG_ULP, Place, factor_int, ord_p

BIT_BUDGET = 1 << 20


def _abs_v(c: Fraction, v: Place) -> float:
    if v.is_archimedean:
        return abs(float(c))
    return 0.0 if c == 0 else float(v.p) ** (-ord_p(c, v.p))


@dataclass(frozen=True)
class NullstellensatzConstants:
    """C_prime * ||w||^d <= ||F(w)|| <= C * ||w||^d for the homogeneous lift F.

    C comes from the coefficient-count formula and C_prime from a certified case
    split; the grid fields hold sampled extremes of the ratio (None at finite places).
    """

    place: Place
    C: float
    C_prime: float
    C_grid: float | None = None
    C_prime_grid: float | None = None

    @property
    def log_bound(self) -> float:
        """Uniform bound on |log+||f(q)|| - d log+||q|||."""
        return max(math.log(self.C), -math.log(self.C_prime))


class SkewProduct:
    """f(x, y) = (p(x), q(x, y)).

    p is a coefficient list in x (lowest degree first); q maps (i, j) to the
    coefficient of x^i y^j. sigma = (matrix, translation) sends original
    coordinates to the ones in which f has this form.
    """

    def __init__(self, p, q, sigma=None):
        pc = [Fraction(c) for c in p]
        while len(pc) > 1 and pc[-1] == 0:
            pc.pop()
        qc = {(int(i), int(j)): Fraction(c) for (i, j), c in dict(q).items() if c}
        d = len(pc) - 1
        if d < 2:
            raise ValueError("degree must be at least 2")
        if not qc or max(i + j for i, j in qc) != d:
            raise NotRegular("deg q must equal deg p")
        if qc.get((0, d), 0) == 0:
            raise NotRegular("q needs a nonzero y^d term")
        self.p = tuple(pc)
        self.q = dict(sorted(qc.items()))
        self.degree = d
        if sigma is not None:
            (m, t) = sigma
            m = tuple(tuple(Fraction(c) for c in row) for row in m)
            t = tuple(Fraction(c) for c in t)
            if m[0][0] * m[1][1] - m[0][1] * m[1][0] == 0:
                raise ValueError("sigma must be invertible")
            sigma = (m, t)
        self.sigma = sigma

    def __repr__(self):
        return f"SkewProduct(p={[str(c) for c in self.p]}, q={ {k: str(v) for k, v in self.q.items()} })"

    def __eq__(self, other):
        return (isinstance(other, SkewProduct) and self.p == other.p and self.q == other.q
                and self.sigma == other.sigma)

    def __hash__(self):
        return hash((self.p, tuple(self.q.items()), self.sigma))

    # evaluation ------------------------------------------------------------

    def eval_p(self, x):
        acc = 0
        for c in reversed(self.p):
            acc = acc * x + c
        return acc

    def eval_q(self, x, y):
        xs, ys = {0: 1}, {0: 1}
        total = 0
        for (i, j), c in self.q.items():
            if i not in xs:
                xs[i] = x ** i
            if j not in ys:
                ys[j] = y ** j
            total += c * xs[i] * ys[j]
        return total

    def __call__(self, point):
        x, y = point
        return (self.eval_p(x), self.eval_q(x, y))

    def fiber(self, x0) -> list[Fraction]:
        """q(x0, .) as a coefficient list in y."""
        out = [Fraction(0)] * (self.degree + 1)
        for (i, j), c in self.q.items():
            out[j] += c * Fraction(x0) ** i
        return out

    def normalize_point(self, point):
        """Apply sigma (identity when absent)."""
        pt = (Fraction(point[0]), Fraction(point[1]))
        if self.sigma is None:
            return pt
        m, t = self.sigma
        return (m[0][0] * pt[0] + m[0][1] * pt[1] + t[0], m[1][0] * pt[0] + m[1][1] * pt[1] + t[1])

    @property
    def leading(self) -> tuple[Fraction, Fraction]:
        return self.p[-1], self.q[(0, self.degree)]

    def is_normalized(self) -> bool:
        """p = x^d + lower terms and q = y^d + terms of lower y-degree."""
        return self.leading == (1, 1)

    def normalized(self) -> "SkewProduct":
        """Conjugate by (x, y) -> (ax, by) to make both leading coefficients 1.

        Needs rational (d-1)-th roots of the leading coefficients.
        """
        d = self.degree
        roots = [_rational_root(c, d - 1) for c in self.leading]
        if None in roots:
            raise ValueError("leading coefficients have no rational (d-1)-th root")
        al, be = roots
        p = [c * al ** (1 - k) for k, c in enumerate(self.p)]
        q = {(i, j): c * be * al ** (-i) * be ** (-j) for (i, j), c in self.q.items()}
        scale = ((al, 0), (0, be))
        if self.sigma is None:
            sigma = (scale, (0, 0))
        else:
            m, t = self.sigma
            sigma = (((al * m[0][0], al * m[0][1]), (be * m[1][0], be * m[1][1])),
                     (al * t[0], be * t[1]))
        return SkewProduct(p, q, sigma)

    # homogeneous lift ---------------------------------------------------------

    @cached_property
    def lift_terms(self):
        """Monomial lists (coefficient, exponents in x, y, z) of the lift components."""
        d = self.degree
        P = [(c, (k, 0, d - k)) for k, c in enumerate(self.p) if c]
        Q = [(c, (i, j, d - i - j)) for (i, j), c in self.q.items()]
        return P, Q

    def lift(self, w):
        """F(x, y, z) = (p~(x, z), q~(x, y, z), z^d)."""
        x, y, z = w
        P, Q = self.lift_terms
        ev = lambda terms: sum(c * x ** a * y ** b * z ** e for c, (a, b, e) in terms)
        return (ev(P), ev(Q), z ** self.degree)

    def bad_primes(self) -> list[int]:
        primes = set()
        for c in list(self.p) + list(self.q.values()):
            primes.update(p for p, _ in factor_int(c.denominator))
        for c in self.leading:
            primes.update(p for p, _ in factor_int(c.numerator))
        return sorted(primes)

    def is_good(self, v: Place) -> bool:
        return not v.is_archimedean and v.p not in self.bad_primes()


def _rational_root(c: Fraction, n: int):
    c = Fraction(c)
    if n == 1:
        return c
    sign = 1
    if c < 0:
        if n % 2 == 0:
            return None
        sign, c = -1, -c
    out = []
    for part in (c.numerator, c.denominator):
        r = round(part ** (1.0 / n))
        for cand in (r - 1, r, r + 1):
            if cand > 0 and cand ** n == part:
                out.append(cand)
                break
        else:
            return None
    return sign * Fraction(out[0], out[1])


# constants -------------------------------------------------------------


@lru_cache(maxsize=256)
def nullstellensatz_constants(f: SkewProduct, v: Place, grid: int = 100000,
                              seed: int = 0) -> NullstellensatzConstants:
    d = f.degree
    if f.is_good(v):
        return NullstellensatzConstants(v, 1.0, 1.0)
    arch = v.is_archimedean
    absp = max(_abs_v(c, v) for c in f.p)
    absq = max(_abs_v(c, v) for c in f.q.values())
    C = max(1.0, (d + 1 if arch else 1) * absp, ((d + 2) * (d + 1) // 2 if arch else 1) * absq)
    a, b = (_abs_v(c, v) for c in f.leading)
    P, Q = f.lift_terms
    low_p = [_abs_v(c, v) for c, (i, _, _) in P if i < d]
    q_x = [_abs_v(c, v) for c, (i, j, k) in Q if k == 0 and j < d]
    q_z = [_abs_v(c, v) for c, (i, j, k) in Q if k > 0]
    if arch:
        Cp = _arch_lower(d, a, b, sum(low_p), sum(q_x), sum(q_z))
        Cg, Cpg = _grid_ratio(f, grid, seed)
        return NullstellensatzConstants(v, C, Cp, Cg, Cpg)
    Cp = _padic_lower(d, v.p, a, b, max(low_p, default=0.0), max(q_x, default=0.0),
                      max(q_z, default=0.0))
    return NullstellensatzConstants(v, C, Cp)


def _arch_lower(d, a, b, Sp, A, B, steps: int = 400) -> float:
    """max over t, eta in (0, 1] of min(eta^d, a t^d - Sp eta, b - A t - B eta).

    With ||w|| = 1: |z| >= eta gives eta^d; |z| < eta, |x| >= t bounds |p~|;
    |z| < eta, |x| < t forces |y| = 1 and bounds |q~|.
    """
    g = np.arange(1, steps + 1) / steps
    eta, t = np.meshgrid(g, g, indexing="ij")
    val = np.minimum(np.minimum(eta ** d, a * t ** d - Sp * eta), b - A * t - B * eta)
    best = float(val.max())
    # slack for rounding in the evaluation above
    return best * (1 - 1e-12) if best > 0 else _fallback_lower(d, a, b, Sp, A, B)


def _fallback_lower(d, a, b, Sp, A, B) -> float:
    eta = min(1.0, a / (4 * (Sp + 1)), b / (4 * (B + 1)))
    t = min(1.0, b / (4 * (A + 1)))
    eta = min(eta, a * t ** d / (2 * (Sp + 1)))
    return min(eta ** d, a * t ** d - Sp * eta, b - A * t - B * eta)


def _padic_lower(d, p, a, b, Mp, A, B, span: int = 60) -> float:
    """Ultrametric version of the case split with t = p^-i and eta = p^-j."""
    best = 0.0
    for j in range(span):
        for i in range(span):
            caseA = float(p) ** (-j * d)
            caseB = a * float(p) ** (-i * d) if a * float(p) ** (-i * d) > Mp * float(p) ** (-j - 1) else 0.0
            caseC = b if b > max(A * float(p) ** (-i - 1), B * float(p) ** (-j - 1)) else 0.0
            val = min(caseA, caseB, caseC)
            best = max(best, val)
    if best <= 0:
        raise PrecisionExhausted("no lower constant found in the search range")
    return best


def _grid_ratio(f: SkewProduct, n: int, seed: int) -> tuple[float, float]:
    """Sampled max and min of ||F(w)|| over the unit sup-sphere of C^3."""
    rng = np.random.default_rng(seed)
    rad = rng.random((n, 3)) ** 0.5
    ang = rng.random((n, 3)) * 2 * np.pi
    w = rad * np.exp(1j * ang)
    face = rng.integers(0, 3, n)
    w[np.arange(n), face] = np.exp(1j * ang[np.arange(n), face])
    x, y, z = w[:, 0], w[:, 1], w[:, 2]
    P, Q = f.lift_terms
    ev = lambda terms: sum(float(c) * x ** a * y ** b * z ** e for c, (a, b, e) in terms)
    r = np.maximum(np.maximum(np.abs(ev(P)), np.abs(ev(Q))), np.abs(z) ** f.degree)
    return float(r.max()), float(r.min())


# Green functions ------------------------------------------------------------


def _iterations_for(bound: float, d: int, tol: float) -> int:
    N = 0
    while bound * float(d) ** (-N) / (d - 1) > tol:
        N += 1
    return N


def _preperiodic_normalized(f: SkewProduct, q, steps: int = 4096) -> bool:
    """Exact orbit of a normalized point; False once its height passes the comparison cutoff."""
    cutoff = comparison_constant(f) + 1.0
    seen = {q}
    cur = q
    for _ in range(steps):
        if weil_height_affine(cur).total() > cutoff:
            return False
        cur = f(cur)
        if cur in seen:
            return True
        seen.add(cur)
    return False


def _arch_green(f: SkewProduct, x: complex, y: complex, N: int) -> tuple[float, float]:
    """log||w|| plus N normalized increments of log||F(w)||; returns (value, rounding error)."""
    P, Q = f.lift_terms
    Pf = [(float(c), e) for c, e in P]
    Qf = [(float(c), e) for c, e in Q]
    d = f.degree
    w = (complex(x), complex(y), 1 + 0j)
    m = max(abs(c) for c in w)
    value = [math.log(m)]
    w = tuple(c / m for c in w)
    scale = 1.0
    err = LOG_ULP * (abs(value[0]) + 1)
    for _ in range(N):
        X, Y, Z = w
        Fp = sum(c * X ** a * Y ** b * Z ** e for c, (a, b, e) in Pf)
        Fq = sum(c * X ** a * Y ** b * Z ** e for c, (a, b, e) in Qf)
        Fz = Z ** d
        m = max(abs(Fp), abs(Fq), abs(Fz))
        scale /= d
        inc = math.log(m)
        value.append(scale * inc)
        err += scale * 1e-14 * (abs(inc) + 1)
        w = (Fp / m, Fq / m, Fz / m)
    return math.fsum(value), err


def _padic_green(f: SkewProduct, x: Fraction, y: Fraction, p: int, N: int) -> Fraction:
    """d^-N log_p||F^N(x, y, 1)||_p, following primitive coordinates modulo p^K."""
    den = math.lcm(x.denominator, y.denominator)
    w0 = [int(x * den), int(y * den), den]
    v0 = min(ord_p(c, p) for c in w0 if c)
    e0 = Fraction(ord_p(den, p) - v0)
    w0 = [c // p ** int(v0) if v0 >= 0 else c * p ** int(-v0) for c in w0]
    P, Q = f.lift_terms
    L = math.lcm(*(c.denominator for c, _ in P + Q))
    Pi = [(int(c * L), e) for c, e in P]
    Qi = [(int(c * L), e) for c, e in Q]
    shift = ord_p(L, p)
    d = f.degree
    K = 64
    while True:
        mod = p ** K
        w = [c % mod for c in w0]
        prec = K
        e = e0
        scale = Fraction(1)
        for _ in range(N):
            X, Y, Z = w
            comps = [sum(c * X ** a * Y ** b * Z ** k for c, (a, b, k) in Pi) % mod,
                     sum(c * X ** a * Y ** b * Z ** k for c, (a, b, k) in Qi) % mod,
                     L * Z ** d % mod]
            m = min((_ord_mod(c, p, prec) for c in comps), default=prec)
            if m >= prec:
                break
            scale /= d
            e += scale * (shift - m)
            prec -= m
            mod_new = p ** prec
            w = [(c // p ** m) % mod_new for c in comps]
            mod = mod_new
        else:
            return e
        K *= 2
        if K > 1 << 16:
            raise PrecisionExhausted(f"p-adic precision budget exhausted at {p}")


def _ord_mod(c: int, p: int, prec: int) -> int:
    if c == 0:
        return prec
    e = 0
    while c % p == 0 and e < prec:
        c //= p
        e += 1
    return e


def green_skew(f: SkewProduct, point, v: Place, tol: float = 1e-9,
               iterations: int | None = None, detect_cycles: bool = True,
               normalize: bool = True) -> GreenValue:
    """Local Green function g_v at a rational point (original coordinates when normalize)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    q = f.normalize_point(point) if normalize else (Fraction(point[0]), Fraction(point[1]))
    exact = not v.is_archimedean
    if detect_cycles and _preperiodic_normalized(f, q):
        return GreenValue(v, 0.0, Fraction(0) if exact else None)
    if f.is_good(v):
        e = max(0, -min(ord_p(c, v.p) if c else 0 for c in q))
        return GreenValue(v, e * math.log(v.p), Fraction(e))
    consts = nullstellensatz_constants(f, v)
    d = f.degree
    N = iterations if iterations is not None else _iterations_for(consts.log_bound, d, tol)
    trunc = consts.log_bound * float(d) ** (-N) / (d - 1)
    if v.is_archimedean:
        val, err = _arch_green(f, float(q[0]), float(q[1]), N)
        return GreenValue(v, val, None, err, trunc, N)
    e = _padic_green(f, q[0], q[1], v.p, N)
    return GreenValue(v, float(e) * math.log(v.p), e, 0.0, trunc, N)


def green_skew_lift(f: SkewProduct, w, v: Place, tol: float = 1e-9) -> float:
    """Archimedean G_F at a complex point of C^3 minus the origin."""
    if not v.is_archimedean:
        raise ValueError("the lift Green function is provided at the archimedean place")
    consts = nullstellensatz_constants(f, v)
    d = f.degree
    N = _iterations_for(consts.log_bound, d, tol)
    P, Q = f.lift_terms
    w = tuple(complex(c) for c in w)
    m = max(abs(c) for c in w)
    total = [math.log(m)]
    w = tuple(c / m for c in w)
    scale = 1.0
    for _ in range(N):
        X, Y, Z = w
        Fp = sum(float(c) * X ** a * Y ** b * Z ** e for c, (a, b, e) in P)
        Fq = sum(float(c) * X ** a * Y ** b * Z ** e for c, (a, b, e) in Q)
        Fz = Z ** d
        m = max(abs(Fp), abs(Fq), abs(Fz))
        scale /= d
        total.append(scale * math.log(m))
        w = (Fp / m, Fq / m, Fz / m)
    return math.fsum(total)


# heights -------------------------------------------------------------------


def _places_for(f: SkewProduct, q) -> list[Place]:
    primes = set(f.bad_primes())
    for c in q:
        primes.update(p for p, _ in factor_int(c.denominator))
    return [ARCH] + [Place(p) for p in sorted(primes)]


def height_skew(f: SkewProduct, point, tol: float = 1e-9) -> HeightValue:
    """Canonical height as a sum of local Green values; accepts AlgebraicPoint too."""
    if isinstance(point, AlgebraicPoint):
        return _height_algebraic(f, point, tol)
    q = f.normalize_point(point)
    if _preperiodic_normalized(f, q):
        return HeightValue.zero()
    places = _places_for(f, q)
    share = tol / len(places)
    total = HeightValue.zero()
    for v in places:
        g = green_skew(f, q, v, share, detect_cycles=False, normalize=False)
        if v.is_archimedean:
            total = total + HeightValue.make(g.value, g.error, None, g.truncation_error)
        else:
            total = total + HeightValue.make(0, 0, {v.p: g.exponent}, g.truncation_error)
    return total


def _height_algebraic(f: SkewProduct, pt: AlgebraicPoint, tol: float) -> HeightValue:
    if not pt.is_joint:
        raise ValueError("algebraic points must carry a joint parametrization")
    if f.sigma is not None:
        raise ValueError("algebraic points are taken in normalized coordinates")
    r = pt.field_poly()
    n = r.degree()
    d = f.degree
    places = [ARCH] + [Place(p) for p in f.bad_primes()]
    share = tol / len(places)
    # archimedean: average over conjugates
    consts = nullstellensatz_constants(f, ARCH)
    N = _iterations_for(consts.log_bound, d, share)
    vals, err = [], 0.0
    lip = 0.0
    for coords, e in pt.numeric_conjugates():
        val, rerr = _arch_green(f, coords[0], coords[1], N)
        vals.append(val)
        err += rerr
        lip = max(lip, e)
    # first order: a coordinate error e on the normalized lift moves the first log-norm by
    # at most ~e, and later steps see it as ordinary rounding of the pseudo-orbit
    err = err / n + 2.0 * lip
    trunc = consts.log_bound * float(d) ** (-N) / (d - 1)
    total = HeightValue.make(math.fsum(vals) / n, err, None, trunc)
    K = NumberField(r)
    X, Y = (K.reduce(p) for p in pt.param_polys())
    # good primes: log+ of the sup-norm, exactly, via the Gauss norm of the charpoly
    good = charpoly_norm_exponents(r, [X, Y])
    bad = set(f.bad_primes())
    total = total + HeightValue.make(0, 0, {p: Fraction(e, n) for p, e in good.items()
                                            if p not in bad})
    for p in sorted(bad):
        c = nullstellensatz_constants(f, Place(p))
        k = _iterations_for(c.log_bound, d, share)
        A, B = X, Y
        for _ in range(k):
            A, B = K.eval_poly(f.p, A), _eval_q_nf(f, K, A, B)
            bits = max((int(abs(cf.p)).bit_length() + int(cf.q).bit_length()
                        for P in (A, B) for cf in P.coeffs()), default=0)
            if bits > BIT_BUDGET:
                raise PrecisionExhausted(f"coefficient size exceeded at prime {p}")
        e = charpoly_norm_exponents(r, [A, B]).get(p, 0)
        total = total + HeightValue.make(0, 0, {p: Fraction(e, n * d ** k)},
                                         c.log_bound * float(d) ** (-k) / (d - 1))
    return total


def _eval_q_nf(f, K, A, B):
    from ._poly import fq
    from flint import fmpq_poly

    acc = fmpq_poly([])
    for (i, j), c in f.q.items():
        acc += K.mul(K.power(A, i), K.power(B, j)) * fq(c)
    return acc % K.r


def comparison_constant(f: SkewProduct) -> float:
    """B with |h_f - h| <= B on rational points (normalized coordinates)."""
    d = f.degree
    total = 0.0
    for v in [ARCH] + [Place(p) for p in f.bad_primes()]:
        total += nullstellensatz_constants(f, v).log_bound / (d - 1)
    return total


def check_comparison_constant(f: SkewProduct, samples: int = 1000, seed: int = 0,
                              tol: float = 1e-6) -> float:
    """Largest observed |h_f - h| over random rational points; must not exceed the bound."""
    import random

    rng = random.Random(seed)
    bound = comparison_constant(f)
    worst = 0.0
    for _ in range(samples):
        q = tuple(Fraction(rng.randint(-50, 50), rng.randint(1, 50)) for _ in range(2))
        diff = abs(height_skew(f, q, tol).total() - weil_height_affine(q).total())
        worst = max(worst, diff)
    if worst > bound + tol:
        raise AssertionError(f"comparison constant {bound} violated ({worst})")
    return worst


def is_preperiodic_skew(f: SkewProduct, point, max_steps: int = 100000) -> PreperiodicityCertificate:
    """Exact forward orbit; stops with False once the Weil height passes the comparison cutoff."""
    q = f.normalize_point(point)
    cutoff = comparison_constant(f) + 1.0
    seen = {q: 0}
    orbit = [q]
    cur = q
    for n in range(1, max_steps + 1):
        if weil_height_affine(cur).total() > cutoff:
            return PreperiodicityCertificate(False, reason=f"orbit height exceeds {cutoff:.6g}")
        cur = f(cur)
        if cur in seen:
            tail = seen[cur]
            return PreperiodicityCertificate(True, tail, n - tail, tuple(orbit),
                                             reason="orbit repeats")
        seen[cur] = n
        orbit.append(cur)
    raise PrecisionExhausted("no decision within the step budget")


def fiber_composition(f: SkewProduct, x0, max_period: int = 1000) -> list[Fraction]:
    """q(x_{n-1}, .) o ... o q(x_0, .) along the p-cycle of x0; coefficients lowest first."""
    x0 = Fraction(x0)
    cycle = [x0]
    cur = f.eval_p(x0)
    while cur != x0:
        if len(cycle) >= max_period or cur.numerator.bit_length() + cur.denominator.bit_length() > 4096:
            raise NotPeriodic(f"{x0} is not periodic for p within {max_period} steps")
        cycle.append(cur)
        cur = f.eval_p(cur)
    comp = upoly([0, 1])
    for x in cycle:
        comp = upoly(f.fiber(x))(comp)
    return [Fraction(int(c.p), int(c.q)) for c in comp.coeffs()]

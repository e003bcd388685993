"""Independent reference computations used to freeze expected values.

Nothing here imports arithdyn: every oracle is a direct, slow transcription of a
definition (trial-division valuations, naive orbits, big-integer iteration,
high-precision root finding).
"""

import math
from fractions import Fraction

import mpmath


def valuation(n: int, p: int) -> int:
    n = abs(n)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def prime_factors(n: int) -> dict:
    """Trial division; only used on small or smooth inputs."""
    n = abs(n)
    out = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def weil_height_by_places(coords) -> float:
    """sum_v log+ max_i |x_i|_v by explicit enumeration of the primes involved."""
    coords = [Fraction(c) for c in coords]
    primes = set()
    for c in coords:
        primes |= set(prime_factors(c.numerator)) | set(prime_factors(c.denominator))
    total = max(0.0, max(math.log(abs(c)) if c else -math.inf for c in coords))
    for p in primes:
        best = -math.inf
        for c in coords:
            if c:
                best = max(best, (valuation(c.denominator, p) - valuation(c.numerator, p)) * math.log(p))
        total += max(0.0, best)
    return total


def mahler_measure(int_coeffs, dps: int = 50) -> float:
    """M(P) = |a_n| * prod max(1, |root|), roots from mpmath at high precision."""
    with mpmath.workdps(dps):
        roots = mpmath.polyroots(list(reversed(int_coeffs)), maxsteps=500, extraprec=4 * dps)
        m = abs(mpmath.mpf(int_coeffs[-1]))
        for z in roots:
            m *= max(1, abs(z))
        return float(mpmath.log(m))


def chebyshev_height(x0) -> float:
    """h for x^2 - 2 at a real x0 > 2 through x = u + 1/u: the answer is log u."""
    with mpmath.workdps(40):
        x0 = mpmath.mpf(x0)
        u = (x0 + mpmath.sqrt(x0 * x0 - 4)) / 2
        return float(mpmath.log(u))


def naive_orbit(f, x, max_steps: int = 200, escape=None):
    """("pre", tail, cycle) or ("escape", step) or ("unknown",) by plain iteration."""
    seen = {}
    for n in range(max_steps):
        if x in seen:
            return ("pre", seen[x], n - seen[x])
        seen[x] = n
        if escape is not None and escape(x):
            return ("escape", n)
        x = f(x)
    return ("unknown",)


def quadratic_escape(c: Fraction):
    """Escape test for x^2 + c: |x| beyond the archimedean radius or a prime of the denominator
    larger than what c allows; both force the height to grow without bound."""
    radius = Fraction(1) + abs(c)
    cden = c.denominator

    def escaped(x: Fraction) -> bool:
        if abs(x) > radius:
            return True
        return x.denominator * x.denominator > cden
    return escaped


def _biglog(m: int) -> float:
    k = max(m.bit_length() - 60, 0)
    return math.log(m >> k) + k * math.log(2)


def henon_green_plus_bigint(P, delta: int, x: int, y: int, n: int) -> float:
    """d^-n log max(|x_n|, |y_n|, 1) by exact integer iteration of (y, P(y) - delta x)."""
    d = len(P) - 1
    for _ in range(n):
        py = sum(c * y ** k for k, c in enumerate(P))
        x, y = y, py - delta * x
    return _biglog(max(abs(x), abs(y), 1)) / d ** n


def skew_green_bigint(p, q: dict, x: Fraction, y: Fraction, n: int) -> float:
    """Archimedean Green value d^-n log ||F^n(x, y, 1)||, iterating the integer lift
    (x, y, 1) * den exactly and removing the scale d^n log den at the end."""
    d = len(p) - 1
    den = math.lcm(x.denominator, y.denominator)
    X, Y, Z = int(x * den), int(y * den), den
    for _ in range(n):
        Xn = sum(int(c) * X ** k * Z ** (d - k) for k, c in enumerate(p) if c)
        Yn = sum(int(c) * X ** i * Y ** j * Z ** (d - i - j) for (i, j), c in q.items())
        X, Y, Z = Xn, Yn, Z ** d
    return _biglog(max(abs(X), abs(Y), abs(Z))) / d ** n - math.log(den)


def roots_of_unity_angles(n: int) -> list:
    return [k / n for k in range(n)]


# arithmetic in Q[t]/(r) with plain Fraction lists (lowest degree first)


def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _pmod(a, r):
    a = _trim(a)
    r = _trim(r)
    while len(a) >= len(r):
        c = a[-1] / r[-1]
        k = len(a) - len(r)
        for i, y in enumerate(r):
            a[k + i] -= c * y
        a = _trim(a)
    return a


def residue(terms: dict, field, coords) -> list:
    """Evaluate sum c * x^i * y^j (or c * x^i) at polynomial coordinates modulo field."""
    field = [Fraction(c) for c in field]
    coords = [[Fraction(c) for c in v] for v in coords]
    total = []
    for exps, c in terms.items():
        exps = (exps,) if isinstance(exps, int) else exps
        mono = [Fraction(c)]
        for v, e in zip(coords, exps):
            for _ in range(e):
                mono = _pmod(_pmul(mono, v), field)
        n = max(len(total), len(mono))
        total = _trim([(total[k] if k < len(total) else 0) + (mono[k] if k < len(mono) else 0)
                       for k in range(n)])
    return _pmod(total, field)

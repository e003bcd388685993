"""Fixed relative-precision p-adic numbers, enough to follow bounded orbits."""

from __future__ import annotations

from fractions import Fraction

from .errors import PrecisionExhausted


class PAdic:
    """p^v * u with u a unit known modulo p^k, or zero known modulo p^v (k = 0)."""

    __slots__ = ("p", "v", "u", "k")

    def __init__(self, p: int, v: int, u: int, k: int):
        self.p = p
        self.v = v
        self.u = u
        self.k = k

    @classmethod
    def from_rational(cls, q, p: int, k: int) -> "PAdic":
        q = Fraction(q)
        if q == 0:
            return cls(p, k, 0, 0)
        n, d = q.numerator, q.denominator
        v = 0
        while n % p == 0:
            n //= p
            v += 1
        while d % p == 0:
            d //= p
            v -= 1
        mod = p ** k
        return cls(p, v, n * pow(d, -1, mod) % mod, k)

    @property
    def is_zero(self) -> bool:
        return self.k == 0

    @property
    def abs_precision(self) -> int:
        return self.v + self.k if self.k else self.v

    def __neg__(self):
        if self.is_zero:
            return self
        return PAdic(self.p, self.v, (-self.u) % self.p ** self.k, self.k)

    def __add__(self, other: "PAdic") -> "PAdic":
        p = self.p
        if self.is_zero:
            return other._truncate(self.v)
        if other.is_zero:
            return self._truncate(other.v)
        absp = min(self.v + self.k, other.v + other.k)
        v = min(self.v, other.v)
        s = self.u * p ** (self.v - v) + other.u * p ** (other.v - v)
        m = absp - v
        if m <= 0:
            return PAdic(p, absp, 0, 0)
        s %= p ** m
        if s == 0:
            return PAdic(p, absp, 0, 0)
        w = 0
        while s % p == 0:
            s //= p
            w += 1
        return PAdic(p, v + w, s, m - w)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "PAdic") -> "PAdic":
        p = self.p
        if self.is_zero and other.is_zero:
            return PAdic(p, self.v + other.v, 0, 0)
        if self.is_zero:
            return PAdic(p, self.v + other.v, 0, 0)
        if other.is_zero:
            return PAdic(p, self.v + other.v, 0, 0)
        k = min(self.k, other.k)
        return PAdic(p, self.v + other.v, self.u * other.u % p ** k, k)

    def _truncate(self, absp: int) -> "PAdic":
        if self.is_zero:
            return PAdic(self.p, min(self.v, absp), 0, 0)
        if absp <= self.v:
            return PAdic(self.p, absp, 0, 0)
        k = min(self.k, absp - self.v)
        return PAdic(self.p, self.v, self.u % self.p ** k, k)

    def valuation(self) -> int:
        """Exact valuation; raises when the value is indistinguishable from 0."""
        if self.is_zero:
            raise PrecisionExhausted("p-adic value lost all precision")
        return self.v

    def upper_log_abs(self) -> int:
        """An integer e with |x|_p <= p^e (exact when nonzero)."""
        return -self.v


def poly_eval(coeffs: list[PAdic], x: PAdic, zero: PAdic) -> PAdic:
    acc = zero
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc

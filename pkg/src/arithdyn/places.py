"""Places of Q: normalized absolute values, local logarithms, product formula."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import flint

from .errors import ZeroInput

# relative error of one float log evaluation, with headroom
LOG_ULP = 4.0 * 2.0 ** -52


@dataclass(frozen=True, order=False)
class Place:
    """An absolute value on Q: archimedean (p is None) or p-adic.

    ``local_degree`` is the slot N_v; it is always 1 over Q.
    """

    p: int | None = None
    local_degree: int = 1

    def __post_init__(self):
        if self.p is not None and not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    @property
    def is_archimedean(self) -> bool:
        return self.p is None

    @property
    def kind(self) -> str:
        return "Archimedean" if self.p is None else "Finite"

    def sort_key(self):
        return (0, 0) if self.p is None else (1, self.p)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __str__(self):
        return "inf" if self.p is None else str(self.p)

    def __repr__(self):
        return "Archimedean" if self.p is None else f"Finite({self.p})"

    @classmethod
    def finite(cls, p: int) -> "Place":
        return cls(int(p))


ARCH = Place()


def Finite(p: int) -> Place:
    return Place(int(p))


def parse_place(text: str) -> Place:
    t = text.strip().lower()
    if t in ("inf", "infinity", "arch", "archimedean", "oo"):
        return ARCH
    return Place(int(t))


def is_prime(n: int) -> bool:
    return n >= 2 and bool(flint.fmpz(n).is_prime())


@lru_cache(maxsize=65536)
def factor_int(n: int) -> tuple:
    """Prime factorization of |n| as a sorted tuple of (p, e)."""
    n = abs(int(n))
    if n == 0:
        raise ZeroInput("cannot factor 0")
    if n == 1:
        return ()
    return tuple(sorted((int(p), int(e)) for p, e in flint.fmpz(n).factor()))


def prime_divisors(n: int) -> list[int]:
    return [p for p, _ in factor_int(n)]


def ord_p(x, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ZeroInput("valuation of 0")
    return _ord_int(x.numerator, p) - _ord_int(x.denominator, p)


def _ord_int(n: int, p: int) -> int:
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def log_abs(x) -> float:
    """log|x| for a nonzero rational of any size."""
    x = Fraction(x)
    return math.log(abs(x.numerator)) - math.log(x.denominator)


@dataclass(frozen=True)
class LocalLog:
    """log|x|_v. Finite places keep an exact exponent e meaning e*log p."""

    place: Place
    exponent: Fraction | None = None
    value: float | None = None
    error: float = 0.0

    def numeric(self) -> float:
        if self.place.is_archimedean:
            return self.value
        return float(self.exponent) * math.log(self.place.p)

    def __add__(self, other: "LocalLog") -> "LocalLog":
        if other.place != self.place:
            raise ValueError("cannot add local logs at different places")
        if self.place.is_archimedean:
            return LocalLog(self.place, value=self.value + other.value,
                            error=self.error + other.error)
        return LocalLog(self.place, exponent=self.exponent + other.exponent)


def abs_log(x, v: Place) -> LocalLog:
    x = Fraction(x)
    if x == 0:
        raise ZeroInput("log|0|_v is undefined")
    if v.is_archimedean:
        val = log_abs(x)
        return LocalLog(v, value=val, error=LOG_ULP * (abs(val) + 1.0))
    return LocalLog(v, exponent=Fraction(-ord_p(x, v.p)))


def support(x) -> list[Place]:
    """The archimedean place and every prime dividing numerator or denominator."""
    x = Fraction(x)
    primes = set(prime_divisors(x.numerator)) | set(prime_divisors(x.denominator))
    return [ARCH] + [Place(p) for p in sorted(primes)]


def product_formula_defect(x) -> float:
    """Sum of log|x|_v over all places; only the float rounding residue survives."""
    x = Fraction(x)
    if x == 0:
        raise ZeroInput("product formula needs x != 0")
    num = factor_int(x.numerator)
    den = factor_int(x.denominator)
    # exact check that the finite exponents cancel the archimedean size
    check = Fraction(1)
    for p, e in num:
        check *= Fraction(1, p ** e)
    for p, e in den:
        check *= p ** e
    if check * abs(x) != 1:
        raise AssertionError("finite exponents do not cancel")
    terms = [abs_log(x, ARCH).value]
    terms += [-e * math.log(p) for p, e in num]
    terms += [e * math.log(p) for p, e in den]
    return math.fsum(terms)


def bad_places(system) -> frozenset:
    """Archimedean place plus the primes of bad reduction of ``system``."""
    return frozenset([ARCH] + [Place(p) for p in system.bad_primes()])

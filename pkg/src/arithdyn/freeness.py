"""Relations between words in two maps, and preperiodic points they share."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import DegreeBudgetExceeded
from .henon import HenonMap
from .heights import weil_height
from .p1dyn import INF, RationalMapP1, is_preperiodic_p1
from .polymap import PolyMap2
from .skewprod import SkewProduct, is_preperiodic_skew

DEGREE_BUDGET = 1 << 20
LETTERS = ("F", "G")


@dataclass(frozen=True)
class Word:
    """Letters over {F, G}; ("F", "G") means F o G, so G acts first."""

    letters: tuple

    def __post_init__(self):
        letters = tuple(self.letters)
        if not letters or any(c not in LETTERS for c in letters):
            raise ValueError("a word is a nonempty sequence over F, G")
        object.__setattr__(self, "letters", letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return "[" + ",".join(self.letters) + "]"

    @classmethod
    def parse(cls, text: str) -> "Word":
        return cls(tuple(c for c in text.replace(",", "").strip("[] ") if not c.isspace()))


def _as_system(m):
    """Maps are composed as RationalMapP1 on the line or PolyMap2 on the plane."""
    if isinstance(m, (RationalMapP1, PolyMap2)):
        return m
    if isinstance(m, SkewProduct):
        return PolyMap2.from_skew(m)
    if isinstance(m, HenonMap):
        return PolyMap2.from_henon(m)
    raise TypeError(f"unsupported map type {type(m).__name__}")


def _degree(m) -> int:
    return m.degree


def compose_word(w: Word, F, G, cache: dict | None = None):
    """The exact composed map of w."""
    maps = {"F": _as_system(F), "G": _as_system(G)}
    if type(maps["F"]) is not type(maps["G"]):
        raise TypeError("F and G must act on the same space")
    if math.prod(_degree(maps[c]) for c in w.letters) > DEGREE_BUDGET:
        raise DegreeBudgetExceeded(f"degree of {w} exceeds the budget")
    cache = {} if cache is None else cache
    return _compose(w.letters, maps, cache)


def _compose(letters, maps, cache):
    if letters in cache:
        return cache[letters]
    if len(letters) == 1:
        out = maps[letters[0]]
    else:
        out = maps[letters[0]].compose(_compose(letters[1:], maps, cache))
    cache[letters] = out
    return out


@dataclass(frozen=True)
class RelationCertificate:
    w1: Word
    w2: Word
    composed: object
    verified: bool
    equal_length: bool

    def as_dict(self) -> dict:
        comp = self.composed
        text = comp.to_string() if hasattr(comp, "to_string") else repr(comp)
        return {"w1": str(self.w1), "w2": str(self.w2), "map": text,
                "verified": self.verified, "equal_length": self.equal_length}


def _word_key(letters):
    # shorter words first, then lexicographically larger (G > F) first
    return (len(letters), tuple(-LETTERS.index(c) for c in letters))


def _word_pairs(max_len: int, deg_F: int, deg_G: int):
    """Deterministic enumeration: total length, then first word, then second word."""
    words = [tuple(p) for L in range(1, max_len + 1) for p in product(LETTERS, repeat=L)]
    words.sort(key=_word_key)
    deg = {w: deg_F ** w.count("F") * deg_G ** w.count("G") for w in words}
    for total in range(2, 2 * max_len + 1):
        for i, w1 in enumerate(words):
            for w2 in words[i + 1:]:
                if len(w1) + len(w2) != total or deg[w1] != deg[w2]:
                    continue
                yield w1, w2


def _sample_points(kind, samples: int, seed: int):
    rng = random.Random(seed)
    lo, hi = -(1 << 16), 1 << 16
    if kind is RationalMapP1:
        return [Fraction(rng.randint(lo, hi)) for _ in range(samples)]
    return [(Fraction(rng.randint(lo, hi)), Fraction(rng.randint(lo, hi))) for _ in range(samples)]


def find_relation(F, G, max_len: int = 6, samples: int = 5, seed: int = 0) -> RelationCertificate | None:
    """First word pair (w1, w2) with w1(F, G) = w2(F, G), or None up to max_len."""
    maps = {"F": _as_system(F), "G": _as_system(G)}
    kind = type(maps["F"])
    if kind is not type(maps["G"]):
        raise TypeError("F and G must act on the same space")
    dF, dG = maps["F"].degree, maps["G"].degree
    if max(dF, dG) ** max_len > DEGREE_BUDGET:
        raise DegreeBudgetExceeded("max_len exceeds the degree budget")
    points = _sample_points(kind, samples, seed)
    values: dict = {}

    def value(letters, k):
        key = (letters, k)
        if key not in values:
            inner = points[k] if len(letters) == 1 else value(letters[1:], k)
            values[key] = _apply(maps[letters[0]], inner)
        return values[key]

    composed: dict = {}
    for w1, w2 in _word_pairs(max_len, dF, dG):
        if any(value(w1, k) != value(w2, k) for k in range(len(points))):
            continue
        m1 = _compose(w1, maps, composed)
        m2 = _compose(w2, maps, composed)
        if m1 == m2:
            return RelationCertificate(Word(w1), Word(w2), m1, True, len(w1) == len(w2))
    return None


def _apply(m, pt):
    if isinstance(m, RationalMapP1):
        return m(pt)
    if pt is None:
        return None
    return m(pt)


def verify_certificate(cert: RelationCertificate, F, G) -> bool:
    return compose_word(cert.w1, F, G) == compose_word(cert.w2, F, G) == cert.composed


# shared preperiodic points ----------------------------------------------


def _box_rationals(den_cutoff: int, height_cutoff: float) -> list[Fraction]:
    out = set()
    for b in range(1, den_cutoff + 1):
        for a in range(-den_cutoff, den_cutoff + 1):
            if math.gcd(a, b) == 1:
                q = Fraction(a, b)
                if weil_height(q).total() <= height_cutoff + 1e-12:
                    out.add(q)
    return sorted(out)


def shared_preperiodic_points(F, G, height_cutoff: float = 3.0, denominator_cutoff: int = 10) -> list:
    """Rational points in the box preperiodic for both F and G (P^1 includes infinity)."""
    if height_cutoff <= 0 or denominator_cutoff <= 0:
        raise ValueError("cutoffs must be positive")
    coords = _box_rationals(denominator_cutoff, height_cutoff)
    if isinstance(F, RationalMapP1) and isinstance(G, RationalMapP1):
        out = [INF] if is_preperiodic_p1(F, INF).value and is_preperiodic_p1(G, INF).value else []
        out += [q for q in coords if is_preperiodic_p1(F, q).value and is_preperiodic_p1(G, q).value]
        return out
    if isinstance(F, SkewProduct) and isinstance(G, SkewProduct):
        out = []
        for pt in product(coords, repeat=2):
            if weil_height(max(pt, key=lambda c: weil_height(c).total())).total() > height_cutoff:
                continue
            if is_preperiodic_skew(F, pt).value and is_preperiodic_skew(G, pt).value:
                out.append(pt)
        return out
    raise TypeError("shared preperiodic points need two P^1 maps or two skew products")

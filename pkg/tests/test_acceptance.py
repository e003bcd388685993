"""Acceptance criteria 1-12. Each test prints one PASS/FAIL line through ``record``.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from flint import fmpq, fmpq_poly

sys.path.insert(0, str(Path(__file__).parent))

from arithdyn.freeness import find_relation, verify_certificate
from arithdyn.heights import weil_height
from arithdyn.henon import canonical_heights_henon, green_henon
from arithdyn.intersect import (arcsine, equidistribution_check, height_decay_report, solve_common,
                                solve_equalizer, uniform_circle)
from arithdyn.p1dyn import canonical_height_p1, is_preperiodic_p1
from arithdyn.parsing import format_point, parse_map
from arithdyn.places import ARCH, Finite, ord_p, prime_divisors, product_formula_defect
from arithdyn.rittlab import (LinearMap, as_poly, chebyshev, is_special, linear_conjugation_solve,
                              ritt_first_step, verify_conjugation)
from arithdyn.skewprod import green_skew, is_preperiodic_skew, nullstellensatz_constants

from oracles import chebyshev_height, mahler_measure, naive_orbit, quadratic_escape, residue


def test_criterion_01_product_formula(record):
    rng = random.Random(1)
    xs = []
    while len(xs) < 10 ** 4:
        a, b = rng.randint(-(1 << 64), 1 << 64), rng.randint(1, 1 << 64)
        if a:
            xs.append(Fraction(a, b))
    t = time.perf_counter()
    worst = max(abs(product_formula_defect(x)) for x in xs)
    dt = time.perf_counter() - t
    ok = record(1, worst <= 1e-12 and dt < 5, f"max defect {worst:.3g} over 10^4 rationals in {dt:.2f}s")
    assert ok


def test_criterion_02_power_map(record):
    f = parse_map("p1: x^2")
    rng = random.Random(2)
    worst, exact = 0.0, True
    for _ in range(1000):
        q = Fraction(rng.randint(-10 ** 9, 10 ** 9), rng.randint(1, 10 ** 9))
        h, w = canonical_height_p1(f, q), weil_height(q)
        exact &= dict(h.finite_items) == dict(w.finite_items)
        worst = max(worst, abs(h.archimedean - w.archimedean))
    ok = record(2, exact and worst <= 1e-9, f"finite parts exact={exact}, archimedean gap {worst:.3g}")
    assert ok


def test_criterion_03_chebyshev_oracle(record):
    h = canonical_height_p1(parse_map("p1: x^2-2"), 3, 1e-10).total()
    gap = abs(h - chebyshev_height(3))
    assert abs(chebyshev_height(3) - math.log((3 + math.sqrt(5)) / 2)) < 1e-14
    ok = record(3, gap < 1e-6, f"h(3) = {h:.15f}, gap {gap:.3g}")
    assert ok


def test_criterion_04_preperiodic_golden_set(record):
    c = Fraction(-29, 16)
    f = parse_map("p1: x^2-29/16")
    cert = is_preperiodic_p1(f, Fraction(1, 4))
    golden = cert.value and (cert.tail, cert.cycle) == (1, 3)
    escape = quadratic_escape(c)
    t = time.perf_counter()
    mismatches, checked, found = 0, 0, []
    for b in range(1, 51):
        for a in range(-50, 51):
            if math.gcd(a, b) != 1:
                continue
            x = Fraction(a, b)
            got = is_preperiodic_p1(f, x)
            ref = naive_orbit(lambda z: z * z + c, x, 200, escape)
            assert ref[0] != "unknown"
            same = got.value == (ref[0] == "pre")
            if same and got.value:
                same = (got.tail, got.cycle) == ref[1:]
                found.append(x)
            mismatches += not same
            checked += 1
    dt = time.perf_counter() - t
    ok = record(4, golden and mismatches == 0 and dt < 60,
                f"1/4 tail 1 cycle 3: {golden}; {checked} box points, {mismatches} mismatches, "
                f"{len(found)} preperiodic, {dt:.1f}s")
    assert ok


HENON = ["henon: P=y^2, delta=1", "henon: P=y^2+1, delta=-1/2",
         "henon: P=y^2+1, delta=-1/2; P=y^3, delta=2"]


def test_criterion_05_henon(record):
    rng = random.Random(5)
    tol = 1e-9
    sandwich = invariance = 0
    for spec in HENON:
        h = parse_map(spec)
        for _ in range(100):
            p = (Fraction(rng.randint(-20, 20), rng.randint(1, 20)),
                 Fraction(rng.randint(-20, 20), rng.randint(1, 20)))
            hat, tilde = canonical_heights_henon(h, p, tol)
            err = hat.error_bound() + tilde.error_bound() + 1e-12
            sandwich += not (hat.total() / 2 <= tilde.total() + err and tilde.total() <= hat.total() + err)
            for v in [ARCH] + [Finite(q) for q in h.bad_primes()]:
                a = green_henon(h, p, v, tol).g_plus
                b = green_henon(h, h(p), v, tol).g_plus
                slack = 2 * tol + h.degree * a.error + b.error + 1e-12 * abs(b.value)
                invariance += abs(b.value - h.degree * a.value) > slack
    basic = parse_map(HENON[0])
    fixed = all(all(x.is_exact_zero() for x in canonical_heights_henon(basic, p)) for p in [(0, 0), (2, 2)])
    ok = record(5, sandwich == 0 and invariance == 0 and fixed,
                f"sandwich violations {sandwich}, invariance violations {invariance}, "
                f"fixed points exact zero: {fixed}")
    assert ok


SKEW = ["skew: p=x^2; q=y^2+x*y", "skew: p=x^2-1; q=y^2+x*y-3/4", "skew: p=2x^2; q=3y^2+x"]


def _skew_places(f):
    return [ARCH] + [Finite(p) for p in f.bad_primes()] + [Finite(5)]


def _log_plus_norm(q, v):
    if v.is_archimedean:
        return max(0.0, math.log(max(abs(float(x)) for x in q))) if any(q) else 0.0
    return max(0.0, max((-ord_p(x, v.p) * math.log(v.p) for x in q if x), default=0.0))


def test_criterion_06_skew_bounds(record):
    sandwich = halving = bound = 0
    nrng = np.random.default_rng(6)
    rng = random.Random(6)
    tol = 1e-8
    for spec in SKEW:
        f = parse_map(spec)
        P, Q = f.lift_terms
        d = f.degree
        for v in _skew_places(f):
            c = nullstellensatz_constants(f, v)
            if v.is_archimedean:
                W = nrng.normal(size=(10 ** 4, 3)) + 1j * nrng.normal(size=(10 ** 4, 3))
                W[:2000, 2] *= 1e-3
                X, Y, Z = W[:, 0], W[:, 1], W[:, 2]
                ev = lambda terms: sum(complex(cf) * X ** a * Y ** b * Z ** e for cf, (a, b, e) in terms)
                r = np.maximum(np.maximum(abs(ev(P)), abs(ev(Q))), abs(Z ** d)) / np.max(abs(W), axis=1) ** d
                sandwich += int(np.sum((r < c.C_prime * (1 - 1e-12)) | (r > c.C * (1 + 1e-12))))
            else:
                lo, hi = math.log(c.C_prime, v.p), math.log(c.C, v.p)
                for _ in range(10 ** 4):
                    w = tuple(Fraction(rng.randint(-400, 400), rng.randint(1, 400)) for _ in range(3))
                    if not any(w):
                        continue
                    nv = lambda vec: max(-ord_p(x, v.p) for x in vec if x)
                    e = nv(f.lift(w)) - d * nv(w)
                    sandwich += not (lo - 1e-9 <= e <= hi + 1e-9)
            gb = c.log_bound / (d - 1)
            for _ in range(1000):
                q = f.normalize_point(tuple(Fraction(rng.randint(-60, 60), rng.randint(1, 60)) for _ in range(2)))
                g = green_skew(f, q, v, tol, detect_cycles=False, normalize=False)
                bound += abs(g.value - _log_plus_norm(q, v)) > gb + g.truncation_error + g.error + 1e-12
            for _ in range(50):
                q = tuple(Fraction(rng.randint(-60, 60), rng.randint(1, 60)) for _ in range(2))
                g1 = green_skew(f, q, v, tol, detect_cycles=False)
                g2 = green_skew(f, q, v, tol, iterations=2 * g1.iterations, detect_cycles=False)
                halving += abs(g1.value - g2.value) > tol
    ok = record(6, sandwich == bound == halving == 0,
                f"sandwich violations {sandwich}, Green bound violations {bound}, halving failures {halving}")
    assert ok


@pytest.mark.slow
def test_criterion_07_local_to_global(record):
    box = sorted({Fraction(a, b) for b in range(1, 21) for a in range(-20, 21)})
    rng = random.Random(7)
    disagree = pre_count = numeric_bad = 0
    t = time.perf_counter()
    for spec in ["skew: p=x^2; q=y^2", "skew: p=x^2; q=y^2+x*y"]:
        f = parse_map(spec)
        for x in box:
            for y in box:
                den = x.denominator * y.denominator
                places = [ARCH] + [Finite(p) for p in prime_divisors(den)] if den > 1 else [ARCH]
                pre = is_preperiodic_skew(f, (x, y)).value
                zero = all(green_skew(f, (x, y), v).is_exact_zero() for v in places)
                disagree += pre != zero
                pre_count += pre
                # numeric cross-check without the cycle certificate
                if pre or rng.random() < 0.01:
                    total = 0.0
                    err = 0.0
                    for v in places:
                        g = green_skew(f, (x, y), v, 1e-9, detect_cycles=False)
                        total += g.value
                        err += g.error + g.truncation_error
                    numeric_bad += (abs(total) > err + 1e-9) if pre else (total <= err + 1e-9)
    dt = time.perf_counter() - t
    ok = record(7, disagree == 0 and numeric_bad == 0,
                f"{2 * len(box) ** 2} box points, {disagree} disagreements, {pre_count} preperiodic, "
                f"numeric cross-check failures {numeric_bad}, {dt:.0f}s")
    assert ok


def test_criterion_08_ritt(record):
    commute = all(chebyshev(m)(chebyshev(n)) == chebyshev(m * n) for m in range(1, 7) for n in range(1, 7))
    kinds = [is_special(as_poly(t)).kind for t in ["x^2", "2x^2-1", "x^3-3x", "x^2+1"]]
    classify = kinds == ["Power", "Chebyshev", "Chebyshev", "NotSpecial"]
    A, C, D, B = as_poly("(x+1)^2"), as_poly("x^2-1"), as_poly("x^2"), as_poly("x^2")
    mus = ritt_first_step(A, C, D, B)
    lin = lambda mu: fmpq_poly([fmpq(mu.b.numerator, mu.b.denominator), fmpq(mu.a.numerator, mu.a.denominator)])
    first = mus == [LinearMap(1, 1)] and all(D(lin(m)) == A and lin(m.inverse())(B) == C for m in mus)
    certs = True
    for t in ["x^2", "2x^2-1", "x^3-3x"]:
        v = is_special(as_poly(t))
        certs &= verify_conjugation(v.conjugator, as_poly(t), v.model(as_poly(t).degree()))
    for s in linear_conjugation_solve(as_poly("2x^2-1"), chebyshev(2)):
        certs &= verify_conjugation(s, as_poly("2x^2-1"), chebyshev(2))
    ok = record(8, commute and classify and first and certs,
                f"commutation {commute}, kinds {kinds}, mu {[str(m) for m in mus]}, certificates {certs}")
    assert ok


def test_criterion_09_freeness(record):
    F, G = parse_map("skew: p=x^2; q=y^2"), parse_map("skew: p=x^2; q=-y^2")
    cert = find_relation(F, G, 2)
    found = cert is not None and (str(cert.w1), str(cert.w2)) == ("[G,G]", "[G,F]") and verify_certificate(cert, F, G)
    t = time.perf_counter()
    none = find_relation(parse_map("p1: x^2"), parse_map("p1: x^2-1"), max_len=6) is None
    dt = time.perf_counter() - t
    ok = record(9, found and none and dt < 120,
                f"certificate {cert.w1 if cert else None} = {cert.w2 if cert else None} verified {found}; "
                f"no relation for x^2, x^2-1 up to length 6: {none} ({dt:.1f}s)")
    assert ok


def _decay_rows():
    return height_decay_report(parse_map("p1: x^2"), parse_map("p1: 2x"), range(1, 7))


def test_criterion_10_small_height_decay(record):
    # the Mahler measure of x^(2^m-1) - 2 is (2^m - 1) * h, the degree of the minimal polynomial
    # times the height: the report's (d^m - deg C) * max column
    rows = _decay_rows()
    gaps = []
    for r in rows:
        oracle = mahler_measure([-2] + [0] * (2 ** r.m - 2) + [1])
        gaps.append(max(abs(r.scaled_net - oracle), abs(oracle - math.log(2))))
    ok = record(10, max(gaps) < 1e-6, f"(d^m - deg C)*max matches Mahler measure log 2 for m=1..6, "
                f"max gap {max(gaps):.3g}; raw d^m*max {[round(r.scaled, 4) for r in rows]}")
    assert ok


@pytest.mark.xfail(strict=True, reason="d^m * max equals 2^m/(2^m - 1) * log 2, not log 2")
def test_criterion_10_literal_scaling():
    for r in _decay_rows():
        assert abs(r.scaled - math.log(2)) < 1e-6


def test_criterion_11_equidistribution(record):
    t = time.perf_counter()
    a = equidistribution_check(parse_map("p1: x^2"), 10, uniform_circle())
    b = equidistribution_check(parse_map("p1: x^2-2"), 8, arcsine())
    dt = time.perf_counter() - t
    ok = record(11, a.ks < 0.05 and b.ks < 0.06 and dt < 60,
                f"circle KS {a.ks:.4g} ({a.points} pts), arcsine KS {b.ks:.4g} ({b.points} pts), {dt:.1f}s")
    assert ok


SOLVES = [
    ("poly2: x^2, y^2", None, 1), ("poly2: x^2, y^2", None, 2), ("poly2: x^2, y^2", "poly2: y, x", 2),
    ("henon: P=y^2, delta=1", None, 3), ("skew: p=x^2-1; q=y^2+x*y", None, 2),
    ("skew: p=x^2; q=y^2+x", "poly2: x+1, y", 1), ("poly2: x^2-2, y^2+x", None, 1),
]


def _plane_equations(F, m, C):
    from arithdyn.polymap import PolyMap2
    plane = lambda g: g if isinstance(g, PolyMap2) else PolyMap2.from_skew(g) if hasattr(g, "q") else PolyMap2.from_henon(g)
    F = plane(F)
    G = F
    for _ in range(m - 1):
        G = G.compose(F)
    C = PolyMap2.identity() if C is None else plane(C)
    return [{tuple(int(e) for e in k): Fraction(int(v.p), int(v.q)) for k, v in (a - b).to_dict().items()}
            for a, b in ((G.f1, C.f1), (G.f2, C.f2))]


def test_criterion_12_solver_exactness(record):
    checked = failures = 0
    for spec, cspec, m in SOLVES:
        F = parse_map(spec)
        C = parse_map(cspec) if cspec else None
        eqs = _plane_equations(F, m, C)
        for o in solve_equalizer(F, m, C).orbits:
            checked += o.degree
            failures += any(residue(eq, o.field, o.coords) for eq in eqs)
    F, G = parse_map("poly2: x^2, y^2"), parse_map("poly2: y^2, x^2")
    common = solve_common(F, G, None, 1, 1)
    eqs = _plane_equations(F, 1, None) + _plane_equations(G, 1, None)
    failures += sum(any(residue(eq, o.field, o.coords) for eq in eqs) for o in common.orbits)
    exact = common.count == 2 and sorted(common.rational_points()) == [(0, 0), (1, 1)]
    ok = record(12, failures == 0 and exact,
                f"{checked} solution points re-substituted, {failures} nonzero residues; "
                f"common zeros {[format_point(p) for p in sorted(common.rational_points())]}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))

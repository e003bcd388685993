"""Randomized invariants."""

import math
from fractions import Fraction

from flint import fmpq_poly
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from arithdyn.cli import RunConfig
from arithdyn.freeness import find_relation, verify_certificate
from arithdyn.heights import (AlgebraicNumber, height_algebraic, weil_height, weil_height_affine,
                              weil_height_projective)
from arithdyn.intersect import solve_equalizer
from arithdyn.p1dyn import RationalMapP1, canonical_height_p1, height_bound
from arithdyn.parsing import format_map, format_point, parse_map, parse_point, parse_upoly
from arithdyn.places import ARCH, Finite, abs_log, bad_places, product_formula_defect
from arithdyn.polymap import PolyMap2
from arithdyn.rittlab import (LinearMap, chebyshev, conjugate, is_special, linear_conjugation_solve,
                              verify_conjugation)
from arithdyn.skewprod import green_skew, green_skew_lift

from oracles import residue, weil_height_by_places

SLOW = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
BIG = st.integers(-(1 << 64), 1 << 64)
NONZERO = st.fractions(max_denominator=1 << 64).filter(lambda q: q != 0 and abs(q.numerator) <= 1 << 64)
SMALL = st.fractions(min_value=-40, max_value=40, max_denominator=40)
PRIMES = st.sampled_from([2, 3, 5, 7, 11, 13, 1000003])


@given(NONZERO)
def test_product_formula(x):
    assert abs(product_formula_defect(x)) <= 1e-12 * (1 + math.log(abs(x.numerator) * x.denominator))


@given(NONZERO, NONZERO, PRIMES)
def test_abs_log_is_additive_at_finite_places(x, y, p):
    v = Finite(p)
    assert abs_log(x * y, v).exponent == abs_log(x, v).exponent + abs_log(y, v).exponent


@given(st.integers(1, 10 ** 6), st.integers(-(10 ** 6), 10 ** 6).filter(bool), st.sampled_from([3, 5, 7]))
def test_bad_places_stable_under_unit_rescaling(a, b, p):
    # multiply every coefficient of x^2 + b/(a p) by a p-adic unit u
    u = Fraction(p * 4 + 1, p * 2 + 1)
    c = Fraction(b, a * p)
    f = RationalMapP1([c, 0, 1], [1])
    g = RationalMapP1([u * c, 0, u], [u])
    assert (Finite(p) in bad_places(f)) == (Finite(p) in bad_places(g))


@given(NONZERO.filter(lambda q: abs(q.numerator) < 10 ** 12 and q.denominator < 10 ** 12))
def test_weil_matches_algebraic_and_place_sum(x):
    w = weil_height(x)
    a = height_algebraic(AlgebraicNumber.from_rational(x))
    assert dict(w.finite_items) == dict(a.finite_items)
    assert abs(w.total() - a.total()) <= 1e-9
    assert abs(w.total() - weil_height_by_places([x])) <= 1e-9


@given(NONZERO.filter(lambda q: abs(q.numerator) < 10 ** 6 and q.denominator < 10 ** 6), st.integers(1, 10))
def test_height_of_power(x, n):
    hx, hn = weil_height(x), weil_height(x ** n)
    assert {p: n * e for p, e in hx.finite_items} == dict(hn.finite_items)
    assert abs(hn.total() - n * hx.total()) <= 1e-9 * n * (1 + hx.total())


@given(st.lists(SMALL, min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_affine_height_permutation_and_sign(coords, rnd):
    h = weil_height_affine(tuple(coords))
    shuffled = list(coords)
    rnd.shuffle(shuffled)
    assert abs(weil_height_affine(tuple(shuffled)).total() - h.total()) <= 1e-12
    assert h.total() >= -h.error_bound()
    assume(any(coords))
    hp = weil_height_projective(tuple(coords))
    assert hp.total() >= -hp.error_bound()


MAPS = [parse_map(t) for t in ["p1: x^2", "p1: x^2-1", "p1: x^2-29/16", "p1: x^2-2", "p1: (x^2+2)/(2x)"]]


@SLOW
@given(st.sampled_from(MAPS), SMALL)
def test_canonical_height_functoriality_and_comparison(f, x):
    tol = 1e-9
    try:
        fx = f(x)
    except ZeroDivisionError:
        return
    a = canonical_height_p1(f, x, tol).total()
    b = canonical_height_p1(f, fx, tol).total()
    assert abs(b - f.degree * a) <= 2 * tol * (1 + f.degree)
    C = height_bound(f, samples=0).value
    assert abs(a - weil_height(x).total()) <= C / (f.degree - 1) + 1e-9


SKEW = [parse_map(t) for t in ["skew: p=x^2; q=y^2+x*y", "skew: p=x^2-1; q=y^2+x*y-3/4"]]


@SLOW
@given(st.sampled_from(SKEW), SMALL, SMALL, st.sampled_from([ARCH, Finite(2)]))
def test_skew_green_invariance(f, x, y, v):
    tol = 1e-9
    a = green_skew(f, (x, y), v, tol)
    b = green_skew(f, f((x, y)), v, tol)
    slack = 2 * tol + f.degree * a.error + b.error + 1e-12 * abs(b.value)
    assert abs(b.value - f.degree * a.value) <= slack


@SLOW
@given(st.sampled_from(SKEW), st.tuples(*[st.floats(-9, 9)] * 3), st.floats(0.01, 100))
def test_skew_lift_homogeneity(f, w, lam):
    assume(max(abs(c) for c in w) > 1e-3)
    tol = 1e-9
    a = green_skew_lift(f, w, ARCH, tol)
    b = green_skew_lift(f, tuple(lam * c for c in w), ARCH, tol)
    assert abs(b - a - math.log(lam)) <= 2 * tol + 1e-12 * (abs(a) + abs(b))


@given(st.integers(1, 6), st.integers(1, 6))
def test_chebyshev_commutation(m, n):
    assert chebyshev(m)(chebyshev(n)) == chebyshev(m * n)


LIN = st.builds(LinearMap, st.fractions(-9, 9, max_denominator=9).filter(bool), st.fractions(-9, 9, max_denominator=9))


@SLOW
@given(st.sampled_from(["x^2", "2x^2-1", "x^3-3x", "x^2+1", "x^3+x", "x^4-x"]), LIN)
def test_special_kind_invariant_and_conjugators_verify(text, l):
    f = parse_upoly(text)
    g = fmpq_poly([c.coeffs()[0] if c.coeffs() else 0 for c in conjugate(l, f)])
    assert is_special(g).kind == is_special(f).kind
    sols = linear_conjugation_solve(f, g)
    assert sols and all(verify_conjugation(s, f, g) for s in sols)


@SLOW
@given(st.sampled_from(["p1: x^2-1", "p1: x^3+x/2", "p1: (x^2+2)/(2x)"]))
def test_relation_with_own_iterate(text):
    F = parse_map(text)
    cert = find_relation(F, F.compose(F), max_len=3)
    assert cert is not None and cert.verified and verify_certificate(cert, F, F.compose(F))
    assert cert == find_relation(F, F.compose(F), max_len=3)


@SLOW
@given(st.integers(-3, 3).filter(bool), st.integers(-3, 3), st.integers(-3, 3).filter(bool), st.integers(-3, 3))
def test_equalizer_points_satisfy_equations_exactly(a, b, c, e):
    # x^2 = a x + b and y^2 = c y + e, solved as one plane system
    F, C = parse_map("poly2: x^2, y^2"), PolyMap2({(1, 0): a, (0, 0): b}, {(0, 1): c, (0, 0): e})
    var = solve_equalizer(F, 1, C)
    eqs = [{(2, 0): 1, (1, 0): -a, (0, 0): -b}, {(0, 2): 1, (0, 1): -c, (0, 0): -e}]
    distinct = (1 + (a * a + 4 * b != 0)) * (1 + (c * c + 4 * e != 0))
    assert var.count == distinct
    assert sum(o.degree * o.multiplicity for o in var.orbits) == 4
    for o in var.orbits:
        for eq in eqs:
            assert residue(eq, o.field, o.coords) == []


@given(st.lists(st.sampled_from(["1/3", "(1, -2/5)", "inf", "0"]), max_size=3),
       st.floats(1e-15, 1.0), st.one_of(st.none(), st.integers(1, 1 << 20)), st.sampled_from(["1", "1..3", "2,4"]))
def test_run_config_round_trip(points, tol, bits, m):
    cfg = RunConfig("common-zeros", {"F": "poly2: x^2, y^2", "m": m, "tol": tol, "point": points or None,
                                     "budget_bits": bits})
    back = RunConfig.from_text(cfg.to_text())
    assert back.to_text() == cfg.to_text()
    assert all(back.get(k) == cfg.get(k) for k in ("F", "m", "tol", "budget_bits"))


@given(st.lists(SMALL, min_size=1, max_size=3))
def test_point_round_trip(coords):
    pt = tuple(coords)
    assert parse_point(format_point(pt)) == pt


@given(st.lists(SMALL, min_size=3, max_size=4).filter(lambda c: c[-1] != 0))
def test_map_text_round_trip(coeffs):
    f = RationalMapP1(coeffs, [1])
    assert parse_map(format_map(f)) == f

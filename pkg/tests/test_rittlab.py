import random
from fractions import Fraction

import numpy as np
import pytest
from flint import fmpq, fmpq_poly

from arithdyn.errors import PowerMapDegenerate, PreconditionViolated, SpecialInput
from arithdyn.rittlab import (LinearMap, as_poly, chebyshev, common_normal_form, conjugate,
                              is_special, linear_conjugation_solve, linearly_related,
                              normal_form_xsht, ritt_first_step, symmetry_group,
                              verify_conjugation, verify_relation)

X = fmpq_poly([0, 1])


def P(text):
    return as_poly(text)


def test_chebyshev_examples():
    assert chebyshev(1) == X
    assert chebyshev(2) == P("x^2-2")
    assert chebyshev(3) == P("x^3-3x")
    with pytest.raises(ValueError):
        chebyshev(0)


@pytest.mark.parametrize("d", range(1, 13))
def test_chebyshev_functional_equation(d):
    # u^d T_d(u + 1/u) = u^(2d) + 1 as polynomials in u
    T = chebyshev(d).coeffs()
    lhs = sum((fmpq_poly([1, 0, 1]) ** k * X ** (d - k) * c for k, c in enumerate(T)), fmpq_poly([]))
    assert lhs == X ** (2 * d) + 1


def test_chebyshev_commutation():
    for a in range(1, 7):
        for b in range(1, 7):
            assert chebyshev(a)(chebyshev(b)) == chebyshev(a * b)


def test_conjugation_examples():
    sols = linear_conjugation_solve(P("2x^2-1"), P("x^2-2"))
    assert sols == [LinearMap(2, 0)]
    assert LinearMap(1, 0) in linear_conjugation_solve(P("x^2"), P("x^2"))
    assert linear_conjugation_solve(P("x^2+1"), P("x^2-2")) == []


def test_conjugators_over_extensions():
    # l = a x with a^2 = 2 conjugates 2x^3 to x^3 (a^(-2) * 2 = 1)
    sols = linear_conjugation_solve(P("2x^3"), P("x^3"))
    assert sols and all(verify_conjugation(l, P("2x^3"), P("x^3")) for l in sols)
    assert any(not l.is_rational for l in sols)


@pytest.mark.parametrize("f, g, l1, l2", [
    ("x^2+1", "x^2", LinearMap(1, 1), LinearMap(1, 0)),
    ("(x+1)^2", "x^2", LinearMap(1, 0), LinearMap(1, 1)),
    ("x^2+x", "x^2", LinearMap(1, Fraction(-1, 4)), LinearMap(1, Fraction(1, 2))),
])
def test_linearly_related_examples(f, g, l1, l2):
    rel = linearly_related(P(f), P(g))
    assert (rel.l1, rel.l2) == (l1, l2)
    assert verify_relation(P(f), rel.l1, P(g), rel.l2)


def test_not_related():
    assert linearly_related(P("x^3+x"), P("x^3")) is None


def test_is_special_examples():
    assert is_special(P("x^2")).kind == "Power"
    v = is_special(P("2x^2-1"))
    assert (v.kind, v.conjugator, v.sign) == ("Chebyshev", LinearMap(2, 0), 1)
    assert is_special(P("x^3-3x")).kind == "Chebyshev"
    assert is_special(P("x^2+1")).kind == "NotSpecial"
    v = is_special(P("-x^3+3x"))
    assert v.kind == "Chebyshev"


def test_special_certificates_verify():
    for text in ["x^2", "2x^2-1", "x^3-3x", "-x^3+3x", "4x^3-3x", "(x-1)^3+1"]:
        v = is_special(P(text))
        assert verify_conjugation(v.conjugator, P(text), v.model(P(text).degree()))


def test_is_special_invariant_under_conjugation():
    rng = random.Random(9)
    for text in ["x^2", "2x^2-1", "x^3-3x", "x^2+1", "x^3+x"]:
        f = P(text)
        kind = is_special(f).kind
        for _ in range(50):
            l = LinearMap(Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 9)),
                          Fraction(rng.randint(-9, 9), rng.randint(1, 9)))
            g = fmpq_poly([c.coeffs()[0] if c.coeffs() else 0 for c in conjugate(l, f)])
            assert is_special(g).kind == kind


@pytest.mark.parametrize("f, s, t", [("x^3+x", 1, 2), ("x^4+x^2", 2, 2), ("x^3+x^2", 2, 1)])
def test_normal_form_examples(f, s, t):
    nf = normal_form_xsht(P(f))
    assert (nf.s, nf.t) == (s, t)
    assert nf.h == fmpq_poly([1, 1]) and nf.phi == LinearMap(1, 0)
    assert nf.expand() == P(f)


def test_normal_form_after_centering():
    f = P("(x+2)^3+(x+2)-2")  # conjugate of x^3 + x by a shift
    nf = normal_form_xsht(f)
    g = conjugate(nf.phi, f)
    assert fmpq_poly([c.coeffs()[0] if c.coeffs() else 0 for c in g]) == nf.expand()
    assert (nf.s, nf.t) == (1, 2)


def test_normal_form_rejects_power():
    with pytest.raises(PowerMapDegenerate):
        normal_form_xsht(P("(x-1)^3"))


def test_symmetry_examples():
    G = symmetry_group(P("x^2+1"))
    # x^2 + 1 is related to x^2, so every scaling about 0 lies in G(f); f o mu = f only for +-x
    assert G.kind == "AllScalings"
    assert set(G.stabilizer) == {LinearMap(1, 0), LinearMap(-1, 0)}
    G = symmetry_group(P("x^3+x"))
    assert set(G.elements) == {LinearMap(1, 0), LinearMap(-1, 0)}
    # x^3 + x^2 is odd about -1/3 up to a constant, so the reflection there is a symmetry
    G = symmetry_group(P("x^3+x^2"))
    assert set(G.elements) == {LinearMap(1, 0), LinearMap(-1, Fraction(-2, 3))}


def lin(mu):
    return fmpq_poly([fmpq(mu.b.numerator, mu.b.denominator), fmpq(mu.a.numerator, mu.a.denominator)])


def embeddings(mu):
    """All complex (a, b) represented by mu: one pair per root of its field polynomial."""
    if mu.is_rational:
        return [(complex(mu.a), complex(mu.b))]
    roots = np.roots([float(c) for c in reversed(mu.field)])
    ev = lambda cs, t: sum(complex(c) * t ** k for k, c in enumerate(cs))
    return [(ev(mu.a, t), ev(mu.b, t)) for t in roots]


@pytest.mark.parametrize("f", ["x^3+x", "x^3+x^2", "x^5+x", "x^4+x^2", "x^7+x^3+2x"])
def test_symmetry_closure_and_action(f):
    f = P(f)
    pts = [e for mu in symmetry_group(f).elements for e in embeddings(mu)]
    near = lambda u: any(abs(u[0] - a) + abs(u[1] - b) < 1e-9 for a, b in pts)
    fc = [complex(c) for c in reversed([float(c) for c in f.coeffs()])]
    zs = np.array([0.3 + 0.1j, -1.2 + 0.7j, 2.0 - 0.4j])
    for a1, b1 in pts:
        assert near((1 / a1, -b1 / a1))
        for a2, b2 in pts:
            assert near((a1 * a2, a1 * b2 + b1))
        # f o mu = nu o f with nu linear: the ratio of differences is constant
        lhs = np.polyval(fc, a1 * zs + b1)
        rhs = np.polyval(fc, zs)
        ratio = (lhs[1:] - lhs[0]) / (rhs[1:] - rhs[0])
        assert abs(ratio[0] - ratio[1]) < 1e-9 * abs(ratio[0])


def test_ritt_first_step_examples():
    assert ritt_first_step(P("(x+1)^2"), P("x^2-1"), P("x^2"), P("x^2")) == [LinearMap(1, 1)]
    D = P("x^2+x")
    assert ritt_first_step(D, P("x^2"), D, P("x^2")) == [LinearMap(1, 0)]
    assert ritt_first_step(P("x^2+x"), P("x^2"), P("x^2"), P("x^2"), strict=False) == []
    with pytest.raises(PreconditionViolated):
        ritt_first_step(P("x^2+x"), P("x^2"), P("x^2"), P("x^2"))
    with pytest.raises(PreconditionViolated):
        ritt_first_step(P("x^3"), P("x^2"), P("x^2"), P("x^2"))


def test_ritt_solutions_verify():
    A, C, D, B = P("(x+1)^2"), P("x^2-1"), P("x^2"), P("x^2")
    for mu in ritt_first_step(A, C, D, B):
        assert D(lin(mu)) == A
        assert lin(mu.inverse())(B) == C


def test_common_normal_form_examples():
    res = common_normal_form(P("x^3+x"), P("-x^3-x"))
    assert (res.phi, res.eps1, res.eps2, res.R) == (LinearMap(1, 0), 1, -1, P("x^3+x"))
    res = common_normal_form(P("x^3+x^2+1"), P("x^3+x^2+1"))
    assert res.eps1 == res.eps2 == 1
    assert common_normal_form(P("x^2+1"), P("x^2+2")) is None
    with pytest.raises(SpecialInput):
        common_normal_form(P("x^2"), P("x^2+1"))

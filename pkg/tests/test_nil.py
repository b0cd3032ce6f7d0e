import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.errors import BudgetExceeded, ValidationError
from ergolab.nil import (
    HeisenbergElement,
    NilsystemSpec,
    PeriodizedBump,
    SkewTranslation,
    TrigObservable,
    VerticalTwist,
    equidistribution_report,
    haar_integral,
    heisenberg_pow,
    nilsequence,
    nilsequence_eval,
    reduce_fundamental,
    reduce_fundamental_array,
)
from ergolab.seqcore import FolnerWindow, cesaro_average

GOLDEN = (math.sqrt(5) - 1) / 2
H = HeisenbergElement


def ee(x):
    return cmath.exp(2j * math.pi * x)


def matrix(g):
    return np.array([[1, g.x, g.z], [0, 1, g.y], [0, 0, 1]], dtype=object)


rationals = st.fractions(min_value=-20, max_value=20, max_denominator=50)
exact_elements = st.builds(H, rationals, rationals, rationals)
floats = st.floats(-10, 10, allow_nan=False)
float_elements = st.builds(H, floats, floats, floats)


# -- group law ------------------------------------------------------------------------

def test_group_law_is_matrix_product():
    g, h = H(Fraction(1, 3), Fraction(-2), Fraction(5, 7)), H(Fraction(4), Fraction(1, 2), Fraction(0))
    prod = matrix(g).dot(matrix(h))
    gh = g * h
    assert (gh.x, gh.y, gh.z) == (prod[0, 1], prod[1, 2], prod[0, 2])


@settings(max_examples=200)
@given(exact_elements, exact_elements, exact_elements)
def test_associativity_exact(a, b, c):
    assert (a * b) * c == a * (b * c)


@settings(max_examples=200)
@given(float_elements, float_elements, float_elements)
def test_associativity_float(a, b, c):
    lhs, rhs = (a * b) * c, a * (b * c)
    assert np.allclose(lhs.astuple(), rhs.astuple(), atol=1e-12, rtol=1e-12)


@settings(max_examples=200)
@given(exact_elements)
def test_identity_and_inverse_exact(g):
    e0 = H.identity(exact=True)
    assert g * e0 == g and e0 * g == g
    assert g * g.inverse() == e0 and g.inverse() * g == e0
    assert g.inverse() == H(-g.x, -g.y, -g.z + g.x * g.y)


@settings(max_examples=200)
@given(exact_elements, st.integers(-30, 30), st.integers(-30, 30))
def test_pow_additive_exact(t, n, m):
    assert heisenberg_pow(t, n) * heisenberg_pow(t, m) == heisenberg_pow(t, n + m)


@settings(max_examples=100)
@given(float_elements, st.integers(-30, 30), st.integers(-30, 30))
def test_pow_additive_float(t, n, m):
    lhs = heisenberg_pow(t, n) * heisenberg_pow(t, m)
    rhs = heisenberg_pow(t, n + m)
    assert np.allclose(lhs.astuple(), rhs.astuple(), rtol=1e-9, atol=1e-9)


@settings(max_examples=100)
@given(exact_elements, st.integers(-12, 12))
def test_pow_matches_iterated_multiplication(t, n):
    acc = H.identity(exact=True)
    step = t if n >= 0 else t.inverse()
    for _ in range(abs(n)):
        acc = acc * step
    assert heisenberg_pow(t, n) == acc


def test_pow_examples():
    assert heisenberg_pow(H(1, 1, 0), 3) == H(3, 3, 3)
    assert H(1, 1, 0) * H(1, 1, 0) == H(2, 2, 1)
    t = H(Fraction(2, 3), Fraction(5), Fraction(-1, 4))
    assert heisenberg_pow(t, 0) == H(0, 0, 0)
    assert heisenberg_pow(t, -1) == H(-t.x, -t.y, -t.z + t.x * t.y)


def test_commutation_rule():
    a, b = H(1.0, 2.0, 0.3), H(2.0, 4.0, -1.0)
    assert a.commutes_with(b)
    assert (a * b).astuple() == pytest.approx((b * a).astuple())
    assert not a.commutes_with(H(1.0, 0.0, 0.0))


# -- fundamental domain ------------------------------------------------------------------

def test_reduce_example():
    p, gamma = reduce_fundamental(H(Fraction(5, 4), Fraction(-1, 2), Fraction(23, 10)))
    assert p == H(Fraction(1, 4), Fraction(1, 2), Fraction(11, 20))
    assert gamma == H(-1, 1, -3)


def test_reduce_inside_and_lattice():
    g = H(0.1, 0.7, 0.99)
    p, gamma = reduce_fundamental(g)
    assert p == g and gamma.astuple() == (0, 0, 0)
    p, _ = reduce_fundamental(H(2, 3, 0))
    assert p.astuple() == (0, 0, 0)


def test_reduce_invariants_on_random_elements():
    rng = np.random.default_rng(10)
    g = rng.uniform(-50, 50, size=(10**5, 3))
    px, py, pz = (np.asarray(v, dtype=np.float64) for v in reduce_fundamental_array(*g.T))
    for v in (px, py, pz):
        assert np.all((v >= 0) & (v < 1))
    # reconstruct gamma and check g * gamma = p
    q = -np.floor(g[:, 1])
    p = -np.floor(g[:, 0])
    r = pz - (g[:, 2] + g[:, 0] * q)
    assert np.allclose(r, np.round(r), atol=1e-9)
    assert np.allclose(g[:, 0] + p, px, atol=1e-12)
    assert np.allclose(g[:, 1] + q, py, atol=1e-12)


@settings(max_examples=300)
@given(float_elements)
def test_reduce_scalar_properties(g):
    p, gamma = reduce_fundamental(g)
    assert all(0 <= v < 1 for v in p.astuple())
    assert all(float(v).is_integer() for v in gamma.astuple())
    assert np.allclose((g * gamma).astuple(), p.astuple(), atol=1e-9)


@settings(max_examples=200)
@given(exact_elements)
def test_reduce_exact_mode(g):
    p, gamma = reduce_fundamental(g)
    assert g * gamma == p
    assert all(0 <= v < 1 for v in p.astuple())


# -- observables --------------------------------------------------------------------------

def test_bump_is_lattice_invariant():
    psi = PeriodizedBump(center=(0.3, 0.6, 0.4), radius=0.3)
    rng = np.random.default_rng(3)
    g = rng.uniform(0, 1, size=(500, 3))
    base = psi(*g.T)
    for p, q, r in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (-1, 1, 2), (1, -2, -3)]:
        x, y, z = g.T
        moved = psi(x + p, y + q, z + r + x * q)
        assert np.allclose(moved, base, atol=1e-14)


def test_bump_sup_bound_holds():
    psi = PeriodizedBump()
    rng = np.random.default_rng(4)
    vals = psi(*rng.uniform(0, 1, size=(20000, 3)).T)
    assert np.max(np.abs(vals)) <= psi.sup_bound + 1e-15
    assert psi(0.5, 0.5, 0.5) == pytest.approx(psi.sup_bound)


def test_bump_rejects_wide_radius():
    with pytest.raises(ValidationError):
        PeriodizedBump(radius=0.6)


def test_vertical_twist_flagged():
    assert VerticalTwist(2).continuous is False
    assert VerticalTwist(2)(0.0, 0.0, 0.25) == pytest.approx(-1)


# -- nilsequences ----------------------------------------------------------------------------

def char1(k=1):
    return TrigObservable([[k]], [1.0])


def test_torus_nilsequence_is_linear_phase():
    spec = NilsystemSpec("torus", [GOLDEN], char1())
    for n in (0, 1, 7, 12345):
        assert abs(nilsequence_eval(spec, n) - ee(n * GOLDEN)) < 1e-12


def test_torus_several_variables():
    spec = NilsystemSpec("torus", [[0.1, 0.2], [0.3, math.sqrt(2)]], TrigObservable([[1, 2]], [1.0]))
    n1, n2 = 5, 9
    expect = ee(n1 * 0.1 + n2 * 0.3 + 2 * (n1 * 0.2 + n2 * math.sqrt(2)))
    assert abs(nilsequence_eval(spec, [n1, n2]) - expect) < 1e-12


def test_skew_example_map():
    # T(x, y) = (x, y + x) started at (alpha, 0); Psi(x, y) = e(y)
    spec = NilsystemSpec("skew", [SkewTranslation(0.0, 0.0, 1)], TrigObservable([[0, 1]], [1.0]),
                         start=(GOLDEN, 0.0))
    for n in (1, 2, 50, 999):
        assert abs(nilsequence_eval(spec, n) - ee(n * GOLDEN)) < 1e-12


def test_skew_closed_form_matches_iteration():
    tau = SkewTranslation(math.sqrt(2) - 1, 0.1, 2)
    spec = NilsystemSpec("skew", [tau], TrigObservable([[1, 1]], [1.0]), start=(0.2, 0.7))
    x, y = 0.2, 0.7
    vals = []
    for n in range(1, 40):
        x, y = x + tau.alpha, y + tau.c * x + tau.beta  # right side uses the old x
        vals.append(ee(x + y))
    got = nilsequence(spec).evaluate(np.arange(1, 40))
    assert np.allclose(got, vals, atol=1e-10)


def test_skew_commutation_checked():
    with pytest.raises(ValidationError):
        NilsystemSpec("skew", [SkewTranslation(0.1, 0, 1), SkewTranslation(0.3, 0, 1)], char1())


def test_heisenberg_orbit_matches_group_multiplication():
    a, b = H(math.sqrt(2) - 1, math.sqrt(3) - 1, 0.1), H(2 * (math.sqrt(2) - 1), 2 * (math.sqrt(3) - 1), 0.0)
    spec = NilsystemSpec("heisenberg", [a, b], PeriodizedBump())
    for n1, n2 in [(0, 0), (3, 4), (10, 1), (7, 7)]:
        g = heisenberg_pow(a, n1) * heisenberg_pow(b, n2)
        p, _ = reduce_fundamental(g)
        got = [float(v[0]) for v in spec.orbit(np.array([n1]), np.array([n2]))]
        assert np.allclose(got, p.astuple(), atol=1e-10)


def test_heisenberg_noncommuting_rejected():
    with pytest.raises(ValidationError):
        NilsystemSpec("heisenberg", [H(1.0, 0.0, 0.0), H(0.0, 1.0, 0.0)], PeriodizedBump())


def test_heisenberg_bump_at_start():
    psi = PeriodizedBump(center=(0.0, 0.0, 0.0), radius=0.3)
    spec = NilsystemSpec("heisenberg", [H(0.3, 0.2, 0.0)], psi)
    assert nilsequence_eval(spec, 0) == pytest.approx(psi.phi(0.0, 0.0, 0.0))


def test_nilsequence_bound():
    spec = NilsystemSpec("torus", [GOLDEN], TrigObservable([[1], [2]], [0.5, 0.25j]))
    seq = nilsequence(spec)
    assert seq.bound == pytest.approx(0.75)
    assert abs(cesaro_average(seq, FolnerWindow.cube(1000))) < 0.01


# -- Haar integrals ------------------------------------------------------------------------

@pytest.mark.parametrize("k,Q", [(1, 2), (3, 4), (5, 8)])
def test_haar_character_vanishes(k, Q):
    spec = NilsystemSpec("torus", [GOLDEN], char1(k), Q=Q)
    assert abs(haar_integral(spec).value) < 1e-10


def test_haar_constant():
    spec = NilsystemSpec("torus", [[0.1, 0.2]], TrigObservable([[0, 0]], [1.0]), Q=4)
    assert haar_integral(spec).value == pytest.approx(1.0)


def test_haar_bump_equals_total_mass():
    psi = PeriodizedBump()
    spec = NilsystemSpec("heisenberg", [H(0.3, 0.2, 0.0)], psi, Q=48)
    est = haar_integral(spec)
    assert abs(est.value - psi.total_mass) <= max(est.error, 1e-6 * psi.total_mass)


def test_haar_translation_invariance():
    psi = PeriodizedBump(center=(0.4, 0.5, 0.6), radius=0.3)
    spec = NilsystemSpec("heisenberg", [H(0.3, 0.2, 0.0)], psi, Q=40)
    base = haar_integral(spec)
    moved = haar_integral(spec, shift=H(math.sqrt(2) - 1, 0.37, 0.11))
    assert abs(moved.value - base.value) <= base.error + moved.error + 1e-9


# -- equidistribution -------------------------------------------------------------------------

def test_golden_torus_weyl_sums():
    spec = NilsystemSpec("torus", [GOLDEN], char1())
    rep = equidistribution_report(spec, 10**4, 5)
    assert rep.max_weyl <= 0.02
    ref = max(abs(np.mean(np.exp(2j * np.pi * k * GOLDEN * np.arange(1, 10**4 + 1)))) for k in range(1, 6))
    assert rep.max_weyl == pytest.approx(ref, rel=1e-6)


def test_rational_rotation_not_equidistributed():
    spec = NilsystemSpec("torus", [Fraction(2, 7)], char1())
    rep = equidistribution_report(spec, 700, 7)
    assert rep.max_weyl == pytest.approx(1.0)
    assert rep.argmax_freq in [(7,), (-7,)]


def test_heisenberg_weyl_sums():
    tau = H(math.sqrt(2) - 1, math.sqrt(3) - 1, 0.0)
    spec = NilsystemSpec("heisenberg", [tau], PeriodizedBump(), Q=16)
    rep = equidistribution_report(spec, 10**5, 3)
    assert rep.max_weyl <= 0.05


def test_report_budget():
    spec = NilsystemSpec("torus", [GOLDEN], char1())
    with pytest.raises(BudgetExceeded):
        equidistribution_report(spec, 10**6, 5, budget=10**6)


def test_orbit_average_within_weyl_bound():
    coeffs = {1: 0.5, 2: 0.3 - 0.1j, -3: 0.2}
    spec = NilsystemSpec("torus", [GOLDEN], TrigObservable([[k] for k in coeffs], list(coeffs.values())))
    N = 10**5
    gap = equidistribution_report(spec, N, 1).observable_gap
    bound = sum(abs(c) / (N * abs(math.sin(math.pi * k * GOLDEN))) for k, c in coeffs.items())
    assert gap <= 10 * bound

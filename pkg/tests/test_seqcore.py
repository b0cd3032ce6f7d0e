import cmath
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab.errors import BoundViolation, GowersBudgetExceeded, ShiftBudgetExceeded, ValidationError, WindowTooLarge
from ergolab.seqcore import (
    ComplexSeqNd,
    CubeShiftTuple,
    FiniteGridFn,
    FolnerWindow,
    besicovitch_norm,
    cesaro_average,
    constant,
    correlation_cube,
    gowers_norm,
    gowers_power_spectral,
    linear_phase,
    quadratic_phase,
    uniformity_seminorm,
    van_der_corput,
)

GOLDEN = (math.sqrt(5) - 1) / 2


def ee(x):
    return cmath.exp(2j * math.pi * x)


def alt():
    return ComplexSeqNd(1, lambda n: np.where(n % 2 == 0, 1.0, -1.0) + 0j, 1.0)


def brute_gowers_power(v, s):
    """Reference U^s power on Z_N (d = 1) by explicit cube sums."""
    N = len(v)
    total = 0.0
    for n in range(N):
        for h in itertools.product(range(N), repeat=s):
            term = 1.0 + 0j
            for eps in itertools.product((0, 1), repeat=s):
                x = v[(n + sum(e * hh for e, hh in zip(eps, h))) % N]
                term *= np.conj(x) if sum(eps) % 2 else x
            total += term
    return (total / N ** (s + 1)).real


# -- averages ----------------------------------------------------------------

def test_cesaro_constant():
    assert cesaro_average(constant(1.0), FolnerWindow.cube(1000)) == 1 + 0j


def test_cesaro_alternating_cancels():
    assert cesaro_average(alt(), FolnerWindow.cube(1000)) == 0


def test_cesaro_golden_phase_matches_geometric_sum():
    N = 10**4
    got = cesaro_average(linear_phase(GOLDEN), FolnerWindow.cube(N))
    closed = ee(GOLDEN) * (ee(N * GOLDEN) - 1) / (ee(GOLDEN) - 1) / N
    assert abs(got - closed) < 1e-12
    dist = min(GOLDEN, 1 - GOLDEN)
    assert abs(got) <= 2 / (N * dist)


def test_cesaro_offset_window_starts_after_offset():
    w = FolnerWindow((3,), (10,))
    seq = ComplexSeqNd(1, lambda n: n.astype(complex), 100.0)
    assert cesaro_average(seq, w) == pytest.approx(12.0)


def test_window_enumeration_is_lexicographic():
    w = FolnerWindow((2, 3), (1, 0))
    pts = list(zip(*(c.tolist() for c in w.coords())))
    assert pts == [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)]
    assert w.size == 6


def test_bound_violation_raised():
    lying = ComplexSeqNd(1, lambda n: 2.0 + 0 * n, 1.0)
    with pytest.raises(BoundViolation):
        cesaro_average(lying, FolnerWindow.cube(10))


def test_window_too_large():
    with pytest.raises(WindowTooLarge):
        cesaro_average(constant(1.0), FolnerWindow.cube(100), max_points=99)


def test_arity_mismatch():
    with pytest.raises(ValidationError):
        cesaro_average(constant(1.0, 2), FolnerWindow.cube(10))


def test_bad_window():
    with pytest.raises(ValidationError):
        FolnerWindow((0,))


def test_chunking_does_not_change_result():
    seq = quadratic_phase(math.sqrt(3))
    w = FolnerWindow.cube(3000)
    whole = cesaro_average(seq, w)
    vals = seq.evaluate(*w.coords())
    parts = [vals[i:i + 7] for i in range(0, len(vals), 7)]
    ref = complex(math.fsum(v.real for p in parts for v in p), math.fsum(v.imag for p in parts for v in p)) / 3000
    assert whole == ref


# -- Besicovitch norm -----------------------------------------------------------

@pytest.mark.parametrize("c", [0.0, 0.3, 2.5j, -1 + 1j])
def test_besicovitch_constant(c):
    assert besicovitch_norm(constant(c), FolnerWindow.cube(50)) == pytest.approx(abs(c), abs=1e-15)


def test_besicovitch_unimodular():
    assert besicovitch_norm(linear_phase(GOLDEN), FolnerWindow.cube(777)) == pytest.approx(1.0, abs=1e-14)


def test_besicovitch_even_indicator():
    even = ComplexSeqNd(1, lambda n: (n % 2 == 0).astype(complex), 1.0)
    assert besicovitch_norm(even, FolnerWindow.cube(1000)) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


# -- cube correlations -----------------------------------------------------------

def test_correlation_constant_sequence():
    h = CubeShiftTuple(((1,), (4,), (2,)))
    assert correlation_cube(constant(1.0), FolnerWindow.cube(30), h) == pytest.approx(1.0)


@pytest.mark.parametrize("h", [1, 3, 17])
def test_correlation_linear_phase(h):
    got = correlation_cube(linear_phase(GOLDEN), FolnerWindow.cube(200), CubeShiftTuple(((h,),)))
    assert abs(got - ee(-h * GOLDEN)) < 1e-12


@pytest.mark.parametrize("h1,h2", [(1, 1), (2, 5), (3, 7)])
def test_correlation_quadratic_phase(h1, h2):
    gamma = math.sqrt(2) - 1
    got = correlation_cube(quadratic_phase(gamma), FolnerWindow.cube(100), CubeShiftTuple(((h1,), (h2,))))
    # a(n) conj a(n+h1) conj a(n+h2) a(n+h1+h2): second difference of gamma n^2 is +2 h1 h2 gamma
    assert abs(got - ee(2 * h1 * h2 * gamma)) < 1e-9


def test_correlation_zero_shift_is_power_average():
    seq = ComplexSeqNd(1, lambda n: (0.5 + 0.4 * np.cos(n)) * np.exp(1j * n), 1.0)
    w = FolnerWindow.cube(300)
    for k in (1, 2, 3):
        got = correlation_cube(seq, w, CubeShiftTuple(((0,),) * k))
        vals = seq.evaluate(*w.coords())
        ref = np.mean(np.abs(vals) ** (2**k))
        assert abs(got - ref) < 1e-13


def test_cube_shift_tuple_rejects_negative():
    with pytest.raises(ValidationError):
        CubeShiftTuple(((-1,),))


# -- uniformity seminorm ------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3])
def test_seminorm_constant(k):
    est = uniformity_seminorm(constant(1.0), FolnerWindow.cube(50), k, 4)
    assert est.value == pytest.approx(1.0)


def test_seminorm_alternating_k1_even_H():
    est = uniformity_seminorm(alt(), FolnerWindow.cube(1000), 1, 8)
    assert est.value == pytest.approx(0.0, abs=1e-7)


def test_seminorm_linear_phase_order_one_vanishes_and_order_two_is_one():
    w = FolnerWindow.cube(10**4)
    a = linear_phase(math.sqrt(2))
    one = uniformity_seminorm(a, w, 1, 64)
    assert one.value <= 0.3
    # the k = 2 cube phase of a linear phase telescopes to 1
    two = uniformity_seminorm(a, w, 2, 64)
    assert two.value == pytest.approx(1.0, abs=1e-9)


def test_seminorm_matches_brute_force_definition():
    a = quadratic_phase(math.sqrt(5))
    w = FolnerWindow.cube(40)
    H = 3
    total = 0
    for h1 in range(1, H + 1):
        for h2 in range(1, H + 1):
            total += correlation_cube(a, w, CubeShiftTuple(((h1,), (h2,))))
    ref = max((total / H**2).real, 0) ** 0.25
    assert uniformity_seminorm(a, w, 2, H).value == pytest.approx(ref, abs=1e-12)


def test_seminorm_two_dimensional_brute_force():
    a = linear_phase([0.1, math.sqrt(2)]) * 0.5 + constant(0.5, 2)
    w = FolnerWindow.cube(6, 2)
    H = 2
    total = 0
    for h in itertools.product(range(1, H + 1), repeat=2):
        total += correlation_cube(a, w, CubeShiftTuple((h,)))
    ref = max((total / H**2).real, 0) ** 0.5
    assert uniformity_seminorm(a, w, 1, H).value == pytest.approx(ref, abs=1e-12)


def test_seminorm_probe_and_budget():
    est = uniformity_seminorm(constant(1.0), FolnerWindow.cube(20), 1, 2, probe=True)
    assert est.value_2H == pytest.approx(1.0)
    with pytest.raises(ShiftBudgetExceeded):
        uniformity_seminorm(constant(1.0), FolnerWindow.cube(100), 3, 50, budget=10**6)


def test_seminorm_reports_clamp():
    est = uniformity_seminorm(linear_phase(0.5), FolnerWindow.cube(100), 1, 1)
    assert est.value == 0.0
    assert est.clamp == pytest.approx(1.0)


# -- Gowers norms -------------------------------------------------------------------

@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_gowers_constant_one(s):
    f = FiniteGridFn(np.ones(8))
    assert gowers_norm(f, s) == pytest.approx(1.0, abs=1e-12)


def test_gowers_character_direct_cube_N16():
    f = FiniteGridFn.from_function(16, 1, lambda n: np.exp(2j * np.pi * 3 * n / 16))
    assert gowers_norm(f, 1) == pytest.approx(0.0, abs=1e-12)
    for s in (2, 3):
        assert gowers_norm(f, s, method="cube") == pytest.approx(1.0, abs=1e-12)
    assert gowers_norm(f, 2, method="spectral") == pytest.approx(1.0, abs=1e-12)


def test_gowers_gauss_sum_N17():
    N = 17
    f = FiniteGridFn.from_function(N, 1, lambda n: np.exp(2j * np.pi * n * n / N))
    for m in ("cube", "spectral"):
        assert abs(gowers_norm(f, 2, method=m) - N ** -0.25) < 1e-9


def test_gowers_agrees_with_brute_force():
    rng = np.random.default_rng(5)
    v = rng.normal(size=7) + 1j * rng.normal(size=7)
    f = FiniteGridFn(v)
    for s in (1, 2, 3):
        assert gowers_norm(f, s, method="cube") ** (2**s) == pytest.approx(brute_gowers_power(v, s), rel=1e-10)


def test_gowers_two_dimensional_gauss():
    N = 5
    f = FiniteGridFn.from_function(N, 2, lambda x, y: np.exp(2j * np.pi * (x * x + y * y) / N))
    assert gowers_norm(f, 2, method="cube") == pytest.approx(N ** -0.5, abs=1e-12)
    assert gowers_norm(f, 2, method="spectral") == pytest.approx(N ** -0.5, abs=1e-12)


def test_gowers_budget():
    f = FiniteGridFn(np.ones(64))
    with pytest.raises(GowersBudgetExceeded):
        gowers_norm(f, 4, method="cube", budget=10**6)
    assert gowers_norm(f, 2, method="spectral") == pytest.approx(1.0)


def test_gowers_bad_order_and_method():
    f = FiniteGridFn(np.ones(4))
    with pytest.raises(ValidationError):
        gowers_norm(f, 0)
    with pytest.raises(ValidationError):
        gowers_norm(f, 3, method="spectral")


def test_grid_needs_equal_sides():
    with pytest.raises(ValidationError):
        FiniteGridFn(np.ones((3, 4)))


def grids(max_n=9):
    return st.builds(
        lambda n, d, seed: FiniteGridFn(
            np.random.default_rng(seed).uniform(-1, 1, (n,) * d)
            + 1j * np.random.default_rng(seed + 1).uniform(-1, 1, (n,) * d)),
        st.integers(2, max_n), st.integers(1, 2), st.integers(0, 2**31))


@settings(max_examples=40, deadline=None)
@given(grids())
def test_gowers_monotone_in_order(f):
    s_max = 3 if f.d == 1 else 2
    vals = [gowers_norm(f, s) for s in range(1, s_max + 1)]
    assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))


@settings(max_examples=30, deadline=None)
@given(grids(7), st.integers(0, 2**31), st.sampled_from([1, 2, 3]))
def test_gowers_subadditive_and_homogeneous(f, seed, s):
    if f.d == 2 and s == 3:
        s = 2
    g = FiniteGridFn(np.random.default_rng(seed).normal(size=f.values.shape))
    assert gowers_norm(f + g, s) <= gowers_norm(f, s) + gowers_norm(g, s) + 1e-9
    c = 0.3 - 1.7j
    assert gowers_norm(f * c, s) == pytest.approx(abs(c) * gowers_norm(f, s), rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(grids(12))
def test_spectral_equals_cube_u2(f):
    cube = gowers_norm(f, 2, method="cube")
    spec = gowers_power_spectral(f) ** 0.25
    assert spec == pytest.approx(cube, rel=1e-9)


def test_gowers_zero_norm_only_at_order_one():
    f = FiniteGridFn(np.array([1.0, -1.0, 1.0, -1.0]))
    assert gowers_norm(f, 1) == pytest.approx(0.0, abs=1e-15)
    assert gowers_norm(f, 2) > 0


# -- van der Corput -----------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(grids(16))
def test_van_der_corput_identity(f):
    vdc = van_der_corput(f)
    assert vdc.identity_error <= 1e-12
    assert vdc.lhs <= vdc.bound_rhs + 1e-12


def test_van_der_corput_against_loops():
    rng = np.random.default_rng(2)
    v = rng.normal(size=6) + 1j * rng.normal(size=6)
    N = 6
    rhs = sum(v[(n + h) % N] * np.conj(v[n]) for h in range(N) for n in range(N)) / N**2
    vdc = van_der_corput(FiniteGridFn(v))
    assert vdc.lhs == pytest.approx(abs(v.mean()) ** 2, rel=1e-12)
    assert vdc.identity_rhs == pytest.approx(rhs.real, rel=1e-12)

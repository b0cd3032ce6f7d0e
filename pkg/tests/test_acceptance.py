"""Acceptance criteria, one test each.

Every test prints a single ``PASS`` / ``FAIL`` line with the measured numbers,
then asserts.  Thresholds and runtimes are exactly as stated in the criteria.
Run directly with ``python3 tests/test_acceptance.py`` for the summary alone.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from ergolab import arith, hardy
from ergolab.decomp import NilDictionary, fit_structured
from ergolab.dynsys import (
    AverageSpec,
    CommutingTorusSystem,
    PolynomialMapping,
    TorusObservable,
    cauchy_convergence_probe,
    correlation_sequence,
    hk_seminorm,
)
from ergolab.nil import (
    HeisenbergElement,
    NilsystemSpec,
    PeriodizedBump,
    equidistribution_report,
    heisenberg_pow,
    reduce_fundamental,
    reduce_fundamental_array,
)
from ergolab.seqcore import FiniteGridFn, FolnerWindow, constant, gowers_norm, gowers_power_spectral, van_der_corput

GOLDEN = (math.sqrt(5) - 1) / 2
SQ2, SQ3 = math.sqrt(2), math.sqrt(3)


def _corpus(seed=0):
    """Seeded grid functions on Z_N^d with N <= 64: random complex, signs, phases."""
    rng = np.random.default_rng(seed)
    out = []
    for N in (5, 8, 13, 16, 32, 64):
        n = np.arange(N)
        out.append(FiniteGridFn(rng.normal(size=N) + 1j * rng.normal(size=N)))
        out.append(FiniteGridFn(rng.choice([-1.0, 1.0], N)))
        out.append(FiniteGridFn(np.exp(2j * np.pi * rng.random(N))))
        out.append(FiniteGridFn(np.exp(2j * np.pi * (n * n * 3 % N) / N)))
    for N in (4, 6, 8):
        out.append(FiniteGridFn(rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))))
        out.append(FiniteGridFn(rng.choice([-1.0, 1.0], (N, N))))
    return out


# -- criteria ---------------------------------------------------------------------------------

def criterion_1():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 3))
        N = int(rng.integers(2, 65 if d == 1 else 33))
        shape = (N,) * d
        v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        worst = max(worst, van_der_corput(FiniteGridFn(v)).identity_error)
    return worst <= 1e-12, f"max identity error {worst:.3e} (<= 1e-12)"


def criterion_2():
    msgs, ok = [], True
    for N, d in ((16, 1), (8, 2)):
        one = FiniteGridFn(np.ones((N,) * d))
        ok &= all(abs(gowers_norm(one, s) - 1) <= 1e-12 for s in (1, 2, 3))
    n = np.arange(16)
    char = FiniteGridFn(np.exp(2j * np.pi * 3 * n / 16))
    u = [gowers_norm(char, s) for s in (1, 2, 3)]
    ok &= u[0] <= 1e-12 and abs(u[1] - 1) <= 1e-12 and abs(u[2] - 1) <= 1e-12
    msgs.append(f"char U1..U3 = {u[0]:.1e}, {u[1]:.12f}, {u[2]:.12f}")
    N = 17
    m = np.arange(N)
    gauss = gowers_norm(FiniteGridFn(np.exp(2j * np.pi * m * m / N)), 2)
    ok &= abs(gauss - N ** -0.25) <= 1e-9
    msgs.append(f"Gauss U2 error {abs(gauss - N ** -0.25):.1e}")

    corpus = _corpus()
    rng = np.random.default_rng(2)
    mono = sub = True
    spec_err = 0.0
    for f in corpus:
        smax = 3 if f.d == 1 else 2 if f.values.shape[0] > 6 else 3
        vals = [gowers_norm(f, s) for s in range(1, smax + 1)]
        mono &= all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))
        g = FiniteGridFn(rng.normal(size=f.values.shape))
        for s in range(1, smax + 1):
            sub &= gowers_norm(f + g, s) <= gowers_norm(f, s) + gowers_norm(g, s) + 1e-9
        cube = gowers_norm(f, 2, method="cube")
        spec_err = max(spec_err, abs(gowers_power_spectral(f) ** 0.25 - cube))
    ok &= mono and sub and spec_err <= 1e-9
    msgs.append(f"corpus of {len(corpus)}: monotone={mono} subadditive={sub} cube-vs-spectral {spec_err:.1e}")
    return ok, "; ".join(msgs)


def criterion_3():
    sieve = arith.FactorSieve(10**6)
    n = np.arange(1, 10**5 + 1)
    worst = 0.0
    for b in range(1, 7):
        for a in range(b):
            worst = max(worst, float(np.max(np.abs(arith.key_identity_eval(n, a, b, sieve)
                                                   - arith.s_ab_indicator(n, a, b, sieve)))))
    dens = arith.s_ab_density(0, 2, 0, 10**6, sieve)
    ok = worst <= 1e-12 and abs(dens - 0.5) < 0.02
    return ok, f"key identity max error {worst:.1e}; density S_(0,2) on [1e6] = {dens:.6f}"


def criterion_4():
    sieve = arith.FactorSieve(10**6)
    f2 = arith.f_b(2)
    small = abs(arith.ap_average(f2, 1, 0, 10**4, sieve))
    large = abs(arith.ap_average(f2, 1, 0, 10**6, sieve))
    ok = large < 0.02 and large < small
    return ok, f"|mean (-1)^omega| N=1e4: {small:.6f}, N=1e6: {large:.6f} (need < 0.02 and decreasing)"


def criterion_5():
    sieve = arith.FactorSieve(10**6)
    f2 = arith.f_b(2)
    small = abs(arith.exponential_twist_average(f2, GOLDEN, 10**4, sieve))
    large = abs(arith.exponential_twist_average(f2, GOLDEN, 10**6, sieve))
    ok = large < 0.05 and large < small
    return ok, f"|twisted mean| N=1e4: {small:.6f}, N=1e6: {large:.6f} (need < 0.05 and decreasing)"


def criterion_6():
    f = hardy.HardyFunctionSpec.power(Fraction(3, 2))
    dens = hardy.level_set(f, 0.25, 0.5, 10**5).density
    res = hardy.taylor_localization(f, 10**4, 2, theta=0.6).residual
    decay = [abs(hardy.weighted_phase_average(f, (1 + math.sqrt(5)) / 2, k, 10**5)) for k in (0, 1, 2)]
    checks = [abs(dens - 0.5) <= 0.01, res < 1e-2, all(v < 0.02 for v in decay)]
    detail = (f"level density {dens:.5f} (|.-0.5| <= 0.01: {checks[0]}); "
              f"residual(N=1e4,k=2,theta=0.6) {res:.4f} (< 1e-2: {checks[1]}); "
              f"decay k=0,1,2: {', '.join(f'{v:.5f}' for v in decay)} (< 0.02: {checks[2]})")
    return all(checks), detail


def criterion_7():
    alpha = (math.sqrt(5) - 1) / 2
    system = CommutingTorusSystem.rotations([[alpha]])
    a = correlation_sequence(system, TorusObservable.character(-1), [TorusObservable.character(1)],
                             [PolynomialMapping.linear([[1]])])
    rep = fit_structured(a, FolnerWindow.cube(1000), NilDictionary.build(1, Q=16, extra=[alpha]))
    theta = rep.frequencies[0][0]
    ok = abs(theta - alpha) < 1e-15 and rep.residual_norm < 1e-10
    return ok, f"recovered theta {theta!r}, coefficient {rep.coefficients[0]:.12f}, residual {rep.residual_norm:.2e}"


def criterion_8():
    system = CommutingTorusSystem.rotations([[SQ2]])
    f = TorusObservable.character(1)
    one = hk_seminorm(system, f, 1, 10**4).value
    two = hk_seminorm(system, f, 2, 10**4).value
    oracle = 1.0  # (sum |f^(k)|^4)^(1/4) for a single character
    ok = abs(one) <= 1e-3 and abs(two - oracle) <= 1e-2
    return ok, f"|||f|||_1 = {one:.2e}, |||f|||_2 = {two:.6f} at N_av = 1e4"


def criterion_9():
    system = CommutingTorusSystem.rotations([[SQ2], [SQ3]])
    ps = (PolynomialMapping.monomials([1], ell=2, slot=0), PolynomialMapping.monomials([2], ell=2, slot=1))
    chi = TorusObservable.character(1)
    rep = cauchy_convergence_probe(AverageSpec(system, constant(1.0), (chi, chi), ps), 1000)
    return rep.delta_2N < rep.delta_N, f"Delta_N = {rep.delta_N:.6f}, Delta_2N = {rep.delta_2N:.6f}"


def _rand_frac(rng):
    return Fraction(int(rng.integers(-400, 401)), int(rng.integers(1, 40)))


def criterion_10():
    H = HeisenbergElement
    rng = np.random.default_rng(10)
    group = True
    e = H.identity(exact=True)
    for _ in range(300):
        a, b, c = (H(_rand_frac(rng), _rand_frac(rng), _rand_frac(rng)) for _ in range(3))
        group &= (a * b) * c == a * (b * c)
        group &= a * e == a and e * a == a
        group &= a * a.inverse() == e and a.inverse() * a == e
    powers = True
    for _ in range(50):
        t = H(_rand_frac(rng), _rand_frac(rng), _rand_frac(rng))
        acc = e
        for n in range(0, 40):
            powers &= heisenberg_pow(t, n) == acc
            acc = acc * t
    g = rng.uniform(-50, 50, size=(10**5, 3))
    px, py, pz = (np.asarray(v, dtype=np.float64) for v in reduce_fundamental_array(*g.T))
    inside = all(np.all((v >= 0) & (v < 1)) for v in (px, py, pz))
    # agreement of the vectorised reduction with the scalar one on a sample
    for i in range(0, 10**5, 5000):
        p, _ = reduce_fundamental(H(*g[i]))
        inside &= np.allclose([p.x, p.y, p.z], [px[i], py[i], pz[i]], atol=1e-9)
    tau = H(SQ2 - 1, SQ3 - 1, 0.0)
    weyl = equidistribution_report(NilsystemSpec("heisenberg", [tau], PeriodizedBump(), Q=16), 10**5, 3).max_weyl
    ok = group and powers and inside and weyl <= 0.05
    return ok, (f"group law {group}, pow {powers}, fundamental domain on 1e5 {inside}, "
                f"horizontal Weyl max {weyl:.2e} (<= 0.05)")


CRITERIA = [
    (1, "van der Corput identity", criterion_1, 10),
    (2, "Gowers suite", criterion_2, 60),
    (3, "S_(a,b) machinery", criterion_3, 30),
    (4, "aperiodicity decay", criterion_4, None),
    (5, "Daboussi-type decay", criterion_5, None),
    (6, "Hardy equidistribution", criterion_6, 60),
    (7, "correlation/decomposition exactness", criterion_7, 5),
    (8, "Host-Kra closed form", criterion_8, 30),
    (9, "Walsh Cauchy probes", criterion_9, 30),
    (10, "Heisenberg integrity", criterion_10, 60),
]


def evaluate(fn, limit):
    t0 = time.perf_counter()
    ok, detail = fn()
    wall = time.perf_counter() - t0
    if limit is not None:
        ok = ok and wall < limit
        detail += f"; {wall:.2f} s (< {limit} s)"
    else:
        detail += f"; {wall:.2f} s"
    return ok, detail


@pytest.mark.parametrize("num,name,fn,limit", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_acceptance(num, name, fn, limit, capsys):
    ok, detail = evaluate(fn, limit)
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {num} ({name}): {detail}")
    assert ok, detail


if __name__ == "__main__":
    for num, name, fn, limit in CRITERIA:
        ok, detail = evaluate(fn, limit)
        print(f"{'PASS' if ok else 'FAIL'} criterion {num} ({name}): {detail}")

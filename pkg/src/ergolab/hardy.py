"""Hardy-field weights ``e(f(n))`` for ``f`` a finite sum of ``c t^a (log t)^e``.

Evaluation runs in numpy extended precision (``longdouble``); the fractional
part of ``f(n)`` is what matters for the weights, so every evaluation can report
how many fractional digits survive.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._util import e, frac_dist
from .errors import DegreeCap, DomainError, OrderTooSmall, PrecisionBudgetExceeded, ValidationError

_LD = np.longdouble
_LD_EPS = float(np.finfo(_LD).eps)
MIN_FRACTIONAL_DIGITS = 6


def _exp(a):
    """Exponents are kept as Fractions so integer tests stay exact."""
    if isinstance(a, (int, Fraction)):
        return Fraction(a)
    approx = Fraction(a).limit_denominator(1000)
    return approx if abs(float(approx) - a) < 1e-12 else Fraction(a)


@dataclass(frozen=True)
class HardyFunctionSpec:
    """``f(t) = sum c t^a (log t)^e`` on ``t >= t0 > 1``.

    ``terms`` is a sequence of ``(c, a, e)``; like terms are merged.
    """

    terms: tuple
    t0: float = 1.5

    def __post_init__(self):
        if not self.t0 > 1:
            raise ValidationError("t0 must exceed 1")
        merged = {}
        for c, a, ex in self.terms:
            ex = int(ex)
            if ex < 0:
                raise ValidationError("log exponents must be nonnegative integers")
            key = (_exp(a), ex)
            merged[key] = merged.get(key, 0.0) + float(c)
        terms = tuple(sorted(((c, a, ex) for (a, ex), c in merged.items() if c != 0),
                             key=lambda t: (-t[1], -t[2])))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def power(cls, a, c: float = 1.0, t0: float = 1.5) -> "HardyFunctionSpec":
        return cls(((c, a, 0),), t0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def growth_exponent(self) -> Fraction:
        return max((a for _, a, _ in self.terms), default=Fraction(0))

    @property
    def stays_away_from_polynomials(self) -> bool:
        """Decided from the term list.

        A term forces this when its exponent is a positive non-integer, when it
        carries a log factor together with a positive power, or when it is a
        pure ``(log t)^e`` with ``e > 1``.  Polynomial terms and ``c log t`` do
        not.
        """
        for _, a, ex in self.terms:
            if a > 0 and a.denominator != 1:
                return True
            if a > 0 and ex >= 1:
                return True
            if a == 0 and ex >= 2:
                return True
        return False

    def derivative(self, j: int = 1) -> "HardyFunctionSpec":
        f = self
        for _ in range(int(j)):
            new = []
            for c, a, ex in f.terms:
                if a != 0:
                    new.append((c * float(a), a - 1, ex))
                if ex:
                    new.append((c * ex, a - 1, ex - 1))
            f = HardyFunctionSpec(tuple(new), self.t0)
        return f

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=_LD)
        if np.any(t_arr < self.t0):
            raise DomainError(f"evaluation below t0 = {self.t0}")
        out = np.zeros(t_arr.shape, dtype=_LD)
        lt = np.log(t_arr)
        for c, a, ex in self.terms:
            term = _LD(c) * _power(t_arr, a)
            if ex:
                term = term * lt**ex
            out = out + term
        return out if out.ndim else out[()]


def _power(t, a: Fraction):
    if a.denominator == 1:
        return t ** int(a)
    if a.denominator == 2:
        return np.sqrt(t) ** int(a.numerator)
    return np.power(t, _LD(a.numerator) / _LD(a.denominator))


def hardy_eval(f: HardyFunctionSpec, t):
    return f(t)


def hardy_deriv(f: HardyFunctionSpec, j: int) -> HardyFunctionSpec:
    if j < 0:
        raise ValidationError("j must be >= 0")
    return f.derivative(j)


def fractional_digits(f: HardyFunctionSpec, N: int) -> float:
    """Fractional digits of ``f(n)`` left after extended-precision evaluation up to ``N``."""
    mag = max(abs(float(f(max(N, f.t0)))), 1.0)
    return -math.log10(_LD_EPS * mag * 4)


def hardy_weight(f: HardyFunctionSpec, n, *, min_digits: float = MIN_FRACTIONAL_DIGITS):
    """``e(f(n))``, reducing ``f(n)`` mod 1 in extended precision first."""
    n = np.asarray(n)
    if n.size and fractional_digits(f, int(np.max(n))) < min_digits:
        raise PrecisionBudgetExceeded(f"fewer than {min_digits} fractional digits survive at n = {np.max(n)}")
    val = f(n)
    out = e(np.asarray(val, dtype=_LD))
    return complex(out) if np.ndim(out) == 0 else out


# -- Taylor localisation -----------------------------------------------------------

@dataclass(frozen=True)
class Localization:
    N: int
    k: int
    alpha: float
    q: tuple          # Taylor coefficients q_0..q_{k-1}
    L: int
    theta: float
    residual: float

    @property
    def L_over_N(self) -> float:
        return self.L / self.N

    @property
    def growth(self) -> float:
        """``L^k |alpha_N|``."""
        return self.L**self.k * abs(self.alpha)

    def q_poly(self, n):
        n = np.asarray(n, dtype=_LD)
        return sum(_LD(c) * n**j for j, c in enumerate(self.q))


def default_theta(f: HardyFunctionSpec, k: int) -> float:
    """Midpoint of ``((k-a)/k, (k+1-a)/(k+1))`` for growth exponent ``a``.

    Below the left end ``L^k alpha_N`` stays bounded; above the right end the
    ``(k+1)``-st Taylor term ``L^{k+1} N^{a-k-1}`` no longer vanishes.
    """
    a = float(f.growth_exponent)
    lo, hi = (k - a) / k, (k + 1 - a) / (k + 1)
    return (lo + hi) / 2


def taylor_localization(f: HardyFunctionSpec, N: int, k: int, theta: float | None = None) -> Localization:
    """``f(N + n) = n^k alpha_N + q_N(n) + residual`` on ``n in [L_N]``, ``L_N = floor(N^theta)``."""
    if k < math.ceil(f.growth_exponent) or k < 1:
        raise OrderTooSmall(f"k = {k} is below the growth exponent {f.growth_exponent}")
    if N < f.t0:
        raise DomainError("N must be >= t0")
    if not f.stays_away_from_polynomials:
        warnings.warn("f does not stay away from polynomials; the localisation is degenerate",
                      stacklevel=2)
    theta = default_theta(f, k) if theta is None else float(theta)
    NN = _LD(N)
    q = tuple(float(f.derivative(j)(NN) / _LD(math.factorial(j))) for j in range(k))
    alpha_ld = f.derivative(k)(NN) / _LD(math.factorial(k))
    L = max(int(math.floor(N**theta)), 1)
    n = np.arange(1, L + 1, dtype=_LD)
    qs = [f.derivative(j)(NN) / _LD(math.factorial(j)) for j in range(k)]
    approx = n**k * alpha_ld + sum(c * n**j for j, c in enumerate(qs))
    residual = float(np.max(np.abs(f(NN + n) - approx)))
    return Localization(int(N), int(k), float(alpha_ld), q, L, theta, residual)


# -- level sets --------------------------------------------------------------------

@dataclass(frozen=True)
class LevelSet:
    members: np.ndarray
    N: int

    @property
    def density(self) -> float:
        return len(self.members) / self.N


def level_set(f: HardyFunctionSpec, a: float, b: float, N: int) -> LevelSet:
    """``{n <= N : ||f(n)|| in [a, b]}`` with ``||.||`` the distance to Z."""
    if not (0 <= a < b <= 0.5) and not (0 <= a == b <= 0.5):
        raise ValidationError("need 0 <= a <= b <= 1/2")
    n = np.arange(max(1, math.ceil(f.t0)), N + 1, dtype=np.int64)
    v = np.asarray(f(n), dtype=_LD)
    dist = np.abs(v - np.round(v)).astype(np.float64)
    return LevelSet(n[(dist >= a) & (dist <= b)], int(N))


def weighted_phase_average(f: HardyFunctionSpec, alpha: float, k: int, N: int) -> complex:
    """``(1/N) sum_{n<=N} e(f(n)) e(k n alpha)`` (terms with ``n < t0`` omitted)."""
    n = np.arange(max(1, math.ceil(f.t0)), N + 1, dtype=np.int64)
    vals = hardy_weight(f, n) * e(np.mod(np.asarray(n, dtype=_LD) * _LD(k) * _LD(alpha), 1))
    return complex(math.fsum(vals.real), math.fsum(vals.imag)) / N


# -- trigonometric sandwich ---------------------------------------------------------

@dataclass(frozen=True)
class TrigPoly:
    """``P(t) = sum_{0 < |j| <= D} c_j e(j t)`` stored as ``coeffs[j + D]``."""

    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def constant_term(self) -> complex:
        return complex(self.coeffs[self.degree])

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        D = self.degree
        j = np.arange(-D, D + 1)
        out = np.zeros(t.shape, dtype=np.complex128)
        for jj, c in zip(j, self.coeffs):
            if c != 0:
                out += c * np.exp(2j * np.pi * jj * t)
        return out.real

    def on_grid(self, M: int) -> np.ndarray:
        """Values at ``t = i / M``, ``i = 0..M-1`` (needs ``M > 2D``)."""
        D = self.degree
        spec = np.zeros(M, dtype=np.complex128)
        for jj, c in zip(range(-D, D + 1), self.coeffs):
            spec[jj % M] += c
        return (np.fft.ifft(spec) * M).real


def _fejer_smoothed_interval(u: float, v: float, D: int) -> np.ndarray:
    """Fejér mean of ``1_[u, v]`` with its constant term removed."""
    j = np.arange(-D, D + 1)
    c = np.zeros(2 * D + 1, dtype=np.complex128)
    nz = j != 0
    jj = j[nz]
    c[nz] = (np.exp(-2j * np.pi * jj * u) - np.exp(-2j * np.pi * jj * v)) / (2j * np.pi * jj)
    c *= 1.0 - np.abs(j) / (D + 1)
    return c


def fejer_tail(delta: float, D: int) -> float:
    """Upper bound for the Fejér kernel mass outside ``[-delta, delta]``."""
    return 2.0 / (math.pi * (D + 1) * math.tan(math.pi * delta))


def fejer_sandwich(c: float, d: float, eps: float, *, degree_cap: int = 20000,
                   verify: bool = True):
    """Zero-mean trig polynomials with ``P1 - eps <= 1_[c,d] - (d-c) <= P2 + eps``.

    ``P1`` smooths the interval shrunk by ``eps/4`` on each side and ``P2`` the
    interval grown by ``eps/4``; the degree is the least one whose Fejér tail
    bound is at most ``eps/2``.
    """
    if not (0 <= c < d < 1) and not (c == 0 and d == 1):
        raise ValidationError("need 0 <= c < d < 1")
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if d - c >= 1 - eps:
        zero = TrigPoly(np.zeros(1, dtype=np.complex128))
        return zero, zero
    delta = eps / 4
    D = math.ceil(4.0 / (math.pi * eps * math.tan(math.pi * delta))) - 1
    D = max(D, 1)
    if D > degree_cap:
        raise DegreeCap(f"degree {D} needed, cap is {degree_cap}")
    lo_u, lo_v = c + delta, d - delta
    P1 = TrigPoly(_fejer_smoothed_interval(lo_u, lo_v, D) if lo_v > lo_u
                  else np.zeros(2 * D + 1, dtype=np.complex128))
    hi_u, hi_v = c - delta, d + delta
    P2 = TrigPoly(_fejer_smoothed_interval(hi_u, hi_v, D) if hi_v - hi_u < 1
                  else np.zeros(2 * D + 1, dtype=np.complex128))
    if verify:
        sandwich_violation(P1, P2, c, d, eps, raise_on_fail=True)
    return P1, P2


def sandwich_violation(P1: TrigPoly, P2: TrigPoly, c: float, d: float, eps: float,
                       *, points_per_degree: int = 10**4, raise_on_fail: bool = False) -> float:
    """Largest violation of the sandwich on a grid of ``points_per_degree * D`` points in [0, 1]."""
    D = max(P1.degree, P2.degree, 1)
    M = max(points_per_degree * D, 4 * D + 1)
    t = np.arange(M) / M
    ind = ((t >= c) & (t <= d)).astype(np.float64) - (d - c)
    p1 = P1.on_grid(M) if P1.degree else np.zeros(M)
    p2 = P2.on_grid(M) if P2.degree else np.zeros(M)
    # t = 1 equals t = 0 for the polynomials but not for the indicator
    t1 = float(c <= 1.0 <= d) - (d - c)
    low = max(float(np.max(p1 - eps - ind)), float(p1[0] - eps - t1))
    high = max(float(np.max(ind - p2 - eps)), float(t1 - p2[0] - eps))
    worst = max(low, high)
    if raise_on_fail and worst > 1e-12:
        raise ValidationError(f"sandwich violated by {worst}")
    return worst


__all__ = [
    "HardyFunctionSpec", "hardy_eval", "hardy_deriv", "hardy_weight", "fractional_digits",
    "Localization", "default_theta", "taylor_localization", "LevelSet", "level_set",
    "weighted_phase_average", "TrigPoly", "fejer_sandwich", "fejer_tail", "sandwich_violation",
]

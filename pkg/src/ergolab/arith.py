"""Sieves, multiplicative functions and the arithmetic weights built from them.

Everything is driven by a smallest-prime-factor table.  Multiplicative
functions are given by a rule on prime powers, vectorised over numpy arrays of
primes and exponents, and evaluated on whole ranges by peeling off one prime
power at a time.
"""

from __future__ import annotations

import cmath
import itertools
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._util import e
from .errors import BudgetExceeded, PrimeClash, SieveRange, ValidationError
from .seqcore import ComplexSeqNd

SIEVE_CAP = 10**8
CACHE_MAGIC = b"ELSV"
CACHE_VERSION = 1


class FactorSieve:
    """Smallest prime factor table for ``2 <= n <= limit``.

    ``spf[0] = 0`` and ``spf[1] = 1`` by convention.
    """

    def __init__(self, limit: int, *, spf: np.ndarray | None = None):
        limit = int(limit)
        if limit < 1:
            raise ValidationError("sieve limit must be >= 1")
        if limit > SIEVE_CAP:
            raise SieveRange(f"sieve limit {limit} above the cap {SIEVE_CAP}")
        self.limit = limit
        if spf is None:
            spf = np.zeros(limit + 1, dtype=np.uint32)
            spf[1] = 1
            for p in range(2, math.isqrt(limit) + 1):
                if spf[p] == 0:
                    block = spf[p * p::p]
                    block[block == 0] = p
            rest = np.nonzero(spf == 0)[0]
            spf[rest[rest >= 2]] = rest[rest >= 2]
        self.spf = spf
        self.spf.setflags(write=False)

    def _check(self, n):
        n = np.asarray(n, dtype=np.int64)
        if n.size and (n.max() > self.limit or n.min() < 1):
            raise SieveRange(f"argument outside [1, {self.limit}]")
        return n

    @property
    def primes(self) -> np.ndarray:
        idx = np.arange(self.limit + 1)
        return idx[(self.spf == idx) & (idx >= 2)]

    def primes_upto(self, P: int) -> np.ndarray:
        if P > self.limit:
            raise SieveRange(f"P = {P} exceeds sieve limit {self.limit}")
        pr = self.primes
        return pr[pr <= P]

    def is_prime(self, n) -> np.ndarray:
        n = self._check(n)
        return (self.spf[n] == n) & (n >= 2)

    def factorize(self, n: int) -> list:
        """``[(p, k), ...]`` with primes increasing."""
        n = int(self._check(n))
        out = []
        while n > 1:
            p = int(self.spf[n])
            k = 0
            while n % p == 0:
                n //= p
                k += 1
            out.append((p, k))
        return out

    def prime_powers(self, n):
        """Yield ``(mask, p, k)`` arrays peeling one prime power per step."""
        m = self._check(n).copy()
        while True:
            active = m > 1
            if not active.any():
                return
            p = np.where(active, self.spf[m].astype(np.int64), 1)
            k = np.zeros_like(m)
            while True:
                div = active & (m % p == 0)
                if not div.any():
                    break
                m = np.where(div, m // p, m)
                k = k + div
            yield active, p, k

    # -- binary cache -----------------------------------------------------------

    def save(self, path) -> None:
        """Little-endian: magic ``ELSV``, u32 version, u64 limit, u32 spf entries."""
        with open(path, "wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(struct.pack("<IQ", CACHE_VERSION, self.limit))
            fh.write(self.spf.astype("<u4").tobytes())

    @classmethod
    def load(cls, path) -> "FactorSieve":
        data = Path(path).read_bytes()
        if data[:4] != CACHE_MAGIC:
            raise ValidationError("not a sieve cache file")
        version, limit = struct.unpack("<IQ", data[4:16])
        if version != CACHE_VERSION:
            raise ValidationError(f"unsupported sieve cache version {version}")
        spf = np.frombuffer(data[16:], dtype="<u4").astype(np.uint32)
        if spf.shape[0] != limit + 1:
            raise ValidationError("sieve cache is truncated")
        return cls(limit, spf=spf)

    @classmethod
    def cached(cls, limit: int, path) -> "FactorSieve":
        """Load ``path`` if it covers ``limit``, otherwise build and save."""
        p = Path(path)
        if p.exists():
            try:
                s = cls.load(p)
                if s.limit >= limit:
                    return s
            except ValidationError:
                pass
        s = cls(limit)
        s.save(p)
        return s


def omega(n, sieve: FactorSieve):
    """Number of distinct prime factors; ``omega(1) = 0``."""
    n = np.asarray(n)
    out = np.zeros(n.shape, dtype=np.int64)
    for mask, _, _ in sieve.prime_powers(n):
        out += mask
    return int(out) if out.ndim == 0 else out


def big_omega(n, sieve: FactorSieve):
    """Number of prime factors counted with multiplicity."""
    n = np.asarray(n)
    out = np.zeros(n.shape, dtype=np.int64)
    for _, _, k in sieve.prime_powers(n):
        out += k
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MultiplicativeFunctionSpec:
    """Multiplicative ``phi`` defined by ``rule(p, k) = phi(p^k)``.

    ``rule`` receives int64 arrays of primes and exponents (``k >= 1``).
    """

    rule: Callable[[np.ndarray, np.ndarray], np.ndarray]
    completely: bool = False
    name: str = ""

    def __call__(self, n, sieve: FactorSieve):
        return mult_eval(self, n, sieve)

    def at_primes(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=np.int64)
        return np.asarray(self.rule(p, np.ones_like(p)), dtype=np.complex128)

    def times(self, other: "MultiplicativeFunctionSpec") -> "MultiplicativeFunctionSpec":
        if not (self.completely and other.completely):
            raise ValidationError("pointwise products are only closed for completely multiplicative specs here")
        return MultiplicativeFunctionSpec(lambda p, k: self.rule(p, k) * other.rule(p, k), True,
                                          f"{self.name}*{other.name}")

    def sequence(self, sieve: FactorSieve) -> ComplexSeqNd:
        return ComplexSeqNd(1, lambda n: mult_eval(self, n, sieve), 1.0, name=self.name)


def mult_eval(spec: MultiplicativeFunctionSpec, n, sieve: FactorSieve):
    """``prod_{p^k || n} phi(p^k)``."""
    n = np.asarray(n)
    out = np.ones(n.shape, dtype=np.complex128)
    for mask, p, k in sieve.prime_powers(n):
        val = np.asarray(spec.rule(p, np.maximum(k, 1)), dtype=np.complex128)
        out = np.where(mask, out * val, out)
    return complex(out) if out.ndim == 0 else out


def constant_one() -> MultiplicativeFunctionSpec:
    return MultiplicativeFunctionSpec(lambda p, k: np.ones(np.shape(p)), True, "1")


def liouville() -> MultiplicativeFunctionSpec:
    return MultiplicativeFunctionSpec(lambda p, k: (-1.0) ** k, True, "liouville")


def mobius() -> MultiplicativeFunctionSpec:
    return MultiplicativeFunctionSpec(lambda p, k: np.where(k == 1, -1.0, 0.0), False, "mobius")


def f_b(b: int, *, multiplicity: bool = False, power: int = 1) -> MultiplicativeFunctionSpec:
    """``f_b(p^k) = zeta`` (or ``zeta^k`` with ``multiplicity``), ``zeta = e(1/b)``.

    ``power = j`` gives ``f_b^j``.
    """
    b = int(b)
    if b < 1:
        raise ValidationError("b must be >= 1")
    if multiplicity:
        rule = lambda p, k: e(np.mod(k * power, b) / b)  # noqa: E731
    else:
        rule = lambda p, k: np.full(np.shape(p), complex(e((power % b) / b)))  # noqa: E731
    return MultiplicativeFunctionSpec(rule, multiplicity, f"f_{b}^{power}")


def completely_multiplicative(at_prime: Callable[[np.ndarray], np.ndarray], name: str = "") -> MultiplicativeFunctionSpec:
    return MultiplicativeFunctionSpec(
        lambda p, k: np.asarray(at_prime(p), dtype=np.complex128) ** k, True, name)


def twist_by_nit(spec: MultiplicativeFunctionSpec, t: float) -> MultiplicativeFunctionSpec:
    """``n -> phi(n) n^{-it}``."""
    return MultiplicativeFunctionSpec(
        lambda p, k: np.asarray(spec.rule(p, k)) * np.exp(-1j * t * k * np.log(p)),
        spec.completely, f"{spec.name}*n^-i{t}")


# -- Dirichlet characters ------------------------------------------------------------

@dataclass(frozen=True)
class DirichletCharacterSpec:
    q: int
    values: tuple
    principal: bool = False

    def __post_init__(self):
        vals = tuple(complex(v) for v in self.values)
        if len(vals) != self.q:
            raise ValidationError("need q values")
        for n in range(self.q):
            if (math.gcd(n, self.q) > 1) != (abs(vals[n]) < 1e-12):
                raise ValidationError(f"chi({n}) must vanish iff gcd(n, q) > 1")
        if abs(vals[1 % self.q] - 1) > 1e-12:
            raise ValidationError("chi(1) must be 1")
        for m, n in itertools.product(range(self.q), repeat=2):
            if abs(vals[(m * n) % self.q] - vals[m] * vals[n]) > 1e-9:
                raise ValidationError("table is not completely multiplicative")
        object.__setattr__(self, "values", vals)

    def __call__(self, n):
        table = np.asarray(self.values)
        return table[np.mod(np.asarray(n, dtype=np.int64), self.q)]

    def as_multiplicative(self) -> MultiplicativeFunctionSpec:
        return completely_multiplicative(self, f"chi_{self.q}")


def _primitive_root(m: int, order: int) -> int:
    fac = [p for p in range(2, order + 1) if order % p == 0 and all(p % r for r in range(2, math.isqrt(p) + 1))]
    for g in range(2, m):
        if math.gcd(g, m) == 1 and all(pow(g, order // p, m) != 1 for p in fac):
            return g
    raise ValidationError(f"no primitive root mod {m}")


def characters_mod(q: int) -> list:
    """All Dirichlet characters mod ``q`` (principal first)."""
    q = int(q)
    if q == 1:
        return [DirichletCharacterSpec(1, (1,), True)]
    factors = []
    m, p = q, 2
    while m > 1:
        if m % p == 0:
            k = 0
            while m % p == 0:
                m //= p
                k += 1
            factors.append((p, k))
        p += 1
    # cyclic components: (modulus, generator, order) with a CRT lift of the generator
    comps = []
    for p, k in factors:
        pk = p**k
        rest = q // pk
        def lift(g, pk=pk, rest=rest):
            # x = g mod pk, x = 1 mod rest
            return (g * rest * pow(rest, -1, pk) + pk * pow(pk, -1, rest)) % q if rest > 1 else g % q
        if p == 2:
            if k >= 2:
                comps.append((pk, lift(pk - 1), 2))
            if k >= 3:
                comps.append((pk, lift(5), 2 ** (k - 2)))
        else:
            order = pk - pk // p
            comps.append((pk, lift(_primitive_root(pk, order)), order))
    # discrete logs by walking the generated group
    units = [n for n in range(q) if math.gcd(n, q) == 1]
    logs = {}
    for exps in itertools.product(*[range(o) for _, _, o in comps]):
        x = 1
        for (_, g, _), a in zip(comps, exps):
            x = x * pow(g, a, q) % q
        logs.setdefault(x, exps)
    if len(logs) != len(units):
        raise ValidationError("failed to decompose the unit group")
    chars = []
    for js in itertools.product(*[range(o) for _, _, o in comps]):
        vals = [0j] * q
        for x, exps in logs.items():
            vals[x] = cmath.exp(2j * math.pi * sum(j * a / o for j, a, (_, _, o) in zip(js, exps, comps)))
            vals[x] = complex(round(vals[x].real, 15), round(vals[x].imag, 15))
        chars.append(DirichletCharacterSpec(q, tuple(vals), principal=not any(js)))
    return chars


# -- S_{a,b} ------------------------------------------------------------------------

def s_ab_indicator(n, a: int, b: int, sieve: FactorSieve, c: int = 0, *, multiplicity: bool = False):
    """``1[omega(n - c) = a mod b]``."""
    m = np.asarray(n, dtype=np.int64) - c
    if m.size and m.min() < 1:
        raise ValidationError("need n - c >= 1")
    cnt = big_omega(m, sieve) if multiplicity else omega(m, sieve)
    out = (np.mod(cnt, b) == a % b).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def s_ab_density(a: int, b: int, c: int, N: int, sieve: FactorSieve, **kw) -> float:
    """``|{n <= N : n - c in S_{a,b}}| / N``; ``n`` starts at ``c + 1``."""
    n = np.arange(max(c, 0) + 1, N + 1, dtype=np.int64)
    return float(np.sum(s_ab_indicator(n, a, b, sieve, c, **kw))) / N


def key_identity_eval(n, a: int, b: int, sieve: FactorSieve, *, multiplicity: bool = False):
    """``(1/b) sum_{j<b} zeta^{-a j} f_b(n)^j`` with ``zeta = e(1/b)``."""
    fb = mult_eval(f_b(b, multiplicity=multiplicity), np.asarray(n), sieve)
    fb = np.asarray(fb)
    out = np.zeros(fb.shape, dtype=np.complex128)
    zeta = cmath.exp(2j * math.pi / b)
    for j in range(b):
        out = out + zeta ** (-a * j) * fb**j
    out = out / b
    return complex(out) if out.ndim == 0 else out


# -- pretentious distance --------------------------------------------------------------

@dataclass(frozen=True)
class DistanceReport:
    P: int
    squared: float
    t: float

    @property
    def distance(self) -> float:
        return math.sqrt(max(self.squared, 0.0))


def d_distance_partial(phi1: MultiplicativeFunctionSpec, phi2: MultiplicativeFunctionSpec,
                       P: int, sieve: FactorSieve, *, t: float = 0.0) -> DistanceReport:
    """``sum_{p <= P} (1 - Re(phi1(p) conj(phi2(p) p^{it}))) / p``.

    With ``t != 0`` this is the partial distance from ``phi1`` to ``phi2(n) n^{it}``.
    """
    p = sieve.primes_upto(P)
    v1 = phi1.at_primes(p)
    v2 = phi2.at_primes(p) * np.exp(1j * t * np.log(p.astype(np.float64)))
    terms = (1.0 - np.real(v1 * np.conj(v2))) / p
    return DistanceReport(int(P), math.fsum(terms), t)


def d_distance_trend(phi1, phi2, Ps: Sequence[int], sieve: FactorSieve, *, t: float = 0.0) -> list:
    """Partial distances at increasing cutoffs; growth is a trend, never a verdict."""
    return [d_distance_partial(phi1, phi2, P, sieve, t=t) for P in sorted(Ps)]


def halasz_condition_ii(phi: MultiplicativeFunctionSpec, chi: DirichletCharacterSpec, t: float,
                        kmax: int) -> list:
    """For ``k = 1..kmax`` whether ``chi(2)^k phi(2^k) = -2^{ikt}`` (to 1e-12)."""
    out = []
    for k in range(1, kmax + 1):
        lhs = complex(chi(2)) ** k * complex(np.asarray(phi.rule(np.array([2]), np.array([k])))[0])
        rhs = -cmath.exp(1j * k * t * math.log(2))
        out.append(abs(lhs - rhs) < 1e-12)
    return out


# -- averages along progressions ----------------------------------------------------------

def ap_average(phi: MultiplicativeFunctionSpec, a: int, b: int, N: int, sieve: FactorSieve) -> complex:
    """``(1/N) sum_{n=1}^N phi(a n + b)``."""
    if a * N + b > sieve.limit:
        raise SieveRange(f"a N + b = {a * N + b} exceeds sieve limit {sieve.limit}")
    n = np.arange(1, N + 1, dtype=np.int64)
    vals = mult_eval(phi, a * n + b, sieve)
    return complex(math.fsum(vals.real), math.fsum(vals.imag)) / N


@dataclass(frozen=True)
class ScanRow:
    a: int
    b: int
    value: complex


def aperiodicity_scan(phi: MultiplicativeFunctionSpec, A_max: int, N: int, sieve: FactorSieve):
    """Progression averages for ``1 <= a <= A_max``, ``0 <= b < a``.

    Returns ``(rows, max_modulus)``.
    """
    rows = [ScanRow(a, b, ap_average(phi, a, b, N, sieve))
            for a in range(1, A_max + 1) for b in range(a)]
    return rows, max(abs(r.value) for r in rows)


def exponential_twist_average(phi: MultiplicativeFunctionSpec, alpha: float, N: int,
                              sieve: FactorSieve) -> complex:
    """``(1/N) sum_{n<=N} phi(n) e(n alpha)``."""
    n = np.arange(1, N + 1, dtype=np.int64)
    vals = mult_eval(phi, n, sieve) * e(np.mod(n * alpha, 1.0))
    return complex(math.fsum(vals.real), math.fsum(vals.imag)) / N


# -- Katai ---------------------------------------------------------------------------------

def katai_correlation(a: ComplexSeqNd, p1: int, p2: int, q1: int, q2: int, N1: int, N2: int,
                      *, budget: int = 10**9) -> complex:
    """``(1/(N1 N2)) sum a(p1 n1, p2 n2) conj(a(q1 n1, q2 n2))`` over the box."""
    if len({p1, p2, q1, q2}) != 4:
        raise PrimeClash("the four primes must be distinct")
    if a.arity != 2:
        raise ValidationError("Katai correlations need a sequence in two variables")
    if N1 * N2 > budget:
        raise BudgetExceeded(f"{N1 * N2} points exceed budget {budget}")
    n1 = np.arange(1, N1 + 1, dtype=np.int64)[:, None]
    n2 = np.arange(1, N2 + 1, dtype=np.int64)[None, :]
    vals = a.evaluate(p1 * n1, p2 * n2) * np.conj(a.evaluate(q1 * n1, q2 * n2))
    return complex(math.fsum(vals.real.ravel()), math.fsum(vals.imag.ravel())) / (N1 * N2)


def katai_grid(a: ComplexSeqNd, primes: Sequence[int], N1: int, N2: int):
    """Correlations over all ordered 4-tuples of distinct primes from ``primes``.

    Returns ``(rows, max_modulus)`` with rows ``((p1, p2, q1, q2), value)``.
    """
    rows = [(t, katai_correlation(a, *t, N1, N2)) for t in itertools.permutations(primes, 4)]
    return rows, max(abs(v) for _, v in rows)


__all__ = [
    "FactorSieve", "omega", "big_omega", "MultiplicativeFunctionSpec", "mult_eval",
    "constant_one", "liouville", "mobius", "f_b", "completely_multiplicative", "twist_by_nit",
    "DirichletCharacterSpec", "characters_mod", "s_ab_indicator", "s_ab_density",
    "key_identity_eval", "DistanceReport", "d_distance_partial", "d_distance_trend",
    "halasz_condition_ii", "ap_average", "ScanRow", "aperiodicity_scan",
    "exponential_twist_average", "katai_correlation", "katai_grid",
]

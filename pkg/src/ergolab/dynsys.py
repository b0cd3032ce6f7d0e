"""Commuting unipotent affine systems on tori and weighted multiple averages.

Observables are finite trigonometric polynomials stored in frequency space, so
composition with ``x -> A x + b`` is exact: frequency ``k`` goes to ``A^T k``
and picks up the phase ``e(k . b)``.  Translation parts are kept as
:class:`fractions.Fraction` so those phases are reduced mod 1 exactly.
Integrals are zero-frequency coefficients and L^2 norms come from Parseval.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._util import e, fsum_complex
from .errors import BudgetExceeded, FrequencyOverflow, ValidationError
from .seqcore import ComplexSeqNd, FolnerWindow

FREQ_LIMIT = 2**62
_LD = np.longdouble


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, np.generic):
        # numpy integers would otherwise leak into Fraction and overflow later
        x = x.item()
    return Fraction(x)


def _mod1(x: Fraction) -> Fraction:
    return x - math.floor(x)


# -- integer matrix helpers (tuples of tuples of Python ints) ---------------------

def _mat(A):
    return tuple(tuple(int(v) for v in row) for row in A)


def _eye(m):
    return tuple(tuple(int(i == j) for j in range(m)) for i in range(m))


def _matmul(A, B):
    return tuple(tuple(sum(A[i][t] * B[t][j] for t in range(len(B))) for j in range(len(B[0])))
                 for i in range(len(A)))


def _matadd(A, B, c=1):
    return tuple(tuple(a + c * b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def _matvec(A, v):
    return tuple(sum(a * x for a, x in zip(row, v)) for row in A)


def _binom(n: int, j: int) -> int:
    """Generalised binomial coefficient, valid for negative ``n``."""
    num = 1
    for t in range(j):
        num *= n - t
    return num // math.factorial(j)


@dataclass(frozen=True)
class AffineMap:
    """``x -> A x + v (mod 1)`` with integer ``A`` and rational ``v``."""

    A: tuple
    v: tuple

    def then(self, other: "AffineMap") -> "AffineMap":
        """``other o self``."""
        return AffineMap(_matmul(other.A, self.A),
                         tuple(_mod1(a + b) for a, b in zip(_matvec(other.A, self.v), other.v)))

    def __matmul__(self, other: "AffineMap") -> "AffineMap":
        return other.then(self)


class CommutingTorusSystem:
    """Commuting maps ``T_i x = A_i x + b_i`` on ``T^m`` with unipotent ``A_i``."""

    def __init__(self, matrices: Sequence, shifts: Sequence, Q: int = 32):
        if len(matrices) != len(shifts) or not matrices:
            raise ValidationError("need one shift per matrix and at least one map")
        self.A = tuple(_mat(A) for A in matrices)
        self.m = len(self.A[0])
        if any(len(A) != self.m or any(len(r) != self.m for r in A) for A in self.A):
            raise ValidationError("matrices must all be m x m")
        self.b = tuple(tuple(_mod1(_frac(x)) for x in np.atleast_1d(b)) for b in shifts)
        if any(len(b) != self.m for b in self.b):
            raise ValidationError("shift vectors must have length m")
        self.Q = int(Q)
        I = _eye(self.m)
        self._nil = tuple(_matadd(A, I, -1) for A in self.A)
        for i, M in enumerate(self._nil):
            P = I
            for _ in range(self.m):
                P = _matmul(P, M)
            if any(any(r) for r in P):
                raise ValidationError(f"matrix {i} is not unipotent")
            if round(np.linalg.det(np.array(self.A[i], dtype=float))) != 1:
                raise ValidationError(f"matrix {i} does not have determinant 1")
        for i, j in itertools.combinations(range(self.ell), 2):
            if _matmul(self.A[i], self.A[j]) != _matmul(self.A[j], self.A[i]):
                raise ValidationError(f"matrices {i} and {j} do not commute")
            lhs = [a + b for a, b in zip(_matvec(self.A[i], self.b[j]), self.b[i])]
            rhs = [a + b for a, b in zip(_matvec(self.A[j], self.b[i]), self.b[j])]
            if any(_mod1(x - y) != 0 for x, y in zip(lhs, rhs)):
                raise ValidationError(f"maps {i} and {j} do not commute")
        self._pow = functools.lru_cache(maxsize=65536)(self._power)

    @classmethod
    def rotations(cls, alphas, Q: int = 32) -> "CommutingTorusSystem":
        """Translations ``x -> x + alpha_i`` on ``T^m``."""
        alphas = [np.atleast_1d(a) for a in alphas]
        m = len(alphas[0])
        return cls([_eye(m)] * len(alphas), alphas, Q)

    @property
    def ell(self) -> int:
        return len(self.A)

    @property
    def is_rotation(self) -> bool:
        return all(A == _eye(self.m) for A in self.A)

    def _power(self, i: int, n: int) -> AffineMap:
        M = self._nil[i]
        An = _eye(self.m)
        Sn = ((0,) * self.m,) * self.m
        Mj = _eye(self.m)
        for j in range(self.m + 1):
            if j:
                An = _matadd(An, Mj, _binom(n, j))
            Sn = _matadd(Sn, Mj, _binom(n, j + 1))
            Mj = _matmul(Mj, M)
        v = tuple(_mod1(x) for x in _matvec(Sn, self.b[i]))
        return AffineMap(An, v)

    def power(self, i: int, n: int) -> AffineMap:
        """``T_i^n`` via the binomial expansion of ``(I + M)^n``."""
        return self._pow(i, int(n))

    def iterate(self, nvec) -> AffineMap:
        """``T_{n} = T_1^{n_1} ... T_ell^{n_ell}``."""
        nvec = tuple(int(k) for k in nvec)
        if len(nvec) != self.ell:
            raise ValidationError(f"expected {self.ell} exponents")
        out = AffineMap(_eye(self.m), (Fraction(0),) * self.m)
        for i in reversed(range(self.ell)):
            out = out.then(self.power(i, nvec[i]))
        return out

    def apply(self, nvec, x):
        """Apply ``T_{n}`` to points ``x`` (shape ``(..., m)``), mod 1."""
        T = self.iterate(nvec)
        x = np.asarray(x, dtype=_LD)
        A = np.array(T.A, dtype=_LD)
        y = x @ A.T + np.array([float(v) for v in T.v], dtype=_LD)
        return y - np.floor(y)


# -- observables --------------------------------------------------------------------

class TorusObservable:
    """Finite trigonometric polynomial ``sum_k c_k e(k . x)`` on ``T^m``."""

    def __init__(self, terms: dict, m: int | None = None):
        clean = {}
        for k, c in terms.items():
            k = tuple(int(v) for v in np.atleast_1d(k))
            if any(abs(v) >= FREQ_LIMIT for v in k):
                raise FrequencyOverflow(f"frequency {k} exceeds 2^62")
            clean[k] = clean.get(k, 0) + complex(c)
        if m is None:
            if not clean:
                raise ValidationError("dimension needed for an empty observable")
            m = len(next(iter(clean)))
        if any(len(k) != m for k in clean):
            raise ValidationError("frequencies differ in dimension")
        self.m = m
        self.terms = {k: c for k, c in sorted(clean.items()) if c != 0}

    @classmethod
    def character(cls, k, c: complex = 1.0) -> "TorusObservable":
        return cls({tuple(np.atleast_1d(k)): c})

    @classmethod
    def constant(cls, c: complex, m: int = 1) -> "TorusObservable":
        return cls({(0,) * m: c}, m)

    @classmethod
    def random(cls, rng: np.random.Generator, m: int = 1, n_terms: int = 3,
               max_freq: int = 3, zero_mean: bool = False) -> "TorusObservable":
        terms = {}
        for _ in range(n_terms):
            k = tuple(int(v) for v in rng.integers(-max_freq, max_freq + 1, size=m))
            if zero_mean and not any(k):
                continue
            terms[k] = complex(rng.normal(), rng.normal())
        if not terms:
            terms[(1,) + (0,) * (m - 1)] = 1.0
        obs = cls(terms, m)
        return obs * (1.0 / obs.sup_bound)

    @property
    def sup_bound(self) -> float:
        return math.fsum(abs(c) for c in self.terms.values())

    @property
    def max_freq(self) -> int:
        return max((max(abs(v) for v in k) for k in self.terms), default=0)

    def mean(self) -> complex:
        return self.terms.get((0,) * self.m, 0j)

    def l2(self) -> float:
        return math.sqrt(math.fsum(abs(c) ** 2 for c in self.terms.values()))

    def conj(self) -> "TorusObservable":
        return TorusObservable({tuple(-v for v in k): np.conj(c) for k, c in self.terms.items()}, self.m)

    def __mul__(self, other):
        if not isinstance(other, TorusObservable):
            c = complex(other)
            return TorusObservable({k: c * v for k, v in self.terms.items()}, self.m)
        out = {}
        for (k1, c1), (k2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            k = tuple(a + b for a, b in zip(k1, k2))
            out[k] = out.get(k, 0) + c1 * c2
        return TorusObservable(out, self.m)

    __rmul__ = __mul__

    def __add__(self, other: "TorusObservable") -> "TorusObservable":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return TorusObservable(out, self.m)

    def __sub__(self, other: "TorusObservable") -> "TorusObservable":
        return self + other * -1.0

    def compose(self, T: AffineMap) -> "TorusObservable":
        """``f o T`` for ``T x = A x + v``."""
        out = {}
        for k, c in self.terms.items():
            phase = float(_mod1(sum(kj * vj for kj, vj in zip(k, T.v))))
            kk = tuple(sum(k[i] * T.A[i][j] for i in range(self.m)) for j in range(self.m))
            out[kk] = out.get(kk, 0) + c * complex(e(phase))
        return TorusObservable(out, self.m)

    def __call__(self, *x):
        x = [np.asarray(v, dtype=_LD) for v in x]
        out = 0
        for k, c in self.terms.items():
            out = out + c * e(sum(kj * xj for kj, xj in zip(k, x)))
        return out

    def render(self, Q: int) -> "GridFunction":
        mids = (np.arange(Q) + 0.5) / Q
        mesh = np.meshgrid(*[mids] * self.m, indexing="ij")
        vals = np.broadcast_to(np.asarray(self(*mesh), dtype=np.complex128), mesh[0].shape)
        return GridFunction(np.array(vals))

    def __repr__(self):
        return f"TorusObservable({self.terms})"


def compose_iterate(system: CommutingTorusSystem, f: TorusObservable, nvec) -> TorusObservable:
    """``f o T_{n}`` computed exactly in frequency space."""
    if f.m != system.m:
        raise ValidationError("observable and system dimensions differ")
    return f.compose(system.iterate(nvec))


@dataclass(frozen=True)
class GridFunction:
    """Values on the ``Q^m`` midpoint lattice of ``T^m``."""

    values: np.ndarray

    @property
    def Q(self) -> int:
        return self.values.shape[0]

    def integral(self) -> complex:
        return fsum_complex(self.values) / self.values.size

    def l2(self) -> float:
        return math.sqrt(math.fsum((np.abs(self.values) ** 2).ravel()) / self.values.size)


# -- polynomial mappings ----------------------------------------------------------

class PolynomialMapping:
    """``p: Z^d -> Z^ell`` with integer coefficients.

    ``components[i]`` maps exponent tuples (length ``d``) to coefficients.
    """

    def __init__(self, components: Sequence[dict], arity: int):
        self.arity = int(arity)
        self.components = []
        for comp in components:
            clean = {}
            for mono, c in comp.items():
                mono = tuple(int(v) for v in np.atleast_1d(mono))
                if len(mono) != self.arity or any(v < 0 for v in mono):
                    raise ValidationError(f"bad monomial {mono}")
                if int(c) != c:
                    raise ValidationError("coefficients must be integers")
                if c:
                    clean[mono] = int(c)
            self.components.append(clean)

    @classmethod
    def linear(cls, matrix) -> "PolynomialMapping":
        """``p(n) = M n`` for an ``ell x d`` integer matrix."""
        M = np.atleast_2d(np.asarray(matrix, dtype=np.int64))
        d = M.shape[1]
        comps = [{tuple(int(i == j) for i in range(d)): int(M[r, j]) for j in range(d)}
                 for r in range(M.shape[0])]
        return cls(comps, d)

    @classmethod
    def monomials(cls, exponents: Sequence[int], ell: int | None = None, slot: int | None = None):
        """One-variable helper: ``p(n) = n^a`` placed in coordinate ``slot`` of Z^ell."""
        ell = len(exponents) if ell is None else ell
        comps = [{} for _ in range(ell)]
        for i, a in enumerate(exponents):
            comps[i if slot is None else slot][(int(a),)] = 1
        return cls(comps, 1)

    @property
    def ell(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max((sum(m) for comp in self.components for m in comp), default=0)

    def __call__(self, n) -> tuple:
        n = tuple(int(v) for v in np.atleast_1d(n))
        return tuple(sum(c * math.prod(x**a for x, a in zip(n, mono)) for mono, c in comp.items())
                     for comp in self.components)

    def evaluate_array(self, *n) -> list:
        """Vectorised evaluation; returns one int64 array per component."""
        out = []
        for comp in self.components:
            acc = 0
            for mono, c in comp.items():
                term = c
                for x, a in zip(n, mono):
                    term = term * np.asarray(x, dtype=np.int64) ** a
                acc = acc + term
            out.append(np.broadcast_to(np.asarray(acc, dtype=np.int64),
                                       np.broadcast_shapes(*(np.shape(x) for x in n))))
        return out


def _check_arity(system, fs, ps, d):
    if len(fs) != len(ps):
        raise ValidationError("need one polynomial mapping per observable")
    for f in fs:
        if f.m != system.m:
            raise ValidationError("observable dimension differs from the system")
    for p in ps:
        if p.ell != system.ell:
            raise ValidationError("polynomial codomain must equal the number of maps")
        if p.arity != d:
            raise ValidationError("polynomial arity differs from the weight arity")


def _product_terms(fs):
    """All term tuples of a product of observables (frequency sum kept separately)."""
    for combo in itertools.product(*[list(f.terms.items()) for f in fs]):
        ks = [k for k, _ in combo]
        c = math.prod(c for _, c in combo)
        yield ks, c


def _rotation_phase(system, ks, pvals):
    """``sum_i k_i . (sum_j p_{i,j}(n) b_j)`` mod 1 for rotation systems."""
    phase = np.zeros(np.shape(pvals[0][0]) if pvals else (), dtype=_LD)
    for k, pv in zip(ks, pvals):
        for j in range(system.ell):
            kb = _mod1(sum(kk * bb for kk, bb in zip(k, system.b[j])))
            if kb == 0:
                continue
            # split the exact rational into two doubles for an accurate product
            hi = float(kb)
            lo = float(kb - Fraction(hi))
            prod = pv[j].astype(_LD) * _LD(hi)
            phase = phase + (prod - np.floor(prod)) + pv[j].astype(_LD) * _LD(lo)
    return phase


# -- weighted multiple averages ------------------------------------------------------

@dataclass
class MultipleAverage:
    observable: TorusObservable
    Q: int

    @property
    def grid(self) -> GridFunction:
        return self.observable.render(self.Q)

    def l2(self) -> float:
        """Exact ``L^2(mu)`` norm by Parseval."""
        return self.observable.l2()

    def l2_quadrature(self) -> float:
        return self.grid.l2()


def weighted_multiple_average(system: CommutingTorusSystem, w: ComplexSeqNd,
                              fs: Sequence[TorusObservable], ps: Sequence[PolynomialMapping],
                              window: FolnerWindow, *, budget: int = 10**10) -> MultipleAverage:
    """``(1/|I|) sum_{n in I} w(n) prod_i f_i(T_{p_i(n)} x)`` as an exact trig polynomial."""
    _check_arity(system, fs, ps, w.arity)
    if window.arity != w.arity:
        raise ValidationError("window and weight arities differ")
    cost = window.size * max(len(fs), 1) * system.Q ** system.m
    if cost > budget:
        raise BudgetExceeded(f"average needs {cost} operations, budget {budget}")
    coords = window.coords()
    wv = w.evaluate(*coords)
    out = {}
    if system.is_rotation:
        pvals = [p.evaluate_array(*coords) for p in ps]
        for ks, c in _product_terms(fs):
            k = tuple(map(sum, zip(*ks))) if ks else (0,) * system.m
            val = c * fsum_complex(wv * e(_rotation_phase(system, ks, pvals)))
            out[k] = out.get(k, 0) + val
    else:
        pts = np.stack(coords, axis=1)
        for n, wn in zip(pts, wv):
            prod = TorusObservable.constant(wn, system.m)
            for f, p in zip(fs, ps):
                prod = prod * f.compose(system.iterate(p(n)))
            for k, c in prod.terms.items():
                out[k] = out.get(k, 0) + c
    avg = TorusObservable({k: c / window.size for k, c in out.items()}, system.m)
    return MultipleAverage(avg, system.Q)


def correlation_sequence(system: CommutingTorusSystem, f0: TorusObservable,
                         fs: Sequence[TorusObservable], ps: Sequence[PolynomialMapping]) -> ComplexSeqNd:
    """``a(n) = int f_0 prod_i T_{p_i(n)} f_i dmu``, exactly."""
    if not ps:
        raise ValidationError("need at least one iterate")
    d = ps[0].arity
    _check_arity(system, [f0, *fs], [ps[0], *ps], d)
    bound = f0.sup_bound * math.prod(f.sup_bound for f in fs)

    if system.is_rotation:
        zero_terms = []
        for ks, c in _product_terms([f0, *fs]):
            if not any(map(sum, zip(*ks))):
                zero_terms.append((ks[1:], c))

        def func(*n):
            shape = np.broadcast_shapes(*(np.shape(x) for x in n))
            pvals = [p.evaluate_array(*n) for p in ps]
            acc = np.zeros(shape, dtype=np.complex128)
            for ks, c in zero_terms:
                acc = acc + c * e(_rotation_phase(system, ks, pvals))
            return acc
    else:
        def func(*n):
            shape = np.broadcast_shapes(*(np.shape(x) for x in n))
            flat = [np.broadcast_to(x, shape).ravel() for x in n]
            vals = []
            for pt in zip(*flat):
                prod = f0
                for f, p in zip(fs, ps):
                    prod = prod * f.compose(system.iterate(p(pt)))
                vals.append(prod.mean())
            return np.asarray(vals, dtype=np.complex128).reshape(shape)

    return ComplexSeqNd(d, func, bound, name="correlation")


# -- Host-Kra seminorms ---------------------------------------------------------------

@dataclass(frozen=True)
class HKEstimate:
    value: float
    raw: float
    clamp: float
    k: int
    N_av: int


class _Birkhoff:
    """Cached Birkhoff averages ``(1/N) sum_{m=1}^N e(k . T^m x)`` per frequency."""

    def __init__(self, system: CommutingTorusSystem, N: int):
        self.system, self.N = system, N
        self.cache = {}

    def of_character(self, k):
        if k in self.cache:
            return self.cache[k]
        s = self.system
        if s.is_rotation:
            kb = _mod1(sum(a * b for a, b in zip(k, s.b[0])))
            m = np.arange(1, self.N + 1, dtype=np.int64)
            hi = float(kb)
            prod = m.astype(_LD) * _LD(hi)
            val = fsum_complex(e(prod - np.floor(prod))) / self.N
            res = {k: val}
        else:
            res = {}
            char = TorusObservable({k: 1.0}, s.m)
            for m in range(1, self.N + 1):
                for kk, c in char.compose(s.power(0, m)).terms.items():
                    res[kk] = res.get(kk, 0) + c / self.N
        self.cache[k] = res
        return res

    def average(self, f: TorusObservable) -> TorusObservable:
        out = {}
        for k, c in f.terms.items():
            for kk, v in self.of_character(k).items():
                out[kk] = out.get(kk, 0) + c * v
        return TorusObservable(out, f.m)


def hk_seminorm(system: CommutingTorusSystem, f: TorusObservable, k: int, N_av: int, *,
                budget: int = 10**9) -> HKEstimate:
    """Finite-horizon Host-Kra seminorm of a single map.

    The conditional expectation on invariant sets is replaced by the Birkhoff
    average over ``m = 1..N_av`` and each averaging limit in the recursion by an
    average over ``n = 1..N_av``.
    """
    if system.ell != 1:
        raise ValidationError("hk_seminorm expects a single transformation")
    if not 1 <= k <= 3:
        raise ValidationError("k must be 1, 2 or 3")
    if N_av ** k > budget:
        raise BudgetExceeded(f"N_av^k = {N_av ** k} exceeds budget {budget}")
    birk = _Birkhoff(system, N_av)

    def power(g: TorusObservable, j: int) -> float:
        if j == 1:
            return birk.average(g).l2() ** 2
        terms = [power(g * g.compose(system.power(0, n)).conj(), j - 1) for n in range(1, N_av + 1)]
        return math.fsum(terms) / N_av

    raw = power(f, k)
    return HKEstimate(max(raw, 0.0) ** (1.0 / 2**k), raw, max(-raw, 0.0), k, N_av)


# -- Cauchy probes --------------------------------------------------------------------

@dataclass(frozen=True)
class AverageSpec:
    system: CommutingTorusSystem
    weight: ComplexSeqNd
    observables: tuple
    polys: tuple

    def at(self, N: int) -> MultipleAverage:
        return weighted_multiple_average(self.system, self.weight, self.observables, self.polys,
                                         FolnerWindow.cube(N, self.weight.arity))


@dataclass(frozen=True)
class CauchyReport:
    N: int
    delta_N: float
    delta_2N: float
    non_cauchy: bool

    @property
    def ratio(self) -> float:
        return self.delta_2N / self.delta_N if self.delta_N else 0.0


def cauchy_convergence_probe(spec: AverageSpec, N: int, *, tol: float = 1e-12) -> CauchyReport:
    """``Delta_N = ||A_N - A_2N||`` and ``Delta_2N = ||A_2N - A_4N||`` in L^2(mu)."""
    a1, a2, a4 = (spec.at(M).observable for M in (N, 2 * N, 4 * N))
    d1 = (a1 - a2).l2()
    d2 = (a2 - a4).l2()
    return CauchyReport(N, d1, d2, d2 > d1 + tol)


# -- cyclic instances -------------------------------------------------------------------

def cyclic_weighted_average(w, fs, coeffs) -> np.ndarray:
    """``x -> E_{n in Z_N} w(n) prod_i f_i(x + c_i n)`` on ``Z_N``."""
    w = np.asarray(w, dtype=np.complex128)
    N = w.shape[0]
    x = np.arange(N)[:, None]
    n = np.arange(N)[None, :]
    prod = np.broadcast_to(w[None, :], (N, N)).copy()
    for f, c in zip(fs, coeffs):
        prod = prod * np.asarray(f, dtype=np.complex128)[(x + c * n) % N]
    return prod.mean(axis=1)


__all__ = [
    "AffineMap", "CommutingTorusSystem", "TorusObservable", "GridFunction", "PolynomialMapping",
    "MultipleAverage", "compose_iterate", "weighted_multiple_average", "correlation_sequence",
    "HKEstimate", "hk_seminorm", "AverageSpec", "CauchyReport", "cauchy_convergence_probe",
    "cyclic_weighted_average",
]

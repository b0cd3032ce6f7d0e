"""Bounded sequences on N^d, box averages, cube correlations and Gowers norms.

Sequences are evaluated lazily through a vectorised callable that receives one
integer array per coordinate.  Averages over boxes run in fixed-size chunks in
lexicographic order; every chunk is summed with ``math.fsum`` so the result does
not depend on chunking or on the machine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._util import e, fsum_complex
from .errors import (
    BoundViolation,
    GowersBudgetExceeded,
    ShiftBudgetExceeded,
    ValidationError,
    WindowTooLarge,
)

DEFAULT_MAX_POINTS = 10**9
DEFAULT_SHIFT_BUDGET = 10**9
DEFAULT_GOWERS_BUDGET = 2**30
CHUNK = 1 << 18


def _bound_tol(bound):
    return 1e-9 * max(1.0, bound)


@dataclass(frozen=True)
class ComplexSeqNd:
    """A bounded complex sequence ``a: N^d -> C``.

    ``func`` is called as ``func(n_1, ..., n_d)`` with integer arrays of a common
    shape and must return values of that shape.  It must be pure.
    """

    arity: int
    func: Callable[..., np.ndarray]
    bound: float
    name: str = ""

    def __post_init__(self):
        if self.arity < 1:
            raise ValidationError("arity must be positive")
        if not self.bound >= 0:
            raise ValidationError("bound must be nonnegative")

    def evaluate(self, *coords, check_bound: bool = True) -> np.ndarray:
        if len(coords) != self.arity:
            raise ValidationError(f"expected {self.arity} coordinates, got {len(coords)}")
        coords = [np.asarray(c, dtype=np.int64) for c in coords]
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        vals = np.broadcast_to(np.asarray(self.func(*coords), dtype=np.complex128), shape)
        if check_bound and vals.size:
            mags = np.abs(vals)
            i = int(np.argmax(mags))
            if mags.flat[i] > self.bound + _bound_tol(self.bound):
                where = tuple(int(np.broadcast_to(c, shape).flat[i]) for c in coords)
                raise BoundViolation(float(mags.flat[i]), self.bound, where)
        return vals

    def __call__(self, *n) -> complex:
        if len(n) == 1 and np.ndim(n[0]) == 1 and self.arity > 1:
            n = tuple(n[0])
        return complex(self.evaluate(*[np.asarray([k]) for k in n])[0])

    def __add__(self, other: "ComplexSeqNd") -> "ComplexSeqNd":
        _same_arity(self, other)
        return ComplexSeqNd(self.arity, lambda *n: self.func(*n) + other.func(*n),
                            self.bound + other.bound)

    def __sub__(self, other: "ComplexSeqNd") -> "ComplexSeqNd":
        _same_arity(self, other)
        return ComplexSeqNd(self.arity, lambda *n: self.func(*n) - other.func(*n),
                            self.bound + other.bound)

    def __mul__(self, other):
        if isinstance(other, ComplexSeqNd):
            _same_arity(self, other)
            return ComplexSeqNd(self.arity, lambda *n: self.func(*n) * other.func(*n),
                                self.bound * other.bound)
        c = complex(other)
        return ComplexSeqNd(self.arity, lambda *n: c * self.func(*n), abs(c) * self.bound)

    __rmul__ = __mul__

    def conj(self) -> "ComplexSeqNd":
        return ComplexSeqNd(self.arity, lambda *n: np.conj(self.func(*n)), self.bound)


def _same_arity(a, b):
    if a.arity != b.arity:
        raise ValidationError("sequences have different arities")


# -- a few sequence constructors used throughout -----------------------------

def constant(c: complex, arity: int = 1) -> ComplexSeqNd:
    c = complex(c)
    return ComplexSeqNd(arity, lambda *n: np.full(np.broadcast_shapes(*(np.shape(k) for k in n)), c),
                        abs(c), name=f"const({c})")


def linear_phase(theta) -> ComplexSeqNd:
    """``n -> e(n . theta)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))

    def f(*n):
        acc = 0.0
        for t, k in zip(theta, n):
            # reduce each product separately to keep the fractional part accurate
            acc = acc + np.mod(k * t, 1.0)
        return e(acc)

    return ComplexSeqNd(len(theta), f, 1.0, name=f"e(n.{theta.tolist()})")


def quadratic_phase(gamma: float) -> ComplexSeqNd:
    """``n -> e(gamma n^2)`` in one variable."""
    gamma = float(gamma)
    return ComplexSeqNd(1, lambda n: e(np.mod(n * n * gamma, 1.0)), 1.0, name=f"e({gamma} n^2)")


def from_array(values, offset=None) -> ComplexSeqNd:
    """Sequence backed by a dense array: ``a(n) = values[n - offset]``."""
    values = np.asarray(values, dtype=np.complex128)
    d = values.ndim
    off = np.zeros(d, dtype=np.int64) if offset is None else np.asarray(offset, dtype=np.int64)

    def f(*n):
        idx = tuple(np.asarray(k) - o for k, o in zip(n, off))
        for i, s in zip(idx, values.shape):
            if np.any((i < 0) | (i >= s)):
                raise IndexError("sequence evaluated outside its stored range")
        return values[idx]

    bound = float(np.max(np.abs(values))) if values.size else 0.0
    return ComplexSeqNd(d, f, bound, name="array")


# -- windows -----------------------------------------------------------------

@dataclass(frozen=True)
class FolnerWindow:
    """The box ``offset + ([1, N_1] x ... x [1, N_d])``.

    With ``offset = 0`` this is ``[N_1] x ... x [N_d]`` in the ``[N] = {1..N}``
    convention.
    """

    sides: tuple
    offset: tuple = None

    def __post_init__(self):
        sides = tuple(int(s) for s in np.atleast_1d(self.sides))
        if not sides or any(s < 1 for s in sides):
            raise ValidationError("window sides must all be >= 1")
        offset = (0,) * len(sides) if self.offset is None else tuple(int(k) for k in np.atleast_1d(self.offset))
        if len(offset) != len(sides):
            raise ValidationError("offset and sides differ in length")
        if any(k < 0 for k in offset):
            raise ValidationError("offset must be componentwise >= 0")
        object.__setattr__(self, "sides", sides)
        object.__setattr__(self, "offset", offset)

    @classmethod
    def cube(cls, N: int, d: int = 1, offset=None) -> "FolnerWindow":
        return cls((N,) * d, offset)

    @property
    def arity(self) -> int:
        return len(self.sides)

    @property
    def size(self) -> int:
        return math.prod(self.sides)

    @property
    def start(self) -> tuple:
        return tuple(k + 1 for k in self.offset)

    def coords(self, lo: int = 0, hi: int | None = None) -> tuple:
        """Coordinates of points ``lo..hi-1`` in lexicographic order."""
        hi = self.size if hi is None else hi
        idx = np.unravel_index(np.arange(lo, hi, dtype=np.int64), self.sides)
        return tuple(i + s for i, s in zip(idx, self.start))

    def chunks(self, chunk: int = CHUNK):
        for lo in range(0, self.size, chunk):
            yield self.coords(lo, min(lo + chunk, self.size))

    def grid(self, extra=None) -> tuple:
        """Open mesh of the (optionally enlarged) box, for dense evaluation."""
        extra = (0,) * self.arity if extra is None else extra
        axes = [np.arange(s, s + n + x, dtype=np.int64)
                for s, n, x in zip(self.start, self.sides, extra)]
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))


def _check_window(a: ComplexSeqNd, w: FolnerWindow, max_points):
    if a.arity != w.arity:
        raise ValidationError(f"sequence arity {a.arity} != window arity {w.arity}")
    if w.size > max_points:
        raise WindowTooLarge(f"window has {w.size} points, limit is {max_points}")


def _box_values(a: ComplexSeqNd, w: FolnerWindow, extra, max_points):
    shape = tuple(n + x for n, x in zip(w.sides, extra))
    if math.prod(shape) > max_points:
        raise WindowTooLarge(f"enlarged box has {math.prod(shape)} points, limit is {max_points}")
    return a.evaluate(*w.grid(extra))


# -- averages ----------------------------------------------------------------

def cesaro_average(a: ComplexSeqNd, w: FolnerWindow, *, max_points: int = DEFAULT_MAX_POINTS) -> complex:
    """``(1/|w|) sum_{n in w} a(n)``."""
    _check_window(a, w, max_points)
    partial = [fsum_complex(a.evaluate(*c)) for c in w.chunks()]
    total = complex(math.fsum(p.real for p in partial), math.fsum(p.imag for p in partial))
    return total / w.size


def besicovitch_norm(a: ComplexSeqNd, w: FolnerWindow, *, max_points: int = DEFAULT_MAX_POINTS) -> float:
    """Finite-window estimate of ``(Av |a|^2)^(1/2)``."""
    sq = ComplexSeqNd(a.arity, lambda *n: np.abs(a.evaluate(*n)) ** 2, a.bound**2)
    return math.sqrt(max(cesaro_average(sq, w, max_points=max_points).real, 0.0))


@dataclass(frozen=True)
class CubeShiftTuple:
    """Shifts ``(h_1, ..., h_k)`` in N^d; ``eps . h`` sums the selected shifts."""

    shifts: tuple

    def __post_init__(self):
        shifts = tuple(tuple(int(c) for c in np.atleast_1d(h)) for h in self.shifts)
        if not shifts:
            raise ValidationError("need at least one shift")
        if len({len(h) for h in shifts}) != 1:
            raise ValidationError("shifts have different dimensions")
        if any(c < 0 for h in shifts for c in h):
            raise ValidationError("shifts must be componentwise >= 0")
        object.__setattr__(self, "shifts", shifts)

    @property
    def order(self) -> int:
        return len(self.shifts)

    @property
    def dim(self) -> int:
        return len(self.shifts[0])

    def vertices(self):
        """Yield ``(eps, eps . h)`` for eps in {0,1}^k, lexicographically."""
        for eps in itertools.product((0, 1), repeat=self.order):
            v = [0] * self.dim
            for bit, h in zip(eps, self.shifts):
                if bit:
                    v = [x + y for x, y in zip(v, h)]
            yield eps, tuple(v)


def _cube_product(vals, sides, vertex_shifts, conj_flags):
    out = None
    for shift, cj in zip(vertex_shifts, conj_flags):
        sl = tuple(slice(s, s + n) for s, n in zip(shift, sides))
        block = vals[sl]
        if cj:
            block = np.conj(block)
        out = block.copy() if out is None else out * block
    return out


def correlation_cube(a: ComplexSeqNd, w: FolnerWindow, h: CubeShiftTuple,
                     *, max_points: int = DEFAULT_MAX_POINTS) -> complex:
    """Window average of ``prod_eps C^{|eps|} a(n + eps . h)``."""
    _check_window(a, w, max_points)
    if h.dim != a.arity:
        raise ValidationError("shift dimension does not match the sequence arity")
    extra = tuple(sum(col) for col in zip(*h.shifts))
    vals = _box_values(a, w, extra, max_points)
    verts = list(h.vertices())
    prod = _cube_product(vals, w.sides, [v for _, v in verts], [sum(eps) % 2 for eps, _ in verts])
    return fsum_complex(prod) / w.size


def _shift_box_sum(g, H, out_shape):
    """``out[n] = sum_{h in [1, H]^d} g[n + h]`` for ``n`` in ``out_shape``."""
    out = g
    for axis, n in enumerate(out_shape):
        c = np.cumsum(out, axis=axis)
        zero = np.zeros_like(np.take(c, [0], axis=axis))
        c = np.concatenate([zero, c], axis=axis)
        hi = np.take(c, np.arange(H + 1, H + 1 + n), axis=axis)
        lo = np.take(c, np.arange(1, 1 + n), axis=axis)
        out = hi - lo
    return out


@dataclass(frozen=True)
class SeminormEstimate:
    value: float
    raw: complex
    clamp: float
    H: int
    k: int
    value_2H: float | None = None

    @property
    def imag(self) -> float:
        return self.raw.imag


def _seminorm_raw(vals, sides, k, H):
    d = len(sides)
    n_pts = math.prod(sides)
    total_terms = []
    # The last shift is summed in closed form through box sums of the
    # (k-1)-fold multiplicative derivative g.
    for prefix in itertools.product(
            list(itertools.product(range(1, H + 1), repeat=d)), repeat=k - 1):
        span = tuple(n + H for n in sides)
        verts = []
        for eps in itertools.product((0, 1), repeat=k - 1):
            v = [0] * d
            for bit, hh in zip(eps, prefix):
                if bit:
                    v = [x + y for x, y in zip(v, hh)]
            verts.append((sum(eps) % 2, v))
        g = _cube_product(vals, span, [v for _, v in verts], [c for c, _ in verts])
        shifted = _shift_box_sum(g, H, sides)
        base = g[tuple(slice(0, n) for n in sides)]
        total_terms.append(fsum_complex(base * np.conj(shifted)))
    s = complex(math.fsum(t.real for t in total_terms), math.fsum(t.imag for t in total_terms))
    return s / (n_pts * H ** (d * k))


def uniformity_seminorm(a: ComplexSeqNd, w: FolnerWindow, k: int, H: int, *,
                        probe: bool = False, budget: int = DEFAULT_SHIFT_BUDGET,
                        max_points: int = DEFAULT_MAX_POINTS) -> SeminormEstimate:
    """Finite estimate of ``||a||_{I,k}`` with shifts ranging over ``[H]^d``.

    The inner average is clamped at zero before taking the ``2^k``-th root; the
    raw complex average and the clamp amount are returned alongside.  With
    ``probe=True`` the estimate is repeated at ``2H``.
    """
    _check_window(a, w, max_points)
    if k < 1 or H < 1:
        raise ValidationError("need k >= 1 and H >= 1")
    d = a.arity
    Hmax = 2 * H if probe else H
    cost = Hmax ** (d * k) * w.size
    if cost > budget:
        raise ShiftBudgetExceeded(f"{cost} shift-point evaluations exceed budget {budget}")
    vals = _box_values(a, w, (k * Hmax,) * d, max_points)

    def one(HH):
        raw = _seminorm_raw(vals, w.sides, k, HH)
        clamp = max(-raw.real, 0.0)
        return raw, clamp, max(raw.real, 0.0) ** (1.0 / 2**k)

    raw, clamp, value = one(H)
    v2 = one(2 * H)[2] if probe else None
    return SeminormEstimate(value, raw, clamp, H, k, v2)


# -- finite grids -------------------------------------------------------------

@dataclass(frozen=True)
class FiniteGridFn:
    """A function on ``Z_N^d`` stored as an array of shape ``(N,)*d``."""

    values: np.ndarray
    N: int = field(init=False)
    d: int = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim < 1 or len(set(v.shape)) != 1:
            raise ValidationError("grid must have equal sides")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "N", v.shape[0])
        object.__setattr__(self, "d", v.ndim)

    @classmethod
    def from_function(cls, N: int, d: int, f: Callable) -> "FiniteGridFn":
        idx = np.meshgrid(*[np.arange(N)] * d, indexing="ij")
        return cls(np.asarray(f(*idx), dtype=np.complex128))

    def shifted(self, h) -> "FiniteGridFn":
        """``f_h(n) = f(n + h)``."""
        h = tuple(int(x) for x in np.atleast_1d(h))
        return FiniteGridFn(np.roll(self.values, tuple(-x for x in h), axis=tuple(range(self.d))))

    def mean(self) -> complex:
        return fsum_complex(self.values) / self.values.size

    def __add__(self, other):
        return FiniteGridFn(self.values + other.values)

    def __mul__(self, c):
        return FiniteGridFn(self.values * complex(c))

    __rmul__ = __mul__


def _all_shifts(N, d):
    return itertools.product(range(N), repeat=d)


def _roll(v, h):
    return np.roll(v, tuple(-x for x in h), axis=tuple(range(v.ndim)))


def _gowers_power_cube(v, s):
    """``||f||_{U^s}^{2^s}`` by the defining recursion."""
    if s == 1:
        m = fsum_complex(v) / v.size
        return abs(m) ** 2
    N, d = v.shape[0], v.ndim
    terms = [_gowers_power_cube(v * np.conj(_roll(v, h)), s - 1) for h in _all_shifts(N, d)]
    return math.fsum(terms) / N**d


def gowers_power_spectral(f: FiniteGridFn) -> float:
    """``||f||_{U^2}^4 = N^{-4d} sum_xi |fhat(xi)|^4`` with unnormalised fhat."""
    fhat = np.fft.fftn(f.values)
    return math.fsum((np.abs(fhat) ** 4).ravel()) / f.N ** (4 * f.d)


def gowers_norm(f: FiniteGridFn, s: int, *, method: str = "auto",
                budget: int = DEFAULT_GOWERS_BUDGET) -> float:
    """Gowers ``U^s(Z_N^d)`` norm.

    ``method`` is ``"cube"`` (direct recursion), ``"spectral"`` (s = 2 only) or
    ``"auto"``, which uses the spectral identity for s = 2 and the recursion
    otherwise.
    """
    if s < 1:
        raise ValidationError("order s must be >= 1")
    if method == "auto":
        method = "spectral" if s == 2 else "cube"
    if method == "spectral":
        if s != 2:
            raise ValidationError("spectral path exists only for s = 2")
        power = gowers_power_spectral(f)
    elif method == "cube":
        cost = f.N ** (f.d * (s + 1))
        if s > 1 and cost > budget:
            raise GowersBudgetExceeded(
                f"cube evaluation needs {cost} operations, budget is {budget}")
        power = _gowers_power_cube(f.values, s)
    else:
        raise ValidationError(f"unknown method {method!r}")
    return max(power, 0.0) ** (1.0 / 2**s)


@dataclass(frozen=True)
class VanDerCorput:
    lhs: float             # |E_n f(n)|^2
    identity_rhs: complex  # E_h E_n f(n+h) conj f(n)
    bound_rhs: float       # E_h |E_n f(n+h) conj f(n)|

    @property
    def identity_error(self) -> float:
        return abs(self.lhs - self.identity_rhs)


def van_der_corput(f: FiniteGridFn) -> VanDerCorput:
    """Both sides of the finite van der Corput identity/inequality on Z_N^d."""
    v = f.values
    lhs = abs(f.mean()) ** 2
    inner = [fsum_complex(_roll(v, h) * np.conj(v)) / v.size for h in _all_shifts(f.N, f.d)]
    ident = complex(math.fsum(c.real for c in inner), math.fsum(c.imag for c in inner)) / v.size
    bound = math.fsum(abs(c) for c in inner) / v.size
    return VanDerCorput(lhs, ident, bound)


__all__ = [
    "ComplexSeqNd", "FolnerWindow", "CubeShiftTuple", "FiniteGridFn", "SeminormEstimate",
    "VanDerCorput", "cesaro_average", "besicovitch_norm", "correlation_cube",
    "uniformity_seminorm", "gowers_norm", "gowers_power_spectral", "van_der_corput",
    "constant", "linear_phase", "quadratic_phase", "from_array",
]

"""Torus, skew-product and Heisenberg nilsystems.

The Heisenberg group is modelled on R^3 with

    (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + x y'),

which is the upper unitriangular matrix [[1, x, z], [0, 1, y], [0, 0, 1]].
The lattice is Z^3, and a fundamental domain for G/Gamma is [0, 1)^3, on which
Haar measure is Lebesgue measure.

Orbits are always computed in closed form (never by repeated multiplication) and
in extended precision.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from ._util import e
from .errors import BudgetExceeded, ValidationError
from .seqcore import ComplexSeqNd

_LD = np.longdouble
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class HeisenbergElement:
    """Element ``(x, y, z)`` of the Heisenberg group.

    Coordinates may be floats or :class:`fractions.Fraction` (exact mode).
    """

    x: object
    y: object
    z: object

    def __mul__(self, other: "HeisenbergElement") -> "HeisenbergElement":
        return HeisenbergElement(self.x + other.x, self.y + other.y,
                                 self.z + other.z + self.x * other.y)

    def inverse(self) -> "HeisenbergElement":
        return HeisenbergElement(-self.x, -self.y, -self.z + self.x * self.y)

    def __pow__(self, n: int) -> "HeisenbergElement":
        return heisenberg_pow(self, n)

    def commutes_with(self, other: "HeisenbergElement", tol: float = 1e-12) -> bool:
        diff = self.x * other.y - other.x * self.y
        if isinstance(diff, Fraction):
            return diff == 0
        return abs(diff) <= tol

    def astuple(self) -> tuple:
        return (self.x, self.y, self.z)

    @classmethod
    def identity(cls, exact: bool = False) -> "HeisenbergElement":
        zero = Fraction(0) if exact else 0.0
        return cls(zero, zero, zero)


def heisenberg_pow(tau: HeisenbergElement, n: int) -> HeisenbergElement:
    """``tau^n = (n a, n b, n c + C(n, 2) a b)`` for ``tau = (a, b, c)``."""
    n = int(n)
    a, b, c = tau.astuple()
    return HeisenbergElement(n * a, n * b, n * c + (n * (n - 1) // 2) * (a * b))


def _floor(v):
    return math.floor(v)


def reduce_fundamental(g: HeisenbergElement):
    """Return ``(p, gamma)`` with ``g * gamma = p`` and ``p`` in ``[0, 1)^3``.

    The lattice element is chosen in the fixed order y, then x, then z.
    """
    x, y, z = g.astuple()
    q = -_floor(y)
    p = -_floor(x)
    zq = z + x * q
    r = -_floor(zq)
    px, py, pz = x + p, y + q, zq + r
    if not isinstance(px, Fraction):
        # x + p can round up to exactly 1.0 when x is a tiny negative float
        px, py, pz = (min(float(v), _BELOW_ONE) for v in (px, py, pz))
    return HeisenbergElement(px, py, pz), HeisenbergElement(p, q, r)


def reduce_fundamental_array(x, y, z):
    """Vectorised :func:`reduce_fundamental` in extended precision."""
    x, y, z = (np.asarray(v, dtype=_LD) for v in (x, y, z))
    q = -np.floor(y)
    p = -np.floor(x)
    zq = z + x * q
    r = -np.floor(zq)
    return x + p, y + q, zq + r


# -- observables ----------------------------------------------------------------

@dataclass(frozen=True)
class TrigObservable:
    """``Psi(t) = sum_j c_j e(k_j . t)`` on a torus (or on the horizontal
    coordinates of the Heisenberg nilmanifold)."""

    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        k = np.atleast_2d(np.asarray(self.freqs, dtype=np.int64))
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128))
        if k.shape[0] != c.shape[0]:
            raise ValidationError("one coefficient per frequency required")
        object.__setattr__(self, "freqs", k)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.freqs.shape[1]

    @property
    def sup_bound(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def mean(self) -> complex:
        zero = np.all(self.freqs == 0, axis=1)
        return complex(np.sum(self.coeffs[zero]))

    def __call__(self, *t):
        t = [np.asarray(v, dtype=_LD) for v in t]
        out = 0
        for k, c in zip(self.freqs, self.coeffs):
            phase = sum(int(kj) * tj for kj, tj in zip(k, t))
            out = out + c * e(phase)
        return out


@dataclass(frozen=True)
class VerticalTwist:
    """``e(m z)`` on reduced coordinates.

    Diagnostic only: this is discontinuous on the nilmanifold, because reducing
    the horizontal coordinates shifts z by ``x * q``.
    """

    m: int
    continuous = False

    @property
    def sup_bound(self) -> float:
        return 1.0

    def __call__(self, x, y, z):
        return e(int(self.m) * np.asarray(z, dtype=_LD))


def _bump(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


_BUMP_MASS = integrate.quad(lambda t: math.exp(-1.0 / (1.0 - t * t)), -1, 1, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


@dataclass(frozen=True)
class PeriodizedBump:
    """``Psi(g Gamma) = sum_gamma phi(g gamma)`` for a smooth bump ``phi`` on G.

    ``phi(x, y, z) = amp * b((x-cx)/rho) b((y-cy)/rho) b((z-cz)/rho)`` with
    ``b(t) = exp(-1/(1-t^2))`` on ``|t| < 1``.  The sum over the lattice runs over
    horizontal translates in ``[-R, R]^2``; for each of them the single possible
    vertical translate is found exactly, so every dropped term is identically
    zero as long as ``|x|, |y| <= R - 2``.
    """

    center: tuple = (0.5, 0.5, 0.5)
    radius: float = 0.25
    amplitude: float = 1.0
    R: int = 4

    def __post_init__(self):
        if not 0 < self.radius < 0.5:
            raise ValidationError("bump radius must lie in (0, 1/2)")

    @property
    def sup_bound(self) -> float:
        # radius < 1/2, so at most one lattice translate meets the support
        return abs(self.amplitude) * math.exp(-3.0)

    @property
    def total_mass(self) -> float:
        """``int_G phi``, which equals the Haar integral of the periodisation."""
        return self.amplitude * (self.radius * _BUMP_MASS) ** 3

    def phi(self, x, y, z):
        cx, cy, cz = self.center
        rho = self.radius
        return self.amplitude * _bump((x - cx) / rho) * _bump((y - cy) / rho) * _bump((z - cz) / rho)

    def __call__(self, x, y, z):
        x, y, z = (np.asarray(v, dtype=np.float64) for v in (x, y, z))
        cz, rho = self.center[2], self.radius
        out = np.zeros(np.broadcast_shapes(x.shape, y.shape, z.shape))
        for p, q in itertools.product(range(-self.R, self.R + 1), repeat=2):
            # (x,y,z)*(p,q,r) = (x+p, y+q, z+r+x q)
            zq = z + x * q
            r = np.ceil(cz - rho - zq)
            out = out + self.phi(x + p, y + q, zq + r)
        return out


# -- nilsystems -------------------------------------------------------------------

@dataclass(frozen=True)
class SkewTranslation:
    """``T(x, y) = (x + alpha, y + c x + beta)`` on T^2 with integer ``c``."""

    alpha: float
    beta: float = 0.0
    c: int = 1


@dataclass(frozen=True)
class NilsystemSpec:
    """A nilsystem with commuting translations and an observable.

    kind: ``"torus"`` (translations are vectors in R^m), ``"skew"``
    (translations are :class:`SkewTranslation`), or ``"heisenberg"``
    (translations are :class:`HeisenbergElement`).  ``start`` is the initial
    point (defaults to the origin, i.e. ``e_X``).
    """

    kind: str
    translations: tuple
    observable: object
    Q: int = 32
    start: tuple = None

    def __post_init__(self):
        kinds = ("torus", "skew", "heisenberg")
        if self.kind not in kinds:
            raise ValidationError(f"kind must be one of {kinds}")
        taus = tuple(self.translations)
        if not taus:
            raise ValidationError("need at least one translation")
        if self.kind == "torus":
            taus = tuple(np.atleast_1d(np.asarray(t, dtype=np.float64)) for t in taus)
            if len({t.shape for t in taus}) != 1:
                raise ValidationError("torus translations differ in dimension")
        elif self.kind == "skew":
            for i, j in itertools.combinations(range(len(taus)), 2):
                a, b = taus[i], taus[j]
                gap = a.c * b.alpha - b.c * a.alpha
                if abs(gap - round(gap)) > 1e-12:
                    raise ValidationError(f"skew translations {i} and {j} do not commute")
        else:
            for i, j in itertools.combinations(range(len(taus)), 2):
                if not taus[i].commutes_with(taus[j]):
                    raise ValidationError(f"Heisenberg translations {i} and {j} do not commute")
        object.__setattr__(self, "translations", taus)
        if self.start is None:
            object.__setattr__(self, "start", (0.0,) * self.dim)

    @property
    def arity(self) -> int:
        return len(self.translations)

    @property
    def dim(self) -> int:
        if self.kind == "torus":
            return int(self.translations[0].shape[0])
        return 2 if self.kind == "skew" else 3

    @property
    def horizontal_dim(self) -> int:
        return 2 if self.kind == "heisenberg" else self.dim

    def orbit(self, *n):
        """Reduced orbit coordinates of ``tau_1^{n_1} ... tau_d^{n_d} . start``.

        Returns a tuple of extended-precision arrays in ``[0, 1)``.
        """
        if len(n) != self.arity:
            raise ValidationError(f"expected {self.arity} indices")
        n = [np.asarray(k, dtype=np.int64) for k in n]
        shape = np.broadcast_shapes(*(k.shape for k in n))
        if self.kind == "torus":
            pts = []
            for j in range(self.dim):
                acc = np.full(shape, _LD(self.start[j]))
                for tau, k in zip(self.translations, n):
                    acc = acc + np.mod(k.astype(_LD) * _LD(tau[j]), 1)
                pts.append(acc - np.floor(acc))
            return tuple(pts)
        if self.kind == "skew":
            x = np.full(shape, _LD(self.start[0]))
            y = np.full(shape, _LD(self.start[1]))
            # apply tau_d^{n_d} first, then ... tau_1^{n_1}
            for tau, k in reversed(list(zip(self.translations, n))):
                kk = k.astype(_LD)
                y = y + kk * (tau.c * x + _LD(tau.beta)) + tau.c * (kk * (kk - 1) / 2) * _LD(tau.alpha)
                x = x + kk * _LD(tau.alpha)
                x, y = x - np.floor(x), y - np.floor(y)
            return x, y
        # heisenberg: g = tau_1^{n_1} ... tau_d^{n_d} * start
        gx = np.zeros(shape, dtype=_LD)
        gy = np.zeros(shape, dtype=_LD)
        gz = np.zeros(shape, dtype=_LD)
        for tau, k in zip(self.translations, n):
            kk = k.astype(_LD)
            a, b, c = (_LD(v) for v in tau.astuple())
            px, py, pz = kk * a, kk * b, kk * c + (kk * (kk - 1) / 2) * a * b
            gx, gy, gz = gx + px, gy + py, gz + pz + gx * py
        sx, sy, sz = (_LD(v) for v in self.start)
        gx, gy, gz = gx + sx, gy + sy, gz + sz + gx * sy
        return reduce_fundamental_array(gx, gy, gz)

    def observe(self, *coords):
        obs = self.observable
        if isinstance(obs, TrigObservable):
            return obs(*coords[: obs.dim])
        return obs(*coords)


def nilsequence_eval(spec: NilsystemSpec, n) -> complex:
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    pts = spec.orbit(*[np.asarray([k]) for k in n])
    return complex(np.asarray(spec.observe(*pts)).ravel()[0])


def nilsequence(spec: NilsystemSpec) -> ComplexSeqNd:
    """The sequence ``n -> Psi(tau^n . start)`` as a lazily evaluated sequence."""
    return ComplexSeqNd(spec.arity, lambda *n: spec.observe(*spec.orbit(*n)),
                        spec.observable.sup_bound, name=f"nilsequence[{spec.kind}]")


# -- Haar integration -------------------------------------------------------------

@dataclass(frozen=True)
class HaarEstimate:
    value: complex
    error: float
    Q: int


def _midpoint_mean(spec: NilsystemSpec, Q: int, shift):
    dim = spec.dim
    mids = (np.arange(Q) + 0.5) / Q
    mesh = np.meshgrid(*[mids] * dim, indexing="ij")
    if shift is not None:
        if spec.kind != "heisenberg":
            mesh = [np.mod(m + s, 1.0) for m, s in zip(mesh, np.atleast_1d(shift))]
        else:
            x, y, z = mesh
            a, b, c = (float(v) for v in shift.astuple())
            # left translation tau * (x, y, z)
            mesh = reduce_fundamental_array(x + a, y + b, z + c + a * y)
    vals = spec.observe(*mesh)
    vals = np.broadcast_to(np.asarray(vals, dtype=np.complex128), mesh[0].shape)
    return complex(np.mean(vals))


def haar_integral(spec: NilsystemSpec, *, Q: int | None = None, shift=None) -> HaarEstimate:
    """Tensor midpoint rule on the fundamental domain, error from Q vs 2Q.

    ``shift`` optionally integrates ``x -> Psi(shift . x)`` instead.
    """
    Q = spec.Q if Q is None else int(Q)
    coarse = _midpoint_mean(spec, Q, shift)
    fine = _midpoint_mean(spec, 2 * Q, shift)
    return HaarEstimate(fine, abs(fine - coarse), Q)


# -- equidistribution -------------------------------------------------------------

@dataclass(frozen=True)
class EquidistributionReport:
    N: int
    K: int
    max_weyl: float
    argmax_freq: tuple
    max_weyl_half: float
    observable_gap: float
    observable_gap_half: float
    haar_value: complex


def _horizontal_freqs(dim, K):
    for k in itertools.product(range(-K, K + 1), repeat=dim):
        if 0 < sum(abs(x) for x in k) <= K:
            yield k


def equidistribution_report(spec: NilsystemSpec, N: int, K: int, *,
                            budget: int = 10**9) -> EquidistributionReport:
    """Weyl sums of horizontal characters along ``n = 1..N`` (diagonal orbit
    ``tau_1^n ... tau_d^n``), and the gap between orbit and Haar averages of the
    observable; each also reported at ``N // 2``."""
    hd = spec.horizontal_dim
    cost = N * (2 * K + 1) ** hd
    if cost > budget:
        raise BudgetExceeded(f"equidistribution report needs {cost} evaluations, budget {budget}")
    n = np.arange(1, N + 1, dtype=np.int64)
    pts = spec.orbit(*[n] * spec.arity)
    horiz = [np.asarray(p, dtype=_LD) for p in pts[:hd]]
    half = N // 2
    best = best_half = -1.0
    arg = None
    for k in _horizontal_freqs(hd, K):
        ph = sum(kj * h for kj, h in zip(k, horiz))
        vals = e(ph)
        m = abs(np.mean(vals))
        mh = abs(np.mean(vals[:half])) if half else m
        if m > best:
            best, arg = m, k
        best_half = max(best_half, mh)
    obs = np.broadcast_to(np.asarray(spec.observe(*pts), dtype=np.complex128), n.shape)
    haar = haar_integral(spec).value
    gap = abs(np.mean(obs) - haar)
    gap_half = abs(np.mean(obs[:half]) - haar) if half else gap
    return EquidistributionReport(N, K, float(best), arg, float(best_half),
                                  float(gap), float(gap_half), haar)


__all__ = [
    "HeisenbergElement", "heisenberg_pow", "reduce_fundamental", "reduce_fundamental_array",
    "TrigObservable", "VerticalTwist", "PeriodizedBump", "SkewTranslation", "NilsystemSpec",
    "nilsequence_eval", "nilsequence", "HaarEstimate", "haar_integral",
    "EquidistributionReport", "equidistribution_report",
]

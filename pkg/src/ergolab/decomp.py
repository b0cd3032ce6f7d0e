"""Structured-plus-error decompositions against a dictionary of nilsequences.

A finite sequence ``a`` on a window ``w`` is split as ``a = a_st + a_err``, where
``a_st`` is a short combination of dictionary atoms found by orthogonal matching
pursuit with the window inner product

    <u, v>_w = (1/|w|) sum_{n in w} u(n) conj(v(n)).

The split is exact by construction (``a_err`` is defined as ``a - a_st``); what
the fit controls is how small and how uniform the error is.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._util import e
from .errors import BudgetExceeded, GramIllConditioned, ValidationError
from .seqcore import ComplexSeqNd, FiniteGridFn, FolnerWindow, gowers_norm

DEFAULT_FIT_BUDGET = 1 << 25
GRAM_COND_LIMIT = 1e8
# relative slack under which two correlations count as tied
_TIE_RTOL = 1e-12


class SupNormWarning(UserWarning):
    """The structured part is larger in sup norm than the input sequence."""


@dataclass(frozen=True)
class Atom:
    kind: str
    params: dict
    seq: ComplexSeqNd = field(compare=False, repr=False)

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params}


def farey_fractions(Q: int) -> list:
    """Fractions ``p/q`` in ``[0, 1)`` with ``q <= Q``, increasing."""
    if Q < 1:
        raise ValidationError("Farey order must be >= 1")
    fr = {Fraction(p, q) for q in range(1, Q + 1) for p in range(q)}
    return sorted(fr)


def _linear_atom(theta) -> Atom:
    theta = tuple(float(t) for t in theta)

    def f(*n):
        acc = 0.0
        for t, k in zip(theta, n):
            acc = acc + np.mod(k * t, 1.0)
        return e(acc)

    return Atom("linear", {"theta": list(theta)}, ComplexSeqNd(len(theta), f, 1.0, f"e(n.{theta})"))


def _quadratic_atom(gamma, i, j, d) -> Atom:
    gamma = float(gamma)

    def f(*n):
        # n_i n_j fits in int64 at desk scale; reduce mod 1 before the exponential
        return e(np.mod(n[i] * n[j] * gamma, 1.0))

    return Atom("quadratic", {"theta": gamma, "i": i, "j": j},
                ComplexSeqNd(d, f, 1.0, f"e({gamma} n{i} n{j})"))


@dataclass(frozen=True)
class GramDiagnostic:
    matrix: np.ndarray
    max_offdiag: float
    cond: float


class NilDictionary:
    """An ordered family of unimodular-bounded atoms on ``N^d``.

    Atoms are linear phases ``e(n . theta)`` over a frequency grid, optional
    quadratic phases ``e(theta n_i n_j)`` and optional sampled nilsequences.
    Order matters: ties in the greedy selection go to the earlier atom.
    """

    def __init__(self, atoms, arity: int):
        atoms = list(atoms)
        seen = set()
        for a in atoms:
            if a.seq.arity != arity:
                raise ValidationError(f"atom {a.describe()} has arity {a.seq.arity}, expected {arity}")
            if a.seq.bound > 1.0 + 1e-12:
                raise ValidationError(f"atom {a.describe()} has sup bound {a.seq.bound} > 1")
            key = json.dumps(a.describe(), sort_keys=True, default=str)
            if key in seen:
                raise ValidationError(f"duplicate atom {key}")
            seen.add(key)
        self.atoms = tuple(atoms)
        self.arity = arity

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    @classmethod
    def build(cls, d: int = 1, *, Q: int = 0, extra=(), quadratic=(), nilsystems=()) -> "NilDictionary":
        """Farey grid of order ``Q`` (per coordinate) plus extra frequencies.

        ``extra`` holds frequencies (scalars for d = 1, d-vectors otherwise),
        ``quadratic`` holds ``gamma`` (d = 1) or ``(gamma, i, j)`` triples, and
        ``nilsystems`` holds :class:`ergolab.nil.NilsystemSpec` instances.
        """
        atoms = []
        thetas = []
        if Q > 0:
            grid = [float(x) for x in farey_fractions(Q)]
            mesh = np.meshgrid(*[grid] * d, indexing="ij")
            thetas.extend(zip(*(m.ravel() for m in mesh)))
        have = {tuple(t) for t in thetas}
        for x in extra:
            t = tuple(float(v) % 1.0 for v in np.atleast_1d(x))
            if len(t) != d:
                raise ValidationError(f"extra frequency {x} has wrong dimension")
            if t not in have:
                thetas.append(t)
                have.add(t)
        atoms.extend(_linear_atom(t) for t in thetas)
        for q in quadratic:
            gamma, i, j = (q, 0, 0) if np.ndim(q) == 0 else q
            if not (0 <= i < d and 0 <= j < d):
                raise ValidationError(f"quadratic indices {(i, j)} out of range")
            atoms.append(_quadratic_atom(gamma, i, j, d))
        if nilsystems:
            from .nil import nilsequence
            for k, spec in enumerate(nilsystems):
                seq = nilsequence(spec)
                atoms.append(Atom("nil", {"index": k, "kind_of_system": spec.kind}, seq))
        return cls(atoms, d)

    def matrix(self, window: FolnerWindow) -> np.ndarray:
        """Atom values on the window, one column per atom, rows in lexicographic order."""
        pts = window.coords()
        cols = [a.seq.evaluate(*pts) for a in self.atoms]
        if not cols:
            return np.zeros((window.size, 0), dtype=np.complex128)
        return np.stack(cols, axis=1)

    def gram(self, window: FolnerWindow) -> GramDiagnostic:
        """Finite Besicovitch Gram matrix ``<phi_i, phi_j>_w`` and its conditioning."""
        M = self.matrix(window)
        G = M.conj().T @ M / window.size
        off = G - np.diag(np.diag(G))
        return GramDiagnostic(G, float(np.max(np.abs(off))) if G.size else 0.0,
                              float(np.linalg.cond(G)) if G.size else 1.0)


@dataclass
class DecompositionReport:
    a: ComplexSeqNd
    window: FolnerWindow
    atoms: list
    coefficients: np.ndarray
    residual_norm: float
    history: list
    st_sup_bound: float
    st_sup_window: float
    a_sup_window: float
    sup_warning: bool
    gram_cond: float
    metrics: dict = field(default_factory=dict)

    @property
    def a_st(self) -> ComplexSeqNd:
        atoms, coeffs = list(self.atoms), self.coefficients.copy()

        def f(*n):
            shape = np.broadcast_shapes(*(np.shape(k) for k in n))
            out = np.zeros(shape, dtype=np.complex128)
            for c, at in zip(coeffs, atoms):
                out = out + c * at.seq.func(*n)
            return out

        return ComplexSeqNd(self.a.arity, f, self.st_sup_bound, "a_st")

    @property
    def a_err(self) -> ComplexSeqNd:
        st = self.a_st
        return ComplexSeqNd(self.a.arity, lambda *n: self.a.func(*n) - st.func(*n),
                            self.a.bound + self.st_sup_bound, "a_err")

    @property
    def frequencies(self) -> list:
        return [at.params["theta"] for at in self.atoms if at.kind == "linear"]

    def to_dict(self) -> dict:
        return {
            "atoms": [at.describe() for at in self.atoms],
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coefficients],
            "metrics": {
                "residual_besicovitch_norm": self.residual_norm,
                "residual_history": list(self.history),
                "st_sup_bound": self.st_sup_bound,
                "st_sup_on_window": self.st_sup_window,
                "a_sup_on_window": self.a_sup_window,
                "sup_norm_warning": self.sup_warning,
                "gram_condition": self.gram_cond,
                **self.metrics,
            },
            "window": {"sides": list(self.window.sides), "offset": list(self.window.offset)},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _norm(r) -> float:
    return math.sqrt(math.fsum((np.abs(r) ** 2).tolist()) / max(len(r), 1))


def _report(a, window, dictionary, y, Phi, selected, coeffs, history, cond):
    atoms = [dictionary.atoms[i] for i in selected]
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    st = Phi[:, selected] @ coeffs if selected else np.zeros_like(y)
    st_sup = float(np.max(np.abs(st))) if st.size else 0.0
    a_sup = float(np.max(np.abs(y))) if y.size else 0.0
    warn = st_sup > a_sup * (1 + 1e-9) + 1e-15
    if warn:
        warnings.warn(f"structured part reaches {st_sup:.6g} on the window, above sup|a| = {a_sup:.6g}",
                      SupNormWarning, stacklevel=3)
    return DecompositionReport(
        a=a, window=window, atoms=atoms, coefficients=coeffs,
        residual_norm=history[-1], history=history,
        st_sup_bound=float(np.sum(np.abs(coeffs))), st_sup_window=st_sup,
        a_sup_window=a_sup, sup_warning=bool(warn), gram_cond=cond)


def fit_structured(a: ComplexSeqNd, window: FolnerWindow, dictionary: NilDictionary,
                   max_terms: int = 10, tol: float = 1e-12, *,
                   budget: int = DEFAULT_FIT_BUDGET, gowers_k=(), N_wrap: int | None = None) -> DecompositionReport:
    """Orthogonal matching pursuit of ``a`` on ``window`` over ``dictionary``.

    Each step picks the atom with the largest ``|<residual, atom>_w|`` (earliest
    atom on ties), re-solves least squares over all selected atoms, and stops
    after ``max_terms`` atoms or once the best correlation drops below ``tol``.
    If ``gowers_k`` is given, the wrapped-residual Gowers norms for those orders
    are added to ``metrics``.
    """
    if a.arity != window.arity or dictionary.arity != window.arity:
        raise ValidationError("sequence, window and dictionary arities differ")
    if max_terms < 0:
        raise ValidationError("max_terms must be >= 0")
    cost = window.size * max(len(dictionary), 1)
    if cost > budget:
        raise BudgetExceeded(f"fit needs {cost} atom evaluations, budget is {budget}")

    y = a.evaluate(*window.coords())
    Phi = dictionary.matrix(window)
    M = window.size
    selected: list = []
    coeffs = np.zeros(0, dtype=np.complex128)
    r = y.copy()
    history = [_norm(r)]
    cond = 1.0
    while len(selected) < max_terms and Phi.shape[1]:
        corr = np.abs(Phi.conj().T @ r) / M
        corr[selected] = -1.0
        best = float(corr.max())
        if best < tol:
            break
        j = int(np.flatnonzero(corr >= best * (1 - _TIE_RTOL))[0])
        trial = selected + [j]
        sub = Phi[:, trial]
        G = sub.conj().T @ sub / M
        c = float(np.linalg.cond(G))
        if not c <= GRAM_COND_LIMIT:
            partial = _report(a, window, dictionary, y, Phi, selected, coeffs, history, cond)
            raise GramIllConditioned(
                f"Gram matrix condition {c:.3g} exceeds {GRAM_COND_LIMIT:g} when adding atom "
                f"{dictionary.atoms[j].describe()}", partial=partial)
        cond = c
        selected = trial
        coeffs = np.linalg.lstsq(sub, y, rcond=None)[0]
        r = y - sub @ coeffs
        history.append(_norm(r))

    rep = _report(a, window, dictionary, y, Phi, selected, coeffs, history, cond)
    for k in gowers_k:
        wrap = residual_uniformity(rep, k, N_wrap or min(window.sides))
        rep.metrics[f"wrapped_U{k}"] = wrap.value
        rep.metrics[f"wrapped_U{k}_boundary_estimate"] = wrap.boundary_estimate
    return rep


@dataclass(frozen=True)
class WrappedUniformity:
    """Gowers norm of the residual restricted to a box and read on ``Z_N^d``.

    This is a proxy: the wrap-around creates seams, whose effect is of order
    ``d k / N``, reported as ``boundary_estimate``.
    """

    value: float
    k: int
    N_wrap: int
    boundary_estimate: float
    caveat: str = "restriction of the residual to a box, read cyclically; proxy for the asymptotic norm"

    def __float__(self):
        return self.value


def residual_uniformity(report: DecompositionReport, k: int, N_wrap: int, *,
                        method: str = "auto", budget: int | None = None) -> WrappedUniformity:
    """``U^k(Z_N^d)`` of ``a_err`` on the first ``N_wrap`` points along each axis."""
    w = report.window
    if N_wrap < 1 or any(s < N_wrap for s in w.sides):
        raise ValidationError(f"window {w.sides} does not contain a box of side {N_wrap}")
    d = w.arity
    box = FolnerWindow.cube(N_wrap, d, w.offset)
    vals = report.a_err.evaluate(*box.grid(), check_bound=False)
    grid = FiniteGridFn(np.broadcast_to(vals, (N_wrap,) * d))
    kw = {} if budget is None else {"budget": budget}
    value = gowers_norm(grid, k, method=method, **kw)
    return WrappedUniformity(value, k, N_wrap, d * k / N_wrap)

"""Command-line experiments writing CSV tables with JSON sidecars.

Every subcommand writes ``<out>`` (RFC-4180 CSV, header row, floats as shortest
round-trip decimals) and ``<out>.json`` (config echo, version, wall time and the
units of each column).  Options may also come from an INI file given with
``--config``: keys of the ``[ergolab]`` section apply to every subcommand, keys
of a section named after the subcommand apply to that one, and command-line
flags override both.

Exit codes: 0 success, 2 invalid input, 3 budget exceeded, 4 numerical
invariant violated (a diagnostic JSON is written next to the output).

Object specs use the grammar ``kind:key=value;key=value`` with comma-separated
vectors, for example ``char:k=3``, ``quad:a=1``, ``linear:theta=0.25,0.5`` or
``fb:b=3``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import BudgetExceeded, ErgolabError, NumericalInvariantError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4
RNG_ALGORITHM = "numpy.random.PCG64"


# -- spec grammar -----------------------------------------------------------------

def _scalar(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "/" in text:
        try:
            return float(Fraction(text))
        except (ValueError, ZeroDivisionError):
            pass
    if text.startswith("sqrt"):
        try:
            return math.sqrt(float(text[4:].strip("()")))
        except ValueError:
            pass
    raise ValidationError(f"cannot read number {text!r}")


def parse_spec(text: str) -> tuple:
    """``"char:k=1,2;c=0.5"`` -> ``("char", {"k": [1, 2], "c": 0.5})``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if not kind:
        raise ValidationError(f"empty spec {text!r}")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(";"))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValidationError(f"expected key=value in {item!r}")
        vals = [_scalar(v) for v in val.split(",")]
        params[key.strip()] = vals if len(vals) > 1 else vals[0]
    return kind, params


def _vec(x, d):
    v = list(x) if isinstance(x, list) else [x] * d
    if len(v) != d:
        raise ValidationError(f"expected {d} components, got {len(v)}")
    return v


def _unknown(kind, params, allowed):
    extra = set(params) - set(allowed)
    if extra:
        raise ValidationError(f"unknown parameters {sorted(extra)} for {kind!r}")


def grid_function(spec: str, N: int, d: int, rng):
    """Function on ``Z_N^d`` from a spec: ``char:k``, ``quad:a``, ``const:c``, ``sign``, ``phase``."""
    import numpy as np

    from ._util import e
    from .seqcore import FiniteGridFn

    kind, p = parse_spec(spec)
    idx = np.meshgrid(*[np.arange(N)] * d, indexing="ij")
    if kind == "char":
        _unknown(kind, p, {"k"})
        k = _vec(p.get("k", 1), d)
        return FiniteGridFn(e(np.mod(sum(int(ki) * x for ki, x in zip(k, idx)), N) / N))
    if kind == "quad":
        _unknown(kind, p, {"a"})
        a = int(p.get("a", 1))
        return FiniteGridFn(e(np.mod(a * sum(x * x for x in idx), N) / N))
    if kind == "const":
        _unknown(kind, p, {"c"})
        return FiniteGridFn(np.full((N,) * d, complex(p.get("c", 1.0))))
    if kind == "sign":
        return FiniteGridFn(rng.choice([-1.0, 1.0], size=(N,) * d))
    if kind == "phase":
        return FiniteGridFn(e(rng.random(size=(N,) * d)))
    raise ValidationError(f"unknown grid function {kind!r}")


def torus_observable(spec: str, m: int, rng):
    """``char:k=..;c=..``, ``const:c=..`` or ``random:terms=..;max=..;zero_mean=1``."""
    from .dynsys import TorusObservable

    kind, p = parse_spec(spec)
    if kind == "char":
        _unknown(kind, p, {"k", "c"})
        return TorusObservable.character(tuple(int(v) for v in _vec(p.get("k", 1), m)), p.get("c", 1.0))
    if kind == "const":
        _unknown(kind, p, {"c"})
        return TorusObservable.constant(p.get("c", 1.0), m)
    if kind == "random":
        _unknown(kind, p, {"terms", "max", "zero_mean"})
        return TorusObservable.random(rng, m, int(p.get("terms", 3)), int(p.get("max", 3)),
                                      bool(p.get("zero_mean", 0)))
    raise ValidationError(f"unknown observable {kind!r}")


def multiplicative(spec: str):
    """``one``, ``liouville``, ``mobius``, ``fb:b=..``, ``char:q=..;i=..``."""
    from . import arith

    kind, p = parse_spec(spec)
    if kind == "one":
        return arith.constant_one()
    if kind == "liouville":
        return arith.liouville()
    if kind == "mobius":
        return arith.mobius()
    if kind == "fb":
        _unknown(kind, p, {"b"})
        return arith.f_b(int(p.get("b", 2)))
    if kind == "char":
        _unknown(kind, p, {"q", "i"})
        chars = arith.characters_mod(int(p["q"]))
        i = int(p.get("i", 0))
        if not 0 <= i < len(chars):
            raise ValidationError(f"character index {i} out of range (there are {len(chars)})")
        return chars[i].as_multiplicative()
    raise ValidationError(f"unknown multiplicative function {kind!r}")


def sequence(spec: str, d: int, rng, N_hint: int = 0, sieve_path=None):
    """Sequences on ``N^d``: ``linear:theta``, ``quad:gamma``, ``noisy:theta;eps``, ``alt``,
    ``hardy:a``, or a multiplicative-function spec (``d = 1``)."""
    import numpy as np

    from . import seqcore
    from ._util import e

    kind, p = parse_spec(spec)
    if kind == "linear":
        _unknown(kind, p, {"theta"})
        return seqcore.linear_phase(_vec(p.get("theta", 0.0), d))
    if kind == "quad" and d == 1:
        _unknown(kind, p, {"gamma"})
        return seqcore.quadratic_phase(p.get("gamma", 0.0))
    if kind == "noisy":
        _unknown(kind, p, {"theta", "eps"})
        if N_hint <= 0:
            raise ValidationError("noisy sequences need a window")
        base = seqcore.linear_phase(_vec(p.get("theta", 0.0), d))
        noise = e(rng.random(size=(N_hint,) * d))
        return base + seqcore.from_array(float(p.get("eps", 0.1)) * noise, offset=(1,) * d)
    if kind == "alt" and d == 1:
        return seqcore.ComplexSeqNd(1, lambda n: np.where(n % 2 == 0, 1.0, -1.0) + 0j, 1.0, "(-1)^n")
    if kind == "hardy" and d == 1:
        from .hardy import HardyFunctionSpec, hardy_weight

        _unknown(kind, p, {"a"})
        f = HardyFunctionSpec.power(Fraction(str(p.get("a", 1.5))))
        return seqcore.ComplexSeqNd(1, lambda n: hardy_weight(f, n), 1.0, spec)
    if d == 1 and N_hint > 0:
        phi = multiplicative(spec)
        sieve = _sieve(N_hint, sieve_path)
        return phi.sequence(sieve)
    raise ValidationError(f"unknown sequence {kind!r} in {d} variables")


def _sieve(limit, path):
    from .arith import FactorSieve

    return FactorSieve.cached(limit, path) if path else FactorSieve(limit)


# -- output -----------------------------------------------------------------------------

class Table:
    def __init__(self, columns: list, units: dict):
        self.columns, self.units, self.rows = columns, units, []

    def add(self, *row):
        self.rows.append(row)


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def write_outputs(table: Table, out: Path, config: dict, wall: float, extra: dict | None = None):
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_cell(v) for v in row])
    side = {
        "version": __version__,
        "config": config,
        "wall_time_s": wall,
        "rng": RNG_ALGORITHM,
        "columns": table.columns,
        "units": table.units,
    }
    if extra:
        side.update(extra)
    Path(str(out) + ".json").write_text(json.dumps(side, indent=2, default=str) + "\n")


# -- subcommands --------------------------------------------------------------------------

def _need(values, name):
    if not values:
        raise ValidationError(f"empty {name} list")
    return values


def _rotation_setup(args, rng):
    from .dynsys import CommutingTorusSystem, PolynomialMapping

    alphas = _need(args.alpha, "rotation")
    system = CommutingTorusSystem.rotations([[a] for a in alphas], Q=args.Q)
    ell = len(alphas)
    polys = []
    for spec in _need(args.p, "iterate"):
        slot, _, exp = spec.partition(":")
        try:
            slot, exp = int(slot), int(exp or 1)
        except ValueError:
            raise ValidationError(f"iterate {spec!r} is not slot:exponent") from None
        if not 0 <= slot < ell or exp < 0:
            raise ValidationError(f"iterate {spec!r} out of range")
        polys.append(PolynomialMapping.monomials([exp], ell=ell, slot=slot))
    fs = [torus_observable(s, 1, rng) for s in _need(args.f, "observable")]
    if len(fs) != len(polys):
        raise ValidationError(f"{len(fs)} observables but {len(polys)} iterates")
    return system, fs, polys


def cmd_gowers(args, rng):
    from .seqcore import gowers_norm

    t = Table(["N", "d", "s", "f", "norm"],
              {"N": "grid side", "d": "dimension", "s": "Gowers order", "norm": "U^s(Z_N^d), dimensionless"})
    for N in _need(args.N, "window"):
        f = grid_function(args.f, N, args.d, rng)
        for s in range(1, args.s + 1):
            t.add(N, args.d, s, args.f, gowers_norm(f, s, method=args.method, budget=args.budget))
    return t, None


def cmd_average(args, rng):
    from .dynsys import AverageSpec, cauchy_convergence_probe

    system, fs, polys = _rotation_setup(args, rng)
    Ns = _need(args.N, "window")
    w = sequence(args.weight, 1, rng, 4 * max(Ns), args.sieve_cache)
    spec = AverageSpec(system, w, tuple(fs), tuple(polys))
    t = Table(["N", "l2_norm", "delta_N", "delta_2N", "non_cauchy"],
              {"N": "window length", "l2_norm": "L^2(mu) norm of the average",
               "delta_N": "||A_N - A_2N||_L2", "delta_2N": "||A_2N - A_4N||_L2",
               "non_cauchy": "1 if delta_2N > delta_N"})
    for N in Ns:
        rep = cauchy_convergence_probe(spec, N)
        t.add(N, spec.at(N).l2(), rep.delta_N, rep.delta_2N, rep.non_cauchy)
    return t, None


def cmd_correlate(args, rng):
    import numpy as np

    from .dynsys import correlation_sequence

    system, fs, polys = _rotation_setup(args, rng)
    f0 = torus_observable(args.f0, 1, rng)
    a = correlation_sequence(system, f0, fs, polys)
    N = _need(args.N, "window")[0]
    n = np.arange(1, N + 1, dtype=np.int64)
    vals = a.evaluate(n)
    t = Table(["n", "re", "im"], {"n": "index", "re": "Re a(n)", "im": "Im a(n)"})
    for k, v in zip(n.tolist(), vals.tolist()):
        t.add(k, v.real, v.imag)
    return t, None


def cmd_decompose(args, rng):
    from .decomp import NilDictionary, fit_structured
    from .seqcore import FolnerWindow

    N = _need(args.N, "window")[0]
    if args.a == "correlation":
        from .dynsys import correlation_sequence

        system, fs, polys = _rotation_setup(args, rng)
        a = correlation_sequence(system, torus_observable(args.f0, 1, rng), fs, polys)
        # the rotation numbers are the natural frequencies of their correlation sequences
        extra = list(args.extra) + list(args.alpha)
    else:
        a = sequence(args.a, 1, rng, N, args.sieve_cache)
        extra = args.extra
    dictionary = NilDictionary.build(1, Q=args.Q_farey, extra=extra, quadratic=args.quadratic)
    rep = fit_structured(a, FolnerWindow.cube(N), dictionary, args.max_terms, args.tol,
                         gowers_k=tuple(args.k), N_wrap=args.N_wrap)
    t = Table(["index", "kind", "theta", "coef_re", "coef_im"],
              {"theta": "frequency mod 1", "coef_re": "Re coefficient", "coef_im": "Im coefficient"})
    for i, (at, c) in enumerate(zip(rep.atoms, rep.coefficients)):
        th = at.params.get("theta")
        t.add(i, at.kind, th[0] if isinstance(th, list) else th, float(c.real), float(c.imag))
    return t, {"report": rep.to_dict()}


def cmd_arith(args, rng):
    from . import arith

    if args.density:
        N = _need(args.N, "window")
        sieve = _sieve(max(N), args.sieve_cache)
        t = Table(["a", "b", "N", "density"], {"density": "fraction of n <= N with omega(n) = a mod b"})
        for n in N:
            t.add(args.a, args.b, n, arith.s_ab_density(args.a, args.b, 0, n, sieve))
        return t, None
    if args.distance:
        P = _need(args.P, "prime bound")
        sieve = _sieve(max(P), args.sieve_cache)
        phi1, phi2 = multiplicative(args.phi), multiplicative(args.phi2)
        t = Table(["P", "t", "distance_squared", "distance"],
                  {"distance_squared": "sum_{p<=P} (1 - Re phi1(p) conj phi2(p) p^(-it)) / p"})
        for r in arith.d_distance_trend(phi1, phi2, P, sieve, t=args.t):
            t.add(r.P, r.t, r.squared, r.distance)
        return t, None
    if args.scan:
        N = _need(args.N, "window")
        sieve = _sieve(args.A_max * (max(N) + 1), args.sieve_cache)
        phi = multiplicative(args.phi)
        t = Table(["N", "a", "b", "re", "im", "abs"],
                  {"re": "Re of (1/N) sum_{n<=N} phi(a n + b)", "abs": "modulus"})
        for n in N:
            rows, _ = arith.aperiodicity_scan(phi, args.A_max, n, sieve)
            for r in rows:
                t.add(n, r.a, r.b, r.value.real, r.value.imag, abs(r.value))
        return t, None
    if args.twist:
        N = _need(args.N, "window")
        sieve = _sieve(max(N), args.sieve_cache)
        phi = multiplicative(args.phi)
        t = Table(["N", "alpha", "abs"], {"abs": "|(1/N) sum_{n<=N} phi(n) e(n alpha)|"})
        for n in N:
            t.add(n, args.alpha, abs(arith.exponential_twist_average(phi, args.alpha, n, sieve)))
        return t, None
    if args.katai:
        primes = _need(args.primes, "prime")
        seq = sequence(args.seq, 2, rng)
        rows, _ = arith.katai_grid(seq, primes, args.N1, args.N2)
        t = Table(["p1", "p2", "q1", "q2", "re", "im", "abs"],
                  {"re": "Re (1/(N1 N2)) sum a(p1 n1, p2 n2) conj a(q1 n1, q2 n2)"})
        for (p1, p2, q1, q2), v in rows:
            t.add(p1, p2, q1, q2, v.real, v.imag, abs(v))
        return t, None
    raise ValidationError("choose one of --density, --distance, --scan, --twist, --katai")


def cmd_hardy(args, rng):
    from . import hardy

    f = hardy.HardyFunctionSpec.power(Fraction(args.exponent))
    if args.level:
        t = Table(["N", "a", "b", "density", "expected"],
                  {"density": "fraction of n <= N with ||f(n)|| in [a, b]",
                   "expected": "Lebesgue measure 2(b - a)"})
        for N in _need(args.N, "window"):
            ls = hardy.level_set(f, args.lo, args.hi, N)
            t.add(N, args.lo, args.hi, ls.density, 2 * (args.hi - args.lo))
        return t, None
    if args.localize:
        t = Table(["N", "k", "theta", "alpha", "L", "residual"],
                  {"L": "localization window length", "residual": "sup of the Taylor remainder"})
        for N in _need(args.N, "window"):
            loc = hardy.taylor_localization(f, N, args.k, args.theta)
            t.add(N, loc.k, loc.theta, float(loc.alpha), loc.L, float(loc.residual))
        return t, None
    if args.decay:
        t = Table(["N", "k", "alpha", "abs"], {"abs": "|(1/N) sum_{n<=N} e(f(n)) e(k n alpha)|"})
        for N in _need(args.N, "window"):
            for k in args.kk:
                t.add(N, k, args.alpha, abs(hardy.weighted_phase_average(f, args.alpha, k, N)))
        return t, None
    if args.sandwich:
        P1, P2 = hardy.fejer_sandwich(args.lo, args.hi, args.eps)
        t = Table(["c", "d", "eps", "degree", "violation"],
                  {"degree": "trigonometric degree of the minorant and majorant",
                   "violation": "largest sandwich violation on a fine grid (<= 0 means it holds)"})
        t.add(args.lo, args.hi, args.eps, max(P1.degree, P2.degree),
              hardy.sandwich_violation(P1, P2, args.lo, args.hi, args.eps, points_per_degree=100))
        return t, None
    raise ValidationError("choose one of --level, --localize, --decay, --sandwich")


def cmd_seminorm(args, rng):
    if args.kind == "window":
        from .seqcore import FolnerWindow, uniformity_seminorm

        t = Table(["N", "k", "H", "value", "raw_re", "raw_im", "clamp", "value_2H"],
                  {"value": "||a||_{I,k} estimate", "raw_re": "real part of the unclamped 2^k-th power",
                   "raw_im": "imaginary part (rounding only)",
                   "clamp": "amount clamped at zero"})
        for N in _need(args.N, "window"):
            a = sequence(args.seq, args.d, rng, N + 4 * args.H * max(args.kk), args.sieve_cache)
            for k in args.kk:
                est = uniformity_seminorm(a, FolnerWindow.cube(N, args.d), k, args.H, probe=True,
                                          budget=args.budget)
                t.add(N, k, args.H, est.value, est.raw.real, est.raw.imag, est.clamp, est.value_2H)
        return t, None
    from .dynsys import CommutingTorusSystem, hk_seminorm

    system = CommutingTorusSystem.rotations([[_need(args.alpha, "rotation")[0]]], Q=args.Q)
    f = torus_observable(args.f[0] if args.f else "char:k=1", 1, rng)
    t = Table(["N_av", "k", "value", "raw", "clamp"], {"value": "finite-horizon Host-Kra seminorm"})
    for N in _need(args.N, "window"):
        for k in args.kk:
            est = hk_seminorm(system, f, k, N, budget=args.budget)
            t.add(N, k, est.value, est.raw, est.clamp)
    return t, None


# -- parser -------------------------------------------------------------------------------

def _num(text):
    return _scalar(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with default option values")
    common.add_argument("--out", type=Path, help="CSV output path (default <command>.csv)")
    common.add_argument("--seed", type=int, default=0, help="seed of the PCG64 generator")
    common.add_argument("--threads", type=int, default=1, help="BLAS threads; never changes results")
    common.add_argument("--budget", type=int, default=2**30, help="operation budget")
    common.add_argument("--sieve-cache", type=Path, default=None, help="binary sieve cache file")
    common.add_argument("--N", type=int, nargs="*", default=[], help="window sizes")

    system = argparse.ArgumentParser(add_help=False)
    system.add_argument("--alpha", type=_num, nargs="*", default=[], help="rotation numbers on T^1")
    system.add_argument("--p", nargs="*", default=["0:1"], help="iterates slot:exponent, one per observable")
    system.add_argument("--f", nargs="*", default=["char:k=1"], help="observables, one per iterate")
    system.add_argument("--Q", type=int, default=32, help="quadrature grid for rendering")

    parser = argparse.ArgumentParser(prog="ergolab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gowers", parents=[common], help="Gowers norm tables over N and s")
    g.add_argument("--s", type=int, default=2, help="largest order; orders 1..s are tabulated")
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--f", default="char:k=1", help="function on Z_N^d")
    g.add_argument("--method", default="auto", choices=["auto", "cube", "spectral"])
    g.set_defaults(run=cmd_gowers)

    a = sub.add_parser("average", parents=[common, system], help="weighted multiple averages with Cauchy probes")
    a.add_argument("--weight", default="one:", help="weight sequence spec")
    a.set_defaults(run=cmd_average)

    c = sub.add_parser("correlate", parents=[common, system], help="correlation sequence to file")
    c.add_argument("--f0", default="char:k=-1")
    c.set_defaults(run=cmd_correlate)

    dcp = sub.add_parser("decompose", parents=[common, system], help="structured fit and residual metrics")
    dcp.add_argument("--a", default="correlation", help="sequence spec or 'correlation'")
    dcp.add_argument("--f0", default="char:k=-1")
    dcp.add_argument("--Q-farey", type=int, default=16, help="Farey order of the frequency grid")
    dcp.add_argument("--extra", type=_num, nargs="*", default=[], help="extra frequencies")
    dcp.add_argument("--quadratic", type=_num, nargs="*", default=[], help="quadratic atoms e(g n^2)")
    dcp.add_argument("--max-terms", type=int, default=5)
    dcp.add_argument("--tol", type=float, default=1e-12)
    dcp.add_argument("--k", type=int, nargs="*", default=[2], help="orders of the wrapped residual norm")
    dcp.add_argument("--N-wrap", type=int, default=None)
    dcp.set_defaults(run=cmd_decompose)

    ar = sub.add_parser("arith", parents=[common], help="densities, distances, scans, Katai grids")
    mode = ar.add_mutually_exclusive_group()
    for flag in ("density", "distance", "scan", "twist", "katai"):
        mode.add_argument(f"--{flag}", action="store_true")
    ar.add_argument("--a", type=int, default=0)
    ar.add_argument("--b", type=int, default=2)
    ar.add_argument("--phi", default="fb:b=2")
    ar.add_argument("--phi2", default="one")
    ar.add_argument("--P", type=int, nargs="*", default=[])
    ar.add_argument("--t", type=float, default=0.0)
    ar.add_argument("--A-max", type=int, default=5)
    ar.add_argument("--alpha", type=_num, default=(math.sqrt(5) - 1) / 2)
    ar.add_argument("--primes", type=int, nargs="*", default=[2, 3, 5, 7])
    ar.add_argument("--seq", default="linear:theta=0.5,0.25")
    ar.add_argument("--N1", type=int, default=100)
    ar.add_argument("--N2", type=int, default=100)
    ar.set_defaults(run=cmd_arith)

    h = sub.add_parser("hardy", parents=[common], help="level sets, localization, decay curves")
    hm = h.add_mutually_exclusive_group()
    for flag in ("level", "localize", "decay", "sandwich"):
        hm.add_argument(f"--{flag}", action="store_true")
    h.add_argument("--exponent", default="3/2", help="f(t) = t^exponent")
    h.add_argument("--lo", type=_num, default=0.25)
    h.add_argument("--hi", type=_num, default=0.5)
    h.add_argument("--k", type=int, default=2, help="Taylor order")
    h.add_argument("--theta", type=float, default=None)
    h.add_argument("--alpha", type=_num, default=(1 + math.sqrt(5)) / 2)
    h.add_argument("--kk", type=int, nargs="*", default=[0, 1, 2], help="twist multipliers")
    h.add_argument("--eps", type=float, default=0.1)
    h.set_defaults(run=cmd_hardy)

    sm = sub.add_parser("seminorm", parents=[common, system], help="uniformity and Host-Kra seminorm tables")
    sm.add_argument("--kind", choices=["window", "hk"], default="window")
    sm.add_argument("--seq", default="linear:theta=0.41421356237309503")
    sm.add_argument("--d", type=int, default=1)
    sm.add_argument("--H", type=int, default=8)
    sm.add_argument("--kk", type=int, nargs="*", default=[1, 2], help="orders")
    sm.set_defaults(run=cmd_seminorm)
    return parser


def _config_defaults(parser: argparse.ArgumentParser, argv, command):
    """Apply INI values for ``command`` as parser defaults so flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    if not known.config.is_file():
        raise ValidationError(f"config file {known.config} not found")
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read(known.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[command]
    actions = {a.dest: a for a in sub._actions}
    values = {}
    for section in ("ergolab", command):
        if cp.has_section(section):
            values.update(cp.items(section))
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        act = actions.get(dest)
        if act is None:
            raise ValidationError(f"unknown config key {key!r} for {command}")
        if isinstance(act, argparse._StoreTrueAction):
            defaults[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
            continue
        conv = act.type or str
        if act.nargs in ("*", "+"):
            defaults[dest] = [conv(v) for v in raw.split()]
        else:
            defaults[dest] = conv(raw.strip())
    sub.set_defaults(**defaults)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command = next((a for a in argv if not a.startswith("-")), None)
    out = None
    try:
        if command in ("gowers", "average", "correlate", "decompose", "arith", "hardy", "seminorm"):
            _config_defaults(parser, argv, command)
        args = parser.parse_args(argv)
        out = args.out or Path(f"{args.command}.csv")
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(max(args.threads, 1)))
        import numpy as np

        rng = np.random.Generator(np.random.PCG64(args.seed))
        config = {k: v for k, v in vars(args).items() if k != "run"}
        t0 = time.perf_counter()
        table, extra = args.run(args, rng)
        write_outputs(table, out, config, time.perf_counter() - t0, extra)
        return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BudgetExceeded, OverflowError) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NumericalInvariantError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc),
                **{k: v for k, v in vars(exc).items() if k != "partial"}}
        partial = getattr(exc, "partial", None)
        if partial is not None and hasattr(partial, "to_dict"):
            diag["partial"] = partial.to_dict()
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            Path(str(out) + ".error.json").write_text(json.dumps(diag, indent=2, default=str) + "\n")
        print(json.dumps(diag, default=str), file=sys.stderr)
        return EXIT_INVARIANT
    except (ErgolabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

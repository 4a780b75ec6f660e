"""Command-line front end: ``alpert <command> [options]``.

Exit status is 0 when every requested check passes, 1 when a check fails and
2 when the input is malformed.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import measure as msr
from .basis import BASE_TOL, EXTRA_TOL, GRAM_TOL, build_alpert
from .grid import MAX_DEPTH, descendants, interval_at, parse_label
from .moments import dim_detail_space, moment_matrix, rank_pd
from .mra import (PiecewiseFunction, check_telescoping, expand, norm2, parseval_defect,
                  reconstruct)
from .twoweight import (EXAMPLE_COLUMNS, dyadic_test_op, example_energy_table, example_pair,
                        k_energy, testing_check)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    measure: str | None = None
    measure2: str | None = None
    func: str | None = None
    root: tuple = (Fraction(0), Fraction(1))
    k: int = 2
    depth: int = 4
    tol_rank: float = 1e-10
    tol_ortho: float = 1e-8
    tol_quad: float = 1e-10
    alpha: float = 0.0
    delta: float = 0.5
    eps: float = 0.1
    jmax: int = 40
    seed: int = 0
    out: str | None = None
    format: str = "csv"

    def validate(self):
        for name in ("tol_rank", "tol_ortho", "tol_quad"):
            if not getattr(self, name) > 0:
                raise InputError(f"--{name.replace('_', '-')} must be positive")
        if not 0 <= self.depth <= MAX_DEPTH:
            raise InputError(f"--depth must lie in [0, {MAX_DEPTH}]")
        if not 1 <= self.k <= 8:
            raise InputError("--k must lie in [1, 8]")
        if not 0 <= self.alpha < 1:
            raise InputError("--alpha must lie in [0, 1)")


def fmt(v):
    """17 significant digits for floats, exact text for integers and rationals."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _parse_root(text):
    try:
        a, b = (msr.to_fraction(s) for s in text.split(","))
    except (ValueError, msr.MeasureFormatError) as exc:
        raise InputError(f"--root must be 'a,b', got {text!r}") from exc
    if not a < b:
        raise InputError("--root needs a < b")
    return a, b


def _load_measure(path):
    if path is None:
        raise InputError("this command needs --measure")
    mode = msr.EXACT if os.environ.get("ALPERT_EXACT") == "1" else None
    try:
        m = msr.load(path, mode=mode)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except msr.MeasureFormatError as exc:
        raise InputError(f"{path}: {exc}") from exc
    problems = msr.validate(m)
    if problems:
        raise InputError(f"{path}: " + "; ".join(problems))
    return m


def _load_function(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
        return PiecewiseFunction.from_dict(data)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, ValueError, KeyError, TypeError, msr.MeasureFormatError) as exc:
        raise InputError(f"{path}: malformed function description ({exc})") from exc


def _emit(cfg, header, rows, summary):
    if cfg.format == "json":
        text = json.dumps({"rows": [dict(zip(header, [fmt(v) for v in r])) for r in rows],
                           "summary": {k: fmt(v) if not isinstance(v, (list, dict)) else v
                                       for k, v in summary.items()}}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for k, v in summary.items():
        print(f"# {k}: {fmt(v) if not isinstance(v, (list, dict)) else v}", file=sys.stderr)


# -- commands -------------------------------------------------------------------------------
def cmd_basis(cfg, args):
    m = _load_measure(cfg.measure)
    I = parse_label(cfg.root, args.interval) if args.interval else interval_at(cfg.root, args.m, args.j)
    funcs, rep = build_alpert(m, I, cfg.k, cfg.tol_rank)
    expected = dim_detail_space(m, I, cfg.k, cfg.tol_rank)
    ok = (rep.residuals["gram"] <= cfg.tol_ortho and rep.residuals["base"] <= BASE_TOL
          and (not rep.nondegenerate or rep.residuals["extra"] <= EXTRA_TOL)
          and rep.count == expected)
    doc = {
        "interval": {"m": I.m, "j": I.j, "left": str(I.left), "right": str(I.right)},
        "k": cfg.k,
        "functions": [{"index": f.index, "left": [fmt(v) for v in f.left],
                       "right": [fmt(v) for v in f.right]} for f in funcs],
        "report": {"count": rep.count, "expected_count": expected, "path": rep.path,
                   "nondegenerate": rep.nondegenerate,
                   "extra_moments_satisfied": rep.extra_moments_satisfied,
                   "residuals": {k: fmt(v) for k, v in rep.residuals.items()}},
        "pass": ok,
    }
    text = json.dumps(doc, indent=2) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_transform(cfg, args):
    m = _load_measure(cfg.measure)
    if cfg.func is None:
        raise InputError("transform needs --func")
    f = _load_function(cfg.func)
    if f.depth > cfg.depth:
        raise InputError("function is finer than --depth")
    e = expand(f, m, f.root, cfg.depth, cfg.k, cfg.tol_rank)
    rec = reconstruct(e, m)
    nf = norm2(f, m)
    tail = norm2(f - rec, m)
    defect = parseval_defect(f, m, e) - tail
    rel = math.sqrt(tail / nf) if nf > 0 else 0.0
    ok = abs(defect) <= cfg.tol_ortho * max(nf, 1e-300)
    rows = [("coarse", "", i, c) for i, c in enumerate(e.coarse_coeffs)]
    rows += list(e.coefficient_rows())
    _emit(cfg, ["m", "j", "l", "value"], rows,
          {"norm2": nf, "parseval_defect": defect, "reconstruction_rel_error": rel, "pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(cfg, args):
    m = _load_measure(cfg.measure)
    rng = np.random.default_rng(cfg.seed)
    rows, ok = [], True
    for Q in descendants(cfg.root, max(cfg.depth - 1, 0)):
        funcs, rep = build_alpert(m, Q, cfg.k, cfg.tol_rank)
        expected = dim_detail_space(m, Q, cfg.k, cfg.tol_rank)
        good = (rep.residuals["gram"] <= cfg.tol_ortho and rep.residuals["base"] <= BASE_TOL
                and (not rep.nondegenerate or rep.residuals["extra"] <= EXTRA_TOL)
                and rep.count == expected)
        ok &= good
        rows.append(("basis", Q.label(), rep.count, expected, rep.residuals["gram"],
                     rep.residuals["base"], rep.residuals["extra"], good))
    # telescoping and Parseval on a seeded random function of depth `depth`
    D = cfg.depth
    f = PiecewiseFunction(cfg.root, D, rng.standard_normal((2 ** D, cfg.k)))
    e = expand(f, m, cfg.root, D, cfg.k, cfg.tol_rank)
    nf = norm2(f, m)
    pd = parseval_defect(f, m, e)
    good = abs(pd) <= cfg.tol_ortho * max(nf, 1e-300)
    ok &= good
    rows.append(("parseval", "root", "", "", pd, "", "", good))
    g = PiecewiseFunction(cfg.root, D, rng.standard_normal((2 ** D, cfg.k + 2)))
    for _ in range(5 if D >= 1 else 0):
        km = int(rng.integers(1, D + 1))
        K = interval_at(cfg.root, km, int(rng.integers(0, 2 ** km)))
        lm = int(rng.integers(0, km))
        Lc = K.ancestors()[km - lm - 1]
        res = check_telescoping(g, m, K, Lc, cfg.k, cfg.tol_rank)
        good = res <= 1e-9
        ok &= good
        rows.append(("telescoping", f"{K.label()}<{Lc.label()}", "", "", res, "", "", good))
    _emit(cfg, ["check", "interval", "count", "expected", "gram_or_residual", "base", "extra", "pass"],
          rows, {"pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_moments(cfg, args):
    m = _load_measure(cfg.measure)
    rows = []
    for Q in descendants(cfg.root, cfg.depth):
        M = moment_matrix(m, Q, cfg.k)
        rep = rank_pd(M, cfg.tol_rank)
        dim = dim_detail_space(m, Q, cfg.k, cfg.tol_rank)
        rows.append((Q.label(), cfg.k, ";".join(fmt(v) for v in rep.eigenvalues), rep.rank,
                     rep.is_positive_definite, dim))
    _emit(cfg, ["interval", "k", "eigenvalues", "rank", "pd", "detail_dim"], rows, {})
    return EXIT_OK


def cmd_energy(cfg, args):
    sigma = _load_measure(cfg.measure)
    omega = _load_measure(cfg.measure2) if cfg.measure2 else sigma
    I = interval_at(cfg.root, 0, 0)
    rep = k_energy(sigma, omega, cfg.alpha, cfg.k, I, depth=cfg.depth)
    rows = [(t.interval[0], t.interval[1], t.poisson, t.moment_norm2, t.term) for t in rep.terms]
    _emit(cfg, ["a", "b", "poisson", "moment_norm2", "term"], rows,
          {"partition": rep.partition, "sigma_mass": rep.sigma_mass, "raw_sum": rep.raw_sum,
           "energy": rep.total})
    return EXIT_OK


def cmd_example(cfg, args):
    table = example_energy_table(cfg.eps, cfg.jmax, cfg.k)
    rows = [tuple(r[c] for c in EXAMPLE_COLUMNS) for r in table]
    _emit(cfg, EXAMPLE_COLUMNS, rows, {})
    return EXIT_OK


def cmd_testop(cfg, args):
    if cfg.measure:
        sigma = _load_measure(cfg.measure)
        omega = _load_measure(cfg.measure2) if cfg.measure2 else sigma
    else:
        sigma, omega = example_pair(cfg.eps, cfg.jmax)
    T = dyadic_test_op(sigma, omega, cfg.root, cfg.depth, k=2)
    rng = np.random.default_rng(cfg.seed)
    rows, ok = [], True
    for Q in descendants(cfg.root, cfg.depth):
        for trial in range(args.trials):
            p = rng.standard_normal(2)
            lhs, rhs, good = testing_check(T, Q, p)
            ok &= good
            rows.append((Q.label(), trial, p[0], p[1], lhs, rhs, good))
    _emit(cfg, ["interval", "trial", "p0", "p1", "lhs", "rhs", "pass"], rows, {"pass": ok})
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "basis": (cmd_basis, "build and verify the Alpert functions of one interval (JSON)"),
    "transform": (cmd_transform, "expand a function, reconstruct it, check Parseval; "
                                 "CSV columns m, j, l, value"),
    "verify": (cmd_verify, "check orthonormality, moments, counts, telescoping and Parseval"),
    "moments": (cmd_moments, "moment-matrix analysis; CSV columns interval, k, eigenvalues, "
                             "rank, pd, detail_dim"),
    "energy": (cmd_energy, "k-energy over dyadic partitions; CSV columns a, b, poisson, "
                           "moment_norm2, term"),
    "example": (cmd_example, "worked two-weight example table; CSV columns "
                             + ", ".join(EXAMPLE_COLUMNS)),
    "testop": (cmd_testop, "testing inequality of the dyadic operator; CSV columns interval, "
                           "trial, p0, p1, lhs, rhs, pass"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--measure", help="measure JSON file (σ for two-weight commands)")
    common.add_argument("--measure2", help="second measure JSON file (ω)")
    common.add_argument("--func", help="function JSON file")
    common.add_argument("--root", default="0,1", help="root interval 'a,b' (default 0,1)")
    common.add_argument("--k", type=int, default=2, help="order (number of vanishing moments)")
    common.add_argument("--depth", type=int, default=4, help="grid depth")
    common.add_argument("--tol-rank", "--tol", dest="tol_rank", type=float, default=1e-10,
                        help="relative eigenvalue cutoff for ranks")
    common.add_argument("--tol-ortho", type=float, default=GRAM_TOL,
                        help="orthonormality / Parseval tolerance")
    common.add_argument("--tol-quad", type=float, default=1e-10, help="quadrature tolerance")
    common.add_argument("--alpha", type=float, default=0.0, help="fractional order α in [0,1)")
    common.add_argument("--delta", type=float, default=0.5, help="Hölder exponent δ")
    common.add_argument("--eps", type=float, default=0.1, help="ε of the worked example")
    common.add_argument("--jmax", type=int, default=40, help="truncation of the worked example")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(
        prog="alpert",
        description="Weighted Alpert wavelet bases and two-weight diagnostics. "
                    "Set ALPERT_EXACT=1 to force exact rational arithmetic.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name == "basis":
            p.add_argument("--m", type=int, default=0, help="interval depth")
            p.add_argument("--j", type=int, default=0, help="interval index")
            p.add_argument("--interval", help="interval as 'm:j' (overrides --m/--j)")
        if name == "testop":
            p.add_argument("--trials", type=int, default=10, help="random polynomials per interval")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = RunConfig(
            command=args.command, measure=args.measure, measure2=args.measure2, func=args.func,
            root=_parse_root(args.root), k=args.k, depth=args.depth, tol_rank=args.tol_rank,
            tol_ortho=args.tol_ortho, tol_quad=args.tol_quad, alpha=args.alpha, delta=args.delta,
            eps=args.eps, jmax=args.jmax, seed=args.seed, out=args.out, format=args.format)
        cfg.validate()
        return COMMANDS[args.command][0](cfg, args)
    except (InputError, IndexError) as exc:
        print(f"alpert: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

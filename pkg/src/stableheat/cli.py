"""Command-line front end.

Subcommands:
  density    kernel values, normalization and tail-limit checks
  heat1d     interval heat content: exact values, expansion fits, remainders
  heatnd     d-dimensional heat content campaigns and asymptote fits
  spectral   killed-path runs with sandwich verdicts
  perimeter  fractional perimeter estimates

All randomness derives from --seed; outputs are byte-identical for a given
(config, seed) and any --threads value.  Exit code 0 means every requested
check passed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import asymptotics, geometry, heat1d, heatnd, kernel, spectral
from .errors import StableHeatError
from .params import alpha_param
from .records import RunRecord, render_csv, render_jsonl
from .runtime import default_threads
from .spectral import KilledPathConfig


def _emit(records, header, args) -> None:
    text = (
        render_csv(records, header)
        if args.format == "csv"
        else render_jsonl(records, header)
    )
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _header(args, **extra) -> dict:
    base = {
        "command": args.command,
        "seed": args.seed,
        "threads": args.threads,
        "format": args.format,
    }
    base.update(extra)
    return dict(sorted(base.items()))


def _t_grid(args) -> np.ndarray:
    if args.t:
        return np.asarray(sorted(args.t), dtype=float)
    return np.geomspace(args.t_lo, args.t_hi, args.n_t)


def _parse_domain(spec: str) -> geometry.Domain:
    if spec.startswith("@"):
        return geometry.domain_from_config(Path(spec[1:]).read_text())
    return geometry.domain_from_shorthand(spec)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_density(args) -> int:
    ap = alpha_param(args.alpha)
    records = []
    failed = False
    for r in args.r:
        kv = kernel.kernel_eval(ap, args.d, args.t, r)
        records.append(RunRecord(
            alpha=ap.alpha, domain=f"R^{args.d}", t=args.t,
            method=f"kernel:{kv.method.value}", value=kv.value,
            err=kv.err_estimate, seed=args.seed,
        ))
    if args.normcheck:
        mass = kernel.normalization_check(ap, args.d, args.t) if not ap.is_gaussian else 1.0
        ok = abs(mass - 1.0) <= 1e-5
        failed |= not ok
        records.append(RunRecord(
            alpha=ap.alpha, domain=f"R^{args.d}", t=args.t,
            method="normalization", value=mass, err=abs(mass - 1.0),
            seed=args.seed,
        ))
    if args.tailcheck and not ap.is_gaussian:
        for r in args.r:
            if r <= 0.0:
                continue
            rels = kernel.tail_limit_check(ap, args.d, r)
            ok = all(b <= a * 1.001 for a, b in zip(rels, rels[1:]))
            failed |= not ok
            records.append(RunRecord(
                alpha=ap.alpha, domain=f"R^{args.d}", t=args.t,
                method="tail_limit_rel_err", value=rels[-1], err=0.0,
                seed=args.seed,
            ))
    _emit(records, _header(args, alpha=ap.alpha, d=args.d), args)
    return 1 if failed else 0


def cmd_heat1d(args) -> int:
    ap = alpha_param(args.alpha)
    omega = heat1d.Interval(0.0, args.length)
    records = []
    failed = False
    for t in _t_grid(args):
        est = heat1d.heat_content_interval_exact(ap, omega, float(t))
        records.append(RunRecord(
            alpha=ap.alpha, domain=f"interval:0:{args.length:g}", t=float(t),
            method=est.method.value, value=est.value, err=est.err,
            seed=args.seed,
        ))
    if args.fit:
        exp1d = heat1d.expansion_terms(ap, omega)
        grid = _t_grid(args)
        grid = grid[grid < exp1d.t_max]
        data = []
        for t in grid:
            est = heat1d.heat_content_interval_exact(ap, omega, float(t))
            data.append((float(t), est.value, est.err))
        basis = [
            asymptotics.BasisTerm(term.power, term.with_log)
            for term in exp1d.terms
        ] + [asymptotics.power_term(exp1d.remainder_power)]
        rep = asymptotics.fit_leading(
            data, basis, predicted=exp1d.leading.coefficient, law="expansion"
        )
        for term, fitted in zip(exp1d.terms, rep.all_coefficients):
            gap = abs(fitted - term.coefficient) / max(abs(term.coefficient), 1e-300)
            records.append(RunRecord(
                alpha=ap.alpha, domain=f"interval:0:{args.length:g}", t=float(grid[0]),
                method=f"fit:{term.describe()}", value=fitted, err=gap,
                seed=args.seed,
            ))
            failed |= gap > args.tol
    if args.remainder:
        grid = _t_grid(args)
        exp1d = heat1d.expansion_terms(ap, omega)
        grid = grid[grid < exp1d.t_max]
        rep = heat1d.remainder_check(ap, omega, grid)
        records.append(RunRecord(
            alpha=ap.alpha, domain=f"interval:0:{args.length:g}", t=float(grid[0]),
            method="remainder_slope", value=rep.fitted_slope,
            err=rep.claimed_power, seed=args.seed,
        ))
        failed |= not rep.passes
    _emit(records, _header(args, alpha=ap.alpha, length=args.length), args)
    return 1 if failed else 0


_LAW_NAMES = {"tlog": "t_log", "tpow": "t_pow_inv_alpha", "linear": "linear_t"}


def cmd_heatnd(args) -> int:
    ap = alpha_param(args.alpha)
    domain = _parse_domain(args.domain)
    methods = ["quadrature", "mc"] if args.method == "both" else [args.method]
    records = []
    failed = False
    grid = _t_grid(args)
    estimates = {}
    for method in methods:
        for i, t in enumerate(grid):
            est = heatnd.heat_content(
                ap, domain, float(t), method=method, budget=args.budget,
                seed=args.seed + i, threads=args.threads,
            )
            estimates[(method, float(t))] = est
            records.append(RunRecord(
                alpha=ap.alpha, domain=domain.domain_id(), t=float(t),
                method=est.method.value, value=est.value, err=est.err,
                seed=args.seed + i,
            ))
    if args.method == "both":
        for t in grid:
            a = estimates[("quadrature", float(t))]
            b = estimates[("mc", float(t))]
            failed |= not a.agrees_with(b)
    if args.fit != "none":
        rep = heatnd.asymptote_fit(
            ap, domain, grid, _LAW_NAMES[args.fit],
            method=methods[0], budget=args.budget, seed=args.seed,
        )
        records.append(RunRecord(
            alpha=ap.alpha, domain=domain.domain_id(), t=float(grid[0]),
            method=f"fit:{rep.law}", value=rep.fitted_coefficient,
            err=rep.relative_gap if rep.relative_gap is not None else math.nan,
            seed=args.seed,
        ))
        failed |= rep.within > args.tol
    _emit(records, _header(args, alpha=ap.alpha, domain=domain.domain_id()), args)
    return 1 if failed else 0


def cmd_spectral(args) -> int:
    ap = alpha_param(args.alpha)
    domain = _parse_domain(args.domain)
    cfg = KilledPathConfig(n_steps=args.n_steps, refinement_levels=args.levels)
    records = []
    failed = False
    for t in _t_grid(args):
        rep = spectral.spectral_heat_content(
            ap, domain, float(t), cfg, budget=args.budget, seed=args.seed,
            threads=args.threads,
        )
        for lev_idx, lev in enumerate(rep.levels):
            records.append(RunRecord(
                alpha=ap.alpha, domain=domain.domain_id(), t=float(t),
                method="killed_mc_survival", value=lev.survival,
                err=lev.std_err, seed=args.seed, n_steps=lev.n_steps,
                level=lev_idx,
            ))
        records.append(RunRecord(
            alpha=ap.alpha, domain=domain.domain_id(), t=float(t),
            method="lost_heat_extrapolated", value=rep.lost_heat,
            err=rep.extrapolated_err, seed=args.seed,
            n_steps=cfg.finest_steps, level=len(rep.levels) - 1,
        ))
        lower, upper = spectral.sandwich_bounds(ap, domain, float(t))
        tol = 3.0 * (rep.extrapolated_err + lower.err)
        ok = (lower.value - tol <= rep.lost_heat <= upper + tol)
        failed |= not ok
        records.append(RunRecord(
            alpha=ap.alpha, domain=domain.domain_id(), t=float(t),
            method=f"sandwich:{'PASS' if ok else 'FAIL'}", value=lower.value,
            err=upper, seed=args.seed,
        ))
    _emit(records, _header(args, alpha=ap.alpha, domain=domain.domain_id()), args)
    return 1 if failed else 0


def cmd_perimeter(args) -> int:
    domain = _parse_domain(args.domain)
    rng = np.random.default_rng(args.seed)
    value, err = geometry.fractional_perimeter(
        domain, args.alpha, method=args.method, budget=args.budget, rng=rng,
    )
    records = [RunRecord(
        alpha=args.alpha, domain=domain.domain_id(), t=0.0,
        method=f"perimeter:{args.method}", value=value, err=err,
        seed=args.seed,
    )]
    _emit(records, _header(args, alpha=args.alpha, domain=domain.domain_id()), args)
    return 0 if math.isfinite(value) else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap; default from STABLEHEAT_THREADS")


def _add_grid(p: argparse.ArgumentParser, lo: float, hi: float, n: int) -> None:
    p.add_argument("--t", type=float, action="append", default=None,
                   help="explicit time (repeatable); overrides the grid")
    p.add_argument("--t-lo", type=float, default=lo)
    p.add_argument("--t-hi", type=float, default=hi)
    p.add_argument("--n-t", type=int, default=n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stableheat",
        description="Heat content of isotropic stable processes: kernels, "
                    "exact laws, estimators and asymptotics checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="kernel evaluation and checks")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--r", type=float, action="append", default=None)
    p.add_argument("--normcheck", action="store_true")
    p.add_argument("--tailcheck", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_density)

    p = sub.add_parser("heat1d", help="interval heat content")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--len", dest="length", type=float, default=1.0)
    p.add_argument("--fit", action="store_true")
    p.add_argument("--remainder", action="store_true")
    p.add_argument("--tol", type=float, default=0.02)
    _add_grid(p, 1e-6, 1e-2, 10)
    _add_common(p)
    p.set_defaults(fn=cmd_heat1d)

    p = sub.add_parser("heatnd", help="heat content in R^d")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--domain", type=str, required=True,
                   help="ball:D:R | box:LO,..:HI,.. | interval:A:B | "
                        "slab:D:DELTA:EPS[:W,..] | capsule:2:L:R | @config")
    p.add_argument("--method", choices=("auto", "quadrature", "mc", "both"),
                   default="auto")
    p.add_argument("--fit", choices=("none", "tlog", "tpow", "linear"),
                   default="none")
    p.add_argument("--budget", type=int, default=1_000_000)
    p.add_argument("--tol", type=float, default=0.10)
    _add_grid(p, 1e-5, 1e-2, 8)
    _add_common(p)
    p.set_defaults(fn=cmd_heatnd)

    p = sub.add_parser("spectral", help="killed-path spectral heat content")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--domain", type=str, required=True)
    p.add_argument("--n-steps", type=int, default=32)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--budget", type=int, default=200_000)
    _add_grid(p, 1e-3, 1e-3, 1)
    _add_common(p)
    p.set_defaults(fn=cmd_spectral)

    p = sub.add_parser("perimeter", help="fractional perimeter")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--domain", type=str, required=True)
    p.add_argument("--method", choices=("quadrature", "montecarlo"),
                   default="montecarlo")
    p.add_argument("--budget", type=int, default=400_000)
    _add_common(p)
    p.set_defaults(fn=cmd_perimeter)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None:
        args.threads = default_threads()
    if args.command == "density" and args.r is None:
        args.r = [0.0]
    try:
        return args.fn(args)
    except StableHeatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

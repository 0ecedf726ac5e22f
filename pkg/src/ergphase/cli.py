"""Command-line front end: reproducible CSV output for every computation.

Subcommands: psi, maximizers, critical-point, phase-curve, tables, rate,
sample, sweep.  All defaults are echoed as comment lines in the CSV header
so outputs are self-describing; identical flags and seed produce
byte-identical files.  Exit codes: 0 success, 2 argument/parse errors,
3 domain or assumption errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import asymptotics, sampler, variational
from .distributions import parse_distribution
from .errors import DomainError, ErgPhaseError
from .legendre import DUAL_TOL, dual_of, rate, rate_derivatives
from .variational import CRITICAL_MARGIN, TIE_TOL, ModelParams

_THREADS_ENV = "ERG_PHASE_THREADS"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _dist_arg(text):
    try:
        return parse_distribution(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _range_arg(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"range {text!r} must look like lo:hi:count"
        )
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if count < 1:
        raise argparse.ArgumentTypeError("range count must be >= 1")
    return lo, hi, count


def _range_values(rng):
    lo, hi, count = rng
    if count == 1:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _emit(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _expand_config(argv):
    """Splice `--config FILE` key=value lines in as flags (flags win)."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise argparse.ArgumentTypeError("--config needs a file path")
    path = argv[idx + 1]
    rest = argv[:idx] + argv[idx + 2:]
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise argparse.ArgumentTypeError(f"cannot read config {path!r}: {exc}")
    injected = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(
                f"config line {line!r} is not key=value"
            )
        injected.extend([f"--{key.strip().replace('_', '-')}", value.strip()])
    # insert after the subcommand so explicit flags override config values
    if not rest:
        return injected
    return rest[:1] + injected + rest[1:]


def _maximizer_columns(mset):
    cols = []
    for point in mset.points:
        cols.extend([point.u, point.theta])
    while len(cols) < 4:
        cols.append(None)
    return cols


def _warn_repulsive(lines, beta2):
    if beta2 < 0.0:
        lines.append(
            "# warning: beta2 < 0 is outside the attractive regime; values are "
            "stationarity solutions, not a phase-structure statement"
        )


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_psi(args):
    params = ModelParams(args.beta1, args.beta2, args.p)
    lines = [
        "# ergphase psi",
        f"# dist={args.dist.spec_string()} p={args.p} beta1={_fmt(args.beta1)} "
        f"beta2={_fmt(args.beta2)}",
        f"# defaults: tie_tol={_fmt(args.tie_tol)} dual_tol={DUAL_TOL:g}",
    ]
    _warn_repulsive(lines, args.beta2)
    mset = variational.maximizers(args.dist, params, tie_tol=args.tie_tol)
    psi = variational.psi_infinity(args.dist, params)
    lines.append("beta1,beta2,psi,on_transition,n_maximizers,u1,theta1,u2,theta2")
    row = [args.beta1, args.beta2, psi, mset.on_transition, len(mset.points)]
    row.extend(_maximizer_columns(mset))
    lines.append(",".join(_fmt(x) for x in row))
    _emit(lines, args.out)
    return 0


def _cmd_maximizers(args):
    params = ModelParams(args.beta1, args.beta2, args.p)
    lines = [
        "# ergphase maximizers",
        f"# dist={args.dist.spec_string()} p={args.p} beta1={_fmt(args.beta1)} "
        f"beta2={_fmt(args.beta2)}",
        f"# defaults: tie_tol={_fmt(args.tie_tol)} dual_tol={DUAL_TOL:g}",
    ]
    _warn_repulsive(lines, args.beta2)
    mset = variational.maximizers(args.dist, params, tie_tol=args.tie_tol)
    lines.append("beta1,beta2,u,theta,score,on_transition")
    for point in mset.points:
        lines.append(
            ",".join(
                _fmt(x)
                for x in [args.beta1, args.beta2, point.u, point.theta,
                          point.score, mset.on_transition]
            )
        )
    _emit(lines, args.out)
    return 0


def _cmd_critical_point(args):
    cp = variational.critical_point(args.dist, args.p)
    lines = [
        "# ergphase critical-point",
        f"# dist={args.dist.spec_string()} p={args.p}",
        "beta1_c,beta2_c,u0,theta0",
        ",".join(_fmt(x) for x in [cp.beta1_c, cp.beta2_c, cp.u0, cp.theta0]),
    ]
    _emit(lines, args.out)
    return 0


def _cmd_phase_curve(args):
    if args.gnuplot and not args.out:
        raise argparse.ArgumentTypeError("--gnuplot requires --out")
    cp = variational.critical_point(args.dist, args.p)
    if not args.beta1_min < cp.beta1_c:
        raise DomainError(
            f"beta1_min={args.beta1_min:g} must lie below the critical "
            f"beta1 {cp.beta1_c:g}"
        )
    b1_values = []
    b1 = args.beta1_min
    while b1 < cp.beta1_c - CRITICAL_MARGIN:
        b1_values.append(b1)
        b1 += args.step
    threads = max(1, int(os.environ.get(_THREADS_ENV, "1")))

    def solve(b1v):
        upper, lower, _, _ = variational._bounding_curves_impl(
            args.dist, args.p, b1v, cp
        )
        r = variational._transition_beta2_impl(args.dist, args.p, b1v, cp)
        return b1v, r, upper, lower

    if threads > 1 and len(b1_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(solve, b1_values))
    else:
        rows = [solve(v) for v in b1_values]
    lines = [
        "# ergphase phase-curve",
        f"# dist={args.dist.spec_string()} p={args.p} "
        f"beta1_min={_fmt(args.beta1_min)} step={_fmt(args.step)}",
        f"# defaults: tie_gap_tol=1e-10 critical_margin={CRITICAL_MARGIN:g} "
        f"threads={threads}",
        f"# critical point: beta1_c={_fmt(cp.beta1_c)} beta2_c={_fmt(cp.beta2_c)} "
        f"u0={_fmt(cp.u0)} theta0={_fmt(cp.theta0)}",
        "beta1,beta2_transition,beta2_upper,beta2_lower",
    ]
    for b1v, r, upper, lower in rows:
        lines.append(",".join(_fmt(x) for x in [b1v, r, upper, lower]))
    lines.append(
        ",".join(_fmt(x) for x in [cp.beta1_c, cp.beta2_c, cp.beta2_c, cp.beta2_c])
    )
    _emit(lines, args.out)
    if args.gnuplot:
        gp_path = args.out + ".gp"
        gp = [
            "set datafile separator ','",
            "set xlabel 'beta1'",
            "set ylabel 'beta2'",
            f"plot '{args.out}' using 1:2 with lines title 'transition', \\",
            f"     '{args.out}' using 1:3 with lines title 'upper', \\",
            f"     '{args.out}' using 1:4 with lines title 'lower'",
        ]
        with open(gp_path, "w") as fh:
            fh.write("\n".join(gp) + "\n")
    return 0


def _cmd_tables(args):
    lines = [
        "# ergphase tables",
        "# rows: bernoulli:q=0.5 (sparse, nearly_complete), "
        "uniform (sparse, nearly_complete); p=2",
        "# render precision: theta 2 decimals, u 3 decimals",
        "beta1,beta2,theta_opt,u_opt,theta_approx,u_approx,psi_exact,psi_approx,region",
    ]
    for report in asymptotics.classic_tables():
        lines.append(
            ",".join(
                [
                    _fmt(report.params.beta1),
                    _fmt(report.params.beta2),
                    f"{report.theta_opt:.2f}",
                    f"{report.u_opt:.3f}",
                    f"{report.theta_approx:.2f}",
                    f"{report.u_approx:.3f}",
                    _fmt(report.psi_exact),
                    _fmt(report.psi_approx),
                    report.region.value,
                ]
            )
        )
    _emit(lines, args.out)
    return 0


def _cmd_rate(args):
    if not args.u and args.u_grid is None:
        raise argparse.ArgumentTypeError("provide --u (repeatable) or --u-grid")
    us = list(args.u or [])
    if args.u_grid is not None:
        us.extend(_range_values(args.u_grid))
    lines = [
        "# ergphase rate",
        f"# dist={args.dist.spec_string()} dual_tol={DUAL_TOL:g}",
        "u,rate,i1,i2",
    ]
    for u in us:
        val = rate(args.dist, u)
        i1, i2 = rate_derivatives(args.dist, u)
        lines.append(",".join(_fmt(x) for x in [u, val, i1, i2]))
    _emit(lines, args.out)
    return 0


def _cmd_sample(args):
    h2 = sampler.subgraph_by_name(args.h2)
    params = ModelParams(args.beta1, args.beta2, h2.p)
    if args.burn_in is None:
        args.burn_in = 200 * sampler.sweep_steps(args.n)
    if args.thin is None:
        args.thin = sampler.sweep_steps(args.n)
    lines = [
        "# ergphase sample",
        f"# dist={args.dist.spec_string()} h2={h2.name} p={h2.p} "
        f"beta1={_fmt(args.beta1)} beta2={_fmt(args.beta2)} n={args.n}",
    ]
    _warn_repulsive(lines, args.beta2)
    if args.exact:
        psi_n, pmf = sampler.exact_small_model(args.dist, params, h2, args.n)
        lines.append(f"# exact free energy psi_n={_fmt(psi_n)}")
        lines.append("config,probability")
        for config, prob in pmf:
            lines.append(
                "|".join(_fmt(x) for x in config) + "," + _fmt(prob)
            )
        _emit(lines, args.out)
        return 0
    lines.append(
        f"# steps={args.steps} burn_in={args.burn_in} thin={args.thin} "
        f"seed={args.seed}"
    )
    trace = sampler.run_chain(
        args.dist,
        params,
        h2,
        n=args.n,
        steps=args.steps,
        burn_in=args.burn_in,
        thin=args.thin,
        seed=args.seed,
    )
    lines.append("step,t_edge,t_h2")
    for k, t1, t2 in zip(trace.steps, trace.t_edge, trace.t_h2):
        lines.append(",".join(_fmt(x) for x in [int(k), float(t1), float(t2)]))
    t1_mean = float(trace.t_edge.mean())
    t2_mean = float(trace.t_h2.mean())
    n = args.n
    t1_corr = t1_mean * n / (n - 1)  # undo the zero-diagonal bias
    lines.append(f"# summary: t1_mean={_fmt(t1_mean)} t2_mean={_fmt(t2_mean)}")
    if args.beta2 >= 0.0:
        mset = variational.maximizers(args.dist, params)
        u_star = mset.points[-1].u
        lines.append(
            f"# summary: u_star={_fmt(u_star)} t1_mean_corrected={_fmt(t1_corr)} "
            f"abs_diff_corrected={_fmt(abs(t1_corr - u_star))} "
            f"abs_diff_raw={_fmt(abs(t1_mean - u_star))}"
        )
    else:
        lines.append("# summary: beta2 < 0, concentration comparison skipped")
    _emit(lines, args.out)
    return 0


def _cmd_sweep(args):
    lines = [
        "# ergphase sweep",
        f"# dist={args.dist.spec_string()} p={args.p} "
        f"beta1={':'.join(map(str, args.beta1))} beta2={':'.join(map(str, args.beta2))}",
        f"# defaults: tie_tol={TIE_TOL:g}",
        "beta1,beta2,psi,u_star,n_maximizers,on_transition",
    ]
    for b1 in _range_values(args.beta1):
        for b2 in _range_values(args.beta2):
            params = ModelParams(b1, b2, args.p)
            mset = variational.maximizers(args.dist, params)
            lines.append(
                ",".join(
                    _fmt(x)
                    for x in [b1, b2, mset.psi, mset.points[-1].u,
                              len(mset.points), mset.on_transition]
                )
            )
    _emit(lines, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ergphase",
        description=(
            "Phase structure of two-parameter edge-weighted exponential "
            "random graphs: free energy, maximizers, transition curve, and "
            "a finite-size Monte Carlo sampler."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, dist=True, out=True):
        if dist:
            p.add_argument("--dist", type=_dist_arg, required=True,
                           help="bernoulli:q=.., uniform, beta:a=..,b=.., discrete:x=p,..")
        if out:
            p.add_argument("--out", default=None, help="write CSV here instead of stdout")

    p = sub.add_parser("psi", help="limiting free energy and maximizer set")
    add_common(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--beta1", type=float, required=True)
    p.add_argument("--beta2", type=float, required=True)
    p.add_argument("--tie-tol", type=float, default=TIE_TOL)
    p.set_defaults(func=_cmd_psi)

    p = sub.add_parser("maximizers", help="global maximizers of the score")
    add_common(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--beta1", type=float, required=True)
    p.add_argument("--beta2", type=float, required=True)
    p.add_argument("--tie-tol", type=float, default=TIE_TOL)
    p.set_defaults(func=_cmd_maximizers)

    p = sub.add_parser("critical-point", help="corner of the coexistence region")
    add_common(p)
    p.add_argument("--p", type=int, required=True)
    p.set_defaults(func=_cmd_critical_point)

    p = sub.add_parser("phase-curve", help="first-order transition curve")
    add_common(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--beta1-min", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--gnuplot", action="store_true",
                   help="also write a gnuplot script next to --out")
    p.set_defaults(func=_cmd_phase_curve)

    p = sub.add_parser("tables", help="classic near-degeneracy comparison rows")
    add_common(p, dist=False)
    p.set_defaults(func=_cmd_tables)

    p = sub.add_parser("rate", help="rate function values and derivatives")
    add_common(p)
    p.add_argument("--u", type=float, action="append",
                   help="evaluation point in (0,1); repeatable")
    p.add_argument("--u-grid", type=_range_arg, default=None,
                   help="lo:hi:count grid of evaluation points")
    p.set_defaults(func=_cmd_rate)

    p = sub.add_parser("sample", help="run the finite-size chain")
    add_common(p)
    p.add_argument("--h2", required=True, help="two_star or triangle")
    p.add_argument("--beta1", type=float, required=True)
    p.add_argument("--beta2", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--steps", type=int, default=None,
                   help="post-burn-in steps (default 500 sweeps)")
    p.add_argument("--burn-in", type=int, default=None,
                   help="burn-in steps (default 200 sweeps)")
    p.add_argument("--thin", type=int, default=None,
                   help="record every this many steps (default one sweep)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true",
                   help="exact enumeration instead of sampling (discrete, n <= 3)")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("sweep", help="free energy over a parameter rectangle")
    add_common(p)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--beta1", type=_range_arg, required=True, help="lo:hi:count")
    p.add_argument("--beta2", type=_range_arg, required=True, help="lo:hi:count")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _expand_config(argv)
    except argparse.ArgumentTypeError as exc:
        print(f"ERROR ConfigError: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "sample" and args.steps is None:
        args.steps = 500 * sampler.sweep_steps(args.n)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"ERROR ArgumentError: {exc}", file=sys.stderr)
        return 2
    except ErgPhaseError as exc:
        print(f"ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"ERROR ValueError: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

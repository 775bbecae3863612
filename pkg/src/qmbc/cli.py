"""Command-line front end: ``qmbc <command> [flags]``.

Exit status is 0 on success, 1 for invalid input (bad flags, inconsistent
parameters, malformed files) and 2 when a run fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import channel, code, density, labeling, ml, sim
from .gf import field_for

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("QMBC_THREADS", "1")))
    except ValueError:
        return 1


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = val.strip().strip('"').strip("'")
    return out


def _shared(p):
    g = p.add_argument_group("shared")
    g.add_argument("--seed", type=int, default=0, help="master RNG seed")
    g.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads (env QMBC_THREADS)")
    g.add_argument("--out", default=None, help="output CSV path (stdout if omitted)")
    g.add_argument("--config", default=None, help="key=value file; flags override its values")


def _field_flags(p, s_default=None):
    p.add_argument("--s", type=int, default=s_default, required=s_default is None,
                   help="bits per symbol; q = 2^s")


def _ensemble_flags(p, dc=6):
    p.add_argument("--dv", type=int, default=3, help="variable-node degree")
    p.add_argument("--dc", type=int, default=dc, help="check-node degree")


def _sweep_flags(p, required=True):
    p.add_argument("--direction", type=_floats, default=None,
                   help="epsilon direction d_1..d_s (probabilities, comma-separated)")
    p.add_argument("--sweep", type=_floats, default=None,
                   help="scalars c; grid points are eps = c * direction")
    p.add_argument("--eps", type=_floats, default=None,
                   help="a single epsilon vector eps_1..eps_s instead of direction/sweep")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="qmbc", description="LDPC coding over the q-ary multi-bit channel",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("capacity", help="channel capacity", formatter_class=fmt)
    _field_flags(p)
    p.add_argument("--eps", type=_floats, required=True, help="eps_1..eps_s")
    _shared(p)

    for name, hlp in (("de-threshold", "DE threshold along one direction"),
                      ("de-region", "DE region boundary over a fan of directions")):
        p = sub.add_parser(name, help=hlp, formatter_class=fmt)
        _field_flags(p)
        _ensemble_flags(p)
        p.add_argument("--labels", choices=["optimal", "uniform", "single"], default="optimal",
                       help="edge-label distribution")
        p.add_argument("--jmax", type=int, default=1, help="dominant erasure type for --labels optimal")
        p.add_argument("--origin", type=_floats, default=None, help="start point eps_1..eps_s")
        p.add_argument("--max-iters", type=int, default=density.DEFAULT_MAX_ITERS, help="DE iterations L")
        p.add_argument("--delta", type=float, default=density.DEFAULT_DELTA, help="success level for P_error")
        p.add_argument("--tol", type=float, default=density.DEFAULT_BISECT_TOL, help="bisection tolerance")
        p.add_argument("--allow-large", action="store_true", help="permit s > 4")
        if name == "de-threshold":
            p.add_argument("--direction", type=_floats, required=True, help="direction d_1..d_s")
        else:
            p.add_argument("--resolution", type=int, default=17, help="number of directions")
        _shared(p)

    p = sub.add_parser("simulate", help="Monte Carlo SER sweep", formatter_class=fmt)
    _field_flags(p)
    _ensemble_flags(p, dc=27)
    p.add_argument("--n", type=int, default=513, help="code length in symbols")
    p.add_argument("--labels", choices=["uniform", "optimized", "single", "optimal", "binary"],
                   default="uniform", help="label mode; 'binary' runs the bit-level peeling baseline")
    p.add_argument("--jmax", type=int, default=1, help="dominant erasure type")
    _sweep_flags(p)
    p.add_argument("--trials", type=int, default=10_000, help="codewords per grid point")
    p.add_argument("--max-iters", type=int, default=100, help="decoder iteration limit")
    p.add_argument("--label-runs", type=int, default=1000, help="peeling runs of the label optimizer")
    p.add_argument("--label-eps", type=float, default=None,
                   help="peeling erasure probability of the label optimizer (default: BEC threshold)")
    p.add_argument("--resample", action="store_true", help="draw a new graph for every trial")
    _shared(p)

    p = sub.add_parser("label-optimize", help="stopping-set driven relabeling", formatter_class=fmt)
    p.add_argument("--graph", default=None, help="input qalist (otherwise a graph is sampled)")
    _field_flags(p, s_default=2)
    _ensemble_flags(p, dc=27)
    p.add_argument("--n", type=int, default=513, help="code length when sampling")
    p.add_argument("--jmax", type=int, default=1, help="dominant erasure type")
    p.add_argument("--runs", type=int, default=1000, help="peeling runs")
    p.add_argument("--label-eps", type=float, default=None, help="peeling erasure probability")
    p.add_argument("--out-graph", default=None, help="write the relabeled graph (qalist)")
    _shared(p)

    p = sub.add_parser("ml-snbre", help="ML failure of the random-matrix ensemble", formatter_class=fmt)
    _field_flags(p)
    p.add_argument("--n", type=int, required=True, help="code length")
    p.add_argument("--k", type=int, default=None, help="dimension (default round(n*rate))")
    p.add_argument("--rate", type=float, default=None, help="code rate if --k is omitted")
    p.add_argument("--as-full", action="store_true", help="count every erasure as a full erasure")
    _sweep_flags(p)
    _shared(p)

    p = sub.add_parser("ml-ldpc-bound", help="ML union bound for regular LDPC ensembles",
                       formatter_class=fmt)
    _field_flags(p)
    _ensemble_flags(p, dc=27)
    p.add_argument("--n", type=int, required=True, help="code length")
    p.add_argument("--as-full", action="store_true", help="count every erasure as a full erasure")
    _sweep_flags(p)
    _shared(p)

    p = sub.add_parser("graph-gen", help="sample a labeled Tanner graph", formatter_class=fmt)
    _field_flags(p)
    _ensemble_flags(p)
    p.add_argument("--n", type=int, required=True, help="code length")
    p.add_argument("--labels", choices=["uniform", "single", "optimal"], default="uniform",
                   help="label distribution")
    p.add_argument("--jmax", type=int, default=1, help="dominant erasure type for --labels optimal")
    _shared(p)

    p = sub.add_parser("graph-validate", help="parse a qalist file and report its profile",
                       formatter_class=fmt)
    p.add_argument("graph", help="qalist path")
    p.add_argument("--dv", type=int, default=None, help="expected variable degree")
    p.add_argument("--dc", type=int, default=None, help="expected check degree")
    _shared(p)
    return parser


# helpers ---------------------------------------------------------------------

def _emit(args, header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _fmt(x) -> str:
    return repr(float(x))


def _grid(args, s: int) -> list[tuple]:
    if args.eps is not None:
        if args.direction is not None or args.sweep is not None:
            raise UsageError("use either --eps or --direction/--sweep")
        grid = [tuple(args.eps)]
    else:
        if args.direction is None or args.sweep is None:
            raise UsageError("need --eps or both --direction and --sweep")
        grid = [tuple(c * d for d in args.direction) for c in args.sweep]
    for eps in grid:
        if len(eps) != s:
            raise UsageError(f"epsilon vectors need {s} components, got {len(eps)}")
        channel.QmbcParams.make(s, eps)
    return grid


def _label_dist(kind: str, s: int, jmax: int) -> code.LabelDistribution:
    f = field_for(s)
    if kind == "optimal":
        return density.optimal_label_distribution(s, jmax)
    if kind == "single":
        return code.LabelDistribution.degenerate(f)
    return code.LabelDistribution.uniform(f)


def _sidecar(args, config: dict) -> None:
    if args.out:
        sim.write_sidecar(config, str(args.out) + ".json")


def _config_of(args) -> dict:
    skip = {"out", "config", "threads", "out_graph"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# commands ----------------------------------------------------------------------

def cmd_capacity(args):
    params = channel.QmbcParams.make(args.s, args.eps)
    cap = channel.capacity(params)
    print(f"capacity: {cap:.6f} symbols/use ({cap * args.s:.6f} bits/use)", file=sys.stderr)
    _emit(args, [f"eps_{j}" for j in range(1, args.s + 1)] + ["symbols_per_use", "bits_per_use"],
          [[_fmt(e) for e in params.epsilon] + [_fmt(cap), _fmt(cap * args.s)]])


def _de_config(args) -> density.DEConfig:
    dd = code.DegreeDistribution.regular(args.dv, args.dc)
    return density.DEConfig(dd, _label_dist(args.labels, args.s, args.jmax), (),
                            args.max_iters, args.delta, args.tol, args.allow_large)


def cmd_de_threshold(args):
    cfg = _de_config(args)
    r = density.threshold_scan(cfg, args.direction, args.origin)
    print(f"threshold: {r.threshold:.6f} (point {', '.join(f'{x:.6f}' for x in r.point)})", file=sys.stderr)
    s = args.s
    _emit(args, [f"d_{j}" for j in range(1, s + 1)] + [f"o_{j}" for j in range(1, s + 1)]
          + ["threshold", "converged"],
          [[f"{x:.6f}" for x in r.direction] + [f"{x:.6f}" for x in r.origin]
           + [f"{r.threshold:.6f}", int(r.converged)]])
    _sidecar(args, _config_of(args))


def cmd_de_region(args):
    cfg = _de_config(args)
    res = density.region_trace(cfg, args.resolution, origin=args.origin, threads=args.threads)
    s = args.s
    _emit(args, [f"d_{j}" for j in range(1, s + 1)] + [f"o_{j}" for j in range(1, s + 1)]
          + ["threshold", "converged"],
          [[f"{x:.6f}" for x in r.direction] + [f"{x:.6f}" for x in r.origin]
           + [f"{r.threshold:.6f}", int(r.converged)] for r in res])
    _sidecar(args, _config_of(args))


def cmd_simulate(args):
    grid = _grid(args, args.s)
    mode = "uniform" if args.labels == "binary" else args.labels
    cfg = sim.ExperimentConfig(s=args.s, dv=args.dv, dc=args.dc, n=args.n, label_mode=mode,
                               grid=grid, trials=args.trials, max_iters=args.max_iters,
                               seed=args.seed, jmax=args.jmax, label_runs=args.label_runs,
                               label_epsilon=args.label_eps, resample_graph=args.resample,
                               threads=args.threads)
    pts = sim.run_binary_baseline(cfg) if args.labels == "binary" else sim.run_ser_sweep(cfg)
    _emit(args, sim.header(args.s), [p.row() for p in pts])
    d = cfg.to_dict()
    d["baseline"] = args.labels == "binary"
    _sidecar(args, d)


def cmd_label_optimize(args):
    if args.graph:
        g = code.read_graph(args.graph)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(1,)))
        g = code.sample_graph(args.n, code.DegreeDistribution.regular(args.dv, args.dc),
                              code.LabelDistribution.uniform(field_for(args.s)), rng)
    plan = labeling.optimize_labels(g, args.jmax, runs=args.runs, seed=args.seed,
                                    epsilon=args.label_eps, threads=args.threads)
    print(f"{len(plan.sample.sets)} distinct stopping sets, {len(plan)} edges relabeled", file=sys.stderr)
    _emit(args, ["check_index", "edge_position", "old_label", "new_label", "step"], list(plan.rows(g)))
    if args.out_graph:
        code.write_graph(plan.apply(g), args.out_graph)
    _sidecar(args, _config_of(args))


def _k_of(args) -> int:
    if args.k is not None:
        return args.k
    if args.rate is None:
        raise UsageError("need --k or --rate")
    return int(round(args.n * args.rate))


def _ml_rows(args, fn):
    rows = []
    for eps in _grid(args, args.s):
        params = channel.QmbcParams.make(args.s, eps)
        if args.as_full:
            params = ml.qec_params(params)
        res = fn(params)
        rows.append([_fmt(e) for e in eps] + [_fmt(res.value), res.tag, _fmt(res.skipped_mass_bound)])
    _emit(args, [f"eps_{j}" for j in range(1, args.s + 1)] + ["value", "tag", "skipped_mass_bound"], rows)
    _sidecar(args, _config_of(args))


def cmd_ml_snbre(args):
    k = _k_of(args)
    _ml_rows(args, lambda p: ml.snbre_failure(p, args.n, k, seed=args.seed))


def cmd_ml_ldpc_bound(args):
    _ml_rows(args, lambda p: ml.ldpc_ml_upper_bound(args.dv, args.dc, args.n, p))


def cmd_graph_gen(args):
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(1,)))
    g = code.sample_graph(args.n, code.DegreeDistribution.regular(args.dv, args.dc),
                          _label_dist(args.labels, args.s, args.jmax), rng)
    text = code.format_qalist(g)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_graph_validate(args):
    g = code.read_graph(args.graph)
    vd, cd = g.var_degrees, g.check_degrees
    problems = []
    if args.dv is not None and np.any(vd != args.dv):
        problems.append(f"variable degrees differ from {args.dv}")
    if args.dc is not None and np.any(cd != args.dc):
        problems.append(f"check degrees differ from {args.dc}")
    _emit(args, ["n", "m", "q", "edges", "dv_min", "dv_max", "dc_min", "dc_max", "valid"],
          [[g.n, g.m, g.field.q, g.num_edges, int(vd.min()), int(vd.max()), int(cd.min()),
            int(cd.max()), int(not problems)]])
    if problems:
        raise UsageError("; ".join(problems))


COMMANDS = {
    "capacity": cmd_capacity, "de-threshold": cmd_de_threshold, "de-region": cmd_de_region,
    "simulate": cmd_simulate, "label-optimize": cmd_label_optimize, "ml-snbre": cmd_ml_snbre,
    "ml-ldpc-bound": cmd_ml_ldpc_bound, "graph-gen": cmd_graph_gen,
    "graph-validate": cmd_graph_validate,
}


def _config_path(argv) -> str | None:
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def _coerce(action, value: str):
    if action.nargs == 0:       # store_true / store_false
        low = value.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise UsageError(f"config key {action.dest!r} expects true/false")
        return low in ("true", "1", "yes")
    return value                # argparse converts string defaults with ``type``


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    path = _config_path(argv)
    command = next((a for a in argv if not a.startswith("-")), None)
    subs = parser._subparsers._group_actions[0].choices
    if path and command in subs:
        conf = read_config(path)
        sub = subs[command]
        actions = {a.dest: a for a in sub._actions}
        unknown = sorted(set(conf) - set(actions))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        # file values become defaults, so command-line flags still win
        sub.set_defaults(**{k: _coerce(actions[k], v) for k, v in conf.items()})
        for k in conf:
            actions[k].required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError, code.QalistError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:   # noqa: BLE001 - top-level reporting
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--n 513] [--s 2] [--reps 200]

Each kernel runs on the same inputs under both backends; outputs are
compared before timing so a mismatch aborts the run.  The first numba call
(compilation) is excluded.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from qmbc import kernels
from qmbc._accel import HAVE_NUMBA
from qmbc.channel import QmbcParams, observed_sets, sample_types
from qmbc.code import DegreeDistribution, LabelDistribution, sample_graph
from qmbc.decoder import decode, expanded_matrix, peel_binary
from qmbc.gf import field_for


def _time(fn, reps):
    fn()                        # warm-up / compile
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=513)
    ap.add_argument("--s", type=int, default=2)
    ap.add_argument("--eps", type=float, default=0.12, help="per-type erasure probability")
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(args.seed)
    f = field_for(args.s)
    g = sample_graph(args.n, DegreeDistribution.regular(3, 27), LabelDistribution.uniform(f), rng)
    params = QmbcParams.make(args.s, [args.eps] * args.s)
    sets = observed_sets(np.zeros(args.n, dtype=np.int64), sample_types(params, args.n, rng), args.s)
    erased = rng.random(args.n) < 0.08
    mat = expanded_matrix(rng.integers(0, f.q, size=(120, 200)), np.full(200, args.s), f)

    cases = {
        "flood": lambda b: decode(g, sets, backend=b),
        "peel": lambda b: peel_binary(g, erased, backend=b),
        "gf2_rank": lambda b: kernels.get("gf2_rank", b)(mat),
    }
    print(f"n={args.n} q={f.q} edges={g.num_edges} reps={args.reps}")
    print(f"{'kernel':<10}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, run in cases.items():
        a, b = run("numba"), run("numpy")
        if name == "flood":
            assert np.array_equal(a.final_sets, b.final_sets) and a.iterations == b.iterations
        else:
            assert np.array_equal(np.asarray(a), np.asarray(b))
        t_nb = _time(lambda: run("numba"), args.reps)
        t_np = _time(lambda: run("numpy"), args.reps)
        print(f"{name:<10}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")
    assert kernels.get("peel", "numba") is not kernels.get("peel", "numpy")


if __name__ == "__main__":
    main()

"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

Tolerances and sample sizes are pinned here as module constants.  Every test
asserts its criterion, so a failed criterion also fails the test.
"""

import itertools
import math
import time

import numpy as np

from qmbc import cli
from qmbc.channel import QmbcParams, capacity, mutual_information_numeric, observed_sets, sample_types
from qmbc.code import DegreeDistribution, LabelDistribution, sample_graph
from qmbc.decoder import MLOutcome, decode, ml_decode, peel_binary
from qmbc.density import (
    DEConfig, _Stepper, check_convolution, de_iterate, initial_distribution,
    optimal_label_distribution, single_letter_trajectory, threshold_scan, variable_convolution,
)
from qmbc.gf import (
    SubgroupTable, channel_mask, coset_decompose, elements, enumerate_subgroups, field_for, is_subgroup,
)
from qmbc.labeling import (
    exclusion_chain, is_universal_pair, maximal_resolvable_violation, resolvable_labels, universal_pair,
)
from qmbc.ml import (
    consistent_weight_enum, ldpc_ml_upper_bound, mc_psi, mc_snbre_failure, psi_exact_subfield,
    snbre_failure, zero_sum_probability, zero_sum_probability_exact,
)
from qmbc.sim import ExperimentConfig, run_binary_baseline, run_ser_sweep

from conftest import random_codeword, record_criterion
from oracles import de_check_enumeration, de_step_enumeration, de_variable_enumeration, random_de_config

DD36 = DegreeDistribution.regular(3, 6)
DD327 = DegreeDistribution.regular(3, 27)

# criterion 1
SUBGROUP_COUNTS = {2: 5, 3: 16, 4: 67}
SUBGROUP_TIME_S = 1.0
# criteria 2-3
OPT_THRESHOLD, BEC_SUM, THRESHOLD_TOL = 0.858, 0.429, 0.002
RECURRENCE_TOL = 1e-9
DE_TIME_S = 60.0
# criterion 4
BRUTE_CONFIGS, BRUTE_TOL = 20, 1e-10
# criterion 5
CAPACITY_VECTORS, CAPACITY_TOL = 50, 1e-9
# criterion 6
DECODER_TRIPLES = 1000
# criterion 8
ML_TRIALS, ML_SIGMAS, ML_TIME_S = 10**5, 3.0, 600.0
# criterion 9
SEPARATION_RATIO = 10.0
# criterion 10
BOUND_TRIALS = 10**4
# criterion 11
SIM_N, SIM_TRIALS, SIM_SEED = 513, 10**4, 2024
SIM_GRID = {2: [0.12, 0.14, 0.16], 3: [0.19, 0.21, 0.23]}   # eps_1 only, j = 1
BINARY_GAIN, OPTIMIZED_GAIN = 3.0, 5.0
SIM_TIME_S = 1800.0


def _finish(number, ok, detail):
    record_criterion(number, ok, detail)
    assert ok, detail


def test_criterion_01_subgroup_counts():
    t0 = time.perf_counter()
    got = {s: SubgroupTable(field_for(s)).T for s in SUBGROUP_COUNTS}   # uncached build
    dt = time.perf_counter() - t0
    ok = got == SUBGROUP_COUNTS and dt < SUBGROUP_TIME_S
    _finish(1, ok, f"T = {got} (want {SUBGROUP_COUNTS}), {dt:.3f} s (limit {SUBGROUP_TIME_S} s)")


def test_criterion_02_optimal_label_threshold():
    t0 = time.perf_counter()
    cfg = DEConfig(DD36, optimal_label_distribution(2, 1))
    thr = threshold_scan(cfg, (1, 0)).threshold
    worst = 0.0
    for eps in (0.3, 0.6, 0.85, 0.8589, 0.87, 0.95):
        traj = de_iterate(cfg.with_epsilon((eps, 0.0)))
        y = single_letter_trajectory(DD36, eps, divisor=2, iters=cfg.max_iters)
        worst = max(worst, float(np.max(np.abs(traj.p_error - y))))
    dt = time.perf_counter() - t0
    ok = abs(thr - OPT_THRESHOLD) <= THRESHOLD_TOL and worst <= RECURRENCE_TOL and dt < DE_TIME_S
    _finish(2, ok, f"eps_1 threshold {thr:.4f} (want {OPT_THRESHOLD} +- {THRESHOLD_TOL}), "
                   f"max |DE - recurrence| {worst:.1e} (limit {RECURRENCE_TOL:.0e}), {dt:.1f} s")


def test_criterion_03_single_label_region():
    t0 = time.perf_counter()
    cfg = DEConfig(DD36, LabelDistribution.degenerate(field_for(2)))
    sums = {}
    for d in [(1, 0), (0, 1), (1, 1)]:
        r = threshold_scan(cfg, d)
        sums[d] = sum(r.point)
    dt = time.perf_counter() - t0
    ok = all(abs(v - BEC_SUM) <= THRESHOLD_TOL for v in sums.values()) and dt < DE_TIME_S
    txt = ", ".join(f"{d}: {v:.4f}" for d, v in sums.items())
    _finish(3, ok, f"sum eps at threshold {txt} (want {BEC_SUM} +- {THRESHOLD_TOL}), {dt:.1f} s")


def test_criterion_04_de_brute_force():
    rng = np.random.default_rng(404)
    f = field_for(2)
    table = enumerate_subgroups(f)
    worst = 0.0
    for _ in range(BRUTE_CONFIGS):
        dd, lw, eps = random_de_config(rng)
        labels = LabelDistribution(f, lw)
        z = rng.dirichlet(np.ones(table.T))
        for i in dd.rho:
            worst = max(worst, np.max(np.abs(check_convolution(z, i - 1, labels, table=table)
                                             - de_check_enumeration(z, i - 1, lw, table))))
        for i in dd.lam:
            worst = max(worst, np.max(np.abs(variable_convolution(z, i - 1, eps, table)
                                             - de_variable_enumeration(z, i - 1, eps, table))))
        st = _Stepper(DEConfig(dd, labels, eps))
        z0 = initial_distribution(eps, table)
        worst = max(worst, np.max(np.abs(st.step(z0, eps) - de_step_enumeration(z0, dd, lw, eps, table))))
    ok = worst <= BRUTE_TOL
    _finish(4, ok, f"{BRUTE_CONFIGS} configs, max deviation {worst:.1e} (limit {BRUTE_TOL:.0e})")


def test_criterion_05_capacity_oracle():
    rng = np.random.default_rng(505)
    worst = 0.0
    for s in (2, 3):
        q = 1 << s
        for _ in range(CAPACITY_VECTORS):
            params = QmbcParams.make(s, rng.dirichlet(np.ones(s + 1))[1:])
            mi = mutual_information_numeric(params, np.full(q, 1 / q))
            worst = max(worst, abs(mi / s - capacity(params)))
    ok = worst <= CAPACITY_TOL
    _finish(5, ok, f"{CAPACITY_VECTORS} vectors per s in (2, 3), max |I/s - C| {worst:.1e} "
                   f"(limit {CAPACITY_TOL:.0e})")


def _graph(s, rng, equal):
    f = field_for(s)
    dist = LabelDistribution.degenerate(f) if equal else LabelDistribution.uniform(f)
    return sample_graph(int(rng.choice([24, 36, 48])), DD36, dist, rng)


def test_criterion_06_decoder_structure():
    rng = np.random.default_rng(606)
    bad = {"coset": 0, "subgroup": 0, "containment": 0, "equal-label": 0}
    checked_cosets = {}
    for t in range(DECODER_TRIPLES):
        s = (2, 3, 4)[t % 3]
        equal = t % 2 == 1
        g = _graph(s, rng, equal)
        params = QmbcParams.make(s, rng.dirichlet(np.ones(s + 1))[1:] * rng.uniform(0.3, 0.9))
        types = sample_types(params, g.n, rng)
        x = random_codeword(g, rng)
        for word, key in ((x, "coset"), (np.zeros(g.n, dtype=np.int64), "subgroup")):
            res = decode(g, observed_sets(word, types, s), trace=True)
            masks = {int(m) for _, c, v in res.trace for m in np.concatenate([c, v])}
            for m in masks:
                if key == "coset":
                    if m not in checked_cosets:
                        checked_cosets[m] = coset_decompose(m) is not None
                    bad[key] += not checked_cosets[m]
                else:
                    bad[key] += not is_subgroup(m)
        unresolved = ~res.resolved
        residual = peel_binary(g, types > 0)
        bad["containment"] += int(np.any(unresolved & ~residual))
        if equal:
            bad["equal-label"] += int(not np.array_equal(unresolved, residual))
    ok = not any(bad.values())
    _finish(6, ok, f"{DECODER_TRIPLES} triples at q in (4, 8, 16), violations {bad}")


def test_criterion_07_resolvability():
    problems = []
    for s, j in [(2, 1), (3, 1), (4, 1), (4, 2)]:
        f = field_for(s)
        labels = resolvable_labels(f, j)
        if maximal_resolvable_violation(f, labels, j) is not None:
            problems.append(f"labels {labels} not resolvable at (s={s}, j={j})")
        for extra in range(1, f.q):
            if maximal_resolvable_violation(f, labels + [extra], j) is None:
                problems.append(f"extension by {extra} still resolvable at (s={s}, j={j})")
    pairs = {}
    for s in (2, 3, 4):
        f = field_for(s)
        pairs[f.q] = universal_pair(f)
        if not is_universal_pair(f, *pairs[f.q]):
            problems.append(f"pair {pairs[f.q]} not universal at q={f.q}")
    survivors = exclusion_chain(field_for(2))[-1].remaining
    if len(survivors) != 2:
        problems.append(f"q=4 chain leaves {survivors}")
    ok = not problems
    _finish(7, ok, f"pairs {pairs}, q=4 survivors {list(survivors)}"
                   + ("" if ok else f"; problems: {problems}"))


def _eta_brute(profile):
    s = len(profile) - 1
    types = [j for j in range(1, s + 1) for _ in range(profile[j])]
    out = [0] * (len(types) + 1)
    for xs in itertools.product(*[elements(channel_mask(j, s)) for j in types]):
        out[sum(1 for v in xs if v)] += 1
    return out


def _within(est, p, trials, sigmas):
    sd = math.sqrt(max(p * (1 - p), 1e-300) / trials)
    return abs(est - p) <= sigmas * sd, (est - p) / sd if sd > 0 else 0.0


def test_criterion_08_ml_formulas():
    t0 = time.perf_counter()
    problems = []
    for q in (4, 8):
        for m in (2, 3, 4):
            hits = sum(1 for v in itertools.product(range(1, q), repeat=m)
                       if np.bitwise_xor.reduce(np.array(v)) == 0)
            exact = zero_sum_probability_exact(m, q)
            if exact * (q - 1) ** m != hits or abs(zero_sum_probability(m, q) - float(exact)) > 1e-15:
                problems.append(f"zero-sum q={q} m={m}")
    for s in (1, 2, 3):
        for prof in itertools.product(range(4), repeat=s):
            if sum(prof) > 6:
                continue
            if consistent_weight_enum([0, *prof]) != _eta_brute([0, *prof]):
                problems.append(f"eta {prof}")
    example_total = sum(consistent_weight_enum([0, 1, 1]))
    if example_total != 8:
        problems.append(f"example total {example_total}")

    f = field_for(2)
    rng = np.random.default_rng(808)
    n, k = 12, 8
    psi_z = {}
    for prof in ([0, 2, 1], [0, 3, 2], [0, 6, 0]):
        est = mc_psi(prof, n - k, f, ML_TRIALS, rng)
        ok_p, z = _within(est, psi_exact_subfield(prof, n - k, f), ML_TRIALS, ML_SIGMAS)
        psi_z[tuple(prof)] = round(z, 2)
        if not ok_p:
            problems.append(f"psi {prof} z={z:.2f}")
    snbre_z = {}
    for eps in ((0.2, 0.05), (0.1, 0.1)):
        params = QmbcParams.make(2, eps)
        exact = snbre_failure(params, n, k)
        if exact.tag != "exact":
            problems.append(f"snbre {eps} tagged {exact.tag}")
        est = mc_snbre_failure(params, n, k, ML_TRIALS, rng)
        ok_p, z = _within(est, exact.value, ML_TRIALS, ML_SIGMAS)
        snbre_z[eps] = round(z, 2)
        if not ok_p:
            problems.append(f"snbre {eps} z={z:.2f}")
    dt = time.perf_counter() - t0
    ok = not problems and dt < ML_TIME_S
    _finish(8, ok, f"enumerations exact, example total {example_total}, psi z-scores {psi_z}, "
                   f"snbre z-scores {snbre_z} (limit {ML_SIGMAS} sigma), {dt:.0f} s"
                   + ("" if not problems else f"; problems: {problems}"))


def test_criterion_09_snbre_vs_qec():
    n, k = 128, round(128 * 8 / 9)
    ratios = {}
    for e1 in (0.05, 0.075, 0.10, 0.125, 0.15):
        part = snbre_failure(QmbcParams.make(2, (e1, e1 / 10)), n, k).value
        qec = snbre_failure(QmbcParams.make(2, (0.0, 0.6 * e1)), n, k).value
        ratios[e1] = qec / part if part > 0 else math.inf
    ok = max(ratios.values()) >= SEPARATION_RATIO
    txt = ", ".join(f"{e}: {r:.1f}x" for e, r in ratios.items())
    _finish(9, ok, f"n={n}, k={k}, QEC/partial ratios {txt} (need >= {SEPARATION_RATIO}x somewhere)")


def test_criterion_10_ldpc_bound_soundness():
    rng = np.random.default_rng(1010)
    f = field_for(2)
    n = 24
    grid = [(0.05, 0.0), (0.1, 0.0), (0.2, 0.0), (0.3, 0.0), (0.0, 0.1), (0.0, 0.2),
            (0.1, 0.05), (0.2, 0.1)]
    violations, rows = 0, []
    for eps in grid:
        params = QmbcParams.make(2, eps)
        fails = 0
        for _ in range(BOUND_TRIALS):
            g = sample_graph(n, DD36, LabelDistribution.uniform(f), rng)
            fails += ml_decode(g, sample_types(params, n, rng)) is MLOutcome.AMBIGUOUS
        emp = fails / BOUND_TRIALS
        bound = ldpc_ml_upper_bound(3, 6, n, params).value
        violations += bound < emp
        rows.append(f"{eps}: bound {bound:.3g} vs {emp:.3g}")
    ok = violations == 0
    _finish(10, ok, f"{violations} violations over {len(grid)} points; " + "; ".join(rows))


def _sweep(s, mode, binary=False):
    cfg = ExperimentConfig(s=s, dv=3, dc=27, n=SIM_N, label_mode=mode,
                           grid=[(e,) + (0.0,) * (s - 1) for e in SIM_GRID[s]],
                           trials=SIM_TRIALS, seed=SIM_SEED)
    t0 = time.perf_counter()
    pts = run_binary_baseline(cfg) if binary else run_ser_sweep(cfg)
    return [p.ser for p in pts], time.perf_counter() - t0


def _ratio(a, b):
    if b == 0:
        return math.inf if a > 0 else float("nan")
    return a / b


def _fmt_ser(v):
    return "[" + ", ".join(f"{x:.2e}" for x in v) + "]"


def test_criterion_11_simulation():
    curves, times = {}, []
    for s in (2, 3):
        for name, mode, binary in (("uniform", "uniform", False), ("binary", "uniform", True)):
            curves[s, name], dt = _sweep(s, mode, binary)
            times.append(dt)
    curves[3, "optimized"], dt = _sweep(3, "optimized")
    times.append(dt)
    parts, ok = [], max(times) < SIM_TIME_S
    for s in (2, 3):
        uni, bnr = curves[s, "uniform"], curves[s, "binary"]
        dom = all(u <= b for u, b in zip(uni, bnr))
        gain = _ratio(bnr[0], uni[0])
        ok &= dom and gain >= BINARY_GAIN          # nan compares False
        parts.append(f"(a) q={1 << s} eps_1 {SIM_GRID[s]}: uniform {_fmt_ser(uni)} vs binary "
                     f"{_fmt_ser(bnr)}, dominance {dom}, gain {gain:.2f}x (need {BINARY_GAIN}x)")
    uni, opt = curves[3, "uniform"], curves[3, "optimized"]
    dom = all(o <= u for o, u in zip(opt, uni))
    gain = _ratio(uni[0], opt[0])
    ok &= dom and gain >= OPTIMIZED_GAIN
    parts.append(f"(b) q=8: optimized {_fmt_ser(opt)} vs uniform {_fmt_ser(uni)}, dominance {dom}, "
                 f"gain {gain:.2f}x (need {OPTIMIZED_GAIN}x)")
    parts.append(f"slowest curve {max(times):.0f} s")
    _finish(11, bool(ok), "; ".join(parts))


CLI_CASES = {
    "capacity": ["capacity", "--s", "3", "--eps", "0.1,0.05,0.02"],
    "de-threshold": ["de-threshold", "--s", "2", "--direction", "1,1", "--tol", "1e-3"],
    "de-region": ["de-region", "--s", "2", "--resolution", "5", "--tol", "1e-3"],
    "simulate": ["simulate", "--s", "2", "--n", "108", "--labels", "optimized", "--label-runs", "100",
                 "--direction", "1,0", "--sweep", "0.1,0.15", "--trials", "200"],
    "simulate-binary": ["simulate", "--s", "2", "--n", "108", "--labels", "binary",
                        "--direction", "1,0", "--sweep", "0.1,0.15", "--trials", "200"],
    "label-optimize": ["label-optimize", "--s", "3", "--n", "216", "--runs", "300"],
    "ml-snbre": ["ml-snbre", "--s", "2", "--n", "64", "--rate", "0.75", "--direction", "1,0.1",
                 "--sweep", "0.05,0.1"],
    "ml-ldpc-bound": ["ml-ldpc-bound", "--s", "2", "--n", "54", "--direction", "1,0",
                      "--sweep", "0.02,0.05"],
    "graph-gen": ["graph-gen", "--s", "2", "--n", "54", "--dc", "27"],
}


def test_criterion_12_determinism(tmp_path, capsys):
    g = tmp_path / "g.qa"
    assert cli.main(["graph-gen", "--s", "2", "--n", "54", "--out", str(g)]) == 0
    cases = dict(CLI_CASES, **{"graph-validate": ["graph-validate", str(g)]})
    differ = []
    for name, argv in cases.items():
        blobs = []
        for threads in ("1", "2", "4"):
            out = tmp_path / f"{name}-{threads}.csv"
            code = cli.main(argv + ["--seed", "77", "--threads", threads, "--out", str(out)])
            assert code == 0, name
            side = out.with_name(out.name + ".json")
            blobs.append(out.read_bytes() + (side.read_bytes() if side.exists() else b""))
        if len(set(blobs)) != 1:
            differ.append(name)
    capsys.readouterr()
    ok = not differ
    _finish(12, ok, f"{len(cases)} commands x threads (1, 2, 4): "
                    + ("all byte-identical" if ok else f"differences in {differ}"))

"""Monte Carlo symbol-erasure-rate experiments.

Every trial transmits the all-zero codeword (decoding outcomes do not depend
on the codeword), draws its erasure pattern from its own seed stream and
decodes.  Streams are keyed by ``(grid point, trial)``, so results are
identical for any number of worker threads.
"""

from __future__ import annotations

import csv
import json
import math
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import QmbcParams, observed_sets, sample_types
from .code import DegreeDistribution, LabelDistribution, TannerGraph, sample_graph
from .decoder import DEFAULT_MAX_ITERS, decode, peel_binary
from .density import optimal_label_distribution
from .gf import field_for
from .labeling import optimize_labels

LABEL_MODES = ("uniform", "optimized", "single", "optimal", "explicit")
_GRAPH_KEY = 2**32 - 1
_LABEL_KEY = 2**32 - 2
_Z95 = 1.959963984540054


@dataclass
class ExperimentConfig:
    s: int
    dv: int = 3
    dc: int = 27
    n: int = 513
    label_mode: str = "uniform"
    grid: list = field(default_factory=list)       # list of epsilon vectors
    trials: int = 10_000
    max_iters: int = DEFAULT_MAX_ITERS
    seed: int = 0
    jmax: int = 1
    label_runs: int = 1000
    label_epsilon: float | None = None
    label_weights: list | None = None               # explicit mode, length q
    resample_graph: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.label_mode not in LABEL_MODES:
            raise ValueError(f"label_mode must be one of {LABEL_MODES}")
        if not self.grid:
            raise ValueError("epsilon grid is empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n < 1 or (self.n * self.dv) % self.dc:
            raise ValueError(f"n*dv={self.n * self.dv} is not divisible by dc={self.dc}")
        self.grid = [tuple(float(e) for e in eps) for eps in self.grid]
        for eps in self.grid:
            QmbcParams.make(self.s, eps)
        if self.label_mode == "explicit" and self.label_weights is None:
            raise ValueError("explicit label mode needs label_weights")

    @property
    def dd(self) -> DegreeDistribution:
        return DegreeDistribution.regular(self.dv, self.dc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = [list(g) for g in self.grid]
        d.pop("threads")        # results do not depend on it
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)


@dataclass
class SerPoint:
    epsilon: tuple
    trials: int
    erased_symbols: int
    ser: float
    ci_lo: float
    ci_hi: float
    outcomes: dict          # success / stalled / limit counts

    def __eq__(self, other):
        return isinstance(other, SerPoint) and self.row() == other.row()

    def row(self) -> list[str]:
        return ([_fmt(e) for e in self.epsilon]
                + [str(self.trials), str(self.erased_symbols), _fmt(self.ser), _fmt(self.ci_lo),
                   _fmt(self.ci_hi), str(self.outcomes.get("success", 0)),
                   str(self.outcomes.get("stalled", 0)), str(self.outcomes.get("limit", 0))])


def _fmt(x: float) -> str:
    return repr(float(x))


def wilson_interval(k: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


def _point(eps, trials, n, erased, outcomes) -> SerPoint:
    total = trials * n
    lo, hi = wilson_interval(erased, total)
    return SerPoint(tuple(eps), trials, erased, erased / total, lo, hi, outcomes)


def trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(point, trial))))


def _label_dist(cfg: ExperimentConfig) -> LabelDistribution:
    f = field_for(cfg.s)
    if cfg.label_mode == "single":
        return LabelDistribution.degenerate(f)
    if cfg.label_mode == "optimal":
        return optimal_label_distribution(cfg.s, cfg.jmax)
    if cfg.label_mode == "explicit":
        return LabelDistribution(f, cfg.label_weights)
    return LabelDistribution.uniform(f)


def build_graph(cfg: ExperimentConfig, key: tuple = ()) -> TannerGraph:
    """Graph for the sweep (``key`` distinguishes per-trial resamples)."""
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(_GRAPH_KEY,) + key)
    g = sample_graph(cfg.n, cfg.dd, _label_dist(cfg), np.random.default_rng(ss))
    if cfg.label_mode == "optimized":
        label_seed = np.random.SeedSequence(cfg.seed, spawn_key=(_LABEL_KEY,) + key).generate_state(1)[0]
        plan = optimize_labels(g, cfg.jmax, runs=cfg.label_runs, seed=int(label_seed),
                               epsilon=cfg.label_epsilon, dd=cfg.dd)
        g = plan.apply(g)
    return g


def _chunks(total: int, parts: int) -> list[range]:
    parts = max(1, min(parts, total))
    edges = np.linspace(0, total, parts + 1).astype(int)
    return [range(edges[i], edges[i + 1]) for i in range(parts)]


def _run_chunks(fn, trials: int, threads: int):
    chunks = _chunks(trials, threads * 4 if threads > 1 else 1)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(fn, chunks))
    else:
        parts = [fn(c) for c in chunks]
    return parts


def run_ser_sweep(cfg: ExperimentConfig, graph: TannerGraph | None = None) -> list[SerPoint]:
    """SER of the set decoder at every grid point."""
    if graph is None and not cfg.resample_graph:
        graph = build_graph(cfg)
    points = []
    for p, eps in enumerate(cfg.grid):
        params = QmbcParams.make(cfg.s, eps)

        def work(chunk, p=p, params=params):
            erased = 0
            outcomes = {"success": 0, "stalled": 0, "limit": 0}
            for t in chunk:
                g = graph if graph is not None else build_graph(cfg, (p, t))
                rng = trial_rng(cfg.seed, p, t)
                types = sample_types(params, cfg.n, rng)
                res = decode(g, observed_sets(np.zeros(cfg.n, dtype=np.int64), types, cfg.s),
                             max_iters=cfg.max_iters)
                erased += res.num_unresolved
                outcomes["limit" if res.outcome == "iteration-limit" else res.outcome] += 1
            return erased, outcomes

        parts = _run_chunks(work, cfg.trials, cfg.threads)
        erased = sum(e for e, _ in parts)
        outcomes = {k: sum(o[k] for _, o in parts) for k in ("success", "stalled", "limit")}
        points.append(_point(eps, cfg.trials, cfg.n, erased, outcomes))
    return points


def build_binary_graph(cfg: ExperimentConfig) -> TannerGraph:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(_GRAPH_KEY, 2))
    return sample_graph(cfg.s * cfg.n, cfg.dd, LabelDistribution.degenerate(field_for(1)),
                        np.random.default_rng(ss))


def bit_erasures(types: np.ndarray, s: int) -> np.ndarray:
    """Bit ``b`` of symbol ``i`` sits at ``i*s + b``; type ``j`` erases bits ``b < j``."""
    return (np.arange(s)[None, :] < np.asarray(types)[:, None]).ravel()


def run_binary_baseline(cfg: ExperimentConfig, graph: TannerGraph | None = None) -> list[SerPoint]:
    """Peeling decoder on a binary graph of length ``s*n`` fed the bit-level pattern.

    Trials reuse the symbol-level streams of ``run_ser_sweep``, so both sweeps
    see the same erasure types.  A symbol counts as erased if any of its bits
    is left unresolved.
    """
    graph = graph or build_binary_graph(cfg)
    points = []
    for p, eps in enumerate(cfg.grid):
        params = QmbcParams.make(cfg.s, eps)

        def work(chunk, p=p, params=params):
            erased = 0
            outcomes = {"success": 0, "stalled": 0, "limit": 0}
            for t in chunk:
                types = sample_types(params, cfg.n, trial_rng(cfg.seed, p, t))
                res = peel_binary(graph, bit_erasures(types, cfg.s))
                bad = int(np.count_nonzero(res.reshape(cfg.n, cfg.s).any(axis=1)))
                erased += bad
                outcomes["stalled" if bad else "success"] += 1
            return erased, outcomes

        parts = _run_chunks(work, cfg.trials, cfg.threads)
        erased = sum(e for e, _ in parts)
        outcomes = {k: sum(o[k] for _, o in parts) for k in ("success", "stalled", "limit")}
        points.append(_point(eps, cfg.trials, cfg.n, erased, outcomes))
    return points


# persistence ---------------------------------------------------------------

TAIL_COLUMNS = ["trials", "erased_symbols", "ser", "ci_lo", "ci_hi",
                "outcome_success", "outcome_stalled", "outcome_limit"]


class ResultParseError(ValueError):
    pass


def header(s: int) -> list[str]:
    return [f"eps_{j}" for j in range(1, s + 1)] + TAIL_COLUMNS


def write_points(points: Sequence[SerPoint], s: int, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header(s))
        for p in points:
            wr.writerow(p.row())


def read_points(path) -> list[SerPoint]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ResultParseError("empty result file")
    head = rows[0]
    eps_cols = [c for c in head if c.startswith("eps_")]
    s = len(eps_cols)
    for col in header(s):
        if col not in head:
            raise ResultParseError(f"missing column '{col}'")
    idx = {c: i for i, c in enumerate(head)}
    out = []
    for line, r in enumerate(rows[1:], start=2):
        try:
            eps = tuple(float(r[idx[f"eps_{j}"]]) for j in range(1, s + 1))
            out.append(SerPoint(eps, int(r[idx["trials"]]), int(r[idx["erased_symbols"]]),
                                float(r[idx["ser"]]), float(r[idx["ci_lo"]]), float(r[idx["ci_hi"]]),
                                {"success": int(r[idx["outcome_success"]]),
                                 "stalled": int(r[idx["outcome_stalled"]]),
                                 "limit": int(r[idx["outcome_limit"]])}))
        except (IndexError, ValueError) as exc:
            raise ResultParseError(f"line {line}: {exc}") from exc
    return out


def code_commit() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_sidecar(config: dict, path, extra: dict | None = None) -> None:
    payload = {"config": config, "commit": code_commit()}
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_sidecar(path) -> dict:
    return json.loads(Path(path).read_text())

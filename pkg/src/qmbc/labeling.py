"""Edge-label design for finite-length graphs.

Resolvable label sets make a check node decide several partially erased
neighbours on its own.  ``optimize_labels`` places such labels on the
stopping sets that the binary peeling decoder gets stuck on, leaving the
graph topology and every other label untouched.
"""

from __future__ import annotations

import csv
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .code import DegreeDistribution, TannerGraph
from .decoder import check_locally_resolvable, is_stopping_set, peel_binary
from .gf import FieldParams, scale_set, span_mask


def divisor_fallback(s: int, j_max: int) -> int:
    """Largest ``j <= j_max`` dividing ``s``."""
    if not 1 <= j_max <= s:
        raise ValueError(f"j_max={j_max} outside 1..{s}")
    return max(j for j in range(1, j_max + 1) if s % j == 0)


def resolvable_labels(field: FieldParams, j_max: int) -> list[int]:
    """``alpha**(t*j_max)`` for ``t < s/j_max``."""
    s = field.s
    if not 1 <= j_max <= s or s % j_max:
        raise ValueError(f"j_max={j_max} must divide s={s}")
    return [field.power(t * j_max) for t in range(s // j_max)]


def is_universal_pair(field: FieldParams, h1: int, h2: int) -> bool:
    """Brute force over every ``(j1, j2)`` with ``j1 + j2 <= s``."""
    s = field.s
    return all(check_locally_resolvable([h1, h2], [j1, j2], field)
               for j1 in range(s + 1) for j2 in range(s + 1 - j1))


@dataclass(frozen=True)
class ExclusionStep:
    k: int              # h * <w_1..w_k> must avoid <w_1..w_{s-k}>
    discarded: tuple    # candidates removed at this step
    remaining: tuple


def exclusion_chain(field: FieldParams, basis: Sequence[int] | None = None) -> list[ExclusionStep]:
    """Candidate ``h`` for the pair ``(1, h)`` after each exclusion step.

    Starts from every field element.  Step ``k`` drops the ``h`` for which
    ``h * span(w_1..w_k)`` meets ``span(w_1..w_{s-k})`` outside zero.
    """
    s = field.s
    basis = list(basis) if basis is not None else [1 << i for i in range(s)]
    if len(basis) != s or span_mask(basis).bit_count() != field.q:
        raise ValueError("basis must contain s linearly independent elements")
    cand = list(range(field.q))
    steps = []
    for k in range(1, s):
        low = span_mask(basis[:s - k])
        top = span_mask(basis[:k])
        keep, drop = [], []
        for h in cand:
            img = scale_set(field, h, top) if h else 1
            # h = 0 collapses the span onto {0}: never resolvable
            (keep if h and (img & low) == 1 else drop).append(h)
        cand = keep
        steps.append(ExclusionStep(k, tuple(drop), tuple(keep)))
    return steps


def universal_pair(field: FieldParams, basis: Sequence[int] | None = None) -> tuple[int, int]:
    """``(1, h)`` with ``h`` the smallest survivor of the exclusion chain."""
    if field.s == 1:
        return 1, 1
    return 1, min(exclusion_chain(field, basis)[-1].remaining)


# ---------------------------------------------------------------------------
# stopping-set driven relabeling

@dataclass
class StoppingSetSample:
    sets: list                       # sorted tuples of variable indices, deduplicated
    rank: np.ndarray                 # occurrences per variable over the distinct sets
    runs: int
    epsilon: float


@dataclass
class LabelingPlan:
    overrides: dict = field(default_factory=dict)     # edge -> new label
    audit: list = field(default_factory=list)         # (check, step, ((edge, label), ...))
    sample: StoppingSetSample | None = None

    def __len__(self) -> int:
        return len(self.overrides)

    def apply(self, graph: TannerGraph) -> TannerGraph:
        labels = graph.edge_label.copy()
        for e, h in self.overrides.items():
            labels[e] = h
        return graph.with_labels(labels)

    def rows(self, graph: TannerGraph):
        """``(check_index, edge_position, old_label, new_label, step)`` in edge order."""
        step_of = {}
        for c, step, pairs in self.audit:
            for e, _ in pairs:
                step_of.setdefault(e, step)
        for e in sorted(self.overrides):
            c = int(graph.edge_check[e])
            pos = int(np.flatnonzero(graph.check_edges[c] == e)[0])
            yield c, pos, int(graph.edge_label[e]), int(self.overrides[e]), step_of[e]

    def write_csv(self, graph: TannerGraph, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["check_index", "edge_position", "old_label", "new_label", "step"])
            wr.writerows(self.rows(graph))


def collect_stopping_sets(graph: TannerGraph, epsilon: float, runs: int, seed: int = 0,
                          threads: int = 1) -> StoppingSetSample:
    """Peel ``runs`` random BEC(epsilon) patterns and keep the distinct residuals.

    Run ``r`` draws its pattern from its own stream, so the sample does not
    depend on ``threads``.
    """
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must be a probability")
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(runs)

    def one(r):
        rng = np.random.default_rng(children[r])
        res = peel_binary(graph, rng.random(graph.n) < epsilon)
        return tuple(np.flatnonzero(res).tolist())

    if threads > 1 and runs > 1:
        with ThreadPoolExecutor(threads) as ex:
            found = list(ex.map(one, range(runs)))
    else:
        found = [one(r) for r in range(runs)]
    distinct = sorted({f for f in found if f}, key=lambda t: (len(t), t))
    for st in distinct:
        if not is_stopping_set(graph, st):
            raise AssertionError(f"peeling residual {st[:8]}... is not a stopping set")
    rank = np.zeros(graph.n, dtype=np.int64)
    for st in distinct:
        rank[list(st)] += 1
    return StoppingSetSample(distinct, rank, runs, float(epsilon))


def default_peeling_epsilon(dd: DegreeDistribution) -> float:
    from .density import bec_threshold
    return bec_threshold(dd)


def optimize_labels(graph: TannerGraph, j_max: int, runs: int = 1000, seed: int = 0,
                    epsilon: float | None = None, threads: int = 1,
                    dd: DegreeDistribution | None = None) -> LabelingPlan:
    """Relabel check edges inside the stopping sets found by peeling.

    Parameters
    ----------
    graph
        Graph with its initial (typically uniform) labels.
    j_max
        Dominant partial-erasure type; replaced by the largest divisor of
        ``s`` not above it.
    runs
        Number of peeling trials used to find stopping sets.
    epsilon
        Erasure probability of the peeling trials.  Defaults to the BEC
        threshold of ``dd`` (or of the graph's own regular degrees).

    Audit rows carry a step number: 3 for checks with exactly two edges in
    the union of sets, 4 for checks with up to ``s/j`` such edges, 5 for the
    per-set sweep.
    """
    f = graph.field
    s = f.s
    j = divisor_fallback(s, j_max)
    kmax = s // j
    if epsilon is None:
        if dd is None:
            dd = DegreeDistribution.regular(int(graph.var_degrees.max()), int(graph.check_degrees.max()))
        epsilon = default_peeling_epsilon(dd)
    sample = collect_stopping_sets(graph, epsilon, runs, seed, threads)
    plan = LabelingPlan(sample=sample)
    if not sample.sets:
        return plan
    rank = sample.rank.copy()
    in_sigma = rank > 0
    pair = universal_pair(f)
    kres = resolvable_labels(f, j)
    done_checks: set[int] = set()

    def relabel(c, edges, step):
        labels = pair if len(edges) == 2 else kres[:len(edges)]
        pairs = tuple((int(e), int(h)) for e, h in zip(edges, labels))
        for e, h in pairs:
            plan.overrides[e] = h
        plan.audit.append((int(c), step, pairs))
        rank[graph.edge_var[list(edges)]] = 0
        done_checks.add(int(c))

    ce = graph.check_edges
    # checks meeting the union of stopping sets in 2..kmax edges (steps 3 and 4)
    valid = ce >= 0
    sig_edge = np.where(valid, in_sigma[graph.edge_var[np.where(valid, ce, 0)]], False)
    sig_deg = sig_edge.sum(axis=1)
    for c in np.flatnonzero(sig_deg == 2):
        relabel(c, ce[c][sig_edge[c]], 3)
    if kmax > 2:
        for c in np.flatnonzero((sig_deg > 2) & (sig_deg <= kmax)):
            relabel(c, ce[c][sig_edge[c]], 4)
    # step 5: remaining checks inside each set, smallest set first
    for st in sample.sets:
        members = np.zeros(graph.n, dtype=bool)
        members[list(st)] = True
        cnt = np.bincount(graph.edge_check[members[graph.edge_var]], minlength=graph.m)
        for c in np.flatnonzero(cnt >= 2):
            if c in done_checks:
                continue
            edges = [e for e in ce[c] if e >= 0 and members[graph.edge_var[e]] and rank[graph.edge_var[e]] > 0]
            kp = min(len(edges), kmax)
            if kp <= 1:
                continue
            edges.sort(key=lambda e: (-rank[graph.edge_var[e]], graph.edge_var[e]))
            chosen = sorted(edges[:kp], key=lambda e: graph.edge_var[e])
            relabel(c, np.array(chosen), 5)
    return plan


def maximal_resolvable_violation(field: FieldParams, labels: Sequence[int], j_max: int):
    """A type assignment (each ``<= j_max``) that ``labels`` fail to resolve, or None."""
    for types in itertools.product(range(j_max + 1), repeat=len(labels)):
        if not check_locally_resolvable(labels, types, field):
            return types
    return None

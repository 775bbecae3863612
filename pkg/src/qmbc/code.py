"""GF(q) LDPC codes: degree distributions, labelled Tanner graphs, qalist I/O."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .gf import FieldParams, field_for


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective degree distribution ``{degree: fraction of edges}``."""

    lam: Mapping[int, float]
    rho: Mapping[int, float]

    def __post_init__(self):
        for name, fam in (("lambda", self.lam), ("rho", self.rho)):
            if not fam or any(d < 1 or c < 0 for d, c in fam.items()):
                raise ValueError(f"invalid {name} coefficients {dict(fam)}")
            if abs(sum(fam.values()) - 1) > 1e-9:
                raise ValueError(f"{name} coefficients sum to {sum(fam.values())}, not 1")
        object.__setattr__(self, "lam", {int(d): float(c) for d, c in sorted(self.lam.items()) if c > 0})
        object.__setattr__(self, "rho", {int(d): float(c) for d, c in sorted(self.rho.items()) if c > 0})

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistribution":
        return cls({dv: 1.0}, {dc: 1.0})

    @property
    def dv_max(self) -> int:
        return max(self.lam)

    @property
    def dc_max(self) -> int:
        return max(self.rho)

    @property
    def is_regular(self) -> bool:
        return len(self.lam) == 1 and len(self.rho) == 1

    def lambda_poly(self, x):
        return sum(c * x ** (d - 1) for d, c in self.lam.items())

    def rho_poly(self, x):
        return sum(c * x ** (d - 1) for d, c in self.rho.items())

    def variable_node_fractions(self) -> dict[int, float]:
        return edge_to_node(self.lam)

    def check_node_fractions(self) -> dict[int, float]:
        return edge_to_node(self.rho)

    @classmethod
    def from_node_fractions(cls, var_nodes: Mapping[int, float], chk_nodes: Mapping[int, float]):
        return cls(node_to_edge(var_nodes), node_to_edge(chk_nodes))


def edge_to_node(edge: Mapping[int, float]) -> dict[int, float]:
    tot = sum(c / d for d, c in edge.items())
    return {d: (c / d) / tot for d, c in edge.items()}


def node_to_edge(node: Mapping[int, float]) -> dict[int, float]:
    tot = sum(c * d for d, c in node.items())
    return {d: c * d / tot for d, c in node.items()}


def design_rate(dd: DegreeDistribution) -> float:
    return 1.0 - sum(c / d for d, c in dd.rho.items()) / sum(c / d for d, c in dd.lam.items())


class LabelDistribution:
    """Probability weight for each non-zero field element."""

    def __init__(self, field: FieldParams, weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        if w.shape != (field.q,):
            raise ValueError(f"need {field.q} weights (index 0 unused), got {w.shape}")
        if w[0] != 0 or np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
            raise ValueError("label weights must be a distribution over non-zero elements")
        self.field = field
        self.weights = w / w.sum()
        self.weights.setflags(write=False)

    @classmethod
    def uniform(cls, field: FieldParams) -> "LabelDistribution":
        w = np.full(field.q, 1.0 / (field.q - 1))
        w[0] = 0.0
        return cls(field, w)

    @classmethod
    def degenerate(cls, field: FieldParams, label: int = 1) -> "LabelDistribution":
        return cls.over(field, [label])

    @classmethod
    def over(cls, field: FieldParams, labels: Sequence[int]) -> "LabelDistribution":
        """Uniform on the given labels (repeats add weight)."""
        w = np.zeros(field.q)
        for h in labels:
            if not 0 < h < field.q:
                raise ValueError(f"label {h} is not a non-zero element of GF({field.q})")
            w[h] += 1.0
        return cls(field, w / w.sum())

    @property
    def support(self) -> list[int]:
        return [int(h) for h in np.flatnonzero(self.weights)]

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        cdf = np.cumsum(self.weights)
        u = rng.random(size)
        return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), self.field.q - 1)

    def __repr__(self) -> str:
        return f"LabelDistribution(q={self.field.q}, {{{', '.join(f'{h}: {self.weights[h]:.4g}' for h in self.support)}}})"


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Bipartite graph with a non-zero label on every edge.

    Edges are stored in canonical order: by check, then by variable index.
    """

    n: int
    m: int
    field: FieldParams
    edge_check: np.ndarray
    edge_var: np.ndarray
    edge_label: np.ndarray

    def __post_init__(self):
        ec = np.asarray(self.edge_check, dtype=np.int64)
        ev = np.asarray(self.edge_var, dtype=np.int64)
        el = np.asarray(self.edge_label, dtype=np.int64)
        if not (ec.shape == ev.shape == el.shape) or ec.ndim != 1:
            raise ValueError("edge arrays must be 1-D and of equal length")
        if len(ec) and (ec.min() < 0 or ec.max() >= self.m or ev.min() < 0 or ev.max() >= self.n):
            raise ValueError("edge endpoint out of range")
        if np.any(el <= 0) or np.any(el >= self.field.q):
            raise ValueError("edge labels must be non-zero field elements")
        order = np.lexsort((ev, ec))
        ec, ev, el = ec[order], ev[order], el[order]
        if len(ec) > 1 and np.any((ec[1:] == ec[:-1]) & (ev[1:] == ev[:-1])):
            raise ValueError("parallel edges are not allowed")
        for name, arr in (("edge_check", ec), ("edge_var", ev), ("edge_label", el)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_edges(self) -> int:
        return len(self.edge_check)

    @cached_property
    def check_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_check, minlength=self.m)

    @cached_property
    def var_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.n)

    @cached_property
    def check_edges(self) -> np.ndarray:
        """``(m, dc_max)`` edge ids per check, padded with -1."""
        return _padded(self.edge_check, self.m, np.arange(self.num_edges))

    @cached_property
    def var_edges(self) -> np.ndarray:
        """``(n, dv_max)`` edge ids per variable, padded with -1."""
        order = np.lexsort((self.edge_check, self.edge_var))
        return _padded(self.edge_var[order], self.n, order)

    def neighbors_of_check(self, c: int) -> np.ndarray:
        e = self.check_edges[c]
        return self.edge_var[e[e >= 0]]

    def neighbors_of_var(self, v: int) -> np.ndarray:
        e = self.var_edges[v]
        return self.edge_check[e[e >= 0]]

    def with_labels(self, labels: np.ndarray) -> "TannerGraph":
        return TannerGraph(self.n, self.m, self.field, self.edge_check, self.edge_var, labels)

    def dense(self) -> np.ndarray:
        """Parity-check matrix as an ``(m, n)`` integer array."""
        h = np.zeros((self.m, self.n), dtype=np.int64)
        h[self.edge_check, self.edge_var] = self.edge_label
        return h

    @classmethod
    def from_dense(cls, h: np.ndarray, field: FieldParams) -> "TannerGraph":
        h = np.asarray(h, dtype=np.int64)
        c, v = np.nonzero(h)
        return cls(h.shape[1], h.shape[0], field, c, v, h[c, v])

    def __eq__(self, other):
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (self.n, self.m, self.field) == (other.n, other.m, other.field) and all(
            np.array_equal(a, b) for a, b in ((self.edge_check, other.edge_check),
                                              (self.edge_var, other.edge_var),
                                              (self.edge_label, other.edge_label)))


def _padded(keys: np.ndarray, rows: int, values: np.ndarray) -> np.ndarray:
    counts = np.bincount(keys, minlength=rows)
    width = int(counts.max()) if len(counts) and counts.size else 0
    out = np.full((rows, max(width, 1)), -1, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    pos = np.arange(len(keys)) - np.repeat(starts, counts)
    out[keys, pos] = values
    return out


class InfeasibleDegreeSequence(ValueError):
    pass


def _node_counts(n: int, fractions: Mapping[int, float], what: str) -> list[int]:
    degs = []
    for d, frac in sorted(fractions.items()):
        cnt = n * frac
        if abs(cnt - round(cnt)) > 1e-6:
            raise InfeasibleDegreeSequence(f"{what}: {n} x {frac} nodes of degree {d} is not integral")
        degs += [d] * int(round(cnt))
    return degs


def sample_graph(n: int, dd: DegreeDistribution, label_dist: LabelDistribution,
                 rng: np.random.Generator | int, max_repair: int = 1000,
                 max_restarts: int = 100) -> TannerGraph:
    """Configuration-model graph with parallel edges repaired by re-pairing.

    Sockets are paired by a uniform permutation.  Each parallel edge has its
    check socket swapped with a uniformly chosen other socket when the swap
    creates no new conflict; if ``max_repair`` swaps do not clear all
    conflicts the permutation is redrawn.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    vdeg = _node_counts(n, dd.variable_node_fractions(), "variable nodes")
    num_edges = sum(vdeg)
    chk_frac = dd.check_node_fractions()
    edges_per_check = sum(f * d for d, f in chk_frac.items())
    m_float = num_edges / edges_per_check
    if abs(m_float - round(m_float)) > 1e-6:
        raise InfeasibleDegreeSequence(f"{num_edges} edges cannot be split into checks of mean degree {edges_per_check}")
    m = int(round(m_float))
    cdeg = _node_counts(m, chk_frac, "check nodes")
    if sum(cdeg) != num_edges:
        raise InfeasibleDegreeSequence("variable and check socket counts differ")
    if max(cdeg) > n or max(vdeg) > m:
        raise InfeasibleDegreeSequence("degrees exceed the number of nodes on the other side")
    var_sock = np.repeat(np.arange(n), vdeg)
    chk_sock0 = np.repeat(np.arange(m), cdeg)
    for _ in range(max_restarts):
        chk_sock = chk_sock0[rng.permutation(num_edges)]
        if _repair_parallel(var_sock, chk_sock, m, rng, max_repair):
            labels = label_dist.sample(num_edges, rng)
            return TannerGraph(n, m, label_dist.field, chk_sock, var_sock, labels)
    raise InfeasibleDegreeSequence("could not sample a graph without parallel edges")


def _repair_parallel(var_sock, chk_sock, m, rng, max_repair) -> bool:
    key = var_sock * m + chk_sock
    seen: dict[int, int] = {}
    bad = []
    for e, k in enumerate(key.tolist()):
        if k in seen:
            bad.append(e)
        else:
            seen[k] = e
    count = {}
    for k in key.tolist():
        count[k] = count.get(k, 0) + 1
    tries = 0
    E = len(key)
    while bad:
        if tries >= max_repair:
            return False
        tries += 1
        e = bad[-1]
        f = int(rng.integers(E))
        ve, vf = var_sock[e], var_sock[f]
        ce, cf = chk_sock[e], chk_sock[f]
        if ce == cf:
            continue
        k_new_e, k_new_f = ve * m + cf, vf * m + ce
        if count.get(k_new_e, 0) or count.get(k_new_f, 0):
            continue
        for k in (ve * m + ce, vf * m + cf):
            count[k] -= 1
        count[k_new_e] = 1
        count[k_new_f] = 1
        chk_sock[e], chk_sock[f] = cf, ce
        bad.pop()
    return True


# ---------------------------------------------------------------------------
# qalist

class QalistError(ValueError):
    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def format_qalist(graph: TannerGraph) -> str:
    vdeg, cdeg = graph.var_degrees, graph.check_degrees
    dv, dc = int(vdeg.max(initial=0)), int(cdeg.max(initial=0))
    lines = [f"{graph.n} {graph.m} {graph.field.q}", f"{dv} {dc}",
             " ".join(map(str, vdeg)), " ".join(map(str, cdeg))]
    for v in range(graph.n):
        nb = sorted(int(c) + 1 for c in graph.neighbors_of_var(v))
        lines.append(" ".join(map(str, nb + [0] * (dv - len(nb)))))
    for c in range(graph.m):
        nb = [int(v) + 1 for v in graph.neighbors_of_check(c)]
        lines.append(" ".join(map(str, nb + [0] * (dc - len(nb)))))
    lines.append("labels:")
    for c in range(graph.m):
        e = graph.check_edges[c]
        lines.append(" ".join(str(int(h)) for h in graph.edge_label[e[e >= 0]]))
    return "\n".join(lines) + "\n"


def write_graph(graph: TannerGraph, path: str | Path) -> None:
    Path(path).write_text(format_qalist(graph))


def read_graph(path: str | Path) -> TannerGraph:
    return parse_qalist(Path(path).read_text())


def parse_qalist(text: str) -> TannerGraph:
    raw = text.splitlines()
    rows: list[tuple[int, list[tuple[int, int]]]] = []
    label_at = None
    for ln, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.lower() == "labels:":
            label_at = len(rows)
            rows.append((ln, []))
            continue
        toks = []
        col = 0
        for tok in line.split():
            col = line.index(tok, col) + 1
            try:
                toks.append((int(tok), col))
            except ValueError:
                raise QalistError(f"expected an integer, got {tok!r}", ln, col) from None
            col += len(tok) - 1
        rows.append((ln, toks))

    def need(i, what):
        if i >= len(rows) or (label_at is not None and i >= label_at):
            last = rows[-1][0] if rows else 0
            raise QalistError(f"unexpected end of input, missing {what}", last + 1)
        return rows[i]

    ln, head = need(0, "header")
    if len(head) not in (2, 3):
        raise QalistError("header must be 'n m' or 'n m q'", ln, 1)
    n, m = head[0][0], head[1][0]
    q = head[2][0] if len(head) == 3 else 2
    s = q.bit_length() - 1
    if q < 2 or q != 1 << s:
        raise QalistError(f"q={q} is not a power of two", ln, head[2][1] if len(head) == 3 else 1)
    field = field_for(s)
    ln, maxes = need(1, "maximum degrees")
    if len(maxes) != 2:
        raise QalistError("expected two maximum degrees", ln, 1)
    ln_v, vdeg = need(2, "variable degrees")
    ln_c, cdeg = need(3, "check degrees")
    if len(vdeg) != n:
        raise QalistError(f"expected {n} variable degrees, got {len(vdeg)}", ln_v, 1)
    if len(cdeg) != m:
        raise QalistError(f"expected {m} check degrees, got {len(cdeg)}", ln_c, 1)
    var_nb = []
    for v in range(n):
        ln, toks = need(4 + v, f"adjacency of variable {v + 1}")
        nb = [(x, c) for x, c in toks if x != 0]
        if len(nb) != vdeg[v][0]:
            raise QalistError(f"variable {v + 1} lists {len(nb)} checks, degree says {vdeg[v][0]}", ln, 1)
        for x, c in nb:
            if not 1 <= x <= m:
                raise QalistError(f"check index {x} out of range 1..{m}", ln, c)
        var_nb.append(sorted(x - 1 for x, _ in nb))
    edge_c, edge_v, label_rows = [], [], []
    for c in range(m):
        ln, toks = need(4 + n + c, f"adjacency of check {c + 1}")
        nb = [(x, col) for x, col in toks if x != 0]
        if len(nb) != cdeg[c][0]:
            raise QalistError(f"check {c + 1} lists {len(nb)} variables, degree says {cdeg[c][0]}", ln, 1)
        for x, col in nb:
            if not 1 <= x <= n:
                raise QalistError(f"variable index {x} out of range 1..{n}", ln, col)
            if c not in var_nb[x - 1]:
                raise QalistError(f"edge ({c + 1}, {x}) missing from variable block", ln, col)
            edge_c.append(c)
            edge_v.append(x - 1)
        label_rows.append([x - 1 for x, _ in nb])
    if len(edge_c) != sum(len(nb) for nb in var_nb):
        raise QalistError("variable and check adjacency blocks disagree", ln)
    labels = []
    if label_at is None:
        if 4 + n + m != len(rows):
            raise QalistError("trailing data after adjacency blocks", rows[4 + n + m][0], 1)
        labels = [1] * len(edge_c)
    else:
        if label_at != 4 + n + m:
            raise QalistError("'labels:' section in the wrong place", rows[label_at][0], 1)
        for c in range(m):
            i = label_at + 1 + c
            if i >= len(rows):
                raise QalistError(f"missing label row for check {c + 1}", rows[-1][0] + 1)
            ln, toks = rows[i]
            if len(toks) != len(label_rows[c]):
                raise QalistError(f"check {c + 1} has {len(label_rows[c])} edges but {len(toks)} labels", ln, 1)
            for x, col in toks:
                if not 1 <= x < q:
                    raise QalistError(f"label {x} is not a non-zero element of GF({q})", ln, col)
                labels.append(x)
        if label_at + 1 + m != len(rows):
            raise QalistError("trailing data after label section", rows[label_at + 1 + m][0], 1)
    try:
        return TannerGraph(n, m, field, np.array(edge_c), np.array(edge_v), np.array(labels))
    except ValueError as exc:
        raise QalistError(str(exc), rows[0][0]) from None

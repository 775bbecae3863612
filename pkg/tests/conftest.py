import numpy as np
import pytest

from qmbc.code import DegreeDistribution, LabelDistribution, sample_graph
from qmbc.gf import field_for


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_graph(n, dv, dc, s, rng, labels="uniform"):
    f = field_for(s)
    dist = LabelDistribution.uniform(f) if labels == "uniform" else LabelDistribution.degenerate(f)
    return sample_graph(n, DegreeDistribution.regular(dv, dc), dist, rng)


def random_codeword(graph, rng):
    """Uniform codeword from the null space of the graph's matrix over GF(q)."""
    f = graph.field
    h = graph.dense().copy()
    m, n = h.shape
    pivots = []
    r = 0
    for c in range(n):
        rows = [i for i in range(r, m) if h[i, c]]
        if not rows:
            continue
        h[[r, rows[0]]] = h[[rows[0], r]]
        inv = f.inv(int(h[r, c]))
        h[r] = f.mul_table[inv][h[r]]
        for i in range(m):
            if i != r and h[i, c]:
                h[i] ^= f.mul_table[int(h[i, c])][h[r]]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n) if c not in pivots]
    x = np.zeros(n, dtype=np.int64)
    x[free] = rng.integers(0, f.q, size=len(free))
    for i, c in enumerate(pivots):
        acc = 0
        for k in free:
            acc ^= int(f.mul_table[int(h[i, k]), x[k]])
        x[c] = acc
    assert not np.any(syndrome(graph, x))
    return x


def syndrome(graph, x):
    f = graph.field
    out = np.zeros(graph.m, dtype=np.int64)
    prods = f.mul_table[graph.edge_label, np.asarray(x)[graph.edge_var]]
    np.bitwise_xor.at(out, graph.edge_check, prods.astype(np.int64))
    return out


# acceptance log: one line per criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
    print(ACCEPTANCE_LINES[number])
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmbc.channel import QmbcParams, capacity, mutual_information_numeric, transmit
from qmbc.gf import coset_decompose, elements


def _random_eps(rng, s):
    w = rng.dirichlet(np.ones(s + 1))
    return tuple(w[1:])


def test_params_validation():
    with pytest.raises(ValueError):
        QmbcParams.make(2, (0.7, 0.7))
    with pytest.raises(ValueError):
        QmbcParams.make(2, (-0.1, 0.1))
    with pytest.raises(ValueError):
        QmbcParams.make(3, (0.1, 0.1))
    p = QmbcParams.make(2, (0.1, 0.2))
    assert p.eps0 == pytest.approx(0.7)
    assert p.full.sum() == pytest.approx(1.0)


def test_no_erasure_gives_singletons():
    out = transmit(np.arange(16), QmbcParams.make(4, (0, 0, 0, 0)), 0)
    assert np.array_equal(out.sets, np.uint64(1) << np.arange(16, dtype=np.uint64))
    assert np.all(out.types == 0)


def test_type1_block_q4():
    out = transmit([2], QmbcParams.make(2, (1.0, 0.0)), 0)
    assert elements(int(out.sets[0])) == [2, 3]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_outputs_are_cosets_containing_symbol(s, seed):
    rng = np.random.default_rng(seed)
    params = QmbcParams.make(s, _random_eps(rng, s))
    x = rng.integers(0, 1 << s, size=200)
    out = transmit(x, params, rng)
    for xi, j, m in zip(x, out.types, out.sets):
        m = int(m)
        assert m >> int(xi) & 1
        assert m.bit_count() == 1 << j
        c = coset_decompose(m)
        assert c is not None and c.subgroup.mask == (1 << (1 << j)) - 1


def test_type_sets_partition_alphabet():
    s = 3
    for j in range(s + 1):
        params = QmbcParams.make(s, tuple(1.0 if k == j else 0.0 for k in range(1, s + 1)))
        sets = {int(m) for m in transmit(np.arange(8), params, 0).sets}
        assert len(sets) == 8 >> j
        assert sum(m.bit_count() for m in sets) == 8


def test_type_frequencies():
    params = QmbcParams.make(3, (0.1, 0.05, 0.2))
    n = 10**6
    types = transmit(np.zeros(n, dtype=np.int64), params, 7).types
    counts = np.bincount(types, minlength=4)
    p = params.full
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 4 * sigma)


def test_capacity_special_cases():
    assert capacity(QmbcParams.make(3, (0, 0, 1.0))) == 0
    assert capacity(QmbcParams.make(3, (0, 0, 0))) == 1
    assert capacity(QmbcParams.make(4, (0, 0, 0, 0.3))) == pytest.approx(0.7)
    # rate 8/9 with eps_2 = eps_1/10 crosses capacity at eps_1 = 0.185
    e1 = (1 / 9) / (0.5 + 0.1)
    assert capacity(QmbcParams.make(2, (e1, e1 / 10))) == pytest.approx(8 / 9)
    assert round(e1, 3) == 0.185


@pytest.mark.parametrize("s", [2, 3])
def test_uniform_input_mutual_information(s):
    rng = np.random.default_rng(s)
    q = 1 << s
    for _ in range(50):
        params = QmbcParams.make(s, _random_eps(rng, s))
        mi = mutual_information_numeric(params, np.full(q, 1 / q))
        assert abs(mi / s - capacity(params)) < 1e-9


def test_mutual_information_maximised_by_uniform():
    rng = np.random.default_rng(3)
    params = QmbcParams.make(3, (0.1, 0.2, 0.05))
    u = np.full(8, 1 / 8)
    best = mutual_information_numeric(params, u)
    for _ in range(100):
        p = u + rng.normal(scale=0.02, size=8)
        p = np.clip(p, 0, None)
        p /= p.sum()
        assert mutual_information_numeric(params, p) <= best + 1e-12
    det = np.zeros(8)
    det[0] = 1
    assert mutual_information_numeric(params, det) == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        mutual_information_numeric(params, np.full(8, 0.2))

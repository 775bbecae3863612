"""Finite-length ML erasure-decoding analysis.

Covers the random-matrix ensemble (i.i.d. uniform parity-check entries) and a
union bound for regular LDPC ensembles.  Sums over erasure profiles
``(|E_0|, ..., |E_s|)`` are done in the log domain and truncated to profiles
within ``TRUNCATION_NATS`` of the most likely one; the dropped probability
mass is reported with every result.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .channel import QmbcParams, sample_types
from .decoder import ml_unique
from .gf import FieldParams, channel_mask, elements, field_for

TRUNCATION_NATS = 60.0
RANDOM_ORDERINGS = 100


# chi table -------------------------------------------------------------------

def compute_chi(field: FieldParams) -> np.ndarray:
    """``chi[j, j']`` = number of distinct ``a / b``, ``a`` in ``M_0^j``, ``b`` in ``M_0^{j'}`` minus zero.

    Row and column 0 are set to 1: ``M_0^0 = {0}`` contributes no factor.
    """
    s = field.s
    chi = np.ones((s + 1, s + 1), dtype=np.int64)
    for j in range(1, s + 1):
        num = elements(channel_mask(j, s))
        for jp in range(1, s + 1):
            den = [b for b in elements(channel_mask(jp, s)) if b]
            chi[j, jp] = len({field.div(a, b) for a in num for b in den})
    return chi


# psi -------------------------------------------------------------------------

def _profile_types(profile: Sequence[int]) -> np.ndarray:
    """Type vector with ``profile[j]`` copies of ``j`` for ``j >= 1``, non-increasing."""
    return np.repeat(np.arange(len(profile) - 1, 0, -1), [profile[j] for j in range(len(profile) - 1, 0, -1)])


def _log_one_minus(log_terms: np.ndarray) -> float:
    """``log prod (1 - exp(t))^+``; -inf once any factor hits zero."""
    if log_terms.size == 0:
        return 0.0
    if np.any(log_terms >= 0):
        return -math.inf
    return float(np.sum(np.log1p(-np.exp(log_terms))))


def _log_psi_order(order: np.ndarray, log_chi: np.ndarray, log_qr: float) -> float:
    """``log`` of the sequential-exclusion product for one column ordering."""
    if order.size == 0:
        return 0.0
    ntypes = log_chi.shape[0]
    onehot = np.zeros((order.size, ntypes))
    onehot[np.arange(order.size), order] = 1.0
    before = np.cumsum(onehot, axis=0) - onehot        # counts of each type among l < i
    log_excl = np.einsum("it,ti->i", before, log_chi[:, order])
    return _log_one_minus(log_excl - log_qr)


def psi_lower_bound(profile: Sequence[int], n_minus_k: int, chi: np.ndarray,
                    orderings: int = RANDOM_ORDERINGS, seed: int = 0) -> float:
    """Best sequential-exclusion lower bound over a few column orderings.

    Tries the non-increasing and non-decreasing type orders and ``orderings``
    random permutations; any ordering gives a valid lower bound.
    """
    return math.exp(log_psi_lower_bound(profile, n_minus_k, chi, orderings, seed))


def log_psi_lower_bound(profile, n_minus_k, chi, orderings=RANDOM_ORDERINGS, seed=0) -> float:
    s = chi.shape[0] - 1
    log_chi = np.log(chi.astype(float))
    log_qr = n_minus_k * s * math.log(2)
    base = _profile_types(profile)
    cands = [base, base[::-1]]
    rng = np.random.default_rng(seed)
    cands += [rng.permutation(base) for _ in range(orderings if len(set(base.tolist())) > 1 else 0)]
    return max(_log_psi_order(o, log_chi, log_qr) for o in cands)


def is_subfield(mask: int, field: FieldParams) -> bool:
    elems = elements(mask)
    return all((1 << field.mul(a, b)) & mask for a in elems for b in elems)


class PreconditionError(ValueError):
    pass


def check_subfield_chain(types: Sequence[int], field: FieldParams) -> None:
    """Raise unless the types form a divisibility chain of subfield channel sets."""
    s = field.s
    js = sorted(set(int(j) for j in types if j))
    for j in js:
        if s % j:
            raise PreconditionError(f"type j={j} does not divide s={s}")
        if not is_subfield(channel_mask(j, s), field):
            raise PreconditionError(f"type j={j}: channel set is not a subfield in this representation")
    for a, b in itertools.combinations(js, 2):
        if b % a:
            raise PreconditionError(f"type j={a} does not divide j={b}")


def psi_exact_subfield(profile: Sequence[int], n_minus_k: int, field: FieldParams) -> float:
    """Exact probability that the erased columns are partially independent.

    Requires the erasure types to form a chain of nested subfields.
    """
    return math.exp(log_psi_exact_subfield(profile, n_minus_k, field))


def log_psi_exact_subfield(profile, n_minus_k, field) -> float:
    if len(profile) != field.s + 1:
        raise ValueError(f"profile needs {field.s + 1} entries")
    check_subfield_chain([j for j in range(1, field.s + 1) if profile[j]], field)
    order = _profile_types(profile)
    excl = np.concatenate(([0], np.cumsum(order)[:-1])) if order.size else order
    return _log_one_minus((excl - n_minus_k * field.s) * math.log(2))


# profile sums -----------------------------------------------------------------

def _log_multinomial(n: int, counts: np.ndarray, log_eps: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts)
    with np.errstate(invalid="ignore"):
        terms = np.where(counts > 0, counts * log_eps, 0.0)
    return gammaln(n + 1) - gammaln(counts + 1).sum(axis=-1) + terms.sum(axis=-1)


def _log_binom_pmf(n: int, k: np.ndarray, p: float) -> np.ndarray:
    if p <= 0:
        return np.where(k == 0, 0.0, -np.inf)
    if p >= 1:
        return np.where(k == n, 0.0, -np.inf)
    return (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
            + k * math.log(p) + (n - k) * math.log1p(-p))


def iter_profiles(n: int, eps_full: Sequence[float], nats: float = TRUNCATION_NATS):
    """Erasure profiles within ``nats`` of the mode and their log-probabilities.

    Returns ``(profiles, log_weights)``; ``profiles`` has one row per profile
    with ``s + 1`` columns.
    """
    eps = np.asarray(eps_full, dtype=float)
    s = len(eps) - 1
    with np.errstate(divide="ignore"):
        log_eps = np.log(eps)
    mode = np.floor(n * eps).astype(np.int64)
    mode[0] += n - mode.sum()
    if mode[0] < 0:
        j = int(np.argmax(mode))
        mode[j] += mode[0]
        mode[0] = 0
    ref = float(_log_multinomial(n, mode[None, :], log_eps)[0])
    floor = ref - nats
    ks = np.arange(n + 1)
    windows = []
    for j in range(1, s + 1):
        lp = _log_binom_pmf(n, ks, eps[j])
        windows.append(ks[lp >= floor])
    if not windows:
        return np.array([[n]]), np.array([0.0])
    grids = np.meshgrid(*windows, indexing="ij")
    rest = np.stack([g.ravel() for g in grids], axis=1)
    e0 = n - rest.sum(axis=1)
    keep = e0 >= 0
    prof = np.concatenate([e0[keep, None], rest[keep]], axis=1)
    lw = _log_multinomial(n, prof, log_eps)
    sel = lw >= floor
    return prof[sel], lw[sel]


@dataclass(frozen=True)
class MLResult:
    value: float
    tag: str                    # "exact" or "bound"
    skipped_mass_bound: float
    log_value: float = -math.inf


def _finish(log_terms: list, log_w: np.ndarray, tag: str) -> MLResult:
    skipped = max(0.0, -math.expm1(float(logsumexp(log_w)))) if log_w.size else 1.0
    if not log_terms:
        return MLResult(0.0, tag, skipped)
    lv = float(logsumexp(np.asarray(log_terms)))
    return MLResult(min(1.0, math.exp(lv)), tag, skipped, lv)


def _log1m_exp(x: float) -> float:
    """``log(1 - exp(x))`` for ``x <= 0``."""
    if x == -math.inf:
        return 0.0
    if x >= 0:
        return -math.inf
    return math.log(-math.expm1(x)) if x > -0.693 else math.log1p(-math.exp(x))


def snbre_failure(params: QmbcParams, n: int, k: int, nats: float = TRUNCATION_NATS,
                  orderings: int = RANDOM_ORDERINGS, seed: int = 0) -> MLResult:
    """Expected ML failure probability of the random-matrix ensemble.

    Exact (tag ``"exact"``) when every type with non-zero probability belongs
    to a nested-subfield chain; otherwise an upper bound built from the
    ordering lower bound on the independence probability.
    """
    if not 0 < k < n:
        raise ValueError("need 0 < k < n")
    f = params.field
    active = [j for j in range(1, f.s + 1) if params.epsilon[j - 1] > 0]
    try:
        check_subfield_chain(active, f)
        exact = True
    except PreconditionError:
        exact = False
    chi = compute_chi(f)
    prof, lw = iter_profiles(n, params.full, nats)
    terms = []
    cache: dict = {}
    for p, w in zip(prof, lw):
        key = tuple(p[1:].tolist())
        if not any(key):
            continue
        if key not in cache:
            lp = (log_psi_exact_subfield(p, n - k, f) if exact
                  else log_psi_lower_bound(p, n - k, chi, orderings, seed))
            cache[key] = _log1m_exp(lp)
        terms.append(w + cache[key])
    return _finish(terms, lw, "exact" if exact else "bound")


def qec_params(params: QmbcParams, as_full: Sequence[int] | None = None) -> QmbcParams:
    """Same channel with the listed types (default: all) counted as full erasures."""
    s = params.s
    as_full = range(1, s + 1) if as_full is None else as_full
    eps = list(params.epsilon)
    moved = sum(eps[j - 1] for j in as_full if j != s)
    for j in as_full:
        if j != s:
            eps[j - 1] = 0.0
    eps[s - 1] += moved
    return QmbcParams(params.field, tuple(eps))


# LDPC ensemble bound -----------------------------------------------------------

def zero_sum_probability(m: int, q: int) -> float:
    """Probability that ``m`` i.i.d. uniform non-zero elements of GF(q) sum to zero."""
    return float(zero_sum_probability_exact(m, q))


def zero_sum_probability_exact(m: int, q: int) -> Fraction:
    if m < 2:
        raise ValueError("m must be at least 2")
    return (1 - Fraction(1 - q) ** (1 - m)) / q


def consistent_weight_enum(profile: Sequence[int]) -> list[int]:
    """``eta[w]``: consistent vectors with ``w`` non-zero entries (exact integers)."""
    poly = [1]
    for j in range(1, len(profile)):
        factor = [math.comb(profile[j], u) * (2**j - 1) ** u for u in range(profile[j] + 1)]
        poly = [int(c) for c in np.convolve(np.array(poly, dtype=object), np.array(factor, dtype=object))]
    return poly


def log_consistent_weight_enum(profile: Sequence[int]) -> np.ndarray:
    out = np.array([0.0])
    for j in range(1, len(profile)):
        e = int(profile[j])
        u = np.arange(e + 1)
        lf = gammaln(e + 1) - gammaln(u + 1) - gammaln(e - u + 1) + u * math.log(2**j - 1)
        out = _log_convolve(out, lf)
    return out


def _log_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if b.size == 1:
        return a + b[0]
    m = a[:, None] + b[None, :]
    out = np.full(a.size + b.size - 1, -np.inf)
    for d in range(out.size):
        i = np.arange(max(0, d - b.size + 1), min(a.size, d + 1))
        out[d] = logsumexp(m[i, d - i])
    return out


@lru_cache(maxsize=16)
def _check_config_counts(dv: int, dc: int, n: int, idle_checks: bool = True) -> tuple[int, ...]:
    """Coefficients of ``((1+y)^dc - dc*y)^(n*dv/dc)`` as big integers.

    Each factor counts the socket subsets of one check that hit it zero or at
    least two times.  With ``idle_checks=False`` the constant term is dropped
    as well, so every check must be hit at least twice.
    """
    m = n * dv // dc
    base = np.array([math.comb(dc, i) if i >= 2 else 0 for i in range(dc + 1)], dtype=object)
    if idle_checks:
        base[0] = 1
    out = np.array([1], dtype=object)
    while m:
        if m & 1:
            out = np.convolve(out, base)
        m >>= 1
        if m:
            base = np.convolve(base, base)
    return tuple(int(c) for c in out)


def _log_int(x: int) -> float:
    return math.log(x) if x > 0 else -math.inf


@lru_cache(maxsize=16)
def _ldpc_weight_terms(dv: int, dc: int, n: int, q: int, idle_checks: bool = True) -> np.ndarray:
    """``A[w] = log(coef_{w dv} / C(n dv, w dv)) - (w dv/dc) log(q-1)`` for ``w = 0..n``."""
    coef = _check_config_counts(dv, dc, n, idle_checks)
    total = n * dv
    out = np.empty(n + 1)
    for w in range(n + 1):
        c = coef[w * dv] if w * dv < len(coef) else 0
        out[w] = (_log_int(c) - _log_int(math.comb(total, w * dv))
                  - (w * dv / dc) * math.log(q - 1))
    return out


def ldpc_ml_upper_bound(dv: int, dc: int, n: int, params: QmbcParams,
                        nats: float = TRUNCATION_NATS, idle_checks: bool = True) -> MLResult:
    """Union bound on the ensemble-average ML failure probability (uniform labels).

    For each consistent weight ``w`` the support's ``w*dv`` sockets must hit
    every check zero or at least two times, and each hit check is satisfied
    with probability at most ``1/(q-1)``.  ``idle_checks=False`` switches to
    the variant where every check must be hit, which is not a valid bound
    for small ``w`` and is kept only for comparison.
    """
    if (n * dv) % dc:
        raise ValueError(f"dc={dc} does not divide n*dv={n * dv}")
    A = _ldpc_weight_terms(dv, dc, n, params.field.q, idle_checks)
    prof, lw = iter_profiles(n, params.full, nats)
    terms = []
    cache: dict = {}
    for p, w in zip(prof, lw):
        key = tuple(p[1:].tolist())
        if not any(key):
            continue
        if key not in cache:
            le = log_consistent_weight_enum(p)
            inner = float(logsumexp(le[1:] + A[1:le.size]))
            cache[key] = min(0.0, inner)
        terms.append(w + cache[key])
    return _finish(terms, lw, "bound")


# Monte Carlo oracles ------------------------------------------------------------

def random_matrix(rows: int, cols: int, q: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, q, size=(rows, cols))


def mc_psi(profile: Sequence[int], n_minus_k: int, field: FieldParams, trials: int,
           rng: np.random.Generator) -> float:
    """Fraction of uniform random ``H_E`` whose erased columns are partially independent."""
    types = _profile_types(profile)
    hits = 0
    for _ in range(trials):
        h = random_matrix(n_minus_k, types.size, field.q, rng)
        hits += ml_unique(h, types, field)
    return hits / trials


def mc_snbre_failure(params: QmbcParams, n: int, k: int, trials: int,
                     rng: np.random.Generator) -> float:
    """ML failure rate over fresh random matrices and channel draws."""
    f = params.field
    fails = 0
    for _ in range(trials):
        h = random_matrix(n - k, n, f.q, rng)
        types = sample_types(params, n, rng)
        fails += not ml_unique(h, types, f)
    return fails / trials


def write_results(rows: Sequence[tuple], s: int, path) -> None:
    """CSV ``eps_1..eps_s, value, tag, skipped_mass_bound``; rows are ``(eps, MLResult)``."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow([f"eps_{j}" for j in range(1, s + 1)] + ["value", "tag", "skipped_mass_bound"])
        for eps, res in rows:
            wr.writerow([repr(float(e)) for e in eps]
                        + [repr(res.value), res.tag, repr(res.skipped_mass_bound)])


def default_field(s: int) -> FieldParams:
    return field_for(s)

"""Density evolution over subgroup-valued messages.

Messages under the all-zero codeword are additive subgroups, so DE tracks a
probability vector over the subgroup table.  Check nodes combine incoming
subgroups with the span table after scaling by label ratios; variable nodes
intersect with the meet table.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .code import DegreeDistribution, LabelDistribution
from .gf import FieldParams, SubgroupTable, enumerate_subgroups, field_for

DE_DEFAULT_MAX_S = 4
DEFAULT_DELTA = 1e-10
DEFAULT_MAX_ITERS = 2000
DEFAULT_BISECT_TOL = 1e-4


def _table(field: FieldParams, allow_large: bool) -> SubgroupTable:
    if field.s > DE_DEFAULT_MAX_S and not allow_large:
        raise ValueError(f"DE for s={field.s} needs allow_large=True (default limit s<={DE_DEFAULT_MAX_S})")
    return enumerate_subgroups(field)


def _convolve(a: np.ndarray, b: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Distribution of ``op[t1, t2]`` for independent ``t1 ~ a``, ``t2 ~ b``."""
    return np.bincount(op.ravel(), weights=np.outer(a, b).ravel(), minlength=len(a))


def _power(p: np.ndarray, k: int, op: np.ndarray, identity: int) -> np.ndarray:
    """``k``-fold convolution of ``p`` with itself; ``k = 0`` gives the identity element."""
    out = np.zeros_like(p)
    out[identity] = 1.0
    base = p
    while k:
        if k & 1:
            out = _convolve(out, base, op)
        k >>= 1
        if k:
            base = _convolve(base, base, op)
    return out


def ratio_distribution(labels: LabelDistribution, h: int) -> np.ndarray:
    """Distribution of ``h'/h`` for ``h' ~ labels``, indexed by field element."""
    f = labels.field
    out = np.zeros(f.q)
    for hp in labels.support:
        out[f.div(hp, h)] += labels.weights[hp]
    return out


def scale_distribution(z: np.ndarray, ratio: np.ndarray, table: SubgroupTable) -> np.ndarray:
    """Distribution of ``r * H`` with ``H ~ z`` and ``r ~ ratio`` independent."""
    out = np.zeros(table.T)
    for r in np.flatnonzero(ratio):
        out += ratio[r] * np.bincount(table.scale[r], weights=z, minlength=table.T)
    return out


def check_convolution(z: np.ndarray, count: int, labels: LabelDistribution,
                      h: int | None = None, table: SubgroupTable | None = None) -> np.ndarray:
    """CTV distribution at a check node with ``count`` other incoming edges.

    With ``h`` given, conditions on the outgoing edge label; otherwise mixes
    over ``h ~ labels``.
    """
    if count < 1:
        raise ValueError("check convolution needs at least one incoming message")
    table = table or enumerate_subgroups(labels.field)
    hs = [h] if h is not None else labels.support
    out = np.zeros(table.T)
    for g in hs:
        weight = 1.0 if h is not None else labels.weights[g]
        zs = scale_distribution(z, ratio_distribution(labels, g), table)
        out += weight * _power(zs, count, table.span, 0)
    return out


def variable_convolution(w: np.ndarray, count: int, epsilon: Sequence[float],
                         table: SubgroupTable) -> np.ndarray:
    """VTC distribution at a variable node with ``count`` other incoming CTVs."""
    if count < 0:
        raise ValueError("count must be non-negative")
    full = table.T - 1
    folded = _power(w, count, table.meet, full)
    return _channel_meet(folded, epsilon, table)


def _channel_meet(folded: np.ndarray, epsilon: Sequence[float], table: SubgroupTable) -> np.ndarray:
    eps = _full_eps(epsilon)
    out = np.zeros(table.T)
    for j, e in enumerate(eps):
        if e > 0:
            out += e * np.bincount(table.meet[:, table.channel_index[j]], weights=folded,
                                   minlength=table.T)
    return out


def _full_eps(epsilon: Sequence[float]) -> np.ndarray:
    eps = np.asarray(epsilon, dtype=float)
    return np.concatenate(([max(0.0, 1.0 - eps.sum())], eps))


def initial_distribution(epsilon: Sequence[float], table: SubgroupTable) -> np.ndarray:
    z = np.zeros(table.T)
    np.add.at(z, table.channel_index, _full_eps(epsilon))
    return z


@dataclass
class DEConfig:
    dd: DegreeDistribution
    labels: LabelDistribution
    epsilon: tuple = ()
    max_iters: int = DEFAULT_MAX_ITERS
    delta: float = DEFAULT_DELTA
    tol: float = DEFAULT_BISECT_TOL
    allow_large: bool = False

    def __post_init__(self):
        if self.delta <= 0 or self.tol <= 0 or self.max_iters < 1:
            raise ValueError("tolerances and iteration limit must be positive")

    @property
    def field(self) -> FieldParams:
        return self.labels.field

    def with_epsilon(self, epsilon) -> "DEConfig":
        return DEConfig(self.dd, self.labels, tuple(float(e) for e in epsilon), self.max_iters,
                        self.delta, self.tol, self.allow_large)


class _Stepper:
    """One DE iteration with per-ensemble precomputation."""

    def __init__(self, cfg: DEConfig):
        self.table = _table(cfg.field, cfg.allow_large)
        self.dd = cfg.dd
        # group outgoing labels with identical ratio distributions
        groups: dict[bytes, list] = {}
        for h in cfg.labels.support:
            r = ratio_distribution(cfg.labels, h)
            key = r.tobytes()
            if key in groups:
                groups[key][1] += cfg.labels.weights[h]
            else:
                groups[key] = [r, cfg.labels.weights[h]]
        self.ratios = list(groups.values())

    def step(self, z: np.ndarray, eps_full_input) -> np.ndarray:
        t = self.table
        w = np.zeros(t.T)
        for r, weight in self.ratios:
            zs = scale_distribution(z, r, t)
            for i, rho in self.dd.rho.items():
                w += weight * rho * _power(zs, i - 1, t.span, 0)
        # the fold maps are polynomial in the total mass, so rounding drift
        # in the sum grows geometrically unless projected back each step
        w /= w.sum()
        folded = np.zeros(t.T)
        for i, lam in self.dd.lam.items():
            folded += lam * _power(w, i - 1, t.meet, t.T - 1)
        z = _channel_meet(folded, eps_full_input, t)
        return z / z.sum()


@dataclass
class DETrajectory:
    p_error: np.ndarray
    distributions: list = field(default_factory=list, repr=False)

    @property
    def final(self) -> float:
        return float(self.p_error[-1])


def de_iterate(cfg: DEConfig, record: bool = False, stop_below: float | None = None) -> DETrajectory:
    """Run DE from the channel prior; ``p_error[l]`` is ``1 - z_1`` after ``l`` iterations.

    ``stop_below`` ends the run early once the error probability drops under it.
    """
    stepper = _Stepper(cfg)
    z = initial_distribution(cfg.epsilon, stepper.table)
    pe = [_p_error(z)]
    dists = [z] if record else []
    for _ in range(cfg.max_iters):
        z = stepper.step(z, cfg.epsilon)
        pe.append(_p_error(z))
        if record:
            dists.append(z)
        if stop_below is not None and pe[-1] < stop_below:
            break
    return DETrajectory(np.array(pe), dists)


def write_trajectory(traj: DETrajectory, path) -> None:
    """CSV dump ``iter, P_error, z_1..z_T`` (needs ``record=True``)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        T = len(traj.distributions[0]) if traj.distributions else 0
        wr.writerow(["iter", "P_error"] + [f"z_{t + 1}" for t in range(T)])
        for l, pe in enumerate(traj.p_error):
            row = [l, repr(float(pe))]
            if traj.distributions:
                row += [repr(float(v)) for v in traj.distributions[l]]
            wr.writerow(row)


def _p_error(z: np.ndarray) -> float:
    # summing the non-trivial mass avoids cancellation in 1 - z_1
    return float(z[1:].sum())


def _converges(stepper: _Stepper, eps: np.ndarray, cfg: DEConfig) -> tuple[bool, float]:
    z = initial_distribution(eps, stepper.table)
    prev = _p_error(z)
    for _ in range(cfg.max_iters):
        z = stepper.step(z, eps)
        pe = _p_error(z)
        if pe < cfg.delta:
            return True, pe
        # a fixed point above delta will never reach zero
        if prev - pe <= 1e-16 * max(pe, 1e-300):
            return False, pe
        prev = pe
    return False, pe


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    direction: tuple
    origin: tuple
    converged: bool

    @property
    def point(self) -> tuple:
        return tuple(o + self.threshold * d for o, d in zip(self.origin, self.direction))


def threshold_scan(cfg: DEConfig, direction: Sequence[float], origin: Sequence[float] | None = None,
                   _stepper: _Stepper | None = None) -> ThresholdResult:
    """Largest ``c`` with ``origin + c * direction`` inside the DE region, by bisection.

    ``converged`` is False when the last failing probe above the threshold
    ended within ``(delta, 10 delta)`` after the iteration limit, i.e. the
    classification of that probe is doubtful.
    """
    s = cfg.field.s
    d = np.asarray(direction, dtype=float)
    o = np.zeros(s) if origin is None else np.asarray(origin, dtype=float)
    if d.shape != (s,) or o.shape != (s,):
        raise ValueError(f"direction and origin need {s} components")
    if np.any(d < 0) or not d.any() or np.any(o < 0):
        raise ValueError("direction must be non-negative and non-zero")
    d = d / np.linalg.norm(d)
    stepper = _stepper or _Stepper(cfg)
    hi = (1.0 - o.sum()) / d.sum()
    if hi < 0:
        raise ValueError("origin lies outside the probability simplex")
    ok, _ = _converges(stepper, o, cfg)
    if not ok:
        return ThresholdResult(0.0, tuple(d), tuple(o), True)
    ok, pe = _converges(stepper, o + hi * d, cfg)
    if ok:
        return ThresholdResult(hi, tuple(d), tuple(o), True)
    lo = 0.0
    doubtful = cfg.delta < pe < 10 * cfg.delta
    while hi - lo > cfg.tol:
        mid = 0.5 * (lo + hi)
        ok, pe = _converges(stepper, o + mid * d, cfg)
        if ok:
            lo = mid
        else:
            hi = mid
            doubtful = cfg.delta < pe < 10 * cfg.delta
    return ThresholdResult(0.5 * (lo + hi), tuple(d), tuple(o), not doubtful)


def fan_directions(resolution: int) -> list[tuple[float, float]]:
    angles = np.linspace(0.0, math.pi / 2, resolution)
    return [(float(max(0.0, math.cos(a))), float(max(0.0, math.sin(a)))) for a in angles]


def region_trace(cfg: DEConfig, resolution: int = 17, axes: tuple[int, int] = (0, 1),
                 origin: Sequence[float] | None = None, threads: int = 1) -> list[ThresholdResult]:
    """Boundary of the DE region over a fan of directions in the plane of ``axes``.

    For ``s > 2`` the remaining coordinates are held at ``origin``.
    """
    s = cfg.field.s
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if s < 2:
        raise ValueError("region tracing needs s >= 2")
    dirs = []
    for a, b in fan_directions(resolution):
        d = np.zeros(s)
        d[axes[0]], d[axes[1]] = a, b
        dirs.append(d)
    stepper = _Stepper(cfg)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda d: threshold_scan(cfg, d, origin, stepper), dirs))
    return [threshold_scan(cfg, d, origin, stepper) for d in dirs]


def write_region(results: Sequence[ThresholdResult], path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        s = len(results[0].direction) if results else 0
        wr.writerow([f"d_{j + 1}" for j in range(s)] + [f"o_{j + 1}" for j in range(s)]
                    + ["threshold", "converged"])
        for r in results:
            wr.writerow([f"{x:.6f}" for x in r.direction] + [f"{x:.6f}" for x in r.origin]
                        + [f"{r.threshold:.6f}", int(r.converged)])


def optimal_label_distribution(s: int, j_max: int) -> LabelDistribution:
    """Uniform on ``alpha**(t*j_max)`` for ``t < s/j_max``."""
    if not 1 <= j_max <= s or s % j_max:
        raise ValueError(f"j_max={j_max} must divide s={s}")
    f = field_for(s)
    return LabelDistribution.over(f, [f.power(t * j_max) for t in range(s // j_max)])


# scalar recurrences -------------------------------------------------------

def single_letter_trajectory(dd: DegreeDistribution, eps: float, divisor: int = 1,
                             iters: int = DEFAULT_MAX_ITERS) -> np.ndarray:
    """``y_{l+1} = eps * lambda(1 - rho(1 - y_l / divisor))`` from ``y_0 = eps``.

    ``divisor = 1`` is the BEC recursion.
    """
    y = np.empty(iters + 1)
    y[0] = eps
    for l in range(iters):
        y[l + 1] = eps * dd.lambda_poly(1.0 - dd.rho_poly(1.0 - y[l] / divisor))
    return y


def bec_threshold(dd: DegreeDistribution, divisor: int = 1, delta: float = DEFAULT_DELTA,
                  iters: int = DEFAULT_MAX_ITERS, tol: float = 1e-6) -> float:
    """Threshold of the scalar recursion, capped at 1."""

    def ok(eps):
        y = eps
        for _ in range(iters):
            nxt = eps * dd.lambda_poly(1.0 - dd.rho_poly(1.0 - y / divisor))
            if nxt < delta:
                return True
            if y - nxt <= 1e-16 * nxt:
                return False
            y = nxt
        return False

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

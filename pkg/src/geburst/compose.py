"""Product chains over independent GE hops and exact end-to-end burst statistics.

State ``i`` of a k-hop chain encodes the hop states in its bits: bit ``k-1-h``
is set when hop ``h`` is BAD, so index 0 is the all-GOOD state and the
transition matrix is ``kron(P_0, P_1, ..., P_{k-1})``. A burst is a maximal
run of visits to the non-zero (BAD) indices; its length is phase-type
distributed over the sub-stochastic block restricted to those states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from .errors import NoBursts, ValidationError
from .ge import GeModel, steady_state, transition_matrix

MAX_HOPS = 16


@dataclass(frozen=True, eq=False)
class MultiHopChain:
    hops: tuple
    matrix: np.ndarray = field(repr=False)
    stationary: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.hops)

    @property
    def n_states(self) -> int:
        return 1 << len(self.hops)

    @property
    def label(self) -> str:
        return " x ".join(h.label or f"GE({h.p:g},{h.r:g})" for h in self.hops)

    def state_tuple(self, index: int) -> tuple[bool, ...]:
        k = self.k
        return tuple(bool((index >> (k - 1 - h)) & 1) for h in range(k))

    @property
    def pi_all_good(self) -> float:
        return float(np.prod([steady_state(h)[0] for h in self.hops]))


def compose(hops: Sequence[GeModel]) -> MultiHopChain:
    """Tensor-product chain of independent hops; GOOD end to end iff every hop is GOOD."""
    hops = tuple(hops)
    if not hops:
        raise ValidationError("at least one hop is required")
    if len(hops) > MAX_HOPS:
        raise ValidationError(f"dense composition supports at most {MAX_HOPS} hops, got {len(hops)}")
    for h in hops:
        if not isinstance(h, GeModel):
            raise ValidationError(f"hop {h!r} is not a GeModel")
    P = reduce(np.kron, [transition_matrix(h) for h in hops])
    pi = reduce(np.kron, [np.array(steady_state(h)) for h in hops])
    P.setflags(write=False)
    pi.setflags(write=False)
    return MultiHopChain(hops, P, pi)


@dataclass(frozen=True, eq=False)
class BurstDistribution:
    """Burst-length curves for n = 1..horizon (index 0 holds n = 1)."""

    conditional_survival: np.ndarray
    burst_start_rate: np.ndarray
    error_rate: float
    horizon: int
    label: str = ""

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.horizon + 1)

    def survival(self, n: int) -> float:
        return float(self.conditional_survival[n - 1])

    def start_rate(self, n: int) -> float:
        return float(self.burst_start_rate[n - 1])

    def to_rows(self) -> list[tuple[int, float, float]]:
        return [(int(n), float(s), float(b))
                for n, s, b in zip(self.n, self.conditional_survival, self.burst_start_rate)]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "error_rate": self.error_rate,
            "horizon": self.horizon,
            "rows": [{"n": n, "conditional_survival": s, "burst_start_rate": b}
                     for n, s, b in self.to_rows()],
        }


def _burst_blocks(chain: MultiHopChain):
    P = chain.matrix
    exit_prob = 1.0 - P[0, 0]
    if exit_prob <= 0.0 or not np.any(P[0, 1:] > 0):
        raise NoBursts(f"{chain.label}: the all-GOOD state is absorbing")
    alpha = P[0, 1:] / P[0, 1:].sum()
    T = P[1:, 1:]
    return alpha, T, exit_prob


def end_to_end_burst(chain: MultiHopChain, horizon: int) -> BurstDistribution:
    """Exact conditional survival and start rate of end-to-end bursts, n = 1..horizon.

    The row vector ``alpha @ T**(n-1)`` is advanced one product at a time.
    """
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    alpha, T, exit_prob = _burst_blocks(chain)
    surv = np.empty(horizon)
    v = alpha
    for i in range(horizon):
        surv[i] = v.sum()
        v = v @ T
    start = chain.stationary[0] * exit_prob * surv
    return BurstDistribution(surv, start, 1.0 - chain.pi_all_good, horizon, chain.label)


@dataclass(frozen=True)
class LumpedView:
    error_rate: float
    mean_burst_length: Optional[float]
    terms: int = 0


def lumped_view(chain: MultiHopChain, tol: float = 1e-12, max_terms: int = 100_000) -> LumpedView:
    """End-to-end error rate and mean burst length.

    The mean is the sum of the survival series, stopped once a geometric bound
    on the remaining tail drops below ``tol``. When no such bound exists (some
    BAD state cannot reach all-GOOD in one step) or the series is still open
    after ``max_terms`` terms, the mean falls back to the fundamental-matrix
    solve and may be infinite. Burst-free chains report a
    mean of ``None``.
    """
    err = 1.0 - chain.pi_all_good
    try:
        alpha, T, _ = _burst_blocks(chain)
    except NoBursts:
        return LumpedView(err, None, 0)
    rho = float(T.sum(axis=1).max())
    if rho < 1.0:
        total, v, n = 0.0, alpha, 0
        while n < max_terms:
            s = float(v.sum())
            total += s
            n += 1
            if s * rho / (1.0 - rho) < tol:
                return LumpedView(err, total, n)
            v = v @ T
    try:
        mean = float(alpha @ np.linalg.solve(np.eye(len(T)) - T, np.ones(len(T))))
    except np.linalg.LinAlgError:
        mean = math.inf
    if not np.isfinite(mean) or mean < 0:
        mean = math.inf
    return LumpedView(err, mean, 0)


def effective_ge(chain: MultiHopChain) -> GeModel:
    """Approximate 2-state projection matching error rate and mean burst length.

    The lumped good/bad process of a product chain is not Markov in general;
    this is a reporting convenience, not an equivalent model.
    """
    lv = lumped_view(chain)
    if lv.mean_burst_length is None:
        raise NoBursts(f"{chain.label}: no bursts to summarize")
    r = 0.0 if math.isinf(lv.mean_burst_length) else 1.0 / lv.mean_burst_length
    pb = lv.error_rate
    p = 1.0 if pb >= 1.0 else min(1.0, pb * r / (1.0 - pb))
    return GeModel(p, r, f"effective({chain.label})", flags=frozenset({"approximate"}))


def error_rate_standard_error(chain: MultiHopChain, steps: int, tol: float = 1e-15,
                              max_lag: int = 1_000_000) -> float:
    """Standard error of the sample error rate over ``steps`` stationary packets.

    The all-GOOD indicator is a product of independent hop indicators, so its
    autocovariance at lag t is prod_h(pi_h^2 + pi_h * pi_bad_h * lam_h**t)
    - prod_h pi_h^2, where lam_h = 1 - p_h - r_h. The asymptotic variance
    sums these over all lags.
    """
    pig = np.array([steady_state(h)[0] for h in chain.hops])
    pib = 1.0 - pig
    lam = np.array([1.0 - h.p - h.r for h in chain.hops])
    base = float(np.prod(pig ** 2))
    var0 = chain.pi_all_good * (1.0 - chain.pi_all_good)
    if var0 == 0:
        return 0.0
    acc, lamt, t = var0, lam.copy(), 1
    while t < max_lag:
        c = float(np.prod(pig ** 2 + pig * pib * lamt)) - base
        acc += 2.0 * c
        if abs(c) < tol * var0 and np.all(np.abs(lamt) < 1):
            break
        lamt = lamt * lam
        t += 1
    return math.sqrt(max(acc, 0.0) / steps)

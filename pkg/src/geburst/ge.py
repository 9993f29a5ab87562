"""Two-state Gilbert-Elliott burst-error channel: model, estimation, analysis.

State convention everywhere in the package: ``False``/0 is GOOD, ``True``/1
is BAD. ``p`` is the GOOD->BAD probability, ``r`` the BAD->GOOD probability.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from statistics import NormalDist
from typing import Iterable, Optional

import numpy as np

from .errors import (DegenerateChain, NoBurstsWarning, UndefinedEstimate,
                     ValidationError)
from .trace import EmpiricalCdf, LatencyTrace, evaluate

GOOD = False
BAD = True


@dataclass(frozen=True)
class TransitionCounts:
    gg: int
    gb: int
    bg: int
    bb: int
    confidence: float = 0.95

    @property
    def p_interval(self) -> tuple[float, float]:
        return wilson_interval(self.gb, self.gg + self.gb, self.confidence)

    @property
    def r_interval(self) -> tuple[float, float]:
        return wilson_interval(self.bg, self.bg + self.bb, self.confidence)


@dataclass(frozen=True)
class GeModel:
    """Gilbert-Elliott channel with transition probabilities ``p`` and ``r``.

    ``counts`` is set when the model was estimated from data. ``flags`` carries
    markers such as ``"absorbing-good"`` or ``"clamped-p"``.
    """

    p: float
    r: float
    label: str = ""
    counts: Optional[TransitionCounts] = None
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for name in ("p", "r"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating)) and 0.0 <= v <= 1.0):
                raise ValidationError(f"{name} must be a probability in [0, 1], got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.p + self.r == 0:
            raise DegenerateChain("p = r = 0: the chain is frozen in its initial state")
        flags = set(self.flags)
        if self.p == 0:
            flags.add("absorbing-good")
        if self.r == 0:
            flags.add("absorbing-bad")
        object.__setattr__(self, "flags", frozenset(flags))

    @property
    def matrix(self) -> np.ndarray:
        return transition_matrix(self)

    @property
    def pi_good(self) -> float:
        return steady_state(self)[0]

    @property
    def pi_bad(self) -> float:
        return steady_state(self)[1]

    def to_dict(self) -> dict:
        pi_good, pi_bad = steady_state(self)
        d = {"label": self.label, "p": self.p, "r": self.r,
             "pi_good": pi_good, "pi_bad": pi_bad}
        if self.counts is not None:
            c = self.counts
            d["counts"] = {"gg": c.gg, "gb": c.gb, "bg": c.bg, "bb": c.bb,
                           "confidence": c.confidence,
                           "p_interval": list(c.p_interval), "r_interval": list(c.r_interval)}
        if self.flags:
            d["flags"] = sorted(self.flags)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeModel":
        counts = None
        if d.get("counts"):
            c = d["counts"]
            counts = TransitionCounts(int(c["gg"]), int(c["gb"]), int(c["bg"]), int(c["bb"]),
                                      float(c.get("confidence", 0.95)))
        return cls(float(d["p"]), float(d["r"]), d.get("label", ""), counts,
                   frozenset(d.get("flags", ())))


def transition_matrix(m: GeModel) -> np.ndarray:
    return np.array([[1.0 - m.p, m.p], [m.r, 1.0 - m.r]])


def steady_state(m: GeModel) -> tuple[float, float]:
    """Long-run (pi_good, pi_bad); the pair sums to exactly 1."""
    if m.p + m.r == 0:
        raise DegenerateChain("p = r = 0 has no unique steady state")
    pi_bad = m.p / (m.p + m.r)
    return 1.0 - pi_bad, pi_bad


def error_probability(cdf: EmpiricalCdf, theta: float) -> float:
    """Probability a packet misses ``theta``; lost packets always miss."""
    if theta < 0:
        raise ValidationError("theta must be non-negative")
    return 1.0 - evaluate(cdf, theta)


def burst_survival(m: GeModel, n: int) -> float:
    """P(burst length >= n | a burst started) = (1 - r)**(n - 1)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if m.p == 0:
        warnings.warn(f"{m.label or 'model'} has p = 0 and never bursts", NoBurstsWarning,
                      stacklevel=2)
        return 0.0
    return (1.0 - m.r) ** (n - 1)


def burst_start_rate(m: GeModel, n: int) -> float:
    """Per-packet probability of being the first packet of a burst lasting >= n."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if m.p == 0:
        warnings.warn(f"{m.label or 'model'} has p = 0 and never bursts", NoBurstsWarning,
                      stacklevel=2)
        return 0.0
    return steady_state(m)[0] * m.p * (1.0 - m.r) ** (n - 1)


def mean_burst_length(m: GeModel) -> float:
    return math.inf if m.r == 0 else 1.0 / m.r


# -- state sequences and estimation -------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateSequence:
    """Per-packet channel states (True = BAD).

    ``breaks`` lists indices ``i`` for which the pair (i-1, i) is not a
    transition, e.g. where two separately recorded sessions were joined.
    """

    states: np.ndarray
    period: float
    breaks: tuple = ()

    def __post_init__(self):
        s = np.array(self.states, dtype=bool, copy=True)
        s.setflags(write=False)
        if s.ndim != 1 or len(s) == 0:
            raise ValidationError("state sequence must be a non-empty 1-D array")
        if not self.period > 0:
            raise ValidationError("period must be positive")
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "breaks", tuple(sorted(int(b) for b in self.breaks)))

    def __len__(self):
        return len(self.states)

    @classmethod
    def concatenate(cls, seqs: Iterable["StateSequence"]) -> "StateSequence":
        """Join sequences with a RESET between them so no transition spans the seam."""
        seqs = list(seqs)
        if not seqs:
            raise ValidationError("nothing to concatenate")
        breaks, offset = [], 0
        for s in seqs:
            breaks.extend(b + offset for b in s.breaks)
            if offset:
                breaks.append(offset)
            offset += len(s)
        return cls(np.concatenate([s.states for s in seqs]), seqs[0].period, tuple(breaks))


def binarize(trace: LatencyTrace, theta: float, exclude_edge_gaps: bool = False) -> StateSequence:
    """GOOD where latency <= theta (inclusive deadline); LOST is always BAD.

    With ``exclude_edge_gaps`` gap-filled LOST entries at the start and end of
    the trace are dropped before thresholding.
    """
    if theta < 0:
        raise ValidationError("theta must be non-negative")
    if len(trace) == 0:
        raise ValidationError("trace is empty")
    lat = trace.latency
    if exclude_edge_gaps:
        keep = np.flatnonzero(~trace.gap_filled)
        lat = lat[keep[0]:keep[-1] + 1]
    return StateSequence(~(lat <= theta), trace.period)


def count_transitions(seq: StateSequence) -> TransitionCounts:
    s = seq.states.astype(np.int8)
    code = 2 * s[:-1] + s[1:]
    if seq.breaks:
        valid = np.ones(len(code), bool)
        idx = np.asarray(seq.breaks) - 1
        valid[idx[(idx >= 0) & (idx < len(code))]] = False
        code = code[valid]
    c = np.bincount(code, minlength=4)
    return TransitionCounts(int(c[0]), int(c[1]), int(c[2]), int(c[3]))


def fit(seq: StateSequence, label: str = "", confidence: float = 0.95) -> GeModel:
    """Maximum-likelihood (p, r) from transition counts, with Wilson intervals."""
    if len(seq) < 2:
        raise ValidationError("need at least two states to count transitions")
    c = replace(count_transitions(seq), confidence=confidence)
    from_good, from_bad = c.gg + c.gb, c.bg + c.bb
    if from_good == 0:
        raise UndefinedEstimate("p", "GOOD")
    if from_bad == 0:
        raise UndefinedEstimate("r", "BAD")
    return GeModel(c.gb / from_good, c.bg / from_bad, label, c)


def fit_with_default(seq: StateSequence, default_p: float, default_r: float,
                     label: str = "", confidence: float = 0.95) -> GeModel:
    """Like :func:`fit` but substitutes a fallback for a parameter whose state was never left."""
    if len(seq) < 2:
        raise ValidationError("need at least two states to count transitions")
    c = replace(count_transitions(seq), confidence=confidence)
    from_good, from_bad = c.gg + c.gb, c.bg + c.bb
    flags = set()
    if from_good:
        p = c.gb / from_good
    else:
        p = default_p
        flags.add("default-p")
    if from_bad:
        r = c.bg / from_bad
    else:
        r = default_r
        flags.add("default-r")
    return GeModel(p, r, label, c, frozenset(flags))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        return (0.0, 1.0)
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


# -- path sampling ------------------------------------------------------------------


def _sojourns(q: float, size: int, rng: np.random.Generator, cap: int) -> np.ndarray:
    if q == 0:
        return np.full(size, cap, dtype=np.int64)
    return np.minimum(rng.geometric(q, size), cap)


def advance(m: GeModel, prev_bad: bool, steps: int, rng: np.random.Generator) -> np.ndarray:
    """The next ``steps`` states after a step spent in ``prev_bad``.

    Sojourn times are geometric, so the path is drawn run by run rather than
    step by step. Returns a bool array (True = BAD).
    """
    out = np.empty(steps, dtype=bool)
    if steps == 0:
        return out
    q_prev = m.r if prev_bad else m.p
    first = steps if q_prev == 0 else min(int(rng.geometric(q_prev)) - 1, steps)
    out[:first] = prev_bad
    pos = first
    q_other = m.p if prev_bad else m.r  # exit prob once in the other state
    q_flip = m.r if prev_bad else m.p   # exit prob from prev state after returning
    cycle = (1.0 / q_flip if q_flip else steps) + (1.0 / q_other if q_other else steps)
    while pos < steps:
        remaining = steps - pos
        pairs = int(remaining / cycle * 1.1) + 8
        runs = np.empty(2 * pairs, dtype=np.int64)
        runs[0::2] = _sojourns(q_other, pairs, rng, remaining)
        runs[1::2] = _sojourns(q_flip, pairs, rng, remaining)
        ends = np.cumsum(runs)
        cut = int(np.searchsorted(ends, remaining))
        if cut < len(runs):
            runs = runs[:cut + 1].copy()
            runs[-1] -= ends[cut] - remaining
        values = np.zeros(len(runs), dtype=bool)
        values[0::2] = not prev_bad
        values[1::2] = prev_bad
        chunk = np.repeat(values, runs)
        out[pos:pos + len(chunk)] = chunk
        pos += len(chunk)
    return out


def sample_initial(m: GeModel, rng: np.random.Generator) -> bool:
    return bool(rng.random() < steady_state(m)[1])


def simulate_states(m: GeModel, steps: int, rng: np.random.Generator,
                    initial: Optional[bool] = None) -> np.ndarray:
    """A stationary path of ``steps`` states (initial state drawn from the steady state)."""
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    first = sample_initial(m, rng) if initial is None else bool(initial)
    return np.concatenate(([first], advance(m, first, steps - 1, rng)))

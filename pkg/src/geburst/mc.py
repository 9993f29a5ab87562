"""Seeded Monte-Carlo simulation of single- and multi-hop GE chains.

Stream splitting rule: stream ``i`` of a run with master seed ``s`` drives
hop ``h`` with ``PCG64(SeedSequence(s, spawn_key=(i, h)))``. Every stream is
simulated in fixed-size chunks, so results depend only on
(seed, streams, steps, burn_in), never on how many workers execute them.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compose import MultiHopChain
from .errors import ValidationError
from .ge import advance, sample_initial

CHUNK = 1 << 20
LARGE_RUN = 10**8


@dataclass(frozen=True)
class SimConfig:
    steps: int = 10**7
    seed: int = 0
    streams: int = 1
    burn_in: int = 0
    workers: int | None = None
    allow_large: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise ValidationError("steps must be >= 1")
        if self.streams < 1:
            raise ValidationError("streams must be >= 1")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.steps > LARGE_RUN and not self.allow_large:
            raise ValidationError(
                f"{self.steps} steps exceeds {LARGE_RUN}; set allow_large for full-scale runs")

    def stream_steps(self, i: int) -> int:
        q, rem = divmod(self.steps, self.streams)
        return q + (1 if i < rem else 0)


@dataclass
class SimResult:
    """Merged outcome of all streams.

    ``truncated_lengths`` are the observed lengths of bursts cut by a stream
    boundary (start or end of the recorded window); they are not in the
    histogram.
    """

    histogram: dict
    steps_recorded: int
    bad_packets: int
    truncated_lengths: list = field(default_factory=list)
    seed: int = 0
    streams: int = 1
    burn_in: int = 0

    @property
    def error_rate(self) -> float:
        return self.bad_packets / self.steps_recorded if self.steps_recorded else 0.0

    @property
    def truncated_bursts(self) -> int:
        return len(self.truncated_lengths)

    @property
    def completed_bursts(self) -> int:
        return sum(self.histogram.values())

    def merge(self, other: "SimResult") -> "SimResult":
        hist = Counter(self.histogram)
        hist.update(other.histogram)
        return SimResult(dict(sorted(hist.items())), self.steps_recorded + other.steps_recorded,
                         self.bad_packets + other.bad_packets,
                         self.truncated_lengths + other.truncated_lengths,
                         self.seed, self.streams, self.burn_in)

    def to_dict(self) -> dict:
        return {
            "error_rate": self.error_rate,
            "steps": self.steps_recorded,
            "seed": self.seed,
            "streams": self.streams,
            "burn_in": self.burn_in,
            "bad_packets": self.bad_packets,
            "histogram": [[int(k), int(v)] for k, v in sorted(self.histogram.items())],
            "truncated": sorted(int(t) for t in self.truncated_lengths),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "SimResult":
        return cls({int(k): int(v) for k, v in d["histogram"]}, int(d["steps"]),
                   int(d["bad_packets"]), [int(t) for t in d.get("truncated", [])],
                   int(d.get("seed", 0)), int(d.get("streams", 1)), int(d.get("burn_in", 0)))


def stream_rngs(seed: int, stream: int, hops: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, h))))
            for h in range(hops)]


def _stream(chain: MultiHopChain, cfg: SimConfig, index: int) -> SimResult:
    hops = chain.hops
    rngs = stream_rngs(cfg.seed, index, len(hops))
    n = cfg.stream_steps(index)
    prev = [sample_initial(h, g) for h, g in zip(hops, rngs)]

    # the initial draw is the first packet: discarded under burn-in, recorded otherwise
    left = cfg.burn_in - 1 if cfg.burn_in else 0
    while left > 0:
        size = min(CHUNK, left)
        for h, (m, g) in enumerate(zip(hops, rngs)):
            prev[h] = bool(advance(m, prev[h], size, g)[-1])
        left -= size

    hist: Counter = Counter()
    truncated: list[int] = []
    bad_total = 0
    carry = 0
    carry_censored = False
    first_chunk = True
    todo = n
    while todo > 0:
        if first_chunk and not cfg.burn_in:
            size = min(CHUNK, todo)
            parts = [np.concatenate(([prev[h]], advance(m, prev[h], size - 1, g)))
                     for h, (m, g) in enumerate(zip(hops, rngs))]
        else:
            size = min(CHUNK, todo)
            parts = [advance(m, prev[h], size, g) for h, (m, g) in enumerate(zip(hops, rngs))]
        prev = [bool(x[-1]) for x in parts]
        bad = parts[0] if len(parts) == 1 else np.logical_or.reduce(parts)
        bad_total += int(np.count_nonzero(bad))

        edges = np.diff(np.concatenate(([0], bad.view(np.int8), [0])))
        starts = np.flatnonzero(edges == 1)
        lengths = np.flatnonzero(edges == -1) - starts
        censored_first = first_chunk and len(starts) and starts[0] == 0
        if carry:
            if len(starts) and starts[0] == 0:
                lengths[0] += carry
                censored_first = carry_censored
            elif carry_censored:
                truncated.append(carry)
            else:
                hist[carry] += 1
            carry = 0
        if len(lengths) and bad[-1]:
            carry = int(lengths[-1])
            carry_censored = bool(censored_first and len(lengths) == 1)
            lengths = lengths[:-1]
        if censored_first and len(lengths):
            truncated.append(int(lengths[0]))
            lengths = lengths[1:]
        if len(lengths):
            vals, counts = np.unique(lengths, return_counts=True)
            hist.update(dict(zip(vals.tolist(), counts.tolist())))
        todo -= size
        first_chunk = False
    if carry:
        truncated.append(carry)
    return SimResult(dict(hist), n, bad_total, truncated, cfg.seed, cfg.streams, cfg.burn_in)


def simulate(chain: MultiHopChain, cfg: SimConfig) -> SimResult:
    """Simulate ``cfg.steps`` packets of the end-to-end chain, split across streams.

    Each stream starts from an exact draw of the product steady state.
    """
    workers = cfg.workers or min(cfg.streams, os.cpu_count() or 1)
    if workers > 1 and cfg.streams > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda i: _stream(chain, cfg, i), range(cfg.streams)))
    else:
        parts = [_stream(chain, cfg, i) for i in range(cfg.streams)]
    out = parts[0]
    for p in parts[1:]:
        out = out.merge(p)
    out.histogram = dict(sorted(out.histogram.items()))
    return out


def _tail_counts(res: SimResult, n: int) -> tuple[int, int, int]:
    completed_ge = sum(c for length, c in res.histogram.items() if length >= n)
    trunc_ge = sum(1 for t in res.truncated_lengths if t >= n)
    return completed_ge, trunc_ge, res.completed_bursts + res.truncated_bursts


def empirical_burst_survival(res: SimResult, n: int, form: str = "conditional") -> float:
    """Empirical P(L >= n | burst) (``form="conditional"``) or bursts >= n per packet (``"start-rate"``).

    A truncated burst counts toward ``L >= n`` only if its observed part is
    already that long, which makes the estimate a lower bound.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    completed_ge, trunc_ge, total = _tail_counts(res, n)
    if form == "conditional":
        if total == 0:
            raise ValidationError("no bursts observed: conditional survival is undefined")
        return (completed_ge + trunc_ge) / total
    if form == "start-rate":
        return (completed_ge + trunc_ge) / res.steps_recorded
    raise ValidationError(f"unknown form {form!r}")


def survival_standard_error(res: SimResult, n: int, expected: float | None = None) -> float:
    """Binomial standard error of the conditional survival estimate at ``n``.

    Bursts are independent because each one ends in the all-GOOD state,
    a regeneration point of the chain.
    """
    total = res.completed_bursts + res.truncated_bursts
    if total == 0:
        return math.nan
    s = empirical_burst_survival(res, n) if expected is None else expected
    return math.sqrt(max(s * (1.0 - s), 0.0) / total)


def empirical_curve(res: SimResult, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """(conditional survival, start rate) arrays for n = 1..horizon."""
    total = res.completed_bursts + res.truncated_bursts
    lengths = np.array(list(res.histogram.keys()) + res.truncated_lengths, dtype=np.int64)
    counts = np.array(list(res.histogram.values()) + [1] * res.truncated_bursts, dtype=np.int64)
    n = np.arange(1, horizon + 1)
    ge = np.array([counts[lengths >= k].sum() for k in n], dtype=float)
    cond = ge / total if total else np.full(horizon, np.nan)
    return cond, ge / res.steps_recorded

"""Latency traces, empirical latency-reliability curves and crossing points.

A trace holds one latency per packet; lost packets carry ``inf`` so they can
never meet a deadline. The empirical CDF is right-continuous, Pr(l <= theta).
"""

from __future__ import annotations

import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

import numpy as np

from .errors import NoCrossing, TraceParseError, ValidationError

log = logging.getLogger(__name__)

LOST = math.inf
LOST_TOKEN = "LOST"


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LatencyTrace:
    """Per-packet latency samples taken every ``period`` milliseconds.

    ``latency`` uses ``inf`` for LOST packets. ``gap_filled`` marks entries
    inserted for missing sequence numbers.
    """

    seq: np.ndarray
    latency: np.ndarray
    period: float
    label: str = ""
    gap_filled: np.ndarray = field(default=None)

    def __post_init__(self):
        seq = _frozen(self.seq, np.int64)
        lat = _frozen(self.latency, np.float64)
        if seq.ndim != 1 or seq.shape != lat.shape:
            raise ValidationError("seq and latency must be 1-D arrays of equal length")
        gap = np.zeros(len(seq), bool) if self.gap_filled is None else self.gap_filled
        gap = _frozen(gap, bool)
        if gap.shape != seq.shape:
            raise ValidationError("gap_filled must match the number of samples")
        if not self.period > 0:
            raise ValidationError(f"period must be positive, got {self.period}")
        if len(seq) > 1 and np.any(np.diff(seq) <= 0):
            raise ValidationError("sequence numbers must be strictly increasing")
        finite = lat[np.isfinite(lat)]
        if np.any(finite < 0) or np.any(np.isnan(lat)) or np.any(lat == -np.inf):
            raise ValidationError("latencies must be non-negative or LOST")
        object.__setattr__(self, "seq", seq)
        object.__setattr__(self, "latency", lat)
        object.__setattr__(self, "gap_filled", gap)
        object.__setattr__(self, "period", float(self.period))

    def __len__(self):
        return len(self.seq)

    @property
    def lost(self) -> np.ndarray:
        return np.isinf(self.latency)

    @classmethod
    def from_records(cls, records: Iterable[tuple[int, float]], period: float,
                     label: str = "") -> "LatencyTrace":
        """Build a trace from (seq, latency) pairs, inserting LOST for missing seqs."""
        records = list(records)
        if not records:
            raise ValidationError("trace is empty")
        seq = np.array([s for s, _ in records], dtype=np.int64)
        lat = np.array([l for _, l in records], dtype=np.float64)
        if len(seq) > 1 and np.any(np.diff(seq) <= 0):
            bad = int(np.argmax(np.diff(seq) <= 0)) + 1
            raise ValidationError(
                f"sequence numbers must be strictly increasing (seq {seq[bad]} after {seq[bad - 1]})"
            )
        full = np.arange(seq[0], seq[-1] + 1, dtype=np.int64)
        out = np.full(len(full), LOST)
        out[seq - seq[0]] = lat
        gap = np.ones(len(full), bool)
        gap[seq - seq[0]] = False
        return cls(full, out, period, label, gap)


def load_trace(source: Union[str, os.PathLike, IO], period: float | None = None,
               label: str | None = None) -> LatencyTrace:
    """Parse a trace CSV (``seq,latency_ms`` header, ``#`` comments).

    ``# period_ms=`` and ``# label=`` metadata lines are honored; an explicit
    ``period`` argument overrides the metadata value with a warning.
    """
    name = ""
    if isinstance(source, (str, os.PathLike)):
        name = os.path.splitext(os.path.basename(os.fspath(source)))[0]
        with open(source, "rb") as fh:
            raw = fh.read()
    else:
        raw = source.read()
        name = os.path.splitext(os.path.basename(getattr(source, "name", "") or ""))[0]
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    meta: dict[str, str] = {}
    records: list[tuple[int, float]] = []
    header_seen = False
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        if not header_seen and line.replace(" ", "").lower() == "seq,latency_ms":
            header_seen = True
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise TraceParseError(lineno, f"expected 2 comma-separated fields, got {line!r}")
        try:
            seq = int(parts[0])
        except ValueError:
            raise TraceParseError(lineno, f"bad sequence number {parts[0]!r}") from None
        if parts[1].upper() == LOST_TOKEN:
            lat = LOST
        else:
            try:
                lat = float(parts[1])
            except ValueError:
                raise TraceParseError(lineno, f"bad latency {parts[1]!r}") from None
            if not math.isfinite(lat) or lat < 0:
                raise TraceParseError(lineno, f"latency must be a non-negative number, got {parts[1]!r}")
        records.append((seq, lat))

    if not records:
        raise ValidationError("trace contains no samples")

    meta_period = float(meta["period_ms"]) if "period_ms" in meta else None
    if period is not None:
        if meta_period is not None and meta_period != float(period):
            log.warning("period %.6g ms overrides metadata period %.6g ms", period, meta_period)
    else:
        period = meta_period
    if period is None:
        raise ValidationError("no sampling period: pass period or add '# period_ms=' metadata")
    label = label or meta.get("label") or name
    return LatencyTrace.from_records(records, float(period), label)


def dump_trace(trace: LatencyTrace, fh: IO[str]) -> None:
    """Write a trace in the CSV format read by :func:`load_trace`."""
    fh.write(f"# period_ms={trace.period:g}\n")
    if trace.label:
        fh.write(f"# label={trace.label}\n")
    fh.write("seq,latency_ms\n")
    for s, l in zip(trace.seq.tolist(), trace.latency.tolist()):
        fh.write(f"{s},{LOST_TOKEN if math.isinf(l) else repr(l)}\n")


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    support: np.ndarray
    cumulative: np.ndarray
    sample_count: int
    loss_fraction: float
    label: str = ""

    def __call__(self, theta):
        return evaluate(self, theta)


def ecdf(trace: LatencyTrace) -> EmpiricalCdf:
    """Empirical latency CDF; LOST samples only lower the curve's ceiling."""
    if len(trace) == 0:
        raise ValidationError("cannot build a CDF from an empty trace")
    lat = trace.latency
    finite = np.sort(lat[np.isfinite(lat)])
    n = len(lat)
    support, counts = np.unique(finite, return_counts=True)
    cumulative = np.cumsum(counts) / n
    loss = (n - len(finite)) / n
    if len(cumulative):
        # pin the top of the curve so it equals 1 - loss_fraction exactly
        cumulative[-1] = 1.0 - loss
    return EmpiricalCdf(_frozen(support, np.float64), _frozen(cumulative, np.float64),
                        n, float(loss), trace.label)


def evaluate(cdf: EmpiricalCdf, theta):
    """Pr(latency <= theta) for a scalar or array ``theta``."""
    t = np.asarray(theta, dtype=np.float64)
    idx = np.searchsorted(cdf.support, t, side="right")
    padded = np.concatenate(([0.0], cdf.cumulative))
    out = padded[idx]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Crossing:
    theta: float
    reliability: float
    segment: tuple[float, float]


def crossing_point(a: EmpiricalCdf, b: EmpiricalCdf) -> list[Crossing]:
    """Deadlines where the two latency-reliability curves swap order.

    Both curves are sampled on the merged support and joined linearly; each
    strict sign change of F_a - F_b yields one crossing, located where the
    two linear interpolants meet. If the difference is exactly zero on a
    stretch between opposite signs, the first zero point is reported.
    """
    if a.sample_count == 0 or b.sample_count == 0:
        raise ValidationError("both CDFs must be non-empty")
    x = np.union1d(a.support, b.support)
    fa = evaluate(a, x)
    fb = evaluate(b, x)
    d = np.atleast_1d(fa - fb)
    nz = np.flatnonzero(d != 0)
    out: list[Crossing] = []
    for i, j in zip(nz[:-1], nz[1:]):
        if np.sign(d[i]) == np.sign(d[j]):
            continue
        if j == i + 1:
            t = d[i] / (d[i] - d[j])
            theta = x[i] + t * (x[j] - x[i])
            rel = fa[i] + t * (fa[j] - fa[i])
            seg = (float(x[i]), float(x[j]))
        else:
            theta, rel = x[i + 1], fa[i + 1]
            seg = (float(x[i]), float(x[i + 1]))
        out.append(Crossing(float(theta), float(rel), seg))
    if not out:
        raise NoCrossing(f"{a.label or 'a'} and {b.label or 'b'} never cross; one dominates")
    return out


def interpolate(cdf: EmpiricalCdf, grid: np.ndarray, theta):
    """Piecewise-linear interpolant of ``cdf`` through its values on ``grid``."""
    return np.interp(theta, grid, np.atleast_1d(evaluate(cdf, grid)))

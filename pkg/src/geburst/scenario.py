"""Deadline budgeting, proportional synthesis and the reference scenario fixtures.

The fixture constants are the published (p, r) values for the two measurement
campaigns (Crowd, Relax), the direct ground-node link, and the synthesized
direct link under crowding. Raw traces are not available, so
:func:`regenerate_pair` builds synthetic Wi-Fi/LTE traces that reproduce the
fixtures after thresholding and whose CDFs cross at the campaign deadline.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .ge import GeModel, binarize, fit, simulate_states
from .trace import EmpiricalCdf, LatencyTrace, crossing_point, load_trace

log = logging.getLogger(__name__)

THETA_CROWD = 38.25
THETA_RELAX = 22.5
THETA_DIRECT = 2 * THETA_RELAX
PERIOD_MS = 100.0
SURVIVAL_TOLERANCE = 3

FIXTURES: dict[str, GeModel] = {
    "wifi-crowd": GeModel(0.0515, 0.9468, "wifi-crowd"),
    "lte-crowd": GeModel(0.0178, 0.2577, "lte-crowd"),
    "wifi-relax": GeModel(0.0001, 0.0845, "wifi-relax"),
    "lte-relax": GeModel(0.0127, 0.8356, "lte-relax"),
    "direct-relax": GeModel(0.1457, 0.7857, "direct-relax"),
    "direct-crowd": GeModel(0.2042, 0.2423, "direct-crowd"),
}

DEADLINES = {"crowd": THETA_CROWD, "relax": THETA_RELAX, "direct": THETA_DIRECT}

# steady-state outage probabilities quoted alongside the fixtures
PUBLISHED_PI_BAD = {"lte-relax": 0.0150, "lte-crowd": 0.0646, "wifi-crowd": 0.0516,
                    "wifi-relax": 0.0015}

# the four relay combinations (backhaul + access hop) and the direct link
REFERENCE_CONFIGURATIONS = [
    ("lte-crowd", "wifi-crowd"),
    ("lte-crowd", "wifi-relax"),
    ("lte-relax", "wifi-crowd"),
    ("lte-relax", "wifi-relax"),
    ("direct-relax",),
]


def fixture(name: str) -> GeModel:
    try:
        return FIXTURES[name.strip().lower()]
    except KeyError:
        raise ValidationError(
            f"unknown fixture {name!r}; valid names: {', '.join(sorted(FIXTURES))}") from None


def configuration_label(names: Sequence[str]) -> str:
    return "+".join(names)


# -- budgets ------------------------------------------------------------------------


def budget_split(theta_total: float, hops: int, policy: str = "equal",
                 cdfs: Optional[Sequence[EmpiricalCdf]] = None) -> list[float]:
    """Per-hop deadlines.

    ``equal`` divides ``theta_total`` evenly. ``equi-performance`` gives every
    hop the first crossing deadline of the first two CDFs in ``cdfs``.
    """
    if not theta_total > 0:
        raise ValidationError("theta_total must be positive")
    if hops < 1:
        raise ValidationError("hops must be >= 1")
    if policy == "equal":
        return [theta_total / hops] * hops
    if policy in ("equi-performance", "equi"):
        if not cdfs or len(cdfs) < 2:
            raise ValidationError("equi-performance budgeting needs two latency CDFs")
        theta = crossing_point(cdfs[0], cdfs[1])[0].theta
        if theta * hops > theta_total:
            log.warning("equi-performance deadlines sum to %.6g ms, above the %.6g ms budget",
                        theta * hops, theta_total)
        return [theta] * hops
    raise ValidationError(f"unknown budget policy {policy!r}")


def survival_time(tolerance: int, period: float) -> float:
    """Milliseconds covered by ``tolerance`` consecutive lost updates."""
    if tolerance < 1:
        raise ValidationError("tolerance must be >= 1")
    if not period > 0:
        raise ValidationError("period must be positive")
    return tolerance * period


# -- synthesis ----------------------------------------------------------------------


def synthesize(base: GeModel, reference: GeModel, reference_variant: GeModel,
               label: str = "") -> GeModel:
    """Scale ``base`` by the ratio between ``reference_variant`` and ``reference``.

    p and r are scaled independently, then clamped to [0, 1]; a clamp is
    recorded in the model flags.
    """
    if reference.p == 0 or reference.r == 0:
        raise ValidationError("reference p and r must be non-zero to form ratios")
    p = base.p * (reference_variant.p / reference.p)
    r = base.r * (reference_variant.r / reference.r)
    flags = set()
    if p > 1:
        p = 1.0
        flags.add("clamped-p")
    if r > 1:
        r = 1.0
        flags.add("clamped-r")
    return GeModel(p, r, label or f"synth({base.label})", flags=frozenset(flags))


# -- synthetic traces ---------------------------------------------------------------


@dataclass(frozen=True)
class UniformLaw:
    """Uniform latency law on [lo, hi] (or (lo, hi] when ``open_low``).

    ``resolution`` snaps draws to a grid, rounding toward the interior so the
    law never leaves its support. ``loss`` is the fraction of draws reported
    LOST.
    """

    lo: float
    hi: float
    open_low: bool = False
    resolution: float = 0.0
    loss: float = 0.0

    def __call__(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        if self.open_low:
            x = self.hi - u * (self.hi - self.lo)       # (lo, hi]
        else:
            x = self.lo + u * (self.hi - self.lo)       # [lo, hi)
        if self.resolution:
            q = self.resolution
            x = np.ceil(x / q) * q if self.open_low else np.floor(x / q) * q
            if self.open_low:
                x = np.where(x <= self.lo, x + q, x)
            else:
                x = np.maximum(x, self.lo)
        if self.loss:
            x = np.where(rng.random(size) < self.loss, math.inf, x)
        return x


Law = Callable[[np.random.Generator, int], np.ndarray]


def default_laws(theta: float) -> tuple[UniformLaw, UniformLaw]:
    return UniformLaw(0.5 * theta, theta), UniformLaw(theta, 4 * theta, open_low=True)


def generate_trace(m: GeModel, theta: float, steps: int, seed: int,
                   good_law: Optional[Law] = None, bad_law: Optional[Law] = None,
                   period: float = PERIOD_MS, label: str = "") -> LatencyTrace:
    """Synthetic latency trace whose thresholded states follow ``m`` exactly.

    GOOD packets draw from ``good_law`` (must stay within [0, theta]); BAD
    packets draw from ``bad_law`` (must exceed theta or be LOST).
    """
    if not theta > 0:
        raise ValidationError("theta must be positive")
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    d_good, d_bad = default_laws(theta)
    good_law = good_law or d_good
    bad_law = bad_law or d_bad
    for law, ok in ((good_law, lambda lo, hi, ol: lo >= 0 and hi <= theta),
                    (bad_law, lambda lo, hi, ol: lo > theta or (lo == theta and ol))):
        if isinstance(law, UniformLaw) and not ok(law.lo, law.hi, law.open_low):
            raise ValidationError(f"law {law} crosses the theta = {theta} split")
    if isinstance(good_law, UniformLaw) and good_law.loss:
        raise ValidationError("good_law cannot produce LOST packets")

    state_rng, good_rng, bad_rng = (np.random.default_rng(s)
                                    for s in np.random.SeedSequence(seed).spawn(3))
    bad = simulate_states(m, steps, state_rng)
    lat = np.empty(steps)
    n_bad = int(np.count_nonzero(bad))
    g = np.asarray(good_law(good_rng, steps - n_bad), dtype=float)
    b = np.asarray(bad_law(bad_rng, n_bad), dtype=float)
    if np.any(~np.isfinite(g)) or np.any((g < 0) | (g > theta)):
        raise ValidationError(f"good_law produced latencies outside [0, {theta}]")
    if np.any(b[np.isfinite(b)] <= theta) or np.any(np.isnan(b)):
        raise ValidationError(f"bad_law produced latencies not above {theta}")
    lat[~bad] = g
    lat[bad] = b
    return LatencyTrace(np.arange(1, steps + 1), lat, period, label or m.label)


def regenerate_pair(campaign: str, steps: int = 100_000, seed: int = 0,
                    resolution: float = 0.5) -> tuple[LatencyTrace, LatencyTrace]:
    """Synthetic (Wi-Fi, LTE) traces for ``campaign`` ("crowd" or "relax").

    Latencies sit on a ``resolution`` ms grid. Wi-Fi is fast when timely and
    spread far out when late; LTE clusters just below the deadline when
    timely and on the first grid point past it when late. With the fixture
    outage rates (Wi-Fi below LTE) the two CDFs then cross exactly once,
    inside the grid cell that contains the campaign deadline.
    """
    campaign = campaign.lower()
    if campaign not in ("crowd", "relax"):
        raise ValidationError("campaign must be 'crowd' or 'relax'")
    theta = DEADLINES[campaign]
    wifi, lte = fixture(f"wifi-{campaign}"), fixture(f"lte-{campaign}")
    next_grid = (math.floor(theta / resolution) + 1) * resolution
    s_wifi, s_lte = (int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(2))
    wifi_trace = generate_trace(
        wifi, theta, steps, s_wifi,
        UniformLaw(0.5, 5.0, resolution=resolution),
        UniformLaw(theta, 4 * theta, open_low=True, resolution=resolution),
        label=f"wifi-{campaign}")
    lte_trace = generate_trace(
        lte, theta, steps, s_lte,
        UniformLaw(theta - 8.0, theta, resolution=resolution),
        UniformLaw(theta, next_grid, open_low=True, resolution=resolution),
        label=f"lte-{campaign}")
    return wifi_trace, lte_trace


# -- scenario files -----------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    hops: tuple
    theta_per_hop: tuple
    theta_total: float
    period: float = PERIOD_MS
    survival_tolerance: int = SURVIVAL_TOLERANCE

    def __post_init__(self):
        if not self.hops:
            raise ValidationError("scenario needs at least one hop")
        if len(self.theta_per_hop) != len(self.hops):
            raise ValidationError("one deadline per hop is required")
        if sum(self.theta_per_hop) > self.theta_total + 1e-9:
            raise ValidationError(
                f"per-hop deadlines sum to {sum(self.theta_per_hop):g} ms, "
                f"above the {self.theta_total:g} ms budget")
        if self.survival_tolerance < 1:
            raise ValidationError("survival tolerance must be >= 1 packet")
        if not self.period > 0:
            raise ValidationError("period must be positive")


def _hop_from_json(h: dict, base_dir: str, period: float) -> tuple[GeModel, float]:
    theta = h.get("theta_ms")
    if "model" in h:
        m = h["model"]
        return GeModel(float(m["p"]), float(m["r"]), m.get("label", h.get("label", ""))), theta
    if "fixture" in h:
        return fixture(h["fixture"]), theta
    if "trace" in h:
        if theta is None:
            raise ValidationError("a trace hop needs theta_ms")
        path = h["trace"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        tr = load_trace(path, period=h.get("period_ms"))
        return fit(binarize(tr, float(theta)), label=tr.label), theta
    raise ValidationError(f"hop needs one of model/fixture/trace: {h!r}")


def load_scenario(path: str) -> ScenarioSpec:
    """Read a scenario JSON file; trace hops are thresholded and fitted on load."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: invalid JSON: {e}") from None
    period = float(doc.get("period_ms", PERIOD_MS))
    base_dir = os.path.dirname(os.path.abspath(path))
    hops, thetas = [], []
    for h in doc.get("hops", []):
        m, theta = _hop_from_json(h, base_dir, period)
        hops.append(m)
        thetas.append(float(theta) if theta is not None else 0.0)
    total = float(doc.get("theta_total_ms", sum(thetas)))
    return ScenarioSpec(doc.get("name", os.path.basename(path)), tuple(hops), tuple(thetas),
                        total, period, int(doc.get("tolerance_packets", SURVIVAL_TOLERANCE)))

"""Comparison reports across hop configurations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .compose import compose, end_to_end_burst, lumped_view
from .errors import NoBursts
from .ge import GeModel, mean_burst_length, steady_state
from .mc import SimConfig, empirical_curve, simulate
from .scenario import PUBLISHED_PI_BAD, survival_time

FIXTURE_THETA = {
    "wifi-crowd": 38.25, "lte-crowd": 38.25,
    "wifi-relax": 22.5, "lte-relax": 22.5,
    "direct-relax": 45.0, "direct-crowd": 45.0,
}


def hop_summary(m: GeModel) -> dict:
    pi_good, pi_bad = steady_state(m)
    out = {"label": m.label, "p": m.p, "r": m.r, "pi_bad": pi_bad,
           "mean_burst_length": mean_burst_length(m),
           "theta_ms": FIXTURE_THETA.get(m.label)}
    published = PUBLISHED_PI_BAD.get(m.label)
    if published is not None:
        out["published_pi_bad"] = published
        # published outages carry four decimals; flag any that p/(p+r) does not reproduce
        if round(pi_bad, 4) != published:
            out["note"] = (f"published pi_bad {published} differs from p/(p+r) = {pi_bad:.5f} "
                           "of the rounded table values (known rounding discrepancy)")
    return out


@dataclass
class ConfigurationResult:
    name: str
    hops: tuple
    error_rate: float
    mean_burst_length: Optional[float]
    conditional_survival: np.ndarray
    burst_start_rate: np.ndarray
    mc: Optional[dict] = None

    def row(self, tolerance: int) -> dict:
        i = tolerance - 1
        return {"configuration": self.name,
                "error_rate": self.error_rate,
                "mean_burst_length": self.mean_burst_length,
                "conditional_survival": float(self.conditional_survival[i]),
                "burst_start_rate": float(self.burst_start_rate[i])}


@dataclass
class Report:
    """Everything needed to recompute the numbers is embedded: models, deadlines, seed."""

    name: str
    tolerance: int
    period: float
    horizon: int
    results: list = field(default_factory=list)
    seed: Optional[int] = None
    mc_steps: Optional[int] = None

    @property
    def survival_time_ms(self) -> float:
        return survival_time(self.tolerance, self.period)

    def rows(self) -> list[dict]:
        return [r.row(self.tolerance) for r in self.results]

    def direct_comparison(self, reference: str = "direct-relax") -> Optional[dict]:
        """Whether every multi-hop configuration has a lower start rate than ``reference``."""
        ref = next((r for r in self.results if r.name == reference), None)
        relays = [r for r in self.results if len(r.hops) > 1]
        if ref is None or not relays:
            return None
        i = self.tolerance - 1
        worse = [r.name for r in relays if r.burst_start_rate[i] >= ref.burst_start_rate[i]]
        return {"reference": reference, "metric": "burst_start_rate",
                "tolerance_packets": self.tolerance,
                "all_relays_better": not worse, "not_better": worse}

    def to_dict(self) -> dict:
        out = {
            "scenario": self.name,
            "tolerance_packets": self.tolerance,
            "period_ms": self.period,
            "survival_time_ms": self.survival_time_ms,
            "horizon": self.horizon,
            "configurations": [
                {"name": r.name,
                 "hops": [hop_summary(h) for h in r.hops],
                 "error_rate": r.error_rate,
                 "mean_burst_length": r.mean_burst_length,
                 "curves": {"conditional_survival": r.conditional_survival.tolist(),
                            "burst_start_rate": r.burst_start_rate.tolist()},
                 **({"monte_carlo": r.mc} if r.mc else {})}
                for r in self.results],
            "rows": self.rows(),
        }
        cmp = self.direct_comparison()
        if cmp:
            out["direct_comparison"] = cmp
        if self.seed is not None:
            out["seed"] = self.seed
            out["mc_steps"] = self.mc_steps
        return out


def analyze(name: str, hops: Sequence[GeModel], horizon: int,
            mc: Optional[SimConfig] = None) -> ConfigurationResult:
    chain = compose(hops)
    lv = lumped_view(chain)
    try:
        bd = end_to_end_burst(chain, horizon)
        surv, start = bd.conditional_survival, bd.burst_start_rate
    except NoBursts:
        surv = start = np.zeros(horizon)
    mc_out = None
    if mc is not None:
        res = simulate(chain, mc)
        cond, rate = empirical_curve(res, horizon)
        total = res.completed_bursts + res.truncated_bursts
        se = np.sqrt(np.clip(surv * (1 - surv), 0, None) / total) if total else np.full(horizon, np.nan)
        mc_out = {"steps": res.steps_recorded, "seed": res.seed, "streams": res.streams,
                  "error_rate": res.error_rate, "bursts": total,
                  "conditional_survival": cond.tolist(), "burst_start_rate": rate.tolist(),
                  "conditional_se": se.tolist()}
    return ConfigurationResult(name, tuple(hops), lv.error_rate, lv.mean_burst_length,
                               surv, start, mc_out)


def compare(configurations: dict, tolerance: int, period: float, horizon: Optional[int] = None,
            mc: Optional[SimConfig] = None, name: str = "comparison") -> Report:
    """Analyze each named hop list; ``configurations`` maps name -> list of GeModel."""
    horizon = max(horizon or tolerance, tolerance)
    rep = Report(name, tolerance, period, horizon,
                 seed=mc.seed if mc else None, mc_steps=mc.steps if mc else None)
    for cname, hops in configurations.items():
        rep.results.append(analyze(cname, hops, horizon, mc))
    return rep

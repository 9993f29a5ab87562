"""Gilbert-Elliott burst-error models from packet latency traces."""

__version__ = "0.1.0"

from .compose import (BurstDistribution, MultiHopChain, compose, effective_ge,
                      end_to_end_burst, lumped_view)
from .errors import (DegenerateChain, GeBurstError, NoBursts, NoCrossing,
                     TraceParseError, UndefinedEstimate, ValidationError)
from .ge import (GeModel, StateSequence, binarize, burst_start_rate, burst_survival,
                 error_probability, fit, fit_with_default, steady_state)
from .mc import SimConfig, SimResult, empirical_burst_survival, simulate
from .scenario import (FIXTURES, budget_split, fixture, generate_trace, regenerate_pair,
                       survival_time, synthesize)
from .trace import EmpiricalCdf, LatencyTrace, crossing_point, ecdf, evaluate, load_trace

__all__ = [
    "BurstDistribution", "MultiHopChain", "compose", "effective_ge", "end_to_end_burst",
    "lumped_view", "DegenerateChain", "GeBurstError", "NoBursts", "NoCrossing",
    "TraceParseError", "UndefinedEstimate", "ValidationError", "GeModel", "StateSequence",
    "binarize", "burst_start_rate", "burst_survival", "error_probability", "fit",
    "fit_with_default", "steady_state", "SimConfig", "SimResult", "empirical_burst_survival",
    "simulate", "FIXTURES", "budget_split", "fixture", "generate_trace", "regenerate_pair",
    "survival_time", "synthesize", "EmpiricalCdf", "LatencyTrace", "crossing_point", "ecdf",
    "evaluate", "load_trace",
]

import itertools

import numpy as np
import pytest

from geburst.ge import GeModel
from geburst.trace import LatencyTrace


def make_trace(latencies, period=100.0, label=""):
    lat = [np.inf if x is None else x for x in latencies]
    return LatencyTrace(np.arange(1, len(lat) + 1), lat, period, label)


def hop_step_prob(m: GeModel, a: bool, b: bool) -> float:
    """One-step probability of a single hop moving from state a to b (True = BAD)."""
    if not a:
        return m.p if b else 1 - m.p
    return 1 - m.r if b else m.r


def joint_step_prob(hops, src, dst) -> float:
    out = 1.0
    for m, a, b in zip(hops, src, dst):
        out *= hop_step_prob(m, a, b)
    return out


def enumerate_survival(hops, n) -> float:
    """P(end-to-end burst lasts >= n | it started), by summing over every BAD path.

    Written against per-hop probabilities only, without any matrix algebra.
    """
    k = len(hops)
    good = (False,) * k
    bad_states = [s for s in itertools.product((False, True), repeat=k) if any(s)]
    exit_total = sum(joint_step_prob(hops, good, s) for s in bad_states)
    total = 0.0
    for path in itertools.product(bad_states, repeat=n):
        prob = joint_step_prob(hops, good, path[0]) / exit_total
        for a, b in zip(path[:-1], path[1:]):
            prob *= joint_step_prob(hops, a, b)
        total += prob
    return total


def power_iteration(P, iters=200_000, tol=1e-15):
    v = np.full(len(P), 1.0 / len(P))
    for _ in range(iters):
        w = v @ P
        if np.abs(w - v).max() < tol:
            return w
        v = w
    return v


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one summary line per acceptance criterion; printed at session end."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(criterion: str, ok: bool, detail: str) -> bool:
        line = f"{criterion:<4} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

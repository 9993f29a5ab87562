"""Command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 invalid input or usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from typing import Optional

import numpy as np

from . import __version__
from .compose import compose, end_to_end_burst
from .errors import GeBurstError
from .ge import GeModel, binarize, fit, fit_with_default
from .mc import LARGE_RUN, SimConfig, empirical_curve, simulate
from .report import compare as build_report
from .scenario import (REFERENCE_CONFIGURATIONS, PERIOD_MS, configuration_label,
                       fixture, load_scenario, synthesize)
from .trace import crossing_point, ecdf, load_trace


EXIT_IO = 1
EXIT_INVALID = 2


class UsageError(GeBurstError):
    pass


def num(x) -> Optional[float]:
    """Round to 6 significant digits for output."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return x
    return float(f"{x:.6g}")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def _round(obj):
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = num(obj)
        return None if math.isnan(v) else ("inf" if math.isinf(v) else v)
    return obj


def emit(args, rows: list[dict], doc: Optional[dict] = None) -> None:
    """Write ``rows`` as CSV or ``doc`` (default: the rows) as JSON."""
    if args.format == "json":
        text = json.dumps(_round(doc if doc is not None else rows), indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        if rows:
            w = csv.writer(buf, lineterminator="\n")
            cols = list(rows[0].keys())
            w.writerow(cols)
            for r in rows:
                w.writerow([_fmt(r.get(c)) for c in cols])
        text = buf.getvalue()
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _model_arg(text: str) -> GeModel:
    """A fixture name or an explicit ``p:r`` pair."""
    if ":" in text:
        p, _, r = text.partition(":")
        try:
            return GeModel(float(p), float(r), text)
        except ValueError as e:
            raise UsageError(f"bad model {text!r}: {e}") from None
    return fixture(text)


def _hops(args) -> tuple[str, list[GeModel], float]:
    if getattr(args, "scenario", None):
        sc = load_scenario(args.scenario)
        return sc.name, list(sc.hops), sc.period
    if not args.fixture:
        raise UsageError("give a scenario file or --fixture NAME[,NAME...]")
    names = [n for n in args.fixture.split(",") if n]
    return configuration_label(names), [_model_arg(n) for n in names], PERIOD_MS


def _sim_config(args, steps: int) -> SimConfig:
    if steps > LARGE_RUN and not args.full_scale:
        raise UsageError(f"{steps} steps exceeds {LARGE_RUN}; pass --full-scale to run it")
    return SimConfig(steps=steps, seed=args.seed, streams=args.streams,
                     burn_in=args.burn_in, workers=args.workers, allow_large=args.full_scale)


# -- commands -----------------------------------------------------------------------


def cmd_ecdf(args):
    trace = load_trace(args.trace, period=args.period)
    cdf = ecdf(trace)
    rows = [{"theta": t, "reliability": f} for t, f in zip(cdf.support.tolist(), cdf.cumulative.tolist())]
    emit(args, rows, {"label": cdf.label, "sample_count": cdf.sample_count,
                      "loss_fraction": cdf.loss_fraction, "period_ms": trace.period,
                      "points": [[r["theta"], r["reliability"]] for r in rows]})
    if args.plot:
        from .plotting import plot_ecdf
        plot_ecdf([cdf], args.plot)


def cmd_fit(args):
    trace = load_trace(args.trace, period=args.period)
    seq = binarize(trace, args.theta)
    if args.default_p is not None or args.default_r is not None:
        m = fit_with_default(seq, args.default_p or 0.0, args.default_r or 1.0, trace.label)
    else:
        m = fit(seq, trace.label)
    d = m.to_dict()
    d["theta_ms"] = args.theta
    c = d.get("counts", {})
    row = {"label": m.label, "theta_ms": args.theta, "p": m.p, "r": m.r,
           "pi_good": d["pi_good"], "pi_bad": d["pi_bad"],
           "gg": c.get("gg"), "gb": c.get("gb"), "bg": c.get("bg"), "bb": c.get("bb"),
           "p_low": c["p_interval"][0], "p_high": c["p_interval"][1],
           "r_low": c["r_interval"][0], "r_high": c["r_interval"][1]}
    emit(args, [row], d)


def cmd_crossing(args):
    a = ecdf(load_trace(args.trace_a, period=args.period))
    b = ecdf(load_trace(args.trace_b, period=args.period))
    rows = [{"theta": c.theta, "reliability": c.reliability,
             "segment_low": c.segment[0], "segment_high": c.segment[1]}
            for c in crossing_point(a, b)]
    emit(args, rows, {"a": a.label, "b": b.label, "crossings": rows})
    if args.plot:
        from .plotting import plot_ecdf
        plot_ecdf([a, b], args.plot, deadline=rows[0]["theta"])


def cmd_burst(args):
    if args.horizon < 1:
        raise UsageError("--horizon must be >= 1")
    name, hops, period = _hops(args)
    chain = compose(hops)
    bd = end_to_end_burst(chain, args.horizon)
    rows = [{"n": n, "conditional_survival": s, "burst_start_rate": b} for n, s, b in bd.to_rows()]
    doc = {"name": name, "hops": [h.to_dict() for h in hops], "period_ms": period,
           **bd.to_dict()}
    mc_cond = None
    if args.mc:
        cfg = _sim_config(args, args.mc)
        res = simulate(chain, cfg)
        mc_cond, mc_rate = empirical_curve(res, args.horizon)
        total = res.completed_bursts + res.truncated_bursts
        s = bd.conditional_survival
        se = np.sqrt(np.clip(s * (1 - s), 0, None) / total) if total else np.full(len(s), np.nan)
        for row, c, r, e in zip(rows, mc_cond, mc_rate, se):
            row.update(mc_conditional_survival=c, mc_burst_start_rate=r, mc_conditional_se=e)
        doc["monte_carlo"] = {"steps": res.steps_recorded, "seed": cfg.seed, "streams": cfg.streams,
                              "burn_in": cfg.burn_in, "error_rate": res.error_rate,
                              "bursts": total, "truncated_bursts": res.truncated_bursts}
        doc["rows"] = rows
    emit(args, rows, doc)
    if args.plot:
        from .plotting import plot_burst_curves
        plot_burst_curves({name: {"n": bd.n, args.metric: getattr(bd, args.metric),
                                  "mc": (mc_cond if args.metric == "conditional_survival"
                                         else mc_rate) if args.mc else None}},
                          args.plot, metric=args.metric)


def cmd_compare(args):
    if args.tolerance < 1:
        raise UsageError("--tolerance must be >= 1")
    if args.fixtures:
        configs = {}
        for group in args.fixtures.split(","):
            names = [n for n in group.split("+") if n]
            if not names:
                continue
            configs[configuration_label(names)] = [_model_arg(n) for n in names]
    else:
        configs = {configuration_label(c): [fixture(n) for n in c] for c in REFERENCE_CONFIGURATIONS}
    mc = _sim_config(args, args.mc) if args.mc else None
    rep = build_report(configs, args.tolerance, args.period, args.horizon, mc)
    rows = rep.rows()
    for r in rows:
        r["survival_time_ms"] = rep.survival_time_ms
    emit(args, rows, rep.to_dict())
    cmp = rep.direct_comparison()
    if cmp:
        if cmp["all_relays_better"]:
            verdict = f"every relay configuration beats {cmp['reference']}"
        else:
            verdict = f"not better than {cmp['reference']}: {', '.join(cmp['not_better'])}"
        print(f"{cmp['metric']} at {rep.tolerance} consecutive errors: {verdict}", file=sys.stderr)
    if args.plot:
        from .plotting import plot_burst_curves
        n = np.arange(1, rep.horizon + 1)
        plot_burst_curves({r.name: {"n": n, "burst_start_rate": r.burst_start_rate,
                                    "conditional_survival": r.conditional_survival}
                           for r in rep.results}, args.plot, metric=args.metric,
                          tolerance=rep.tolerance)


def cmd_synth(args):
    m = synthesize(_model_arg(args.base), _model_arg(args.reference), _model_arg(args.variant),
                   label=args.label or "")
    d = m.to_dict()
    emit(args, [{"label": m.label, "p": m.p, "r": m.r, "pi_good": d["pi_good"],
                 "pi_bad": d["pi_bad"], "flags": ";".join(sorted(m.flags))}], d)


def cmd_simulate(args):
    name, hops, _ = _hops(args)
    cfg = _sim_config(args, args.steps)
    res = simulate(compose(hops), cfg)
    if args.format == "json":
        text = res.to_json() + "\n"
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return
    cond, rate = empirical_curve(res, args.horizon)
    emit(args, [{"n": n, "conditional_survival": c, "burst_start_rate": r}
                for n, c, r in zip(range(1, args.horizon + 1), cond, rate)])


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", default=argparse.SUPPRESS, help="write to this file")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="u64 master seed")

    p = argparse.ArgumentParser(prog="geburst", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def mc_flags(sp, steps_flag):
        if steps_flag:
            sp.add_argument("--mc", type=int, default=0, metavar="STEPS",
                            help="add Monte-Carlo columns from this many packets")
        sp.add_argument("--streams", type=int, default=1)
        sp.add_argument("--burn-in", type=int, default=0)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--full-scale", action="store_true",
                        help=f"allow runs above {LARGE_RUN} packets")

    sp = sub.add_parser("ecdf", parents=[common], help="latency-reliability curve of a trace")
    sp.add_argument("trace")
    sp.add_argument("--period", type=float)
    sp.add_argument("--plot", metavar="IMAGE")
    sp.set_defaults(func=cmd_ecdf)

    sp = sub.add_parser("fit", parents=[common], help="fit a GE model at a deadline")
    sp.add_argument("trace")
    sp.add_argument("--theta", type=float, required=True, help="deadline [ms]")
    sp.add_argument("--period", type=float)
    sp.add_argument("--default-p", type=float)
    sp.add_argument("--default-r", type=float)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("crossing", parents=[common], help="equi-performance deadlines of two traces")
    sp.add_argument("trace_a")
    sp.add_argument("trace_b")
    sp.add_argument("--period", type=float)
    sp.add_argument("--plot", metavar="IMAGE")
    sp.set_defaults(func=cmd_crossing)

    sp = sub.add_parser("burst", parents=[common], help="end-to-end burst-length curves")
    sp.add_argument("scenario", nargs="?")
    sp.add_argument("--fixture", help="comma-separated hops: fixture names or p:r pairs")
    sp.add_argument("--horizon", type=int, default=30)
    sp.add_argument("--plot", metavar="IMAGE")
    sp.add_argument("--metric", choices=("burst_start_rate", "conditional_survival"),
                    default="burst_start_rate")
    mc_flags(sp, True)
    sp.set_defaults(func=cmd_burst)

    sp = sub.add_parser("compare", parents=[common], help="compare configurations at a tolerance")
    sp.add_argument("--fixtures", help="configurations separated by ',', hops joined by '+'")
    sp.add_argument("--tolerance", type=int, default=3, help="consecutive errors tolerated")
    sp.add_argument("--period", type=float, default=PERIOD_MS)
    sp.add_argument("--horizon", type=int, default=30)
    sp.add_argument("--plot", metavar="IMAGE")
    sp.add_argument("--metric", choices=("burst_start_rate", "conditional_survival"),
                    default="burst_start_rate")
    mc_flags(sp, True)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("synth", parents=[common], help="proportional synthesis of a GE model")
    sp.add_argument("--base", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--variant", required=True)
    sp.add_argument("--label")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("simulate", parents=[common], help="Monte-Carlo run, SimResult output")
    sp.add_argument("scenario", nargs="?")
    sp.add_argument("--fixture")
    sp.add_argument("--steps", type=int, default=10**7)
    sp.add_argument("--horizon", type=int, default=30)
    mc_flags(sp, False)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    try:
        args.func(args)
    except (GeBurstError, ValueError) as e:
        print(f"geburst {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        name = getattr(e, "filename", None)
        print(f"geburst {args.command}: error: {e.strerror or e}" + (f": {name}" if name else ""),
              file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())

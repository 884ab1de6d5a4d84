"""Command-line front end: ``run``, ``sweep`` and ``validate``.

Exit codes: 0 ok, 1 invariant failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .analytics import ScalingPoint, loglog_slope, summarize
from .coding import InvariantViolation
from .sim import HARD_INVARIANTS, MONITORED, Mode, SimConfig, SimResult, run, trace_row

log = logging.getLogger("ncbcast")

SCHEMA_VERSION = 1
SEED_ENV = "NC_BCAST_SEED"
HEAVY_RHOS = (0.95, 0.97, 0.98, 0.99, 0.995)

TRACE_HEADER = ["slot", "arrival", "case_label", "support", "rx1_recv", "rx2_recv", "rx3_recv",
                "rank1", "rank2", "rank3", "queue"]
ARQ_TRACE_HEADER = ["slot", "arrival", "support", "rx1_recv", "rank1", "queue"]
PACKET_HEADER = ["id", "arrival_slot", "decode1", "decode2", "decode3", "drop_slot"]
ARQ_PACKET_HEADER = ["id", "arrival_slot", "decode1", "drop_slot"]
SWEEP_HEADER = ["rho", "lambda", "mu", "x", "mean_delay_rx1", "mean_delay_rx2", "mean_delay_rx3",
                "mean_delay_avg", "mean_queue", "slots", "seed"]


class UsageError(Exception):
    pass


def resolve_rates(lam: Optional[float], rho: Optional[float], mu: float) -> Tuple[float, float]:
    """Return ``(lambda, rho)`` from exactly one of them and ``mu``."""
    if not 0.0 < mu <= 1.0:
        raise UsageError(f"--mu must lie in (0, 1], got {mu}")
    if (lam is None) == (rho is None):
        raise UsageError("give exactly one of --lambda and --rho")
    if lam is None:
        lam = rho * mu
    else:
        rho = lam / mu
    if not 0.0 <= lam <= 1.0:
        raise UsageError(f"arrival probability {lam} outside [0, 1]")
    return lam, rho


def parse_list(text: str, kind: Callable = float) -> list:
    try:
        return [kind(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None


def _fmt(x: Optional[int]) -> str:
    return "" if x is None else str(x)


def write_packets(path: Path, result: SimResult) -> None:
    arq = result.config.mode is Mode.SINGLE_RX_ARQ
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(ARQ_PACKET_HEADER if arq else PACKET_HEADER)
        for p in result.packets:
            w.writerow([p.id, p.arrival_slot, *(_fmt(d) for d in p.decode), _fmt(p.drop_slot)])


def build_report(result: SimResult, warmup: int = 0) -> dict:
    cfg = result.config
    report: Dict = {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "lambda": cfg.lam,
            "rho": cfg.rho,
            "mu": cfg.mu,
            "slots": cfg.slots,
            "seed": cfg.seed,
            "rng": "python-random-MT19937",
            "mode": cfg.mode.value,
            "drain": cfg.drain,
            "assert_level": cfg.assert_level.value,
            "warmup": warmup,
        },
        "slots_run": result.slots_run,
        "arrived": len(result.packets),
        "stats": None,
        "violations": dict(result.monitor.counts),
        "hard_violations": result.monitor.hard_total,
        "first_violations": {k: {"slot": v["slot"], "message": v["message"]}
                             for k, v in result.monitor.first.items()},
        "fallbacks": result.monitor.fallbacks,
        "case_counts": result.case_counts,
    }
    try:
        stats = summarize(result.packets, result.queue_sizes, warmup=warmup, horizon=cfg.slots)
    except ValueError as e:
        report["stats_error"] = str(e)
    else:
        report["stats"] = {
            "per_rx_mean_delay": stats.per_rx_mean_delay,
            "mean_delay": stats.mean_delay,
            "mean_queue": stats.mean_queue,
            "max_queue": stats.max_queue,
            "packets": stats.packets,
            "censored": stats.censored,
        }
    return report


def write_report(path: Path, report: dict, fmt: str) -> None:
    if fmt == "json":
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        return
    rows = []

    def flatten(prefix: str, obj) -> None:
        if isinstance(obj, dict):
            for k in sorted(obj):
                flatten(f"{prefix}.{k}" if prefix else str(k), obj[k])
        elif isinstance(obj, list):
            for i, v in enumerate(obj, start=1):
                flatten(f"{prefix}.{i}", v)
        else:
            rows.append([prefix, "" if obj is None else obj])

    flatten("", report)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)


def _config_from(args, lam: float, seed: int, slots: Optional[int] = None) -> SimConfig:
    return SimConfig(
        lam=lam,
        mu=args.mu,
        slots=args.slots if slots is None else slots,
        seed=seed,
        mode=Mode(args.mode),
        drain=not args.no_drain,
        assert_level=args.assert_level,
        keep_trace=False,
    )


def cmd_run(args) -> int:
    lam, _ = resolve_rates(args.lam, args.rho, args.mu)
    seed = args.seed if args.seed is not None else _default_seed()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _config_from(args, lam, seed)
    arq = cfg.mode is Mode.SINGLE_RX_ARQ

    with open(out / "trace.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(ARQ_TRACE_HEADER if arq else TRACE_HEADER)
        try:
            result = run(cfg, on_slot=lambda rec: w.writerow(trace_row(rec)))
        except InvariantViolation as e:
            (out / "violation.json").write_text(json.dumps(
                {"kind": e.kind, "message": str(e), "state": e.dump}, indent=2, sort_keys=True) + "\n")
            print(f"invariant failure: {e}", file=sys.stderr)
            return 1
    write_packets(out / "packets.csv", result)
    report = build_report(result, args.warmup)
    write_report(out / f"report.{args.format}", report, args.format)

    stats = report["stats"]
    if stats is not None:
        print(f"rho={cfg.rho:.6g} lambda={cfg.lam:.6g} mu={cfg.mu:.6g} packets={stats['packets']} "
              f"mean_delay={stats['mean_delay']:.4f} mean_queue={stats['mean_queue']:.4f}")
    else:
        print(f"rho={cfg.rho:.6g} lambda={cfg.lam:.6g} mu={cfg.mu:.6g} packets=0")
    if report["hard_violations"]:
        print(f"hard invariant violations: {report['hard_violations']}", file=sys.stderr)
        return 1
    return 0


def run_point(rho: float, mu: float, slots: int, seed: int, assert_level: str = "monitor",
              drain: bool = True, warmup: int = 0) -> dict:
    """One sweep cell: simulate and reduce to a sweep CSV row."""
    cfg = SimConfig(lam=rho * mu, mu=mu, slots=slots, seed=seed, drain=drain,
                    assert_level=assert_level, keep_trace=False)
    result = run(cfg)
    stats = summarize(result.packets, result.queue_sizes, warmup=warmup, horizon=slots)
    return {
        "rho": rho,
        "lambda": cfg.lam,
        "mu": mu,
        "x": 1.0 / (1.0 - rho),
        "mean_delay_rx1": stats.per_rx_mean_delay[0],
        "mean_delay_rx2": stats.per_rx_mean_delay[1],
        "mean_delay_rx3": stats.per_rx_mean_delay[2],
        "mean_delay_avg": stats.mean_delay,
        "mean_queue": stats.mean_queue,
        "slots": slots,
        "seed": seed,
        "hard_violations": result.monitor.hard_total,
    }


def _call(job):
    runner, kw = job
    return runner(**kw)


def sweep(
    rhos: Sequence[float],
    mu: float,
    slots: Sequence[int],
    seeds: Sequence[int],
    runner: Callable[..., dict] = run_point,
    jobs: int = 1,
    **opts,
) -> Tuple[List[dict], float, List[ScalingPoint]]:
    """Run every (rho, seed) cell; return rows, fitted slope, averaged points.

    ``slots`` holds one horizon per rho, or a single value for all.
    """
    if len(slots) == 1:
        slots = list(slots) * len(rhos)
    if len(slots) != len(rhos):
        raise UsageError("--slots needs one value or one per rho")
    cells = [(runner, dict(rho=r, mu=mu, slots=n, seed=s, **opts))
             for r, n in zip(rhos, slots) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_call, cells))
    else:
        rows = [_call(c) for c in cells]
    rows.sort(key=lambda r: (r["rho"], r["seed"]))
    points = []
    for rho in sorted(set(rhos)):
        ds = [r["mean_delay_avg"] for r in rows if r["rho"] == rho]
        points.append(ScalingPoint(rho, sum(ds) / len(ds)))
    return rows, loglog_slope(points), points


def write_sweep(path: Path, rows: List[dict], slope: float, points: List[ScalingPoint]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([r[k] for k in SWEEP_HEADER])
        for p in points:
            f.write(f"# mean rho={p.rho!r} x={p.x!r} delay={p.delay!r}\n")
        f.write(f"# slope={slope!r}\n")


def cmd_sweep(args) -> int:
    seeds = args.seeds or [args.seed if args.seed is not None else _default_seed()]
    for rho in args.rhos:
        if not 0.0 < rho < 1.0:
            raise UsageError(f"sweep rho values must lie in (0, 1), got {rho}")
        resolve_rates(None, rho, args.mu)
    rows, slope, points = sweep(args.rhos, args.mu, args.slots_list, seeds, jobs=args.jobs,
                                assert_level=args.assert_level, drain=not args.no_drain,
                                warmup=args.warmup)
    out = Path(args.out)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "sweep.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    write_sweep(out, rows, slope, points)
    for p in points:
        print(f"rho={p.rho:<6g} x={p.x:<8.4g} mean_delay={p.delay:.4f}")
    print(f"loglog slope = {slope:.4f}")
    bad = sum(r.get("hard_violations", 0) for r in rows)
    if bad:
        print(f"hard invariant violations: {bad}", file=sys.stderr)
        return 1
    return 0


def cmd_validate(args) -> int:
    lam, rho = resolve_rates(args.lam, args.rho, args.mu)
    seeds = args.seeds or [args.seed if args.seed is not None else _default_seed()]
    kinds = HARD_INVARIANTS + MONITORED
    print("seed  " + " ".join(f"{k:>22}" for k in kinds) + "  status")
    failed = 0
    table = []
    for seed in seeds:
        cfg = _config_from(args, lam, seed)
        try:
            result = run(cfg)
            counts = dict(result.monitor.counts)
            status = "FAIL" if result.monitor.hard_total else "ok"
        except InvariantViolation as e:
            counts = dict.fromkeys(kinds, 0)
            counts[e.kind] = counts.get(e.kind, 0) + 1
            status = f"FAIL ({e.kind})"
        failed += status != "ok"
        table.append({"seed": seed, "counts": counts, "status": status})
        print(f"{seed:<5} " + " ".join(f"{counts.get(k, 0):>22}" for k in kinds) + f"  {status}")
    monitored = sum(row["counts"].get(k, 0) for row in table for k in MONITORED)
    if monitored:
        print(f"NOTE: monitored conjecture fired {monitored} times "
              "(at most one non-leader with heard-but-undecoded packets)")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "validate.json").write_text(json.dumps(
            {"schema_version": SCHEMA_VERSION, "lambda": lam, "rho": rho, "mu": args.mu,
             "slots": args.slots, "runs": table}, indent=2, sort_keys=True) + "\n")
    return 1 if failed else 0


def _add_rate_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, help="arrival probability per slot")
    p.add_argument("--rho", type=float, help="load factor lambda/mu")


def _add_common(p: argparse.ArgumentParser, assert_default: str, slots_default: int = 100_000) -> None:
    p.add_argument("--mu", type=float, default=0.5, help="per-receiver delivery probability")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (fallback: ${SEED_ENV}, then 1)")
    p.add_argument("--assert-level", choices=("off", "monitor", "strict"), default=assert_default)
    p.add_argument("--no-drain", action="store_true", help="stop when arrivals stop")
    p.add_argument("--warmup", type=int, default=0, help="slots excluded from statistics")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncbcast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate once and write trace, packet and report files")
    _add_rate_args(p)
    _add_common(p, "monitor")
    p.add_argument("--slots", type=int, default=100_000)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.THREE_RX_CODED.value)
    p.add_argument("--out", default="out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="delay versus 1/(1-rho) and its log-log slope")
    p.add_argument("--rhos", type=parse_list, default=list(HEAVY_RHOS))
    _add_common(p, "monitor")
    p.add_argument("--slots", dest="slots_list", type=lambda s: parse_list(s, int), default=[500_000],
                   help="one horizon, or a comma list with one per rho")
    p.add_argument("--seeds", type=lambda s: parse_list(s, int), default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run with invariant checks and report violation counts")
    _add_rate_args(p)
    _add_common(p, "strict")
    p.add_argument("--slots", type=int, default=100_000)
    p.add_argument("--seeds", type=lambda s: parse_list(s, int), default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate, mode=Mode.THREE_RX_CODED.value)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: run, compare, sweep-tiles, gen-scenario."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import PRESETS, ROUTER_KINDS, ConfigError, dump_config, load_config
from .harness import Scenario, compare_routers, make_router, run_simulation, sweep_csv, sweep_tiles
from .metrics import (aggregate_runs, half_day_window, metrics_csv, run_summary, running_mean,
                      running_mean_start)
from .skylink import SkyLinkRouter
from .svg import heatmap, line_chart

EXIT_CONFIG = 2


def _csv_list(text: str, cast):
    try:
        items = [cast(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from None
    if not items:
        raise ConfigError(f"empty list {text!r}")
    return items


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def _plots(out: Path, records_by_name: dict, slot_duration_s: float) -> None:
    """Cost, drop rate and throughput over time, smoothed over half a day and averaged over seeds."""
    window = half_day_window(slot_duration_s)
    for field, label, fname in (("cost_s", "cost [s]", "cost.svg"), ("drop_rate", "drop rate", "drop_rate.svg"),
                                ("throughput_bps", "throughput [bit/s]", "throughput.svg")):
        series = {}
        for name, runs in records_by_name.items():
            smoothed = [running_mean([getattr(r, field) for r in recs], window) for recs in runs.values()]
            mean, _ = aggregate_runs(smoothed)
            start = min(running_mean_start(window), len(mean) - 1)
            hours = np.arange(len(mean)) * slot_duration_s / 3600.0
            series[name] = (hours[start:], mean[start:])
        _write(out / fname, line_chart(series, title=label, xlabel="time [h]", ylabel=label))


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.router:
        if args.router not in ROUTER_KINDS:
            raise ConfigError(f"unknown router {args.router!r}")
        cfg = cfg.with_router(kind=args.router)
    seeds = [args.seed] if args.seed is not None else list(cfg.seeds)
    scenario = Scenario(cfg)
    out = Path(args.out)
    rows, runs, summaries = [], {}, {}
    for s in seeds:
        router = make_router(cfg.router, cfg.ttl.t_max_s)
        recs = run_simulation(cfg, s, router, scenario=scenario)
        runs[s] = recs
        rows.extend((cfg.router.kind, s, r) for r in recs)
        summaries[str(s)] = run_summary(recs, cfg.slot_duration_s)
        if isinstance(router, SkyLinkRouter):
            _write(out / f"bandit_state_seed{s}.json",
                   router.to_json(lambda v, n=scenario.num_sats: f"sat{v}" if v < n else f"gs{v - n}") + "\n")
    _write(out / "metrics.csv", metrics_csv(rows))
    _write(out / "summary.json", json.dumps({"router": cfg.router.kind, "seeds": summaries}, indent=1, sort_keys=True) + "\n")
    _plots(out, {cfg.router.kind: runs}, cfg.slot_duration_s)
    print(f"wrote {out / 'metrics.csv'}")
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    routers = _csv_list(args.routers, str)
    unknown = [r for r in routers if r not in ROUTER_KINDS]
    if unknown:
        raise ConfigError(f"unknown routers: {', '.join(unknown)}")
    report = compare_routers(cfg, routers, tail_fraction=args.tail_fraction)
    out = Path(args.out)
    rows = [(name, s, r) for name in routers for s in report.seeds for r in report.records[name][s]]
    _write(out / "metrics.csv", metrics_csv(rows))
    _write(out / "comparison.json", json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    lines = ["router,baseline,cost_reduction_pct,drop_reduction_pct,throughput_gain_pct"]
    for a in routers:
        for b in routers:
            r = report.ratios[a][b]
            lines.append(f"{a},{b},{r['cost_reduction_pct']!r},{r['drop_reduction_pct']!r},{r['throughput_gain_pct']!r}")
    _write(out / "ratios.csv", "\n".join(lines) + "\n")
    _plots(out, report.records, cfg.slot_duration_s)
    for name in routers:
        s = report.summaries[name]
        print(f"{name:>11}  cost {s['mean_cost_s']:.4f} s  drop {s['mean_drop_rate']:.3f}  "
              f"throughput {s['mean_throughput_bps'] / 1e6:.2f} Mbit/s")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    widths_km = _csv_list(args.widths_km, float)
    parts = _csv_list(args.partitions, int)
    if any(w <= 0 for w in widths_km) or any(g < 1 for g in parts):
        raise ConfigError("widths must be positive and partition counts at least 1")
    grid = sweep_tiles(cfg, [w * 1e3 for w in widths_km], parts)
    out = Path(args.out)
    _write(out / "sweep.csv", sweep_csv([w * 1e3 for w in widths_km], parts, grid))
    _write(out / "sweep.svg", heatmap(grid, [f"{w:g} km" for w in widths_km], [f"|G|={g}" for g in parts],
                                      title="mean cost [s]", xlabel="partitions", ylabel="tile width"))
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def cmd_gen(args) -> int:
    _write(Path(args.out), dump_config(PRESETS[args.preset]()))
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leosim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one router over the configured seeds")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, help="run only this seed")
    r.add_argument("--router", help=f"override the router kind ({', '.join(ROUTER_KINDS)})")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run several routers on identical traffic")
    c.add_argument("--config", required=True)
    c.add_argument("--routers", default=",".join(ROUTER_KINDS))
    c.add_argument("--out", required=True)
    c.add_argument("--tail-fraction", type=float, default=1.0,
                   help="summarize only the last fraction of slots (default: all)")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep-tiles", help="mean cost over a grid of tile widths and partition counts")
    s.add_argument("--config", required=True)
    s.add_argument("--widths-km", default="20,50,100,500,1000,2000")
    s.add_argument("--partitions", default="1,2,3,4,5,6")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gen-scenario", help="write a preset scenario as TOML")
    g.add_argument("--preset", choices=sorted(PRESETS), required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``larsim run | sweep | plot | gen-trace``."""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from larsim.config import ConfigError, ScenarioConfig, parse_config, preset, seed_range
from larsim.engine import InvariantError, Simulation
from larsim.metrics import RunReport, aggregate
from larsim.mobility import TraceError, export_trace, generate_trajectory, import_trace
from larsim.plots import PlotError, plot_csv

COLUMNS = ["scenario", "nodes", "seed", "pdr", "avg_delay_s", "sent", "received", "collisions", "discoveries"]


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(p) for p in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def load_configs(args) -> list[ScenarioConfig]:
    """Configs for every requested scenario with command-line overrides applied."""
    if args.config:
        cfgs = [parse_config(Path(args.config).read_text())]
    else:
        cfgs = [preset(s) for s in args.scenario.split(",")]
    over = {}
    if args.nodes:
        over["node_counts"] = args.nodes
    if args.seeds is not None or args.seed_base is not None:
        count = args.seeds if args.seeds is not None else len(cfgs[0].seeds)
        over["seeds"] = seed_range(count, 1 if args.seed_base is None else args.seed_base)
    if args.sim_time is not None:
        over["sim_time"] = args.sim_time
    return [c.with_overrides(**over) for c in cfgs]


def _one_run(task) -> RunReport:
    cfg, n, seed = task
    return Simulation(cfg, n, seed, check_invariants=True).run()


def run_sweep(cfgs: list[ScenarioConfig], jobs: int = 1, progress=None) -> list[RunReport]:
    tasks = [(c, n, s) for c in cfgs for n in c.node_counts for s in c.seeds]
    # big runs first so the pool does not end on a straggler
    order = sorted(range(len(tasks)), key=lambda i: -tasks[i][1])
    results: list[RunReport | None] = [None] * len(tasks)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, rep in zip(order, pool.map(_one_run, [tasks[i] for i in order])):
                results[i] = rep
                if progress:
                    progress(rep)
    else:
        for i in order:
            results[i] = _one_run(tasks[i])
            if progress:
                progress(results[i])
    return results


def csv_text(reports: list[RunReport]) -> str:
    """Per-seed rows followed by one AGG row for every (scenario, nodes) cell."""
    cells: dict[tuple, list[RunReport]] = {}
    for r in reports:
        cells.setdefault((r.scenario, r.node_count), []).append(r)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for key in sorted(cells, key=lambda k: (k[0], k[1])):
        runs = sorted(cells[key], key=lambda r: r.seed)
        for r in runs:
            w.writerow(r.row())
        w.writerow(aggregate(runs).row())
    return buf.getvalue()


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def cmd_run(args) -> int:
    cfg = load_configs(args)[0]
    n = cfg.node_counts[0] if not args.nodes else args.nodes[0]
    seed = cfg.seeds[0]
    trace = None
    if args.trace_in:
        trace = import_trace(Path(args.trace_in).read_text(), expected_nodes=n)
    sim = Simulation(cfg, n, seed, trace=trace, event_log=bool(args.event_log), check_invariants=True)
    if args.trace_out:
        Path(args.trace_out).write_text(export_trace(sim.samples, sim.interval))
    rep = sim.run()
    text = csv_text([rep])
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(text)
    if args.event_log:
        Path(args.event_log).write_text(sim.log_text())
    sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    cfgs = load_configs(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    total = sum(len(c.node_counts) * len(c.seeds) for c in cfgs)
    done = 0
    t0 = time.perf_counter()

    def progress(rep):
        nonlocal done
        done += 1
        if not args.quiet:
            _log(f"[{done}/{total}] scenario {rep.scenario} nodes {rep.node_count} seed {rep.seed}: "
                 f"pdr {rep.pdr:.4f} delay {rep.avg_delay:.4f}s ({time.perf_counter() - t0:.0f}s)")

    reports = run_sweep(cfgs, args.jobs, progress)
    path = out / "results.csv"
    path.write_text(csv_text(reports))
    if not args.quiet:
        _log(f"wrote {path} ({total} runs, {time.perf_counter() - t0:.1f}s)")
    if args.plot:
        for p in plot_csv(path, out):
            if not args.quiet:
                _log(f"wrote {p}")
    return 0


def cmd_plot(args) -> int:
    for p in plot_csv(args.csv, args.out_dir or Path(args.csv).parent):
        _log(f"wrote {p}")
    return 0


def cmd_gen_trace(args) -> int:
    cfg = load_configs(args)[0]
    n = cfg.node_counts[0] if not args.nodes else args.nodes[0]
    samples = generate_trajectory(n, cfg.sim_time, cfg.mobility(), cfg.grid(), cfg.seeds[0])
    Path(args.trace_out).write_text(export_trace(samples, cfg.update_interval))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="larsim", description="LAR scheme 1 over Manhattan-grid vehicular mobility")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp, multi=False):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--config", help="key=value scenario file")
        g.add_argument("--scenario", default="1",
                       help="preset 1, 2 or 3" + (" (comma-separated for several)" if multi else ""))
        sp.add_argument("--nodes", type=_int_list, help="node count(s), comma-separated")
        sp.add_argument("--seeds", type=int, help="number of seeds")
        if multi:
            sp.add_argument("--seed-base", type=int, help="first seed (default 1)")
        else:
            sp.add_argument("--seed", "--seed-base", dest="seed_base", type=int, help="seed (default 1)")
        sp.add_argument("--sim-time", type=float, help="simulated seconds")

    r = sub.add_parser("run", help="one run; prints the CSV rows")
    scenario_args(r)
    r.add_argument("--out-dir", help="also write results.csv here")
    r.add_argument("--trace-in", help="replay this mobility trace")
    r.add_argument("--trace-out", help="write the mobility trace used by the run")
    r.add_argument("--event-log", help="write the protocol event log here")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="node counts x seeds; writes results.csv")
    scenario_args(s, multi=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    s.add_argument("--plot", action="store_true", help="also write the SVG charts")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="SVG charts from a results CSV")
    pl.add_argument("csv")
    pl.add_argument("--out-dir")
    pl.set_defaults(func=cmd_plot)

    g = sub.add_parser("gen-trace", help="write a mobility trace without simulating traffic")
    scenario_args(g)
    g.add_argument("--trace-out", required=True)
    g.set_defaults(func=cmd_gen_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceError, PlotError, InvariantError, OSError, ValueError) as exc:
        print(f"larsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

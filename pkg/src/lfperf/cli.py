"""One entry point: predict, simulate, bench, calibrate, poisson-check,
compare, sweep.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.  File
formats are documented in docs/formats.md.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from lfperf import csvio
from lfperf.latency import build_latency_profile, dump_latency_csv
from lfperf.rates import build_rate_table, dump_rates_csv
from lfperf.solver import DEFAULT_CLOCK_HZ, sweep
from lfperf.workload import (
    ConfigError,
    SpecError,
    StructureSpec,
    parse_platform_config,
    parse_workload_config,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _structure_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--structure", required=True,
                        choices=["ll", "ht", "sl", "bst"])
    parser.add_argument("--lf", type=int, default=2,
                        help="hash-table load factor (keys per bucket)")
    parser.add_argument("--hmax", type=int, default=None,
                        help="skip-list height cap (default: log2 of the range)")
    parser.add_argument("--layout", choices=["padded", "packed"], default="padded")
    parser.add_argument("--pages", type=int, default=None,
                        help="pages backing the node pool (default: minimal)")
    parser.add_argument("--node-size", type=int, default=24)


def _structure_from(args) -> StructureSpec:
    return StructureSpec(kind=args.structure, load_factor=args.lf, h_max=args.hmax,
                         layout=args.layout, pages=args.pages,
                         node_size=args.node_size)


def _parse_list(text: str, conv=float) -> list:
    return [conv(part) for part in text.split(",") if part.strip()]


def _scenario_name(kind, r, u_pct, threads, layout) -> str:
    return f"{kind}-r{r}-u{u_pct:g}-p{threads}-{layout}"


def cmd_predict(args) -> int:
    w = parse_workload_config(args.workload)
    p = parse_platform_config(args.platform)
    s = _structure_from(args)
    clock_hz = args.clock_ghz * 1e9
    thread_counts = _parse_list(args.sweep_threads, int) if args.sweep_threads \
        else [w.threads]
    updates = _parse_list(args.sweep_updates) if args.sweep_updates else None
    if updates is not None:
        updates = [u / 100.0 for u in updates]
    rows = []
    for item in sweep(w, s, p, thread_counts, updates):
        if item.solution is None:
            print(f"warning: {item.structure} P={item.threads} "
                  f"u={item.update_pct:g}%: {item.error}", file=sys.stderr)
            continue
        sol = item.solution
        rows.append(csvio.ScenarioRow(
            _scenario_name(s.kind, w.key_range, item.update_pct, item.threads,
                           s.layout),
            s.kind, w.key_range, w.distribution, item.update_pct, item.threads,
            s.layout, predicted_ops_s=sol.ops_per_second(clock_hz),
            quad_a=sol.quad_a, quad_b=sol.quad_b, events_per_op=sol.events_per_op,
        ))
        print(f"{rows[-1].scenario}: {rows[-1].predicted_ops_s:.4g} ops/s "
              f"({sol.throughput:.6g} ops/cycle, {sol.events_per_op:.2f} events/op)")
    if args.dump_rates or args.dump_latency:
        table = build_rate_table(w, s)
        if args.dump_rates:
            dump_rates_csv(table, args.dump_rates)
        if args.dump_latency:
            profile = build_latency_profile(table, s, p, w.threads)
            dump_latency_csv(profile, args.dump_latency)
    if args.out:
        csvio.write_scenarios(rows, args.out)
    return EXIT_OK if rows else EXIT_RUNTIME


def cmd_simulate(args) -> int:
    from lfperf.sim import SimConfig, simulate_full

    w = parse_workload_config(args.workload)
    p = parse_platform_config(args.platform)
    s = _structure_from(args)
    clock_hz = args.clock_ghz * 1e9
    tracked = tuple(_parse_list(args.tracked, int)) if args.tracked else ()
    cfg = SimConfig(w, s, p, seed=args.seed, ops_per_thread=args.ops,
                    warmup_ops_per_thread=args.warmup, tracked_keys=tracked)
    report = simulate_full(cfg)
    u_pct = w.mix.update_fraction * 100.0
    row = csvio.ScenarioRow(
        _scenario_name(s.kind, w.key_range, u_pct, w.threads, s.layout),
        s.kind, w.key_range, w.distribution, u_pct, w.threads, s.layout,
        sim_ops_s=report.throughput * clock_hz,
    )
    print(f"{row.scenario}: simulated {row.sim_ops_s:.4g} ops/s "
          f"({report.throughput:.6g} ops/cycle over {report.measured_ops} ops)")
    if args.out:
        csvio.write_scenarios([row], args.out)
    if args.interarrival:
        csvio.write_gaps({k: list(v) for k, v in report.interarrival.items()},
                         args.interarrival)
    return EXIT_OK


def cmd_bench(args) -> int:
    from lfperf.harness import BenchConfig, run_bench

    w = parse_workload_config(args.workload)
    s = _structure_from(args)
    tracked = tuple(_parse_list(args.tracked, int)) if args.tracked else ()
    cfg = BenchConfig(w, s, warmup_seconds=args.warmup_seconds,
                      measure_seconds=args.measure_seconds, tracked_keys=tracked,
                      pin=not args.no_pin, seed=args.seed, clock_ghz=args.clock_ghz)
    report = run_bench(cfg)
    u_pct = w.mix.update_fraction * 100.0
    row = csvio.ScenarioRow(
        _scenario_name(s.kind, w.key_range, u_pct, w.threads, s.layout),
        s.kind, w.key_range, w.distribution, u_pct, w.threads, s.layout,
        measured_ops_s=report.measured_ops_per_s,
    )
    print(f"{row.scenario}: measured {row.measured_ops_s:.4g} ops/s over "
          f"{report.duration_s:.2f}s (pinned: {report.pinned}; "
          f"reclaimed {report.reclamation.reclaimed} nodes)")
    if args.out:
        csvio.write_scenarios([row], args.out)
    if args.interarrival:
        csvio.write_gaps({k: list(v) for k, v in report.interarrival.items()},
                         args.interarrival)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from lfperf.harness.calibrate import CalibrationError, calibrate_to_file

    try:
        result = calibrate_to_file(args.out, quick=args.quick, tlb_l1=args.tlb_l1,
                                   tlb_l2=args.tlb_l2)
    except CalibrationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    unit = "cycles (rdtsc)" if result.uses_tsc else "nanoseconds (no cycle counter)"
    print(f"wrote {args.out}; latencies in {unit}")
    for note in result.notes:
        print(f"note: {note}")
    return EXIT_OK


def cmd_poisson_check(args) -> int:
    from lfperf.sim.core import InterarrivalStats, exponential_ks

    keys = _parse_list(args.keys, int)
    if not keys:
        print("error: --keys is required", file=sys.stderr)
        return EXIT_CONFIG
    w = parse_workload_config(args.workload)
    s = _structure_from(args)
    if args.source == "sim":
        from lfperf.sim import SimConfig, simulate_full

        p = parse_platform_config(args.platform)
        cfg = SimConfig(w, s, p, seed=args.seed, ops_per_thread=args.ops,
                        warmup_ops_per_thread=args.warmup, tracked_keys=tuple(keys))
        gaps_by_key = simulate_full(cfg).interarrival
    else:
        from lfperf.harness import BenchConfig, run_bench

        cfg = BenchConfig(w, s, warmup_seconds=args.warmup_seconds,
                          measure_seconds=args.measure_seconds,
                          tracked_keys=tuple(keys), pin=not args.no_pin,
                          seed=args.seed, clock_ghz=args.clock_ghz)
        gaps_by_key = run_bench(cfg).interarrival

    stats = []
    insufficient = []
    for key in keys:
        gaps = np.asarray(gaps_by_key.get(key, ()))
        ks, pval, enough = exponential_ks(gaps)
        mean = float(gaps.mean()) if len(gaps) else float("nan")
        stats.append(InterarrivalStats(key, gaps, mean, ks, pval, enough))
        flag = "" if enough else "  (insufficient samples)"
        print(f"key {key}: n={len(gaps)} mean={mean:.4g} ks={ks:.4f} p={pval:.4g}{flag}")
        if not enough:
            insufficient.append(key)
    if args.out:
        csvio.write_poisson_stats(stats, args.out)
    if args.gaps:
        csvio.write_gaps({k: list(np.asarray(gaps_by_key.get(k, ()))) for k in keys},
                         args.gaps)
    return EXIT_OK if not insufficient else EXIT_RUNTIME


def cmd_compare(args) -> int:
    groups = [csvio.read_scenarios(path) for path in args.csvs]
    merged = csvio.merge_scenarios(groups)
    for reference, label in (("sim_ops_s", "predicted vs simulated"),
                             ("measured_ops_s", "predicted vs measured")):
        pairs, summary = csvio.relative_errors(merged, reference)
        print(summary.describe(label))
        if args.verbose:
            for row, err in pairs:
                print(f"  {row.scenario}: {err:+.2%}")
    if args.out:
        csvio.write_scenarios(merged, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.sweep_threads:
        args.sweep_threads = "1,2,4,8"
    return cmd_predict(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfperf",
        description="Throughput prediction and measurement for lock-free "
                    "search data structures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common_model(p, platform=True):
        p.add_argument("--workload", required=True, help="workload.cfg path")
        if platform:
            p.add_argument("--platform", required=True, help="platform.cfg path")
        _structure_flags(p)
        p.add_argument("--clock-ghz", type=float, default=DEFAULT_CLOCK_HZ / 1e9,
                       help="clock used to display ops/s (cycles are internal)")
        p.add_argument("--out", help="write scenario CSV here")

    p = sub.add_parser("predict", help="analytical throughput prediction")
    common_model(p)
    p.add_argument("--sweep-threads", help="comma list of thread counts")
    p.add_argument("--sweep-updates", help="comma list of update percentages")
    p.add_argument("--dump-rates", help="write per-node presence/rate CSV")
    p.add_argument("--dump-latency", help="write per-node latency-factor CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep", help="predict over a thread/update grid")
    common_model(p)
    p.add_argument("--sweep-threads", help="comma list (default 1,2,4,8)")
    p.add_argument("--sweep-updates", help="comma list of update percentages")
    p.add_argument("--dump-rates")
    p.add_argument("--dump-latency")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="discrete-event oracle simulation")
    common_model(p)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--ops", type=int, default=20000, help="measured ops per thread")
    p.add_argument("--warmup", type=int, default=5000, help="warmup ops per thread")
    p.add_argument("--tracked", help="comma list of tracked keys")
    p.add_argument("--interarrival", help="write tracked-key gap CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="measure the real lock-free structures")
    common_model(p, platform=False)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--warmup-seconds", type=float, default=1.0)
    p.add_argument("--measure-seconds", type=float, default=3.0)
    p.add_argument("--tracked", help="comma list of tracked keys")
    p.add_argument("--interarrival", help="write tracked-key gap CSV here")
    p.add_argument("--no-pin", action="store_true", help="skip thread pinning")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("calibrate", help="measure platform latencies into platform.cfg")
    p.add_argument("--out", default="platform.cfg")
    p.add_argument("--quick", action="store_true", help="fewer iterations (smoke)")
    p.add_argument("--tlb-l1", type=int, default=64, help="assumed L1 TLB entries")
    p.add_argument("--tlb-l2", type=int, default=1024, help="assumed L2 TLB entries")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("poisson-check",
                       help="inter-arrival exponential fit for tracked keys")
    p.add_argument("--source", choices=["sim", "bench"], default="sim")
    common_model(p)
    p.add_argument("--keys", required=True, help="comma list of tracked keys")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--ops", type=int, default=50000)
    p.add_argument("--warmup", type=int, default=5000)
    p.add_argument("--warmup-seconds", type=float, default=0.5)
    p.add_argument("--measure-seconds", type=float, default=3.0)
    p.add_argument("--no-pin", action="store_true")
    p.add_argument("--gaps", help="write raw gap CSV here")
    p.set_defaults(func=cmd_poisson_check)

    p = sub.add_parser("compare", help="merge result CSVs and report errors")
    p.add_argument("csvs", nargs="+")
    p.add_argument("--out", help="write the merged CSV here")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, csvio.SchemaError, SpecError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

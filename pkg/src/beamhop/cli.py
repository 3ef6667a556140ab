"""Command line front end.

Four subcommands:

  run       simulate one algorithm, write summary.csv (+ slots.csv, figures)
  compare   run several algorithms on the same scenario, write comparison.csv
  sweep     grid of algorithms x arrival rates, write comparison.csv
  validate  quick built-in self checks, PASS/FAIL per check

CSV output is deterministic for a given configuration and seed: fixed float
formatting, ``\n`` line endings, no wall-clock columns.  Timing information
goes to stdout only.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import engine, metrics
from .config import ALGORITHMS, SimConfig, canonical_algorithm, dump_example, load_config
from .geometry import GeoPoint, build_grid


def _fmt(value) -> str:
    """Stable scalar formatting for CSV cells (12 significant digits)."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    f = float(value)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return format(f, ".12g")


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _resolve_out_dir(flag_value, default_name: str) -> str:
    if flag_value:
        return flag_value
    base = os.environ.get("BEAMHOP_OUT_DIR")
    if base:
        return os.path.join(base, default_name)
    return default_name


def _prepare_out_dir(out_dir: str, csv_names: list[str], force: bool) -> None:
    os.makedirs(out_dir, exist_ok=True)
    if force:
        return
    clashes = [n for n in csv_names if os.path.exists(os.path.join(out_dir, n))]
    if clashes:
        raise SystemExit(
            f"refusing to overwrite {', '.join(clashes)} in {out_dir} "
            "(pass --force to allow)")


def _build_config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    updates = {}
    if getattr(args, "algorithm", None):
        updates["algorithm"] = canonical_algorithm(args.algorithm)
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "arrival_rate", None) is not None:
        updates["arrival_rate_pps"] = args.arrival_rate
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _summary_row(result: engine.RunResult) -> dict:
    s = result.summary
    cfg = result.config
    return {
        "algorithm": s.algorithm,
        "lambda": cfg.arrival_rate_pps,
        "seed": cfg.seed,
        "slots": s.slots,
        "duration_s": s.duration_s,
        "arrived_bits": int(s.total_arrived_bits),
        "served_bits": int(s.total_served_bits),
        "throughput_bps": metrics.throughput(s),
        "mean_sod": metrics.mean_sod(s),
        "jfi": s.jfi,
    }


COMPARISON_HEADER = ["algorithm", "lambda", "seed", "slots", "duration_s",
                     "arrived_bits", "served_bits", "throughput_bps",
                     "mean_sod", "jfi"]


def _write_comparison(path: str, rows: list[dict]) -> None:
    _write_csv(path, COMPARISON_HEADER,
               ([r[k] for k in COMPARISON_HEADER] for r in rows))


def _print_result(result: engine.RunResult) -> None:
    s = result.summary
    print(f"{s.algorithm}: {s.slots} slots over {s.duration_s:g} s, "
          f"{result.n_sinks} sinks")
    print(f"  throughput      {metrics.throughput(s) / 1e9:.4f} Gbps "
          f"({s.total_served_bits} of {s.total_arrived_bits} bits served)")
    print(f"  mean SOD cost   {metrics.mean_sod(s):.6g}")
    print(f"  fairness (JFI)  {s.jfi:.4f}")
    if result.game_slots:
        frac = result.ne_converged_slots / result.game_slots
        print(f"  NE convergence  {frac:.1%} of {result.game_slots} game slots")
    print(f"  time            scheduling {result.scheduler_time_s:.2f} s, "
          f"power {result.power_time_s:.2f} s, "
          f"total {result.wall_time_s:.2f} s")


def cmd_run(args) -> int:
    cfg = _build_config(args)
    csv_names = ["summary.csv"] + (["slots.csv"] if args.per_slot_log else [])
    out_dir = _resolve_out_dir(args.out_dir, "run")
    _prepare_out_dir(out_dir, csv_names, args.force)

    result = engine.run(cfg, slots=args.slots, per_slot_log=args.per_slot_log)
    s = result.summary

    grid = build_grid(GeoPoint(cfg.center_lat_deg, cfg.center_lon_deg),
                      cfg.rings, cfg.footprint_m)
    rows = []
    for n, pt in enumerate(grid.centers):
        rows.append([n, pt.lat_deg, pt.lon_deg, int(result.sink_counts[n]),
                     int(s.per_position_demanded[n]),
                     int(s.per_position_served[n]),
                     s.satisfactions[n]])
    _write_csv(os.path.join(out_dir, "summary.csv"),
               ["position", "lat_deg", "lon_deg", "n_sinks", "arrived_bits",
                "served_bits", "satisfaction"], rows)

    if args.per_slot_log:
        slot_rows = []
        for log in result.slot_logs:
            for b in range(len(log.positions)):
                slot_rows.append([log.slot, b, int(log.positions[b]),
                                  log.powers[b], log.sinr[b],
                                  log.offered_bits[b], int(log.served_bits[b]),
                                  log.sod, log.sweeps, log.converged])
        _write_csv(os.path.join(out_dir, "slots.csv"),
                   ["slot", "beam", "position", "power_w", "sinr",
                    "offered_bits", "served_bits", "slot_sod", "sweeps",
                    "converged"], slot_rows)

    _print_result(result)
    if not args.no_plots:
        from . import plots
        for path in plots.run_figures(result, out_dir):
            print(f"  figure          {path}")
    print(f"wrote {out_dir}/summary.csv")
    return 0


def _parse_algorithms(raw: str | None) -> list[str]:
    if not raw:
        return list(ALGORITHMS)
    return [canonical_algorithm(tok) for tok in raw.split(",") if tok.strip()]


def cmd_compare(args) -> int:
    cfg = _build_config(args)
    algorithms = _parse_algorithms(args.algorithms)
    out_dir = _resolve_out_dir(args.out_dir, "compare")
    _prepare_out_dir(out_dir, ["comparison.csv"], args.force)

    results = engine.compare_algorithms(cfg, algorithms, slots=args.slots)
    rows = [_summary_row(r) for r in results]
    _write_comparison(os.path.join(out_dir, "comparison.csv"), rows)

    print(f"{'algorithm':<14} {'Gbps':>8} {'mean SOD':>12} {'JFI':>7} "
          f"{'sched s':>8}")
    for r, result in zip(rows, results):
        print(f"{r['algorithm']:<14} {r['throughput_bps'] / 1e9:>8.4f} "
              f"{r['mean_sod']:>12.4e} {r['jfi']:>7.4f} "
              f"{result.scheduler_time_s:>8.2f}")
    if not args.no_plots:
        from . import plots
        for path in plots.compare_figures(rows, out_dir):
            print(f"figure: {path}")
    print(f"wrote {out_dir}/comparison.csv")
    return 0


def cmd_sweep(args) -> int:
    cfg = _build_config(args)
    algorithms = _parse_algorithms(args.algorithms)
    try:
        lambdas = [float(tok) for tok in args.lambdas.split(",") if tok.strip()]
    except ValueError as exc:
        raise SystemExit(f"bad --lambdas value: {exc}")
    if not lambdas or any(lam <= 0 for lam in lambdas):
        raise SystemExit("--lambdas needs positive comma-separated rates")
    out_dir = _resolve_out_dir(args.out_dir, "sweep")
    _prepare_out_dir(out_dir, ["comparison.csv"], args.force)

    jobs = [(alg, lam) for alg in algorithms for lam in lambdas]

    def _one(job):
        alg, lam = job
        c = dataclasses.replace(cfg, algorithm=alg, arrival_rate_pps=lam)
        return _summary_row(engine.run(c, slots=args.slots))

    # submission order == result order, so the CSV is deterministic no
    # matter how the pool interleaves the work
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        rows = list(pool.map(_one, jobs))

    _write_comparison(os.path.join(out_dir, "comparison.csv"), rows)
    for r in rows:
        print(f"{r['algorithm']:<14} lambda={r['lambda']:<8g} "
              f"{r['throughput_bps'] / 1e9:.4f} Gbps  jfi={r['jfi']:.4f}")
    if not args.no_plots:
        from . import plots
        for path in plots.sweep_figures(rows, out_dir):
            print(f"figure: {path}")
    print(f"wrote {out_dir}/comparison.csv ({len(rows)} rows)")
    return 0


def _check_potential_alignment() -> bool:
    from . import game
    rng = np.random.default_rng(7)
    n, k = 8, 3
    for _ in range(50):
        gains = rng.uniform(0.1, 1.0, (n, n))
        gains[np.diag_indices(n)] = rng.uniform(5.0, 10.0, n)
        ctx = game.GameContext(gains=gains, demands=rng.uniform(0.0, 40.0, n),
                               power_per_beam=1.0, noise_w=0.5, bits_scale=1.0)
        a = rng.permutation(n)[:k]
        b = a.copy()
        free = np.setdiff1d(np.arange(n), a)
        b[rng.integers(k)] = rng.choice(free)
        du = game.utility(b, ctx) - game.utility(a, ctx)
        df = game.potential(b, ctx) - game.potential(a, ctx)
        if abs(df - du) > 1e-9 * max(1.0, abs(df)):
            return False
    return True


def _check_ne_convergence() -> bool:
    from . import game
    rng = np.random.default_rng(11)
    n, k = 25, 6
    gains = rng.uniform(0.05, 0.5, (n, n))
    gains[np.diag_indices(n)] = rng.uniform(5.0, 10.0, n)
    ctx = game.GameContext(gains=gains, demands=rng.uniform(0.0, 60.0, n),
                           power_per_beam=1.0, noise_w=0.5, bits_scale=1.0)
    res = game.find_ne(ctx, k, rng=rng, max_sweeps=50)
    trace = res.potential_trace
    return res.converged and bool(np.all(np.diff(trace) <= 1e-9))


def _check_power_descent() -> bool:
    from . import power
    rng = np.random.default_rng(13)
    for _ in range(10):
        k = int(rng.integers(2, 6))
        gains = rng.uniform(1e-13, 1e-12, (k, k))
        gains[np.diag_indices(k)] = rng.uniform(1e-11, 5e-11, k)
        prob = power.PowerProblem(gains=gains,
                                  demands=rng.uniform(1e4, 1e6, k),
                                  p_max=250.0, noise_w=7.96e-13,
                                  bits_scale=1e5)
        res = power.optimize(prob, thorough=False)
        equal = power.objective(prob, np.full(k, prob.p_max / k))
        if res.objective_value > equal * (1 + 1e-9) + 1e-9:
            return False
    return True


def _check_antenna_pattern() -> bool:
    from .channel import AntennaPattern, antenna_gain
    pat = AntennaPattern(peak_gain_dbi=36.2, theta_3db_deg=1.66)
    g0 = 10 * np.log10(antenna_gain(pat, 0.0))
    g3 = 10 * np.log10(antenna_gain(pat, 1.66))
    return abs(g0 - 36.2) < 1e-9 and abs((g0 - g3) - 3.0) < 0.05


def _check_fairness_index() -> bool:
    uniform = metrics.jfi(np.full(12, 3.7))
    single = metrics.jfi([5.0, 0.0, 0.0, 0.0])
    scaled = metrics.jfi([1.0, 2.0, 3.0]) - metrics.jfi([10.0, 20.0, 30.0])
    return (abs(uniform - 1.0) < 1e-12 and abs(single - 0.25) < 1e-12
            and abs(scaled) < 1e-12)


def _check_reproducibility() -> bool:
    cfg = SimConfig(algorithm="G-BH", seed=3)
    a = engine.run(cfg, slots=120)
    b = engine.run(cfg, slots=120)
    return (a.summary.total_served_bits == b.summary.total_served_bits
            and np.array_equal(a.summary.per_position_served,
                               b.summary.per_position_served))


def cmd_validate(args) -> int:
    checks = [
        ("scheduling game potential tracks shared utility",
         _check_potential_alignment),
        ("best-response sweeps converge with monotone cost",
         _check_ne_convergence),
        ("power optimizer never loses to the equal split",
         _check_power_descent),
        ("antenna pattern is -3 dB at the half-power angle",
         _check_antenna_pattern),
        ("fairness index properties", _check_fairness_index),
        ("same seed reproduces the same simulation", _check_reproducibility),
    ]
    failures = 0
    for name, fn in checks:
        try:
            ok = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok = False
            print(f"FAIL  {name} ({type(exc).__name__}: {exc})")
            failures += 1
            continue
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} of {len(checks)} checks failed")
        return 1
    print(f"all {len(checks)} checks passed")
    return 0


def _add_common(parser, *, algorithm_flag: bool) -> None:
    parser.add_argument("--config", metavar="INI",
                        help="configuration file (see 'beamhop run --example-config')")
    if algorithm_flag:
        parser.add_argument("--algorithm", metavar="NAME",
                            help="scheduler to run (default from config: JBSPO-BH)")
    else:
        parser.add_argument("--algorithms", metavar="A,B,...",
                            help="comma-separated scheduler list (default: all)")
    parser.add_argument("--lambda", dest="arrival_rate", type=float,
                        metavar="PPS", help="arrival rate per position, packets/s")
    parser.add_argument("--seed", type=int, help="override the RNG seed")
    parser.add_argument("--slots", type=int,
                        help="simulate this many slots instead of the full horizon")
    parser.add_argument("--out-dir", metavar="DIR",
                        help="output directory (default: $BEAMHOP_OUT_DIR/<cmd> or ./<cmd>)")
    parser.add_argument("--force", action="store_true",
                        help="overwrite existing CSV output")
    parser.add_argument("--no-plots", action="store_true",
                        help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamhop",
        description="Beam-hopping scheduler simulation for a multibeam "
                    "LEO downlink")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a single algorithm")
    _add_common(p_run, algorithm_flag=True)
    p_run.add_argument("--per-slot-log", action="store_true",
                       help="also write slots.csv with one row per active beam")
    p_run.add_argument("--example-config", metavar="PATH",
                       help="write a commented example config and exit")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run several algorithms on one scenario")
    _add_common(p_cmp, algorithm_flag=False)
    p_cmp.set_defaults(func=cmd_compare)

    p_swp = sub.add_parser("sweep",
                           help="algorithms x arrival rates grid")
    _add_common(p_swp, algorithm_flag=False)
    p_swp.add_argument("--lambdas", required=True, metavar="L1,L2,...",
                       help="comma-separated arrival rates to sweep")
    p_swp.add_argument("--workers", type=int, default=None,
                       help="thread pool size for the sweep")
    p_swp.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run built-in self checks")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "example_config", None):
        dump_example(args.example_config)
        print(f"wrote {args.example_config}")
        return 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success, 1 scenario validation failure, 2 runtime failure.
"""

import argparse
import sys
from pathlib import Path

from .grid import assign_materials
from .interface import threshold_saturation
from .scenario import ScenarioError, parse_scenario
from .simulation import SimulationError, run
from .reporting import write_timeseries
from .transport import TimestepUnderflowError
from .vtkio import read_snapshot, write_snapshot


def _limit_threads(n):
    try:
        import threadpoolctl
    except ImportError:
        print("warning: threadpoolctl not installed; --threads ignored",
              file=sys.stderr)
        return
    threadpoolctl.threadpool_limits(limits=n)


def cmd_run(args):
    sc = parse_scenario(args.scenario)
    if args.threads is not None:
        _limit_threads(args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run(sc)
    write_timeseries(result.series, out / "timeseries.csv")
    if args.snapshots:
        material = assign_materials(sc.grid, list(sc.materials),
                                    sc.background, sc.regions).flat
        binary = sc.snapshot_format == "binary"
        for i, snap in enumerate(result.snapshots):
            write_snapshot(out / f"snapshot_{i:04d}.vtk", sc.grid,
                           snap.s_n, snap.p_w, material,
                           time=snap.time, binary=binary)
    last = result.series[-1] if result.series else None
    print(f"completed: t = {result.final.time:g} s, {result.steps} steps, "
          f"{result.pressure_solves} pressure solves, "
          f"{result.wall_seconds:.2f} s wall")
    if last is not None:
        print(f"in-domain {last.partition.total_net:.6g} kg of "
              f"{last.partition.injected:.6g} kg injected "
              f"(mass error {last.error:.3e})")
    print(f"wrote {out / 'timeseries.csv'}"
          + (f" and {len(result.snapshots)} snapshots" if args.snapshots
             else ""))
    return 0


def cmd_validate(args):
    sc = parse_scenario(args.scenario)
    print(f"{args.scenario}: valid "
          f"({'x'.join(str(n) for n in sc.grid.dims)} cells, "
          f"end {sc.end_time:g} s)")
    by_entry = sorted(sc.materials, key=lambda m: m.p_entry)
    for i, coarse in enumerate(by_entry):
        for fine in by_entry[i + 1:]:
            if fine.p_entry == coarse.p_entry:
                continue
            sstar = threshold_saturation(coarse, fine)
            print(f"entry threshold {coarse.name} -> {fine.name}: "
                  f"Se* = {sstar:.6e}")
    return 0


def cmd_benchmark(args):
    if args.what == "buckley-leverett":
        from .benchmarks import run_buckley_leverett
        bench = run_buckley_leverett(cells=args.cells)
        print(f"cells {bench.cells}, {bench.pvi} pore volumes injected, "
              f"{bench.steps} steps, {bench.wall_seconds:.2f} s wall")
        print(f"shock saturation {bench.shock_saturation:.6f}, "
              f"dimensionless speed {bench.shock_speed:.6f}")
        print(f"L1 saturation error {bench.l1:.6f} "
              f"(limit {bench.l1_limit:.6f}): "
              + ("PASS" if bench.passed else "FAIL"))
        return 0 if bench.passed else 2
    from .benchmarks import ULP_TOLERANCE, benchmark_kernels
    rows = benchmark_kernels()
    print(f"{'kernel':<22} {'numpy ms':>10} {'compiled ms':>12} "
          f"{'speedup':>8} {'max ulp':>8}")
    for name, t_np, t_c, speedup, ulp in rows:
        if t_c is None:
            print(f"{name:<22} {t_np:>10.3f} {'absent':>12} {'':>8} {'':>8}")
        else:
            print(f"{name:<22} {t_np:>10.3f} {t_c:>12.3f} "
                  f"{speedup:>8.2f} {ulp:>8.1f}")
    bad = [r[0] for r in rows if r[4] is not None and r[4] > ULP_TOLERANCE]
    if bad:
        print(f"backend outputs differ beyond {ULP_TOLERANCE} ulp: "
              f"{', '.join(bad)}", file=sys.stderr)
        return 2
    return 0


def cmd_probe(args):
    try:
        coords = [float(t) for t in args.at.split(",") if t.strip()]
    except ValueError:
        print(f"--at expects comma-separated numbers, got {args.at!r}",
              file=sys.stderr)
        return 2
    snap = read_snapshot(args.snapshot)
    # pad coordinates for padded unit-thickness axes only
    point = list(coords)
    for axis in range(len(coords), 3):
        if snap.dims[axis] != 1:
            print(f"snapshot has {sum(1 for n in snap.dims if n > 1)} real "
                  f"axes; --at got {len(coords)} coordinates",
                  file=sys.stderr)
            return 2
        point.append(snap.origin[axis] + 0.5 * snap.spacing[axis])
    if len(point) > 3:
        print(f"--at takes at most 3 coordinates, got {len(coords)}",
              file=sys.stderr)
        return 2
    i, j, k = snap.cell_index(point)
    print(f"cell ({i}, {j}, {k}) at {tuple(point)}")
    for name, values in snap.fields.items():
        v = snap.value_at(name, point)
        if name == "material":
            print(f"  {name} = {int(v)}")
        else:
            print(f"  {name} = {float(v):.10g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lensflow",
        description="Two-phase immiscible flow through layered aquifers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario and write reports")
    p.add_argument("scenario")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--snapshots", action="store_true",
                   help="also write a VTK snapshot per report time")
    p.add_argument("--threads", type=int, default=None,
                   help="bound BLAS/LAPACK thread pools")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="parse and check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("benchmark", help="built-in benchmarks")
    p.add_argument("what", choices=("buckley-leverett", "kernels"))
    p.add_argument("--cells", type=int, default=400,
                   help="1D resolution for buckley-leverett")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("probe", help="print field values at a point")
    p.add_argument("snapshot")
    p.add_argument("--at", required=True, metavar="x,y,z",
                   help="coordinates; trailing padded axes may be omitted")
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid scenario:\n{exc}", file=sys.stderr)
        return 1
    except (SimulationError, TimestepUnderflowError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``run``, ``schedule``, ``compare`` and ``estimate-cstar``.

Exit codes: 0 success, 1 compare above threshold, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    SolverConfig,
    format_config,
    initial_field,
    load_config,
    parse_preset,
    preset_potential,
)
from .errors import ConfigurationError, NumericalError, StepFailure
from .fields import make_grid
from .kernels import KernelParams, estimate_cstar
from .oracles import PotentialData, hopf_cole_solution
from .scheme import GlobalSolution, build_schedule, cstar_n_for, run_global
from .snapshots import read_csv, read_snapshot, sha256_file, write_csv, write_snapshot

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

SNAPSHOT_GLOB = "snap_*.bpfx"


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def snapshot_name(l: int, j: int) -> str:
    return f"snap_{l:04d}_{j:05d}.bpfx"


def write_outputs(out: Path, config: SolverConfig, solution: GlobalSolution, c_star_n: float,
                  traces=None) -> list[Path]:
    """Snapshots, ``trace.csv``, ``schedule.csv`` and ``manifest.txt`` for a (partial) run.

    A step contributes every ``snapshot_stride``-th snapshot and its last one;
    the first snapshot appears only for step 0 (later ones repeat a seam).
    """
    out.mkdir(parents=True, exist_ok=True)
    for old in out.glob(SNAPSHOT_GLOB):
        old.unlink()
    written = []
    for step in solution.steps:
        S = len(step.trajectory) - 1
        for j in range(S + 1):
            if j == 0 and step.l > 0:
                continue
            if j % config.snapshot_stride and j != S:
                continue
            path = out / snapshot_name(step.l, j)
            write_snapshot(path, step.trajectory.snapshot(j), config.nu)
            written.append(path)

    traces = solution.traces if traces is None else traces
    rows = []
    for tr in traces:
        for rec in tr.records:
            rows.append((tr.step_index, tr.retry, tr.rho, rec.k, rec.sup, rec.c01, rec.c12, rec.ratio))
    write_csv(out / "trace.csv", ["step", "retry", "rho", "k", "sup", "c01", "c12", "ratio"], rows)

    rows = []
    t_eff = 0.0
    for e in solution.schedule.entries:
        idx = e.l - 1
        rho_eff = solution.steps[idx].rho if idx < len(solution.steps) else None
        if rho_eff is not None:
            t_eff = t_eff + rho_eff
        rows.append((e.l, e.rho, e.C, e.T, rho_eff, t_eff if rho_eff is not None else None))
    write_csv(out / "schedule.csv", ["l", "rho", "C", "T", "rho_effective", "T_effective"], rows)

    lines = ["# run manifest", format_config(config).rstrip("\n"), f"c_star_n={c_star_n!r}",
             f"steps_completed={len(solution.steps)}", "# sha256 of snapshots"]
    lines += [f"{sha256_file(p)}  {p.name}" for p in sorted(written)]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    return written


def _write_metadata(out: Path) -> None:
    now = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    text = (f"created={now}\npackage_version={__version__}\npython={platform.python_version()}\n"
            f"numpy={np.__version__}\nplatform={platform.platform()}\n")
    (out / "metadata.txt").write_text(text)


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        if args.output_dir is not None:
            config = config.replace(output_dir=args.output_dir)
        grid = make_grid(config.n, config.points_per_axis)
        h = initial_field(config.initial_condition, grid)
    except ConfigurationError as exc:
        _err(str(exc))
        return EXIT_INPUT
    out = Path(config.output_dir)
    c_star_n = cstar_n_for(config)
    try:
        solution = run_global(h, config, c_star_n)
    except StepFailure as exc:
        partial = exc.partial
        if partial is not None:
            write_outputs(out, config, partial, c_star_n, partial.traces + list(exc.trace or []))
            _write_metadata(out)
        _err(str(exc))
        return EXIT_NUMERICAL
    except NumericalError as exc:
        _err(str(exc))
        return EXIT_NUMERICAL
    written = write_outputs(out, config, solution, c_star_n)
    _write_metadata(out)
    ratios = [r for tr in solution.traces for r in tr.ratios]
    print(f"steps={len(solution.steps)} final_time={solution.final_time!r} "
          f"snapshots={len(written)} max_ratio={max(ratios, default=0.0):.6g} "
          f"retries={sum(tr.retry > 0 for tr in solution.traces)}")
    return EXIT_OK


def cmd_schedule(args) -> int:
    try:
        sched = build_schedule(args.c0, args.c_star_n, args.steps)
    except ConfigurationError as exc:
        _err(str(exc))
        return EXIT_INPUT
    print("l,rho,C,T")
    for e in sched.entries:
        print(f"{e.l},{e.rho!r},{e.C!r},{e.T!r}")
    return EXIT_OK


def _step_starts(schedule_rows):
    starts, t = {}, 0.0
    for row in schedule_rows:
        l = int(row["l"]) - 1
        rho = row["rho_effective"]
        if rho == "":
            break
        starts[l] = (t, float(rho))
        t = float(row["T_effective"])
    return starts


def cmd_compare(args) -> int:
    out = Path(args.directory)
    snaps = sorted(out.glob(SNAPSHOT_GLOB))
    if not snaps or not (out / "schedule.csv").exists():
        _err(f"no snapshots or schedule.csv in {out}")
        return EXIT_INPUT
    try:
        preset = parse_preset(args.oracle)
        starts = _step_starts(read_csv(out / "schedule.csv"))
    except (ConfigurationError, KeyError, ValueError) as exc:
        _err(f"bad input: {exc}")
        return EXIT_INPUT
    print("l,tau,t,sup_error,l2_error")
    final_sup = None
    for path in snaps:
        l = int(path.stem.split("_")[1])
        try:
            field, nu = read_snapshot(path)
            t0, rho = starts[l]
        except (ConfigurationError, KeyError) as exc:
            _err(f"{path.name}: {exc}")
            return EXIT_INPUT
        t = t0 + rho * (field.time_tag - l)
        try:
            oracle = hopf_cole_solution(PotentialData(preset_potential(preset, field.grid.n), nu),
                                        t, field.grid)
        except NumericalError as exc:
            _err(str(exc))
            return EXIT_NUMERICAL
        err = field.components - oracle.components
        sup = float(np.max(np.abs(err)))
        l2 = float(np.sqrt(np.mean(np.sum(err * err, axis=0))))
        print(f"{l},{field.time_tag!r},{t!r},{sup!r},{l2!r}")
        final_sup = sup
    ok = final_sup <= args.threshold
    print(f"final_sup_error={final_sup!r} threshold={args.threshold!r} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else 1


def cmd_estimate_cstar(args) -> int:
    try:
        est = estimate_cstar(KernelParams(args.nu, args.n), make_grid(args.n, args.grid))
    except ConfigurationError as exc:
        _err(str(exc))
        return EXIT_INPUT
    print(f"c_star={est.c_star!r}")
    print(f"c_star_n={est.c_star_n!r}")
    if args.report:
        for name, value in est.probe_report:
            print(f"{name},{value!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="burgers-series", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the global scheme from a key=value config")
    p.add_argument("config")
    p.add_argument("--output-dir", default=None, help="override output_dir from the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("schedule", help="print the step-size schedule")
    p.add_argument("c0", type=float)
    p.add_argument("c_star_n", type=float)
    p.add_argument("steps", type=int)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("compare", help="compare run snapshots with the Hopf-Cole solution")
    p.add_argument("directory")
    p.add_argument("--oracle", required=True, help="potential preset, e.g. 'sine(amplitude=1)'")
    p.add_argument("--threshold", type=float, default=5e-3)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("estimate-cstar", help="probe the kernel constants")
    p.add_argument("n", type=int)
    p.add_argument("nu", type=float)
    p.add_argument("grid", type=int)
    p.add_argument("--report", action="store_true", help="print every probe measurement")
    p.set_defaults(func=cmd_estimate_cstar)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

    voskit check    (--builtin NAME | --model PATH) [box options]
    voskit simulate (--builtin NAME | --model PATH) [run options]
    voskit --dump-builtin NAME

Exit codes are a stable contract: 0 success, 1 usage/parse/IO error,
2 hypothesis counterexample or missing pairing, 3 numerical failure
(stiffness or NaN abort).  VOSKIT_THREADS caps the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .builtins import builtin_model, builtin_names
from .checker import (
    SampleBox,
    check_quasi_positivity,
    find_pairing,
    pairing_to_json,
    verdicts_to_json,
)
from .diagnostics import DiagnosticsRecorder, comparison_lower_bound
from .expr import EvalError, ParseError
from .geometry import build_disk_mesh, write_field_csv
from .model import validate_model
from .modelfile import parse_model, render_model
from .solver import SolverError, StepControl, run

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COUNTEREXAMPLE = 2
EXIT_NUMERICAL = 3


def _apply_thread_cap():
    cap = os.environ.get("VOSKIT_THREADS")
    if not cap:
        return
    try:
        n = max(1, int(cap))
    except ValueError:
        return
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except Exception:
        pass


def _load_model(args):
    if args.builtin:
        return builtin_model(args.builtin)
    path = Path(args.model)
    text = path.read_text(encoding="utf-8")
    return parse_model(text, name=path.stem)


def _add_model_args(p):
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--builtin", choices=builtin_names(), help="built-in model name")
    group.add_argument("--model", help="path to a .vsm model file")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="voskit",
        description="coupled volume-surface reaction-diffusion toolkit",
    )
    parser.add_argument(
        "--dump-builtin",
        metavar="NAME",
        choices=builtin_names(),
        help="print a built-in model as .vsm text and exit",
    )
    sub = parser.add_subparsers(dest="command")

    c = sub.add_parser("check", help="test quasi-positivity and the species pairing")
    _add_model_args(c)
    c.add_argument("--samples", type=int, default=4096, help="sample count per check")
    c.add_argument("--seed", type=int, default=20240801, help="sampling seed")
    c.add_argument("--box-max", type=float, default=1e6,
                   help="box size for the quasi-positivity sweep")
    c.add_argument("--out", help="write the JSON report here instead of stdout")

    s = sub.add_parser("simulate", help="integrate a model and write diagnostics")
    _add_model_args(s)
    s.add_argument("--nr", type=int, default=32)
    s.add_argument("--ntheta", type=int, default=64)
    s.add_argument("--radius", type=float, default=None,
                   help="override the model's disk radius")
    s.add_argument("-T", "--t-final", type=float, default=10.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--dt-min", type=float, default=None)
    s.add_argument("--dt-max", type=float, default=None)
    s.add_argument("--dt-out", type=float, default=0.05, help="output sampling interval")
    s.add_argument("--out", help="output directory for CSV/JSON artifacts")
    s.add_argument("--snapshots", default="",
                   help="comma-separated times at which to write field snapshots")
    s.add_argument("--check-lower-bound", action="store_true",
                   help="record whether min_M v stays above the comparison bound")
    s.add_argument("--seed", type=int, default=0, help="recorded in the summary")
    return parser


def cmd_check(args) -> int:
    try:
        model = _load_model(args)
    except (OSError, ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    report = validate_model(model)
    if not report.ok:
        for msg in report.messages():
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE

    box = SampleBox(max_value=args.box_max, n_samples=args.samples, seed=args.seed)
    try:
        verdicts = check_quasi_positivity(model, box)
        qp_ok = all(v.ok for v in verdicts)
        pairing = None
        if model.k >= 1 and model.m >= 1:
            pairing = find_pairing(model, box)
            pairing_ok = pairing.found
        else:
            pairing_ok = True  # vacuous: no coupling to pair
    except EvalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE

    doc = {
        "model": model.name,
        "quasi_positivity": verdicts_to_json(model, verdicts),
        "pairing": pairing_to_json(model, pairing) if pairing is not None else None,
        "ok": bool(qp_ok and pairing_ok),
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK if doc["ok"] else EXIT_COUNTEREXAMPLE


def cmd_simulate(args) -> int:
    try:
        model = _load_model(args)
    except (OSError, ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    report = validate_model(model)
    if not report.ok:
        for msg in report.messages():
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    for msg in report.messages():
        print(f"warning: {msg}", file=sys.stderr)

    radius = args.radius if args.radius is not None else model.radius
    try:
        mesh = build_disk_mesh(args.nr, args.ntheta, radius)
        ctl = StepControl(
            dt=args.dt,
            dt_min=args.dt_min if args.dt_min is not None else args.dt * 2.0**-20,
            dt_max=args.dt_max if args.dt_max is not None else args.dt,
        )
        snapshot_times = [float(s) for s in args.snapshots.split(",") if s.strip()]
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE

    recorder = DiagnosticsRecorder(model, mesh)
    snapshots = []
    if snapshot_times:
        wanted = sorted(snapshot_times)

        def snap(state):
            if wanted and state.t >= wanted[0] - 1e-9 * max(1.0, args.t_final):
                snapshots.append(state)
                wanted.pop(0)

        observers = [recorder, snap]
    else:
        observers = [recorder]

    try:
        result = run(
            model,
            mesh,
            args.t_final,
            ctl,
            observers=observers,
            dt_out=args.dt_out,
            extra_sample_times=snapshot_times,
        )
    except SolverError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except EvalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE

    series = recorder.series()
    summary = series.summary()
    summary["steps_taken"] = result.steps_taken
    summary["steps_rejected"] = result.steps_rejected
    summary["seed"] = args.seed
    summary["running_min"] = {
        **{n: float(v) for n, v in zip(model.bulk_species, result.running_min_bulk)},
        **{n: float(v) for n, v in zip(model.surface_species, result.running_min_surface)},
    }

    if args.check_lower_bound:
        A = model.params.get("A")
        B = model.params.get("B")
        if A is None or B is None or model.m == 0:
            print(
                "error: --check-lower-bound needs params A and B and a surface species",
                file=sys.stderr,
            )
            return EXIT_USAGE
        vname = model.surface_species[0]
        times = series.times
        mins = series.column(f"min_{vname}")
        mask = times >= 1.0
        bound = comparison_lower_bound(A, B, 0.0, times[mask])
        violation = bool(np.any(mins[mask] < bound - 1e-3))
        summary["lower_bound_violation"] = violation
        summary["lower_bound_margin"] = float(np.min(mins[mask] - (bound - 1e-3)))

    for sp in model.bulk_species + model.surface_species:
        print(f"final sup {sp} = {summary['final_sup'][sp]:.6g}")

    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        series.to_csv(outdir / "diagnostics.csv")
        (outdir / "summary.json").write_text(
            json.dumps(summary, indent=2) + "\n", encoding="utf-8"
        )
        for state in snapshots:
            tag = ("%g" % state.t).replace(".", "p").replace("-", "m")
            for sp, fld in zip(model.bulk_species, state.bulk):
                write_field_csv(mesh, fld, outdir / f"snapshot_{sp}_t{tag}.csv")
            for sp, fld in zip(model.surface_species, state.surface):
                write_field_csv(mesh, fld, outdir / f"snapshot_{sp}_t{tag}.csv")
    return EXIT_OK


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.dump_builtin:
        print(render_model(builtin_model(args.dump_builtin)), end="")
        return EXIT_OK
    if args.command == "check":
        return cmd_check(args)
    if args.command == "simulate":
        return cmd_simulate(args)
    parser.print_usage(sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

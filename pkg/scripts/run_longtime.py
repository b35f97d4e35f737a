#!/usr/bin/env python3
"""Long-time boundedness study for one model.

Integrates to T (default 200), writes the diagnostics CSV and a summary of
the quantities the boundedness theory controls: windowed L1 triples over
the late-time unit windows, sup-norm plateau ratios, conserved-mass drift,
and (given params A and B) the comparison lower bound margin.

    python scripts/run_longtime.py --builtin min-system --out results/min
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from voskit.builtins import builtin_model, builtin_names
from voskit.diagnostics import DiagnosticsRecorder, comparison_lower_bound, windowed_l1
from voskit.geometry import build_disk_mesh
from voskit.modelfile import parse_model
from voskit.solver import StepControl, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    group = ap.add_mutually_exclusive_group(required=True)
    group.add_argument("--builtin", choices=builtin_names())
    group.add_argument("--model")
    ap.add_argument("-T", "--t-final", type=float, default=200.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--nr", type=int, default=32)
    ap.add_argument("--ntheta", type=int, default=64)
    ap.add_argument("--dt-out", type=float, default=0.05)
    ap.add_argument("--out", default="longtime_out")
    args = ap.parse_args()

    if args.builtin:
        model = builtin_model(args.builtin)
    else:
        path = Path(args.model)
        model = parse_model(path.read_text(), name=path.stem)

    mesh = build_disk_mesh(args.nr, args.ntheta, model.radius)
    recorder = DiagnosticsRecorder(model, mesh)
    t0 = time.perf_counter()
    result = run(
        model, mesh, args.t_final, StepControl(dt=args.dt),
        observers=[recorder], dt_out=args.dt_out,
    )
    elapsed = time.perf_counter() - t0
    series = recorder.series()

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    series.to_csv(outdir / "diagnostics.csv")

    summary = series.summary()
    summary["elapsed_s"] = round(elapsed, 1)
    summary["steps"] = result.steps_taken
    summary["rejected"] = result.steps_rejected
    summary["running_min"] = {
        **{n: float(v) for n, v in zip(model.bulk_species, result.running_min_bulk)},
        **{n: float(v) for n, v in zip(model.surface_species, result.running_min_surface)},
    }

    t1 = args.t_final
    if t1 >= 101.0:
        taus = np.arange(100.0, min(t1 - 1.0, 199.0) + 0.5)
        per_pair = {}
        for tau in taus:
            for pair, triple in windowed_l1(series, float(tau)).items():
                per_pair.setdefault(pair, []).append(triple)
        summary["window_maxmin_ratio"] = {
            f"{u},{v}": float((np.array(tr).max(axis=0) / np.array(tr).min(axis=0)).max())
            for (u, v), tr in per_pair.items()
        }
    if t1 >= 100.0:
        t = series.times
        late, mid = t >= t1 / 2.0, (t >= t1 / 4.0) & (t <= t1 / 2.0)
        summary["sup_plateau_ratio"] = {
            sp: float(series.column(f"sup_{sp}")[late].max()
                      / series.column(f"sup_{sp}")[mid].max())
            for sp in model.bulk_species + model.surface_species
        }
    if "A" in model.params and "B" in model.params and model.m:
        t = series.times
        mask = t >= 1.0
        mins = series.column(f"min_{model.surface_species[0]}")[mask]
        bound = comparison_lower_bound(model.params["A"], model.params["B"], 0.0, t[mask])
        summary["lower_bound_margin"] = float(np.min(mins - (bound - 1e-3)))

    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Manufactured-solution convergence study.

Runs the forced system on refining meshes and time steps and writes the
error table as CSV.

    python scripts/run_convergence.py --out convergence.csv
"""

import argparse
import sys

from voskit.builtins import builtin_model, builtin_names
from voskit.verification import manufactured_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--builtin", choices=builtin_names(), default="brusselator")
    ap.add_argument("--resolutions", default="16,32,64",
                    help="comma-separated radial resolutions (Ntheta = 2 Nr)")
    ap.add_argument("--dts", default="4e-3,2e-3,1e-3")
    ap.add_argument("--out", default="convergence.csv")
    args = ap.parse_args()

    report = manufactured_convergence(
        builtin_model(args.builtin),
        spatial_resolutions=tuple(int(s) for s in args.resolutions.split(",")),
        dts=tuple(float(s) for s in args.dts.split(",")),
    )
    report.to_csv(args.out)
    print("spatial errors :", ["%.3e" % e for e in report.spatial_errors])
    print("spatial orders :", ["%.3f" % o for o in report.spatial_orders])
    print("temporal errors:", ["%.3e" % e for e in report.temporal_errors])
    print("temporal orders:", ["%.3f" % o for o in report.temporal_orders])
    if report.inconclusive:
        print("WARNING: non-monotone errors; study inconclusive")
        return 1
    print("table written to", args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

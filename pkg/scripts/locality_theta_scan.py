"""Battery commutator norms of the default observable against grid extent and size.

    python3 scripts/locality_theta_scan.py --theta 2 3 4 --N 16 24
"""

import argparse
import csv
import sys
import time

from isingobs.config import load_config, parse_bumps, parse_omega
from isingobs.core import DoubleCone
from isingobs.fock import FockSpace, assemble_observable
from isingobs.locality import HarnessConfig, locality_verdict
from isingobs.suites import observable_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--theta", nargs="+", type=float, default=[2.0, 3.0, 4.0])
    ap.add_argument("--N", nargs="+", type=int, default=[16, 24])
    ap.add_argument("--csv", default=None, help="also write rows to this file")
    args = ap.parse_args()
    cfg = load_config(args.config)
    sec = cfg["locality"]
    fam = observable_family(cfg)
    region = DoubleCone.standard(fam.r)
    left, right, controls = parse_bumps(sec.left), parse_bumps(sec.right), parse_bumps(sec.controls)
    rows = []
    for N in args.N:
        for theta in args.theta:
            hc = HarnessConfig(N=N, theta_max=theta, k_cap=sec.k_cap, tau=sec.tau, rho_min=sec.rho_min,
                               margin=sec.margin)
            t0 = time.perf_counter()
            A = assemble_observable(fam, FockSpace(N, sec.k_cap + 1), hc.grid)
            v = locality_verdict(A, region, left, right, controls, parse_omega(sec.omega), hc)
            rows.append([N, theta, v.battery_max, min(v.control_norms), v.contrast, v.status])
            print(f"N={N:3d} theta_max={theta:4.1f} battery max {v.battery_max:.3e} contrast {v.contrast:9.3g} "
                  f"{v.status} ({time.perf_counter() - t0:.1f} s)", flush=True)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "theta_max", "battery_max", "control_min", "contrast", "status"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())

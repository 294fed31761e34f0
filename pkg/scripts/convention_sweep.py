"""Run the locality harness under every boundary-value convention and the flipped metric.

    python3 scripts/convention_sweep.py [--N 24] [--theta 3.0]
"""

import argparse
import time

from isingobs.config import load_config, parse_bumps, parse_omega
from isingobs.core import Conventions, DoubleCone
from isingobs.locality import ConventionCandidate, HarnessConfig, boundary_candidates, convention_arbiter
from isingobs.suites import observable_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--N", type=int, default=None)
    ap.add_argument("--theta", type=float, default=None)
    args = ap.parse_args()
    cfg = load_config(args.config)
    sec = cfg["locality"]
    hc = HarnessConfig(N=args.N or sec.N, theta_max=args.theta or sec.theta_max, k_cap=sec.k_cap,
                       tau=sec.tau, rho_min=sec.rho_min, margin=sec.margin)
    fam = observable_family(cfg)
    cands = boundary_candidates() + [ConventionCandidate("flipped-metric", conv=Conventions(metric_sign=-1))]
    t0 = time.perf_counter()
    rep = convention_arbiter(cands, fam, DoubleCone.standard(fam.r), parse_bumps(sec.left), parse_bumps(sec.right),
                             parse_bumps(sec.controls), parse_omega(sec.omega), hc, raise_on_ambiguity=False)
    print(f"N={hc.N} theta_max={hc.theta_max:g} k_cap={hc.k_cap} ({time.perf_counter() - t0:.1f} s)")
    print(f"{'convention':16s} {'status':12s} {'battery max':>12s} {'control min':>12s} {'contrast':>10s}")
    for label, v in rep.verdicts.items():
        print(f"{label:16s} {v.status:12s} {v.battery_max:12.3e} {min(v.control_norms):12.3e} {v.contrast:10.3g}")
    print(f"selected: {rep.selected}")


if __name__ == "__main__":
    main()

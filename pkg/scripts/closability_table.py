"""Closability series terms for the odd tower across weights and grid extents.

    python3 scripts/closability_table.py --omega "power(0.4)" "log(1)" --theta 6 8 10
"""

import argparse
import time

from isingobs.config import load_config, parse_omega
from isingobs.fock import closability_sum
from isingobs.suites import tower_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--omega", nargs="+", default=["power(0.4)", "log(1)"])
    ap.add_argument("--theta", nargs="+", type=float, default=[8.0])
    ap.add_argument("--nodes", type=int, default=16)
    ap.add_argument("--m-max", type=int, default=7)
    args = ap.parse_args()
    cfg = load_config(args.config)
    tower = tower_family(cfg)
    for om in args.omega:
        for theta in args.theta:
            t0 = time.perf_counter()
            rep = closability_sum(tower, cfg["closability"].n, parse_omega(om), M_max=args.m_max,
                                  nodes=args.nodes, theta_max=theta)
            print(f"omega={om} theta_max={theta:g} nodes={args.nodes}: {rep.verdict} "
                  f"({time.perf_counter() - t0:.1f} s)")
            print(f"  {'m':>2} {'term':>12} {'partial_sum':>12} {'ratio':>10}")
            for m, t, s, r in rep.rows():
                if t:
                    print(f"  {m:2d} {t:12.4e} {s:12.4e} {r:10.3g}")
            for m, msg in rep.failures.items():
                print(f"  m={m}: {msg}")


if __name__ == "__main__":
    main()

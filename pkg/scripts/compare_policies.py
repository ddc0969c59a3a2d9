"""None / fixed / shrink on one preset; writes compare.csv plus per-policy trajectories.

usage: python3 scripts/compare_policies.py [--preset amplitude] [--out runs/compare]
"""
import argparse

from qswitch.scenarios import compare_policies, load_preset

ap = argparse.ArgumentParser()
ap.add_argument("--preset", default="amplitude")
ap.add_argument("--out", default="runs/compare")
args = ap.parse_args()

rows = compare_policies(load_preset(args.preset), ["none", "fixed", "shrink"], args.out)
print(f"{'policy':8s} {'final V':>12s} {'fidelity':>9s} {'switches':>9s}  reason")
for r in rows:
    print(f"{r['policy']:8s} {r['final_V']:12.4e} {r['fidelity']:9.5f} {r['switches']:9d}  {r['reason']}")

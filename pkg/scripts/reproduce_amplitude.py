"""Amplitude-damping run with the shrink policy; prints the terminal state.

usage: python3 scripts/reproduce_amplitude.py [--xi 1.0] [--out runs/amplitude]
"""
import argparse

import numpy as np

from qswitch.scenarios import PRESETS, decode_matrix, load_preset, run_scenario

ap = argparse.ArgumentParser()
ap.add_argument("--xi", type=float, default=1.0)
ap.add_argument("--out", default="runs/amplitude")
args = ap.parse_args()

cfg = load_preset("amplitude", controller={"xi": args.xi})
res = run_scenario(cfg, args.out)
ref = PRESETS["amplitude"]["meta"]["reference"]
rho_ref = decode_matrix(ref["rho_final"], "reference")
s = res.summary
np.set_printoptions(precision=4, suppress=True)
print(f"status {res.status}: {res.message}")
print(f"fidelity {s.fidelity:.5f} (reference {ref['fidelity']}), final V {s.final_V:.3e}, {s.switches} switches")
print("rho(T_f) =\n", s.final_rho)
print("reference rho(T_f) =\n", rho_ref)
print("difference =\n", s.final_rho - rho_ref)

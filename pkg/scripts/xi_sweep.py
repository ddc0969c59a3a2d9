"""Final fidelity and V of one preset over a range of bang-bang gains.

usage: python3 scripts/xi_sweep.py [--preset amplitude] [--xi 0.5 1 2 5] [--family contractive]
"""
import argparse
import time

from qswitch.errors import AssumptionViolation, StepTooLarge
from qswitch.engine import simulate
from qswitch.scenarios import load_preset

ap = argparse.ArgumentParser()
ap.add_argument("--preset", default="amplitude")
ap.add_argument("--xi", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0])
ap.add_argument("--family", default="contractive", choices=("standard", "contractive"))
args = ap.parse_args()

for xi in args.xi:
    cfg = load_preset(args.preset, controller={"xi": xi, "family": args.family})
    sim = cfg.simulation
    t0 = time.perf_counter()
    try:
        traj, log, s = simulate(cfg.model(), cfg.s0, cfg.s_d, cfg.controller, cfg.policy, sim.T_f, sim.dt)
        note = s.reason
    except (AssumptionViolation, StepTooLarge) as exc:
        traj, log, s = exc.partial
        note = f"{type(exc).__name__} at t = {traj.t[-1]:.4f}"
    print(f"xi = {xi:<5g} F = {s.fidelity:.5f}  V = {s.final_V:.3e}  N = {s.switches:<8d} "
          f"{time.perf_counter() - t0:6.1f} s  {note}")

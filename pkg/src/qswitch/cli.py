"""Command line entry point: ``qswitch run|certify|compare|presets``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .scenarios import (
    EXIT_CONFIG,
    EXIT_OK,
    certify,
    compare_policies,
    config_from_tree,
    default_out_dir,
    describe_presets,
    load_config,
    merge_trees,
    run_scenario,
)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qswitch", description="Switching Lyapunov control of an open qubit.")
    sub = ap.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="simulate one scenario and write its files")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path)
    src.add_argument("--preset")
    run.add_argument("--policy", choices=("none", "fixed", "shrink"))
    run.add_argument("--out", type=Path)
    run.add_argument("--dt", type=float)
    run.add_argument("--xi", type=float)
    run.add_argument("--t-final", type=float, dest="t_final")

    cert = sub.add_parser("certify", help="evaluate the configured stability certificates")
    cert.add_argument("--config", type=Path, required=True)
    cert.add_argument("--out", type=Path)

    cmp_ = sub.add_parser("compare", help="run one preset under several policies")
    cmp_.add_argument("--preset", required=True)
    cmp_.add_argument("--policies", default="none,fixed,shrink")
    cmp_.add_argument("--out", type=Path)
    cmp_.add_argument("--workers", type=int)

    sub.add_parser("presets", help="list the built-in presets")
    return ap


def _config(args):
    if getattr(args, "config", None) is not None:
        tree = load_config(args.config).tree
    else:
        tree = {"preset": args.preset}
    over = {}
    if getattr(args, "policy", None):
        over.setdefault("policy", {})["kind"] = args.policy
    if getattr(args, "xi", None) is not None:
        over.setdefault("controller", {})["xi"] = args.xi
    sim = {}
    if getattr(args, "dt", None) is not None:
        sim["dt"] = args.dt
    if getattr(args, "t_final", None) is not None:
        sim["T_f"] = args.t_final
    if sim:
        over["simulation"] = sim
    return config_from_tree(merge_trees(tree, over))


def _out(args, cfg):
    return args.out or (Path(cfg.output.directory) if cfg.output.directory else Path(default_out_dir()))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "presets":
            json.dump(describe_presets(), sys.stdout, indent=2)
            print()
            return EXIT_OK
        if args.verb == "compare":
            cfg = config_from_tree({"preset": args.preset})
            policies = [p.strip() for p in args.policies.split(",") if p.strip()]
            rows = compare_policies(cfg, policies, _out(args, cfg), args.workers)
            for r in rows:
                print(f"{r['policy']:8s} final_V={r['final_V']} fidelity={r['fidelity']} "
                      f"switches={r['switches']} status={r['status']}")
            return max(r["status"] for r in rows)
        cfg = _config(args)
    except ValueError as exc:  # ConfigError included
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = _out(args, cfg)
    if args.verb == "certify":
        report = certify(cfg)
        out.mkdir(parents=True, exist_ok=True)
        (out / "certificates.json").write_text(json.dumps(report, indent=2) + "\n")
        json.dump(report, sys.stdout, indent=2)
        print()
        return EXIT_OK

    res = run_scenario(cfg, out)
    if res.summary is not None:
        s = res.summary
        print(f"fidelity={s.fidelity:.6f} final_V={s.final_V:.6g} switches={s.switches} reason={s.reason}")
    if res.status != EXIT_OK:
        print(res.message, file=sys.stderr)
    for kind, path in res.files.items():
        print(f"{kind}: {path}")
    return res.status


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""End-to-end demo: solve, shoot the oracle, verify, sweep, and (if the
frontend is built) render every figure kind from the artifacts.

    python scripts/run_pipeline.py --out runs/demo [--full]

Default is a quick desk run (65-node grid); --full uses the shipped
desk-scale defaults (257 nodes, the acceptance resolution).
"""
import argparse
import os
import shutil
import subprocess
import sys

from expanderflow import cli


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="runs/demo")
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--full", action="store_true", help="run at the default desk-scale grid")
    args = parser.parse_args()

    fast = [] if args.full else ["--set", "grid.points_per_axis=65"]
    base = args.out
    os.makedirs(base, exist_ok=True)

    rc = cli.main(["solve", "--out", f"{base}/solve", "--set", f"run.alpha={args.alpha}"] + fast)
    if rc != 0:
        return rc
    cli.main(["oracle", "--out", f"{base}/oracle", "--set", f"run.alpha={args.alpha}"])
    cli.main(["verify", "--out", f"{base}/verify", "--solution", f"{base}/solve",
              "--set", f"run.alpha={args.alpha}"] + fast)
    cli.main(["sweep", "--out", f"{base}/sweep", "--alphas", "0.02,0.04,0.08"] + fast)

    node = shutil.which("node")
    dist = os.path.join(os.path.dirname(__file__), "..", "frontend", "dist", "main.js")
    if node and os.path.exists(dist):
        figures = [
            ("trace", [f"{base}/solve/trace.csv"]),
            ("profile", [f"{base}/oracle/profile.csv"]),
            ("decay", [f"{base}/verify/decay.csv"]),
            ("defect", [f"{base}/verify/verification.json"]),
            ("constants", [f"{base}/verify/verification.json"]),
        ]
        os.makedirs(f"{base}/figures", exist_ok=True)
        for kind, inputs in figures:
            cmd = [node, dist, "--kind", kind, "--out", f"{base}/figures/{kind}.svg"]
            for path in inputs:
                cmd += ["--input", path]
            subprocess.run(cmd, check=True)
        print(f"figures written to {base}/figures")
    else:
        print("frontend not built; skipping figures (cd frontend && npm install && npm run build)")
    return 0


if __name__ == "__main__":
    sys.exit(main())

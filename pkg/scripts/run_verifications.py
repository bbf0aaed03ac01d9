#!/usr/bin/env python3
"""Run every verification check over a sweep of cylinder parameters.

Prints one table row per (r, check) with the worst residual and verdict.
Exit status is nonzero if any check fails, so this doubles as a smoke
gate for CI.

Usage:
    python scripts/run_verifications.py
    python scripts/run_verifications.py --r 0.333 -0.25 0.7071 --degree 24
"""

import argparse
import sys

from besselcmc.cli import CHECKS, RunConfig, cmd_verify

DEFAULT_R = (1 / 3, -0.25, 2 ** -0.5, -0.3183098861837907)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", nargs="+", type=float, default=DEFAULT_R,
                    help="cylinder parameters to sweep (default: four standards)")
    ap.add_argument("--degree", type=int, default=16)
    ap.add_argument("--lambda-samples", type=int, default=64)
    args = ap.parse_args(argv)

    failures = 0
    print(f"{'r':>12}  {'check':<10} {'worst residual':>15}  verdict")
    for r in args.r:
        cfg = RunConfig(r=r, fourier_degree=args.degree,
                        lambda_samples=args.lambda_samples)
        for check in CHECKS:
            report = cmd_verify(cfg, check)
            # worst of the gated residuals (ignores informational extras)
            worst = max(abs(float(report["residuals"][k]))
                        for k in report["thresholds"])
            ok = report["pass"]
            failures += not ok
            print(f"{r:>12.7f}  {check:<10} {worst:>15.3e}  "
                  f"{'pass' if ok else 'FAIL'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Run the full audit suite: alignment, rank, MI oracles, lemma inequalities."""

import argparse
import sys

from iasec.cli import ExperimentConfig, audit, emit_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=16)
    ap.add_argument("--K", type=int, default=3)
    ap.add_argument("--m", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--out", default="results/audit")
    args = ap.parse_args()

    cfg = ExperimentConfig.from_dict(
        {"K": args.K, "m": args.m, "trials": args.trials, "seed": args.seed,
         "out": args.out}
    )
    manifest = audit(cfg)
    emit_report(manifest, cfg.out)
    failures = [name for name, ok in manifest["checks"].items() if not ok]
    for name, ok in sorted(manifest["checks"].items()):
        print(f"{'pass' if ok else 'FAIL'}  {name}")
    print(f"{len(manifest['checks']) - len(failures)}/{len(manifest['checks'])} checks passed")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Self-validation: hunt each quarantined seeded bug with its own campaign.

Runs one campaign per seeded-bug pass and reports how quickly each was
flagged. With --full the campaigns run to max_iter instead of stopping at
the first matching report.

Usage: python scripts/run_seeded_bugs.py [--iters 500] [--seed 7] [--full]
"""
import argparse
import sys
import time

from emifuzz.generator import GenConfig
from emifuzz.harness import CampaignConfig, run_campaign
from emifuzz.passes import Pipeline

HUNTS = [
    ("B1", ("commute-skip-classical",), "wrong"),
    ("B2", ("reverse-moments",), None),
    ("B3", ("elide-empty-blocks", "invert-forloop"), "crash"),
    ("B4", ("remove-final-measures",), "crash"),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--iters", type=int, default=500)
    ap.add_argument("--qubits", type=int, default=5)
    ap.add_argument("--depth", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", default=None, help="report directory prefix")
    ap.add_argument("--full", action="store_true", help="never stop early")
    args = ap.parse_args()

    all_found = True
    for name, passes, label in HUNTS:
        cfg = CampaignConfig(
            gen=GenConfig(n_qubits=args.qubits, depth=args.depth),
            pipelines=(Pipeline(passes, include_seeded_bugs=True),),
            max_iter=args.iters,
            delta=0.1,
            seed=args.seed,
            output_dir=f"{args.out}-{name}" if args.out else None,
            stop_after_reports=None if args.full else 1,
            stop_label=None if args.full else label,
        )
        t0 = time.time()
        reports = run_campaign(cfg)
        matching = [r for r in reports if label is None or r.label == label]
        took = time.time() - t0
        if matching:
            first = matching[0]
            extra = f"H={first.final_h:.3f}" if first.final_h is not None else ""
            print(
                f"{name} {'+'.join(passes)}: flagged '{first.label}' at "
                f"iteration {first.iteration} {extra} ({took:.0f}s)"
            )
        else:
            all_found = False
            print(f"{name} {'+'.join(passes)}: NOT flagged in {args.iters} iterations")
    return 0 if all_found else 1


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Early-stop shot statistics over equivalent program pairs.

Generates N pairs (program, dead-code-free variant), runs the adaptive
comparison, and prints the termination histogram keyed by round multiples
plus the resulting speedup against the fixed s_std baseline.

Usage: python scripts/early_stop_stats.py --qubits 6 --pairs 500 [--seed 99]
"""
import argparse
import sys
import time
from collections import Counter

from emifuzz.checker import budget, early_stop_compare, speedup_ratio
from emifuzz.emi import derive_variant
from emifuzz.generator import GenConfig, generate
from emifuzz.rng import derive_seed
from emifuzz.simulator import run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--qubits", type=int, default=6)
    ap.add_argument("--pairs", type=int, default=500)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--depth", type=int, default=12)
    ap.add_argument("--seed", type=int, default=99)
    args = ap.parse_args()

    b = budget(args.delta, args.qubits)
    print(f"delta={args.delta} n={args.qubits}: s_round={b.s_round} "
          f"s_std={b.s_std} s_max={b.s_max}")

    histogram: Counter = Counter()
    shots_used = []
    t0 = time.time()
    for i in range(args.pairs):
        cfg = GenConfig(
            n_qubits=args.qubits, depth=args.depth, seed=derive_seed(args.seed, "pair", i)
        )
        p = generate(cfg)
        v = derive_variant(p)

        def sampler(prog, side):
            state = {"round": 0}

            def draw(n):
                seed = derive_seed(args.seed, "exec", i, side, state["round"])
                state["round"] += 1
                out, _ = run(prog, n, seed)
                if not out.ok:
                    raise RuntimeError(out.error.message)
                return out.counts

            return draw

        r = early_stop_compare(sampler(p, 0), sampler(v, 1), b)
        histogram[(r.total_shots // b.s_round, r.equivalent)] += 1
        shots_used.append(r.total_shots)
        if (i + 1) % 100 == 0:
            print(f"  {i + 1}/{args.pairs} pairs ({time.time() - t0:.0f}s)", flush=True)

    print("\nmultiple  shots  terminated  equivalent")
    for (mult, equivalent), count in sorted(histogram.items()):
        print(f"{mult:>8}  {mult * b.s_round:>5}  {count:>10}  {equivalent}")
    ratio = speedup_ratio(shots_used, b.s_std)
    two = histogram.get((2, True), 0)
    print(f"\nstopped at 2 rounds: {two}/{args.pairs} = {two / args.pairs:.1%}")
    print(f"speedup vs fixed s_std: {ratio:.2%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

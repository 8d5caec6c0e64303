"""Run the Hamming-surrogate search over a suite of seeds and summarise convergence.

    python3 scripts/surrogate_search_suite.py --seeds 20 --recombination pairwise
"""
import argparse
import json
import time

import numpy as np

from scaleaug.evolution import SearchConfig, SurrogateEvaluator, hamming, run_search
from scaleaug.policy import random_genome


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--target-offset", type=int, default=10_000,
                    help="target for search seed s is random_genome(default_rng(offset + s))")
    ap.add_argument("--recombination", default="gene_pool")
    ap.add_argument("--mutation-rate", type=float, default=0.05)
    ap.add_argument("--threshold", type=int, default=6)
    args = ap.parse_args()

    distances = []
    t0 = time.perf_counter()
    for s in range(args.first_seed, args.first_seed + args.seeds):
        target = random_genome(np.random.default_rng(args.target_offset + s))
        cfg = SearchConfig(seed=s, recombination=args.recombination, mutation_rate=args.mutation_rate)
        res = run_search(cfg, SurrogateEvaluator(target))
        d = hamming(res.best_genome, target)
        distances.append(d)
        print(f"seed {s:4d}  distance {d:2d}  best by generation "
              + " ".join(f"{v:.4f}" for v in res.best_by_generation()))
    hits = sum(d <= args.threshold for d in distances)
    print(json.dumps({"hits": hits, "seeds": len(distances), "mean_distance": float(np.mean(distances)),
                      "seconds": round(time.perf_counter() - t0, 2)}))


if __name__ == "__main__":
    main()

"""Toy check of how the scale balance metric ranks policies.

Synthetic "trainer": each random policy gets a hidden quality q; per-scale
losses spread more and per-scale APs drop more as q falls, with noise.  The
script reports the Pearson coefficient between the metric (negated, lower is
better) and a noisy final accuracy, next to a plain mean-AP proxy.
"""
import argparse

import numpy as np

from scaleaug.metric import ScaleStats, pareto_scale_balance, pearson
from scaleaug.policy import SCALES


def fake_stats(q, rng):
    spread = (1 - q) * 0.6 + rng.normal(0, 0.05, 3)
    losses = {s: max(0.0, 1.0 + v) for s, v in zip(SCALES, spread * np.array([1.0, 0.1, -0.8]))}
    before = {s: 0.35 for s in SCALES}
    after = {s: max(0.01, 0.35 + 0.05 * (q - 0.6) + rng.normal(0, 0.02)) for s in SCALES}
    return ScaleStats(losses, before, after)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--policies", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    q = rng.uniform(0, 1, args.policies)
    final = 0.38 + 0.03 * q + rng.normal(0, 0.004, args.policies)
    stats = [fake_stats(v, rng) for v in q]
    metric = [-pareto_scale_balance(s).value for s in stats]
    proxy = [np.mean(list(s.ap_after.values())) for s in stats]
    print(f"pearson(metric, final) = {pearson(metric, final):+.3f}")
    print(f"pearson(proxy AP, final) = {pearson(proxy, final):+.3f}")


if __name__ == "__main__":
    main()

"""Run the desk-scale ablation arms and print a median table.

    python3 scripts/ablation.py [--arms k4 k1 mu0 softmax anchored kmeans]
"""

import argparse
import time

import numpy as np

from dnc.experiments import RECIPE, SEEDS, run_arm, standard_split

ARMS = {
    "k4": {},
    "k1": {"k": 1},
    "mu0": {"mu": 0.0},
    "softmax": {"classifier_kind": "softmax"},
    "anchored": {"anchor_after_epoch": RECIPE.epochs - 2},
    "kmeans": {"clusterer": "kmeans"},
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--arms", nargs="+", choices=sorted(ARMS), default=list(ARMS))
    p.add_argument("--seeds", type=int, nargs="+", default=list(SEEDS))
    args = p.parse_args()
    train_set, test_set = standard_split()
    print(f"{'arm':10s} {'top1':>8s} {'knn_fine':>9s} {'secs':>6s}  per-seed top1")
    for name in args.arms:
        t0 = time.perf_counter()
        runs = [run_arm(train_set, test_set, s, **ARMS[name]) for s in args.seeds]
        top1 = [r["top1"] for r in runs]
        knn = [r["knn_fine"] for r in runs]
        print(f"{name:10s} {np.median(top1):8.4f} {np.median(knn):9.4f} {time.perf_counter() - t0:6.1f}  "
              + " ".join(f"{v:.4f}" for v in top1))


if __name__ == "__main__":
    main()

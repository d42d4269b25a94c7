#!/usr/bin/env python3
"""Writes the bundled sparse binary classification sample (LibSVM format)."""
import argparse

import numpy as np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--features", type=int, default=300)
    ap.add_argument("--max-nnz", type=int, default=30)
    ap.add_argument("--flip", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=2013)
    ap.add_argument("--out", default="data/svm1000.svm")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    w = rng.standard_normal(args.features)
    with open(args.out, "w") as f:
        for _ in range(args.samples):
            k = rng.integers(1, args.max_nnz + 1)
            idx = np.sort(rng.choice(args.features, size=k, replace=False))
            val = rng.standard_normal(k)
            val /= np.linalg.norm(val)
            y = 1 if val @ w[idx] >= 0 else -1
            if rng.random() < args.flip:
                y = -y
            feats = " ".join(f"{i + 1}:{v:.12g}" for i, v in zip(idx, val))
            f.write(f"{y:+d} {feats}\n")


if __name__ == "__main__":
    main()

"""Overfit a handful of noise-free synthetic clips and report the L1 curve.

    python3 scripts/overfit.py --epochs 500 --seeds 0 1 2

For each seed prints the final-epoch L1 as a fraction of the epoch-1 value,
plus the minimum and mean over the last 20 epochs.
"""

import argparse
import time

import numpy as np

from reactmotion.motiondata import make_synthetic_dataset
from reactmotion.traineval import TrainConfig, train_gan


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--clips", type=int, default=2, help="clips per class")
    ap.add_argument("--len", type=int, default=40)
    ap.add_argument("--epochs", type=int, default=500)
    ap.add_argument("--preset", default="synthetic")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--lr", type=float, default=0.01)
    args = ap.parse_args()

    clips = make_synthetic_dataset(2, args.clips, args.len, noise=0.0)
    for seed in args.seeds:
        cfg = TrainConfig.preset(args.preset, epochs=args.epochs, seed=seed, lr=args.lr)
        t0 = time.perf_counter()
        l1 = train_gan(clips, cfg).log.curve("l1")
        tail = l1[-20:] / l1[0]
        print(f"seed {seed}: final/first {l1[-1] / l1[0]:.4f}  last-20 min {tail.min():.4f} "
              f"mean {np.mean(tail):.4f}  ({time.perf_counter() - t0:.0f} s)", flush=True)


if __name__ == "__main__":
    main()

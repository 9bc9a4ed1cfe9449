#!/usr/bin/env python3
"""Sweep anchor count on a synthetic box population and plot the curve.

Generates box shapes from a few distinct aspect-ratio clusters with mild
size jitter, runs the shape clustering for each k in a range, prints the
mean-IoU table, and writes an SVG of the curve plus the fitted anchors for
the chosen k.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from rcdamage import kmeans_iou, save_anchor_csv, sweep_k
from rcdamage.svgplot import line_plot

CLUSTER_SHAPES = [
    (100.0, 40.0),   # wide spalling patches
    (40.0, 100.0),   # tall exposed bars
    (200.0, 150.0),  # large crushed regions
    (20.0, 20.0),    # small surface defects
]


def synthetic_boxes(per_cluster: int, jitter: float, seed: int):
    rng = np.random.default_rng(seed)
    dims = []
    for width, height in CLUSTER_SHAPES:
        for _ in range(per_cluster):
            dims.append((
                width * rng.uniform(1.0 - jitter, 1.0 + jitter),
                height * rng.uniform(1.0 - jitter, 1.0 + jitter),
            ))
    return dims


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--k", type=int, default=4, help="anchor count to save")
    parser.add_argument("--k-max", type=int, default=8)
    parser.add_argument("--per-cluster", type=int, default=50)
    parser.add_argument("--jitter", type=float, default=0.15)
    parser.add_argument("--restarts", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("anchor_sweep_out"))
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    dims = synthetic_boxes(args.per_cluster, args.jitter, args.seed)
    results = sweep_k(
        dims, range(1, args.k_max + 1), seed=args.seed, restarts=args.restarts
    )
    print(f"{len(dims)} boxes from {len(CLUSTER_SHAPES)} shape clusters "
          f"(jitter {args.jitter:.0%})")
    print("k  mean IoU")
    for k, mean_iou in results:
        marker = " <-" if k == len(CLUSTER_SHAPES) else ""
        print(f"{k}  {mean_iou:.4f}{marker}")

    svg = line_plot(
        [("mean IoU", [(float(k), miou) for k, miou in results])],
        "Anchor count sweep", "k", "mean IoU",
    )
    (args.out_dir / "sweep.svg").write_text(svg, encoding="utf-8")

    fit = kmeans_iou(dims, args.k, seed=args.seed, restarts=args.restarts)
    save_anchor_csv(fit.anchors, args.out_dir / "anchors.csv")
    print(f"k={args.k} anchors (mean IoU {fit.mean_iou:.4f}):")
    for anchor in fit.anchors:
        print(f"  {anchor.width:.1f} x {anchor.height:.1f}")
    print(f"outputs written to {args.out_dir}/")


if __name__ == "__main__":
    main()

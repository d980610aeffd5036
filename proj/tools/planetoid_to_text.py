#!/usr/bin/env python3
"""Convert a Planetoid citation dataset (ind.<name>.* pickles) into the text
layout read by `cvgae --data`: edges.txt, features.txt (#sparse), labels.csv.

Needs numpy and scipy to unpickle the feature matrices.
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("raw", type=Path, help="directory holding ind.<name>.* files")
    ap.add_argument("out", type=Path)
    ap.add_argument("--name", default="cora")
    args = ap.parse_args()

    x, tx, allx = (load(args.raw, args.name, p) for p in ("x", "tx", "allx"))
    y, ty, ally = (load(args.raw, args.name, p) for p in ("y", "ty", "ally"))
    graph = load(args.raw, args.name, "graph")
    test_idx = [int(l) for l in open(args.raw / f"ind.{args.name}.test.index")]
    order = np.sort(test_idx)

    # Citeseer has test ids with no features; pad them with zero rows.
    if args.name == "citeseer":
        full = range(min(test_idx), max(test_idx) + 1)
        tx_ext = sp.lil_matrix((len(full), x.shape[1]))
        tx_ext[order - min(order), :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), y.shape[1]))
        ty_ext[order - min(order), :] = ty
        ty = ty_ext

    features = sp.vstack((allx, tx)).tolil()
    features[test_idx, :] = features[order, :]
    labels = np.vstack((ally, ty))
    labels[test_idx, :] = labels[order, :]
    n = features.shape[0]

    args.out.mkdir(parents=True, exist_ok=True)
    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))
    with open(args.out / "edges.txt", "w") as f:
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")

    coo = features.tocoo()
    with open(args.out / "features.txt", "w") as f:
        f.write(f"#sparse {n} {features.shape[1]}\n")
        for i, j, val in sorted(zip(coo.row, coo.col, coo.data)):
            f.write(f"{i},{j},{val:g}\n")

    with open(args.out / "labels.csv", "w") as f:
        for i, row in enumerate(labels):
            f.write(f"{i},{int(np.argmax(row))}\n")

    print(f"{n} nodes, {len(edges)} edges, {features.shape[1]} features", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

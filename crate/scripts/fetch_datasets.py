#!/usr/bin/env python3
"""Export binary classification benchmarks as headerless CSV files.

Each file has the features first and the label (0/1) in the last column,
which is what the `quadboost` CLI reads by default. The datasets come from
the copies bundled with scikit-learn, so no network access is required.
"""

import argparse
import pathlib

import numpy as np
from sklearn import datasets


def breast():
    d = datasets.load_breast_cancer()
    return d.data, (d.target == 1).astype(int)


def wine():
    d = datasets.load_wine()
    return d.data, (d.target == 0).astype(int)


def iris():
    d = datasets.load_iris()
    keep = d.target != 0
    return d.data[keep], (d.target[keep] == 2).astype(int)


def digits():
    d = datasets.load_digits()
    keep = (d.target == 3) | (d.target == 8)
    return d.data[keep], (d.target[keep] == 8).astype(int)


SOURCES = {"breast": breast, "wine": wine, "iris": iris, "digits38": digits}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("names", nargs="*", default=sorted(SOURCES))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        x, y = SOURCES[name]()
        rows = np.column_stack([x, y])
        path = out / f"{name}.csv"
        with path.open("w") as f:
            for row in rows:
                f.write(",".join(repr(float(v)) for v in row[:-1]))
                f.write(f",{int(row[-1])}\n")
        print(f"{path}: {x.shape[0]} rows, {x.shape[1]} attributes")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Write small public classification datasets as CSV for `oed experiment t-study`.

Each file has a header row, the feature columns, and an integer class id in
the last column.
"""

import argparse
import pathlib

import numpy as np
from sklearn import datasets


def binarized_diabetes():
    data = datasets.load_diabetes()
    labels = (data.target > np.median(data.target)).astype(int)
    return data.data, labels, list(data.feature_names)


def loaders():
    def bunch(load):
        def run():
            data = load()
            names = getattr(data, "feature_names", None)
            if names is None:
                names = [f"x{j}" for j in range(data.data.shape[1])]
            return data.data, data.target.astype(int), list(names)

        return run

    return {
        "iris": bunch(datasets.load_iris),
        "wine": bunch(datasets.load_wine),
        "breast_cancer": bunch(datasets.load_breast_cancer),
        "digits": bunch(datasets.load_digits),
        "diabetes_binary": binarized_diabetes,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="data", help="directory for the CSV files")
    args = parser.parse_args()
    out = pathlib.Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for name, load in loaders().items():
        features, labels, columns = load()
        header = ",".join(str(c).replace(",", " ") for c in columns) + ",class"
        table = np.column_stack([features, labels])
        fmt = ["%.17g"] * features.shape[1] + ["%d"]
        np.savetxt(out / f"{name}.csv", table, delimiter=",", header=header, comments="", fmt=fmt)
        print(f"{name}: {features.shape[0]} rows, {features.shape[1]} features, {len(set(labels))} classes")


if __name__ == "__main__":
    main()

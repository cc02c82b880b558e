#!/usr/bin/env python3
"""Export the scikit-learn bundled UCI datasets used verbatim to data/.

Output format matches the loader contract: header row, comma-separated,
numeric feature columns, one categorical label column named "class".
"""
import pathlib

import pandas as pd
from sklearn.datasets import load_iris

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def export(bunch, path, class_names):
    names = [n.replace(" ", "_").replace("/", "_") for n in bunch.feature_names]
    df = pd.DataFrame(bunch.data, columns=names)
    df["class"] = [class_names[t] for t in bunch.target]
    df.to_csv(path, index=False)
    print(f"{path.name}: {df.shape[0]} rows, {df.shape[1] - 1} features, "
          f"{len(set(df['class']))} classes")


def main():
    OUT.mkdir(exist_ok=True)
    iris = load_iris()
    export(iris, OUT / "iris.csv", list(iris.target_names))


if __name__ == "__main__":
    main()

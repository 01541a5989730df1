#!/usr/bin/env python3
"""Regenerate src/adasecant/data/digits8x8.txt from scikit-learn's bundled
copy of the 8x8 handwritten digit set (first 20 examples per class, in
dataset order). Only needed when changing the bundle; scikit-learn is not a
runtime dependency.
"""
import pathlib

import numpy as np
from sklearn.datasets import load_digits

PER_CLASS = 20
OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "adasecant" / "data" / "digits8x8.txt"


def main() -> None:
    digits = load_digits()
    pixels = digits.data.astype(int)
    labels = digits.target.astype(int)

    rows = []
    for cls in range(10):
        for idx in np.flatnonzero(labels == cls)[:PER_CLASS]:
            rows.append(list(pixels[idx]) + [cls])
    rows = np.array(rows, dtype=int)

    lines = [
        "# 8x8 handwritten digit images, 20 examples per class (v1)",
        "# each row: 64 pixel intensities (0..16, row-major) followed by the class label",
        "# header: n_rows n_cols dtype",
        f"{rows.shape[0]} {rows.shape[1]} int64",
    ]
    lines += [" ".join(str(v) for v in row) for row in rows]
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT} ({rows.shape[0]} rows)")


if __name__ == "__main__":
    main()

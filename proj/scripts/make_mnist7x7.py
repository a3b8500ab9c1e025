#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Build the bundled 7x7 MNIST subset from the digit JSON files shipped in the
npm `mnist` package (MIT licensed, 10,000 digits).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_mnist7x7.py package/src/digits data

Writes mnist7x7_train.csv (2,000 rows) and mnist7x7_test.csv (500 rows).
Each row is: label, 49 pixel values in [0, 1] (4x4 average pooling).
"""
import json
import pathlib
import random
import sys


def pool(img):
    out = []
    for by in range(7):
        for bx in range(7):
            s = 0.0
            for y in range(4):
                for x in range(4):
                    s += img[(by * 4 + y) * 28 + bx * 4 + x]
            out.append(s / 16.0)
    return out


def main(src, dst, n_train=2000, n_test=500, seed=7):
    samples = []
    for d in range(10):
        digits = json.loads((pathlib.Path(src) / f"{d}.json").read_text())["data"]
        for i in range(0, len(digits), 784):
            samples.append((d, pool(digits[i:i + 784])))
    random.Random(seed).shuffle(samples)
    dst = pathlib.Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    for name, rows in (("mnist7x7_train.csv", samples[:n_train]),
                       ("mnist7x7_test.csv", samples[n_train:n_train + n_test])):
        with open(dst / name, "w") as f:
            for label, px in rows:
                f.write(str(label) + "," + ",".join(f"{v:.4f}" for v in px) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])

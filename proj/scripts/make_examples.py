#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Write the small example inputs in data/ used by the CLI tests.

    python3 scripts/make_examples.py data
    build/maft fit --synthesize data/fit_request.json > data/fit_nonlinear_example.json
"""
import json
import pathlib
import random
import sys


def write_csv(path, header, rows):
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for r in rows:
            f.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in r) + "\n")


def main(dst):
    out = pathlib.Path(dst)
    rng = random.Random(3)

    # identity4: one sample per class, the largest entry marks the label.
    rows = []
    for label in range(4):
        for _ in range(5):
            x = [round(rng.uniform(0.05, 0.5), 6) for _ in range(4)]
            x[label] = round(rng.uniform(0.7, 1.0), 6)
            rows.append([label] + x)
    write_csv(out / "identity4_samples.csv", ["label", "x1", "x2", "x3", "x4"], rows)

    # separable2d: class 0 when x1 > x2, margin 0.1.
    rows = []
    while len(rows) < 100:
        a, b = rng.random(), rng.random()
        if abs(a - b) >= 0.1:
            rows.append([0 if a > b else 1, round(a, 6), round(b, 6)])
    write_csv(out / "separable2d.csv", ["label", "x1", "x2"], rows)

    # toy8: 4 classes of 8-feature vectors.
    rows = [[i % 4] + [round(rng.random(), 6) for _ in range(8)] for i in range(32)]
    write_csv(out / "toy8.csv", ["label"] + [f"x{i + 1}" for i in range(8)], rows)

    # Linear characterization: y = 0.68 (W x) with 2x3 products.
    samples = []
    for _ in range(20):
        x = [rng.uniform(-1, 1) for _ in range(3)]
        w = [[rng.uniform(-1, 1) for _ in range(3)] for _ in range(2)]
        y = [0.68 * sum(wi * xi for wi, xi in zip(row, x)) for row in w]
        samples.append({"x": x, "w": w, "y": y})
    (out / "fit_linear_example.json").write_text(json.dumps({"samples": samples}, indent=1) + "\n")

    # Three-tone drive at indices 1, 2, 3; the fit recovers the truth below.
    request = {
        "drive": {"base_spacing_hz": [1000000, 1], "period_samples": 64, "dc": 0.0,
                  "tones": [[1, 0.5, 0.1], [2, -0.3, 0.2], [3, 0.2, -0.25]]},
        "truth": {"chi0": 0.05, "chi1": 0.9, "chi2": 1.7, "chi3": 0.3},
        "scales": [0.1 * (i + 1) for i in range(16)],
        "seed": 0,
    }
    (out / "fit_request.json").write_text(json.dumps(request, indent=1) + "\n")

    (out / "link_1mV.json").write_text(json.dumps({"v_pi": 0.001, "r_in": 50.0}, indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")

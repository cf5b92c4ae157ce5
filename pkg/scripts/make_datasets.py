"""Generate the two bundled binary-classification datasets.

Both are synthetic stand-ins with the same shapes as the classic benchmark
files they are named after: australian.txt (690 examples, 14 features,
labels -1/+1, dense) and heart.txt (270 examples, 13 features, labels 0/1,
sparse index:value format). Labels are drawn from a logistic model over
standardized features so the posterior concentrates near the generating
coefficients. Fixed seeds keep the files reproducible.
"""

import numpy as np

RNG = np.random.default_rng(20240817)


def make_features(n, spec):
    cols = []
    for kind, a, b in spec:
        if kind == "normal":
            cols.append(a + b * RNG.standard_normal(n))
        elif kind == "lognormal":
            cols.append(RNG.lognormal(a, b, n))
        elif kind == "categorical":
            cols.append(RNG.integers(a, b + 1, n).astype(float))
        elif kind == "binary":
            cols.append((RNG.random(n) < a).astype(float))
        elif kind == "zeroinflated":
            vals = RNG.gamma(a, b, n)
            vals[RNG.random(n) < 0.55] = 0.0
            cols.append(vals)
    return np.column_stack(cols)


def make_labels(features, coefs, zero_one):
    x = (features - features.mean(0)) / np.where(features.std(0) > 0, features.std(0), 1.0)
    logits = x @ coefs + 0.3
    prob = 1.0 / (1.0 + np.exp(-logits))
    y = (RNG.random(len(prob)) < prob).astype(int)
    if zero_one:
        return y
    return 2 * y - 1


def write_dense(path, features, labels):
    with open(path, "w") as fh:
        fh.write("# synthetic stand-in, dense format: label then feature values\n")
        for y, row in zip(labels, features):
            fh.write(f"{y:+d} " + " ".join(f"{v:.6g}" for v in row) + "\n")


def write_sparse(path, features, labels):
    with open(path, "w") as fh:
        fh.write("# synthetic stand-in, sparse format: label then 1-based index:value\n")
        for y, row in zip(labels, features):
            pairs = [f"{j + 1}:{v:.6g}" for j, v in enumerate(row) if v != 0.0]
            if not pairs:
                pairs = ["1:0"]
            fh.write(f"{y} " + " ".join(pairs) + "\n")


def main():
    aus_spec = [
        ("binary", 0.32, 0), ("normal", 31.6, 11.9), ("normal", 4.76, 4.98),
        ("categorical", 1, 3), ("categorical", 1, 14), ("categorical", 1, 9),
        ("lognormal", 0.2, 1.1), ("binary", 0.52, 0), ("binary", 0.43, 0),
        ("lognormal", 0.4, 1.3), ("binary", 0.46, 0), ("categorical", 1, 3),
        ("normal", 184.0, 172.0), ("lognormal", 4.8, 2.2),
    ]
    aus_coef = np.array([0.2, 0.4, 0.3, -0.5, 0.25, -0.2, 0.9,
                         1.6, 0.7, 0.5, -0.15, 0.1, -0.3, 0.45])
    aus_x = make_features(690, aus_spec)
    aus_y = make_labels(aus_x, aus_coef, zero_one=False)
    write_dense("datasets/australian.txt", aus_x, aus_y)

    heart_spec = [
        ("normal", 54.4, 9.1), ("binary", 0.68, 0), ("categorical", 1, 4),
        ("normal", 131.3, 17.9), ("normal", 249.7, 51.7), ("binary", 0.15, 0),
        ("categorical", 0, 2), ("normal", 149.7, 23.2), ("binary", 0.33, 0),
        ("zeroinflated", 1.2, 0.9), ("categorical", 1, 3),
        ("zeroinflated", 0.9, 0.8), ("categorical", 3, 7),
    ]
    heart_coef = np.array([0.3, 0.8, 0.6, 0.35, 0.25, -0.1, 0.3,
                           -0.9, 0.7, 0.8, 0.4, 1.1, 0.6])
    heart_x = make_features(270, heart_spec)
    heart_y = make_labels(heart_x, heart_coef, zero_one=True)
    write_sparse("datasets/heart.txt", heart_x, heart_y)
    print("wrote datasets/australian.txt and datasets/heart.txt")


if __name__ == "__main__":
    main()

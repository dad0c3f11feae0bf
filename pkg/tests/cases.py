"""Seeded dataset builders shared by the test modules."""

import numpy as np

from possvm.core import Dataset

XOR = Dataset(np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]]),
              np.array([1, 1, -1, -1]))


def separable_2d(seed, gap=0.15):
    """10-40 points in [-3, 3]^2 split by a random line, with a band of
    half-width ``gap`` around it left empty (so the true margin is > 2 gap)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 41))
    t = rng.uniform(0, 2 * np.pi)
    w = np.array([np.cos(t), np.sin(t)])
    c = rng.uniform(-0.5, 0.5)
    pts, labels = [], []
    while len(pts) < n:
        x = rng.uniform(-3, 3, 2)
        s = w @ x - c
        if abs(s) <= gap:
            continue
        pts.append(x)
        labels.append(1 if s > 0 else -1)
    # both classes present: flip the farthest point's side if needed
    labels = np.array(labels)
    X = np.array(pts)
    if np.all(labels == labels[0]):
        k = int(np.argmax(np.abs(X @ w - c)))
        X[k] = X[k] - 2 * (X[k] @ w - c) * w
        labels[k] = -labels[k]
    return Dataset(X, labels)


def overlapping_1d(seed):
    """Two interleaved 1-D samples that no threshold separates."""
    rng = np.random.default_rng(1000 + seed)
    k = int(rng.integers(5, 16))
    shift = rng.uniform(0.1, 0.8)
    pos = rng.uniform(-1, 1, k) + shift
    neg = rng.uniform(-1, 1, k) - shift
    # guarantee overlap in both orientations
    pos[0], neg[0] = neg.max() - 0.05, pos.min() + 0.05
    return Dataset.two_class_from(pos[:, None], neg[:, None])


def blobs(seed, m=2, k=20, sep=8.0):
    from possvm.dataio import SyntheticSpec, generate_synthetic
    return generate_synthetic(SyntheticSpec("blobs", samples_per_class=k, separation=sep,
                                            seed=seed, num_classes=m))

"""Shared helpers for the test suite.

Most tests build tiny datasets by hand; the helpers here keep that terse and
make the hand-built geometry obvious at the call site.
"""

from __future__ import annotations

import numpy as np

from weightlab.datagen import Dataset


def binary_dataset(features, labels, noise_flag=None) -> Dataset:
    """Dataset from raw arrays with labels in {-1, +1}.

    The generating component is derived from the label sign (0 for -1, 1 for
    +1), matching how the generator assigns binary labels.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    flags = np.zeros(y.shape[0], dtype=bool) if noise_flag is None else np.asarray(noise_flag, dtype=bool)
    return Dataset(features=X, labels=y, noise_flag=flags, class_of=(y > 0).astype(np.int64))


def two_point_dataset() -> Dataset:
    """The symmetric two-point set: (1,1) labeled +1 and (-1,-1) labeled -1.

    Its hard-margin separator is analytic: direction (1,1)/sqrt(2) with
    optimal margin sqrt(2); both points are support vectors with equal duals.
    """
    return binary_dataset([[1.0, 1.0], [-1.0, -1.0]], [1, -1])


def random_separable(rng: np.random.Generator, n: int, d: int, gap: float = 0.3) -> Dataset:
    """A linearly separable sample with margin at least ``gap``.

    Points are drawn around a random unit normal and pushed out of the slab
    |w.x| < gap, so every label is decided by the halfspace and the margin is
    bounded away from zero (keeps both max-margin solvers well-conditioned).
    """
    w = rng.standard_normal(d)
    w /= np.linalg.norm(w)
    X = rng.standard_normal((n, d))
    proj = X @ w
    shift = (np.sign(proj) * np.maximum(gap - np.abs(proj), 0.0))[:, None] * w
    # re-sign zero projections deterministically so labels are well defined
    zero = proj == 0.0
    if zero.any():
        shift[zero] = gap * w
    X = X + shift
    y = np.where(X @ w > 0, 1, -1)
    return binary_dataset(X, y)

"""Seeded synthetic datasets and controlled corruptions.

Datasets are Gaussian mixtures with one component per class. Binary problems
use labels in {-1, +1} (component 0 -> -1, component 1 -> +1); problems with
three or more classes use labels 1..C in component order. The ``class`` column
always keeps the 0-based generating component, which never changes even when
label noise rewrites the ``label`` column.

Sample order is component-blocked (all of component 0, then component 1, ...);
anything that needs shuffled data draws a fold plan or permutation on top.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import SpecificationError
from .seeding import rng_for
from .serialization import fmt_float, read_csv, write_csv

NoiseKind = Literal["uniform_label", "flip_label", "feature"]
NoiseDirection = Literal["adversarial", "promoted"]


@dataclass(frozen=True)
class DatasetSpec:
    """Gaussian-mixture recipe: one (mean, variance, count) triple per class.

    ``class_covariances`` holds per-class *diagonal* covariances: either a
    single variance (isotropic) or one variance per feature.
    """

    class_means: tuple[tuple[float, ...], ...]
    class_covariances: tuple[tuple[float, ...], ...]
    class_counts: tuple[int, ...]
    seed: int

    def __post_init__(self):
        means = tuple(tuple(float(v) for v in m) for m in self.class_means)
        object.__setattr__(self, "class_means", means)
        if len(means) < 2:
            raise SpecificationError("need at least two classes")
        d = len(means[0])
        if d < 1 or any(len(m) != d for m in means):
            raise SpecificationError("class means must share one dimension >= 1")
        covs = []
        for c, cov in enumerate(self.class_covariances):
            if isinstance(cov, (int, float)):
                cov = (float(cov),) * d
            cov = tuple(float(v) for v in cov)
            if len(cov) == 1 and d > 1:
                cov = cov * d
            if len(cov) != d:
                raise SpecificationError(f"class {c}: covariance has wrong length")
            covs.append(cov)
        object.__setattr__(self, "class_covariances", tuple(covs))
        if len(covs) != len(means) or len(self.class_counts) != len(means):
            raise SpecificationError("means, covariances and counts must align")
        all_vals = [v for m in means for v in m] + [v for c in covs for v in c]
        if not np.all(np.isfinite(all_vals)):
            raise SpecificationError("non-finite mean or covariance entry")
        if any(v <= 0 for c in covs for v in c):
            raise SpecificationError("variances must be strictly positive")
        if any(int(k) < 1 for k in self.class_counts):
            raise SpecificationError("every class needs at least one sample")
        object.__setattr__(self, "class_counts", tuple(int(k) for k in self.class_counts))

    @property
    def dim(self) -> int:
        return len(self.class_means[0])

    @property
    def n_classes(self) -> int:
        return len(self.class_means)

    @property
    def n_samples(self) -> int:
        return sum(self.class_counts)

    @property
    def imbalance_ratio(self) -> float:
        return max(self.class_counts) / min(self.class_counts)


@dataclass(frozen=True)
class NoiseSpec:
    """Corruption description applied on top of a clean dataset."""

    kind: NoiseKind
    rate: float
    seed: int
    epsilon: float = 0.0
    direction: NoiseDirection = "adversarial"

    def __post_init__(self):
        if self.kind not in ("uniform_label", "flip_label", "feature"):
            raise SpecificationError(f"unknown noise kind {self.kind!r}")
        if not (0.0 <= self.rate <= 1.0):
            raise SpecificationError("noise rate must lie in [0, 1]")
        if self.kind == "feature":
            if not np.isfinite(self.epsilon) or self.epsilon < 0:
                raise SpecificationError("feature-noise magnitude must be >= 0")
            if self.direction not in ("adversarial", "promoted"):
                raise SpecificationError(f"unknown direction {self.direction!r}")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus labels, corruption flags, and component ids."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int: {-1,+1} binary, 1..C multi-class
    noise_flag: np.ndarray  # (n,) bool: True where a corruption touched the row
    class_of: np.ndarray  # (n,) int: 0-based generating component
    spec: DatasetSpec | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        flags = np.asarray(self.noise_flag, dtype=bool)
        comp = np.asarray(self.class_of, dtype=np.int64)
        if X.ndim != 2:
            raise SpecificationError("features must be a 2-d array")
        n = X.shape[0]
        if y.shape != (n,) or flags.shape != (n,) or comp.shape != (n,):
            raise SpecificationError("per-sample columns must have length n")
        if not np.all(np.isfinite(X)):
            raise SpecificationError("non-finite feature value")
        for name, arr in (("features", X), ("labels", y), ("noise_flag", flags), ("class_of", comp)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.class_of.max()) + 1

    @property
    def is_binary(self) -> bool:
        return bool(np.all(np.isin(self.labels, (-1, 1))))

    def subset(self, indices: np.ndarray | Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx].copy(),
            labels=self.labels[idx].copy(),
            noise_flag=self.noise_flag[idx].copy(),
            class_of=self.class_of[idx].copy(),
            spec=self.spec,
        )


def _labels_for_components(component: np.ndarray, n_classes: int) -> np.ndarray:
    if n_classes == 2:
        return np.where(component == 0, -1, 1).astype(np.int64)
    return (component + 1).astype(np.int64)


def gen_gaussian_mixture(spec: DatasetSpec) -> Dataset:
    """Draw the mixture described by ``spec`` (component-blocked row order)."""
    rng = rng_for(spec.seed, "gen")
    blocks = []
    comps = []
    for c, (mean, cov, count) in enumerate(
        zip(spec.class_means, spec.class_covariances, spec.class_counts)
    ):
        std = np.sqrt(np.asarray(cov, dtype=np.float64))
        z = rng.standard_normal((count, spec.dim))
        blocks.append(np.asarray(mean, dtype=np.float64) + std * z)
        comps.append(np.full(count, c, dtype=np.int64))
    component = np.concatenate(comps)
    return Dataset(
        features=np.concatenate(blocks, axis=0),
        labels=_labels_for_components(component, spec.n_classes),
        noise_flag=np.zeros(spec.n_samples, dtype=bool),
        class_of=component,
        spec=spec,
    )


def with_seed(spec: DatasetSpec, seed: int) -> DatasetSpec:
    """Same mixture, different draw."""
    return dataclasses.replace(spec, seed=seed)


def corruption_mask(noise: NoiseSpec, n: int) -> np.ndarray:
    """The Bernoulli(rate) selection mask for ``noise`` on ``n`` rows.

    This is the *first* draw the corruption operators make from their seed, in
    one vectorized call, so callers can replay it independently to predict
    exactly which rows a given spec will touch.
    """
    rng = rng_for(noise.seed, "noise-mask")
    return rng.random(n) < noise.rate


def apply_label_noise(ds: Dataset, noise: NoiseSpec) -> Dataset:
    """Corrupt labels on a Bernoulli(rate) subset of rows.

    ``uniform_label`` redraws each selected label uniformly from the *other*
    classes (for binary data the only other class is the sign flip);
    ``flip_label`` applies the deterministic cyclic shift c -> (c mod C) + 1 to
    multi-class labels and the sign flip to binary labels. Selected rows get
    ``noise_flag=True`` in the returned dataset; existing flags are kept.
    """
    if noise.kind not in ("uniform_label", "flip_label"):
        raise SpecificationError(f"label-noise operator got kind {noise.kind!r}")
    mask = corruption_mask(noise, ds.n)
    labels = ds.labels.copy()
    if ds.is_binary:
        labels[mask] = -labels[mask]
    elif noise.kind == "flip_label":
        c_max = int(ds.labels.max())
        labels[mask] = (labels[mask] % c_max) + 1
    else:
        c_max = int(ds.labels.max())
        if c_max < 2:
            raise SpecificationError("uniform label noise needs >= 2 classes")
        # offsets in 1..C-1 rotate each label onto a uniformly chosen other one
        rng = rng_for(noise.seed, "noise-labels")
        offsets = rng.integers(1, c_max, size=int(mask.sum()))
        labels[mask] = ((labels[mask] - 1 + offsets) % c_max) + 1
    return Dataset(
        features=ds.features,
        labels=labels,
        noise_flag=ds.noise_flag | mask,
        class_of=ds.class_of,
        spec=ds.spec,
    )


def apply_feature_noise(
    ds: Dataset, noise: NoiseSpec, reference_gradient: np.ndarray
) -> tuple[Dataset, int]:
    """Shift selected rows by a norm-``epsilon`` step along reference rows.

    ``reference_gradient`` holds one row per sample (typically an estimate of
    the mean input gradient of the score at that sample; callers who want the
    perturbation to be adversarial *for the margin* pass label-signed rows).
    ``adversarial`` steps anti-parallel to the row (so dot(step, row) < 0),
    ``promoted`` steps parallel to it. Rows whose reference is exactly zero
    are left unperturbed and counted in the returned skip count. ``epsilon=0``
    is a no-op returning the dataset unchanged.
    """
    if noise.kind != "feature":
        raise SpecificationError(f"feature-noise operator got kind {noise.kind!r}")
    ref = np.asarray(reference_gradient, dtype=np.float64)
    if ref.shape != ds.features.shape:
        raise SpecificationError("reference gradient must be one row per sample")
    if not np.all(np.isfinite(ref)):
        raise SpecificationError("non-finite reference gradient")
    if noise.epsilon == 0.0:
        return ds, 0
    mask = corruption_mask(noise, ds.n)
    norms = np.linalg.norm(ref, axis=1)
    skipped = int(np.sum(mask & (norms == 0.0)))
    active = mask & (norms > 0.0)
    sign = -1.0 if noise.direction == "adversarial" else 1.0
    features = ds.features.copy()
    steps = sign * noise.epsilon * ref[active] / norms[active, None]
    features[active] += steps
    return (
        Dataset(
            features=features,
            labels=ds.labels,
            noise_flag=ds.noise_flag | active,
            class_of=ds.class_of,
            spec=ds.spec,
        ),
        skipped,
    )


@dataclass(frozen=True)
class FoldPlan:
    """Partition of range(n) into K nearly equal held-out folds."""

    fold_of: np.ndarray  # (n,) int in [0, folds)
    folds: int

    def __post_init__(self):
        arr = np.asarray(self.fold_of, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "fold_of", arr)

    def held_out(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == k)

    def training(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != k)


def make_fold_plan(n: int, folds: int, seed: int) -> FoldPlan:
    """Shuffled round-robin assignment; fold sizes differ by at most one."""
    if not (2 <= folds <= n):
        raise SpecificationError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    perm = rng_for(seed, "folds").permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % folds
    return FoldPlan(fold_of=fold_of, folds=folds)


# ---------------------------------------------------------------------------
# CSV round-trip
# ---------------------------------------------------------------------------


def dataset_header(dim: int) -> list[str]:
    return [f"f{j}" for j in range(dim)] + ["label", "noise_flag", "class"]


def save_dataset_csv(ds: Dataset, path: str | Path) -> None:
    rows = (
        [fmt_float(v) for v in ds.features[i]]
        + [str(int(ds.labels[i])), str(int(ds.noise_flag[i])), str(int(ds.class_of[i]))]
        for i in range(ds.n)
    )
    write_csv(path, dataset_header(ds.dim), rows)


def load_dataset_csv(path: str | Path) -> Dataset:
    header, rows, _version = read_csv(path)
    if len(header) < 4 or header[-3:] != ["label", "noise_flag", "class"]:
        raise SpecificationError(f"{path}: not a dataset file (header {header!r})")
    d = len(header) - 3
    if header[:d] != [f"f{j}" for j in range(d)]:
        raise SpecificationError(f"{path}: malformed feature columns")
    n = len(rows)
    features = np.empty((n, d), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    flags = np.empty(n, dtype=bool)
    comp = np.empty(n, dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != d + 3:
            raise SpecificationError(f"{path}: row {i} has {len(row)} cells")
        features[i] = [float(tok) for tok in row[:d]]
        labels[i] = int(row[d])
        flags[i] = bool(int(row[d + 1]))
        comp[i] = int(row[d + 2])
    return Dataset(features=features, labels=labels, noise_flag=flags, class_of=comp)

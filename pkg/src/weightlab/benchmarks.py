"""Standard desk-scale benchmarks shared by checks, tests, and demo configs.

All are two-Gaussian mixtures in the plane. Feature scales are deliberately
small: with standard normal initialization the exponential loss explodes when
initial scores reach a few units (e^{|f|} drives the first steps), so means
around half a unit keep plain gradient descent at learning rate 0.1 stable
while preserving each benchmark's geometry:

- ``linear_benchmark``: tightly clustered, well-separated, n=100 — implicit
  bias and max-margin studies on separable data;
- ``noise_benchmark``: separated with mild spread — label/feature corruption
  studies (clean samples are learnable with probability ~1);
- ``imbalance_benchmark``: overlapping and 10:1. The class means are NOT
  antipodal (a bias-free boundary through the origin must then trade majority
  accuracy against minority recall, which is what gives class-balanced
  weights something to improve), and the minority mean sits closer to the
  origin, so minority samples carry structurally smaller margins;
- ``profile_benchmark``: balanced with moderate overlap — difficulty profiles
  with a genuine spread of per-sample error.
"""

from __future__ import annotations

from .datagen import DatasetSpec
from .difficulty import EstimatorConfig, ModelFamily
from .models import LossSpec
from .optimizer import Hyper


def linear_benchmark(seed: int = 0) -> DatasetSpec:
    return DatasetSpec(
        class_means=((-0.25, -0.25), (0.25, 0.25)),
        class_covariances=((0.000625,), (0.000625,)),
        class_counts=(50, 50),
        seed=seed,
    )


def noise_benchmark(seed: int = 0) -> DatasetSpec:
    return DatasetSpec(
        class_means=((-0.4, -0.4), (0.4, 0.4)),
        class_covariances=((0.04,), (0.04,)),
        class_counts=(50, 50),
        seed=seed,
    )


def imbalance_benchmark(seed: int = 0, ratio: int = 10) -> DatasetSpec:
    return DatasetSpec(
        class_means=((0.9, -0.45), (-0.3, 0.6)),
        class_covariances=((0.25,), (0.25,)),
        class_counts=(20 * ratio, 20),
        seed=seed,
    )


def profile_benchmark(seed: int = 0) -> DatasetSpec:
    return DatasetSpec(
        class_means=((-0.4, -0.4), (0.4, 0.4)),
        class_covariances=((0.04,), (0.04,)),
        class_counts=(150, 150),
        seed=seed,
    )


def linear_family(d: int = 2, epochs: int = 200, lr: float = 0.1) -> ModelFamily:
    """Linear predictor + exponential loss (the implicit-bias setting)."""
    return ModelFamily(
        kind="linear", dims=(d, 0, 1), loss=LossSpec("exponential"),
        hyper=Hyper(learning_rate=lr, epochs=epochs),
    )


def mlp_family(d: int = 2, hidden: int = 5, epochs: int = 200, lr: float = 0.1) -> ModelFamily:
    """Five-hidden-unit bias-free ReLU net, exponential loss, lr 0.1."""
    return ModelFamily(
        kind="mlp2", dims=(d, hidden, 1), loss=LossSpec("exponential"),
        hyper=Hyper(learning_rate=lr, epochs=epochs),
    )


def profile_family(d: int = 2, hidden: int = 5) -> ModelFamily:
    """MLP family trained briefly (50 epochs).

    Long exponential-loss training skews the margin distribution across
    repeated runs (margins inherit the heavy tail of the parameter norm);
    stopping in the early regime keeps per-sample margins near-Gaussian,
    which is what the profile benchmark is for.
    """
    return mlp_family(d=d, hidden=hidden, epochs=50)


def default_estimator(family: ModelFamily, master_seed: int, repeats: int = 20) -> EstimatorConfig:
    """Five-fold repeated-CV estimator around ``family``."""
    return EstimatorConfig(family=family, folds=5, repeats=repeats, master_seed=master_seed)

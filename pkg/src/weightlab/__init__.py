"""Desk-scale lab for studying difficulty-weighted training.

The package is organized around small, composable pieces:

- :mod:`weightlab.datagen` -- seeded Gaussian-mixture datasets, label/feature
  corruption, fold plans, CSV round-trips.
- :mod:`weightlab.models` -- linear and bias-free two-layer ReLU predictors
  with hand-written gradients and homogeneity checks.
- :mod:`weightlab.optimizer` -- weighted full-batch gradient descent, weight
  schemes with clip-and-renormalize semantics, training traces.
- :mod:`weightlab.maxmargin` -- hard-margin separator solver plus an
  independent brute-force oracle for cross-validation.
- :mod:`weightlab.difficulty` -- repeated-CV per-sample error profiles,
  bias/variance split, margin statistics, normality Z-scores.
- :mod:`weightlab.bounds` -- importance-weighted margin bound evaluation and
  chi-square divergence between reweighted densities.
- :mod:`weightlab.propcheck` -- self-contained empirical checks that the
  qualitative claims hold on benchmark data.
- :mod:`weightlab.runner` / :mod:`weightlab.service` / :mod:`weightlab.cli`
  -- config-driven experiment runs behind a FastAPI service, with the CLI as
  a thin client.
"""

from __future__ import annotations

__version__ = "0.1.0"

SCHEMA_VERSION = 1

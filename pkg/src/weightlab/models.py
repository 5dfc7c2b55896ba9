"""Predictors and losses with hand-written gradients.

Two bias-free predictor families are supported:

- ``linear``: f(theta, x) = theta . x, positively homogeneous of degree 1;
- ``mlp2``: f(theta, x) = W2 relu(W1 x), degree 2 (no bias terms anywhere,
  which is what makes the degree exact).

``dims = (d, h, C)`` where C is the number of output scores: C=1 means a
single real score for binary labels in {-1,+1}; C >= 2 means one logit per
class for labels 1..C. The linear family only supports C=1.

Losses are per-sample: margin losses (exponential, logistic, squared) consume
the real score, cross-entropy consumes the logit vector. Numerically fragile
pieces go through scipy.special (expit, logsumexp) so that e.g. the logistic
loss at margin -500 is the exact finite value 500 rather than an overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.special import expit, logsumexp, softmax

from .errors import HomogeneityError, SpecificationError
from .seeding import rng_for
from .serialization import read_json, write_json
from . import SCHEMA_VERSION

ModelKind = Literal["linear", "mlp2"]
LossKind = Literal["exponential", "logistic", "squared", "cross_entropy"]

MARGIN_LOSSES = ("exponential", "logistic", "squared")


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind

    def __post_init__(self):
        if self.kind not in MARGIN_LOSSES + ("cross_entropy",):
            raise SpecificationError(f"unknown loss kind {self.kind!r}")


@dataclass(frozen=True)
class ModelParams:
    """A flat parameter vector tagged with its architecture."""

    kind: ModelKind
    dims: tuple[int, int, int]  # (d, h, C); linear uses h = 0
    theta: np.ndarray

    def __post_init__(self):
        d, h, c = self.dims
        theta = np.array(self.theta, dtype=np.float64)  # defensive copy
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "dims", (int(d), int(h), int(c)))
        if self.kind == "linear":
            if c != 1:
                raise SpecificationError("linear models produce a single score")
            expected = d
        elif self.kind == "mlp2":
            if h < 1:
                raise SpecificationError("mlp2 needs at least one hidden unit")
            expected = h * d + c * h
        else:
            raise SpecificationError(f"unknown model kind {self.kind!r}")
        if d < 1 or c < 1:
            raise SpecificationError("dims must be positive")
        if theta.shape != (expected,):
            raise SpecificationError(
                f"theta has shape {theta.shape}, expected ({expected},)"
            )
        if not np.all(np.isfinite(theta)):
            raise SpecificationError("non-finite parameter value")

    @property
    def n_outputs(self) -> int:
        return self.dims[2]

    def weight_views(self) -> tuple[np.ndarray, np.ndarray]:
        """(W1, W2) views for mlp2 params."""
        d, h, c = self.dims
        w1 = self.theta[: h * d].reshape(h, d)
        w2 = self.theta[h * d :].reshape(c, h)
        return w1, w2

    def replace_theta(self, theta: np.ndarray) -> "ModelParams":
        return ModelParams(kind=self.kind, dims=self.dims, theta=theta)


def num_params(kind: ModelKind, dims: tuple[int, int, int]) -> int:
    d, h, c = dims
    return d if kind == "linear" else h * d + c * h


def init_params(kind: ModelKind, dims: tuple[int, int, int], seed: int) -> ModelParams:
    """Standard normal initialization of every entry (the lab's fixed choice)."""
    theta = rng_for(seed, "init").standard_normal(num_params(kind, dims))
    return ModelParams(kind=kind, dims=dims, theta=theta)


def _as_batch(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != params.dims[0]:
        raise SpecificationError(
            f"input has shape {np.shape(x)}, expected (*, {params.dims[0]})"
        )
    if not np.all(np.isfinite(X)):
        raise SpecificationError("non-finite input value")
    return X, single


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray | float:
    """Scores: scalar / (n,) when C=1, (C,) / (n, C) logits otherwise."""
    X, single = _as_batch(params, x)
    if params.kind == "linear":
        out = X @ params.theta
    else:
        w1, w2 = params.weight_views()
        out = np.maximum(X @ w1.T, 0.0) @ w2.T
        if params.n_outputs == 1:
            out = out[:, 0]
    if single:
        return float(out[0]) if params.n_outputs == 1 else out[0]
    return out


def margin(params: ModelParams, x: np.ndarray, y: np.ndarray | int) -> np.ndarray | float:
    """y*f for binary scores; logit gap z_y - max_{c != y} z_c for multi-class."""
    X, single = _as_batch(params, x)
    yarr = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if yarr.shape != (X.shape[0],):
        raise SpecificationError("labels must align with inputs")
    out = forward(params, X)
    if params.n_outputs == 1:
        if not np.all(np.isin(yarr, (-1, 1))):
            raise SpecificationError("binary labels must be -1 or +1")
        m = yarr * out
    else:
        c = params.n_outputs
        if np.any(yarr < 1) or np.any(yarr > c):
            raise SpecificationError(f"labels must lie in 1..{c}")
        idx = np.arange(X.shape[0])
        own = out[idx, yarr - 1]
        masked = out.copy()
        masked[idx, yarr - 1] = -np.inf
        m = own - masked.max(axis=1)
    return float(m[0]) if single else m


def loss_value(loss: LossSpec, scores: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample losses from raw scores/logits (shapes as in :func:`forward`)."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if loss.kind == "cross_entropy":
        z = np.atleast_2d(scores)
        if z.shape[0] != y.shape[0] or z.shape[1] < 2:
            raise SpecificationError("cross-entropy needs (n, C>=2) logits")
        return logsumexp(z, axis=1) - z[np.arange(len(y)), y - 1]
    f = np.atleast_1d(scores)
    if f.ndim != 1 or f.shape != y.shape:
        raise SpecificationError("margin losses need one score per label")
    if not np.all(np.isin(y, (-1, 1))):
        raise SpecificationError("binary labels must be -1 or +1")
    u = y * f
    if loss.kind == "exponential":
        with np.errstate(over="ignore"):
            return np.exp(-u)
    if loss.kind == "logistic":
        return np.logaddexp(0.0, -u)
    return (y - f) ** 2  # squared


def _score_gradient(loss: LossSpec, scores: np.ndarray, y: np.ndarray) -> np.ndarray:
    """d loss_i / d score_i, shaped like the scores."""
    if loss.kind == "cross_entropy":
        g = softmax(scores, axis=1)
        g[np.arange(len(y)), y - 1] -= 1.0
        return g
    u = y * scores
    if loss.kind == "exponential":
        with np.errstate(over="ignore"):
            return -y * np.exp(-u)
    if loss.kind == "logistic":
        return -y * expit(-u)
    return 2.0 * (scores - y)  # squared


def grad_params(
    params: ModelParams,
    X: np.ndarray,
    y: np.ndarray,
    loss: LossSpec,
    weights: np.ndarray | None = None,
    reg_lambda: float = 0.0,
    reg_power: float = 2.0,
) -> np.ndarray:
    """Gradient of (1/n) sum_i w_i loss_i + reg_lambda * ||theta||^reg_power."""
    X, _ = _as_batch(params, X)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if weights is None:
        weights = np.ones(n)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (n,) or not np.all(np.isfinite(weights)):
        raise SpecificationError("weights must be n finite values")
    scores = forward(params, X)
    coef = _score_gradient(loss, scores, y)
    coef = coef * (weights / n)[:, None] if coef.ndim == 2 else coef * weights / n
    if params.kind == "linear":
        grad = X.T @ coef
    else:
        w1, w2 = params.weight_views()
        z1 = X @ w1.T
        hidden = np.maximum(z1, 0.0)
        g_out = coef[:, None] if coef.ndim == 1 else coef  # (n, C)
        g_w2 = g_out.T @ hidden
        g_hidden = g_out @ w2
        g_z1 = g_hidden * (z1 > 0.0)
        g_w1 = g_z1.T @ X
        grad = np.concatenate([g_w1.ravel(), g_w2.ravel()])
    if reg_lambda != 0.0:
        norm = float(np.linalg.norm(params.theta))
        if norm > 0.0:
            grad = grad + reg_lambda * reg_power * norm ** (reg_power - 2.0) * params.theta
    return grad


def input_gradient(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """d f / d x for single-score models: (d,) for one input, (n, d) for a batch."""
    if params.n_outputs != 1:
        raise SpecificationError("input gradients are defined for single-score models")
    X, single = _as_batch(params, x)
    if params.kind == "linear":
        grad = np.broadcast_to(params.theta, X.shape).copy()
    else:
        w1, w2 = params.weight_views()
        active = (X @ w1.T) > 0.0  # (n, h)
        grad = (active * w2[0]) @ w1
    return grad[0] if single else grad


def homogeneity_degree(params: ModelParams, tol: float = 1e-9) -> int:
    """Degree alpha with f(c*theta, x) = c^alpha f(theta, x), verified numerically.

    Probes are drawn from a fixed rng so the check is deterministic; the scale
    factors c in {0.5, 2, 3} exercise both contraction and dilation. A failure
    raises :class:`HomogeneityError`.
    """
    alpha = 1 if params.kind == "linear" else 2
    probes = np.random.default_rng(0).standard_normal((3, params.dims[0]))
    base = np.atleast_2d(np.asarray(forward(params, probes), dtype=np.float64))
    for c in (0.5, 2.0, 3.0):
        scaled = params.replace_theta(params.theta * c)
        got = np.atleast_2d(np.asarray(forward(scaled, probes), dtype=np.float64))
        want = c**alpha * base
        err = np.abs(got - want)
        if np.any(err > tol * (1.0 + np.abs(want))):
            raise HomogeneityError(
                f"{params.kind} failed degree-{alpha} homogeneity at c={c}: "
                f"max deviation {err.max():.3e}"
            )
    return alpha


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    write_json(
        path,
        {
            "schema_version": SCHEMA_VERSION,
            "kind": params.kind,
            "dims": list(params.dims),
            "theta": params.theta,
        },
    )


def load_checkpoint(path: str | Path) -> ModelParams:
    doc = read_json(path)
    return ModelParams(
        kind=doc["kind"],
        dims=tuple(doc["dims"]),
        theta=np.asarray(doc["theta"], dtype=np.float64),
    )

"""Weight schemes and full-batch weighted gradient descent.

Every scheme produces a per-sample weight vector that is clipped to the
scheme's [lower, upper] band and renormalized to mean 1, iterating the two
steps to a fixpoint. bounds with lower <= 1 <= upper are required, otherwise
the two constraints are jointly infeasible.

``train`` runs theta_{t+1} = theta_t - lr * grad(weighted objective) and logs
one trace row per epoch *before* each update (plus a final row after the last
one), so row t describes the pair (theta_t, w_t) that produced update t.
Difficulty-driven schemes (inverse_margin, error_*) are only meaningful inside
``train`` when ``dynamic=True`` — their state is recomputed from the current
model every epoch. A *static* difficulty weighting is expressed by
materializing the weights once (e.g. from a difficulty profile) and passing
them as ``custom_static``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .datagen import Dataset
from .errors import DegenerateInputError, DivergenceError, SpecificationError
from .models import LossSpec, ModelParams, forward, grad_params, homogeneity_degree, loss_value, margin
from .serialization import fmt_float, read_csv, write_csv

SchemeKind = Literal[
    "equal",
    "inverse_margin",
    "error_hard_first",
    "error_easy_first",
    "class_balanced",
    "custom_static",
]

STATIC_KINDS = ("equal", "class_balanced", "custom_static")
MARGIN_FLOOR_FACTOR = 1e-3  # floor for inverse-margin weights, relative to max |margin|


@dataclass(frozen=True)
class WeightScheme:
    kind: SchemeKind
    lower: float = 0.1
    upper: float = 10.0
    dynamic: bool = False
    custom: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in STATIC_KINDS + ("inverse_margin", "error_hard_first", "error_easy_first"):
            raise SpecificationError(f"unknown weight scheme {self.kind!r}")
        if not (0.0 < self.lower <= 1.0 <= self.upper):
            raise SpecificationError(
                "weight bounds must satisfy 0 < lower <= 1 <= upper "
                f"(got [{self.lower}, {self.upper}])"
            )
        if self.kind == "custom_static":
            if self.custom is None:
                raise SpecificationError("custom_static needs a weight vector")
            object.__setattr__(self, "custom", tuple(float(w) for w in self.custom))
        elif self.custom is not None:
            raise SpecificationError("only custom_static carries explicit weights")
        if self.dynamic and self.kind in STATIC_KINDS:
            raise SpecificationError(f"{self.kind} weights do not change during training")


def clip_renormalize(
    weights: np.ndarray, lower: float, upper: float, max_rounds: int = 100
) -> np.ndarray:
    """Clip to [lower, upper] and renormalize to mean 1, iterated to a fixpoint."""
    w = np.asarray(weights, dtype=np.float64).copy()
    if w.ndim != 1 or w.size == 0:
        raise SpecificationError("weights must be a nonempty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise SpecificationError("raw weights must be finite and nonnegative")
    for _ in range(max_rounds):
        w = np.clip(w, lower, upper)
        mean = w.mean()
        if abs(mean - 1.0) <= 1e-12:
            return w
        w = w / mean
    w = np.clip(w, lower, upper)
    if abs(w.mean() - 1.0) <= 1e-9:
        return w
    raise SpecificationError("clip/renormalize failed to reach a fixpoint")


def make_weights(
    scheme: WeightScheme,
    *,
    n: int | None = None,
    margins: np.ndarray | None = None,
    errors: np.ndarray | None = None,
    class_of: np.ndarray | None = None,
) -> np.ndarray:
    """Produce the scheme's weight vector from whichever state it needs.

    - ``equal``: all ones (needs only n);
    - ``inverse_margin``: 1 / max(margin, floor) with floor = 1e-3 * max|margin|
      (all-zero margins degenerate to equal weights);
    - ``error_hard_first``: proportional to the per-sample error;
    - ``error_easy_first``: proportional to exp(-error);
    - ``class_balanced``: proportional to 1 / class count;
    - ``custom_static``: the vector carried by the scheme.
    """
    if scheme.kind == "equal":
        n = _infer_n(n, margins, errors, class_of)
        raw = np.ones(n)
    elif scheme.kind == "inverse_margin":
        m = _required("inverse_margin", "margins", margins)
        floor = MARGIN_FLOOR_FACTOR * float(np.abs(m).max())
        raw = np.ones_like(m) if floor == 0.0 else 1.0 / np.maximum(m, floor)
    elif scheme.kind in ("error_hard_first", "error_easy_first"):
        e = _required(scheme.kind, "errors", errors)
        if np.any(e < 0.0):
            raise SpecificationError("per-sample errors must be nonnegative")
        if scheme.kind == "error_hard_first":
            raw = np.ones_like(e) if e.max() == 0.0 else e.copy()
        else:
            raw = np.exp(-e)
    elif scheme.kind == "class_balanced":
        c = _required("class_balanced", "class_of", class_of).astype(np.int64)
        counts = np.bincount(c)
        raw = 1.0 / counts[c]
    else:  # custom_static
        raw = np.asarray(scheme.custom, dtype=np.float64)
        if n is not None and raw.shape != (n,):
            raise SpecificationError(f"custom weights have length {raw.size}, expected {n}")
    mean = raw.mean()
    if mean == 0.0:
        raw = np.ones_like(raw)
        mean = 1.0
    return clip_renormalize(raw / mean, scheme.lower, scheme.upper)


def _required(kind: str, name: str, value: np.ndarray | None) -> np.ndarray:
    if value is None:
        raise SpecificationError(f"{kind} weights need {name}")
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise SpecificationError(f"{name} contains non-finite values")
    return arr


def _infer_n(n, *arrays) -> int:
    if n is not None:
        return int(n)
    for arr in arrays:
        if arr is not None:
            return len(arr)
    raise SpecificationError("cannot infer the number of samples")


def weights_hash(weights: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(weights, dtype=np.float64).tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyper:
    learning_rate: float = 0.1
    epochs: int = 100
    reg_lambda: float = 0.0
    reg_power: float = 2.0

    def __post_init__(self):
        if self.learning_rate <= 0 or not np.isfinite(self.learning_rate):
            raise SpecificationError("learning rate must be positive")
        if self.epochs < 0:
            raise SpecificationError("epoch count must be >= 0")
        if self.reg_lambda < 0:
            raise SpecificationError("regularization strength must be >= 0")


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    objective: float
    min_margin: float
    normalized_margin: float
    cosine_ref: float  # nan when no reference direction was given
    weight_hash: str = ""  # in-memory diagnostic, not part of the CSV contract


@dataclass
class TrainTrace:
    records: list[TraceRecord] = field(default_factory=list)
    renormalize_per_epoch: bool = True

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def epochs_to_cosine(self, threshold: float) -> int | None:
        """First epoch whose cosine to the reference reaches ``threshold``."""
        for r in self.records:
            if r.cosine_ref >= threshold:
                return r.epoch
        return None


TRACE_HEADER = ["epoch", "objective", "min_margin", "normalized_margin", "cosine_ref"]


def save_trace_csv(trace: TrainTrace, path: str | Path) -> None:
    rows = (
        [str(r.epoch)]
        + [fmt_float(v) for v in (r.objective, r.min_margin, r.normalized_margin, r.cosine_ref)]
        for r in trace.records
    )
    write_csv(path, TRACE_HEADER, rows)


def load_trace_csv(path: str | Path) -> TrainTrace:
    header, rows, _ = read_csv(path)
    if header != TRACE_HEADER:
        raise SpecificationError(f"{path}: not a training trace (header {header!r})")
    return TrainTrace(
        records=[
            TraceRecord(
                epoch=int(r[0]),
                objective=float(r[1]),
                min_margin=float(r[2]),
                normalized_margin=float(r[3]),
                cosine_ref=float(r[4]),
            )
            for r in rows
        ]
    )


def objective_value(
    params: ModelParams,
    ds: Dataset,
    loss: LossSpec,
    weights: np.ndarray,
    reg_lambda: float = 0.0,
    reg_power: float = 2.0,
) -> float:
    losses = loss_value(loss, forward(params, ds.features), ds.labels)
    value = float(np.mean(weights * losses))
    if reg_lambda != 0.0:
        value += reg_lambda * float(np.linalg.norm(params.theta)) ** reg_power
    return value


def cosine_to(theta: np.ndarray, reference: np.ndarray) -> float:
    nu, nv = np.linalg.norm(theta), np.linalg.norm(reference)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateInputError("cosine with a zero vector is undefined")
    return float(np.dot(theta, reference) / (nu * nv))


def normalized_margin(params: ModelParams, ds: Dataset) -> float:
    """min_i margin_i / ||theta||^alpha with alpha the homogeneity degree."""
    norm = float(np.linalg.norm(params.theta))
    if norm == 0.0:
        raise DegenerateInputError("normalized margin undefined at theta = 0")
    alpha = 1 if params.kind == "linear" else 2
    margins = margin(params, ds.features, ds.labels)
    return float(np.min(margins)) / norm**alpha


def resolve_weights(scheme: WeightScheme, params: ModelParams, ds: Dataset, loss: LossSpec) -> np.ndarray:
    """Weights for the *current* model state (static schemes ignore the model).

    A model state whose margins or losses are no longer finite (overflowed
    exponential losses, runaway parameters) is divergence, not misuse, and
    raises :class:`DivergenceError` so training loops can handle it uniformly.
    """
    if scheme.kind in STATIC_KINDS:
        return make_weights(scheme, n=ds.n, class_of=ds.class_of)
    margins = np.asarray(margin(params, ds.features, ds.labels), dtype=np.float64)
    if not np.all(np.isfinite(margins)):
        raise DivergenceError("model state produced non-finite margins")
    if scheme.kind == "inverse_margin":
        return make_weights(scheme, margins=margins)
    losses = loss_value(loss, forward(params, ds.features), ds.labels)
    if not np.all(np.isfinite(losses)):
        raise DivergenceError("model state produced non-finite losses")
    return make_weights(scheme, errors=losses)


def train(
    init: ModelParams,
    ds: Dataset,
    scheme: WeightScheme,
    loss: LossSpec,
    hyper: Hyper,
    reference_direction: np.ndarray | None = None,
) -> tuple[ModelParams, TrainTrace]:
    """Full-batch weighted gradient descent for ``hyper.epochs`` updates.

    Returns the final parameters and a trace with epochs+1 rows. Raises
    :class:`DivergenceError` (carrying the epoch) as soon as the objective or
    the parameters stop being finite.
    """
    if scheme.kind not in STATIC_KINDS and not scheme.dynamic:
        raise SpecificationError(
            f"{scheme.kind} inside train() needs dynamic=True; materialize static "
            "difficulty weights via make_weights + custom_static instead"
        )
    if reference_direction is not None:
        reference_direction = np.asarray(reference_direction, dtype=np.float64)
        if reference_direction.shape != init.theta.shape:
            raise SpecificationError("reference direction must match theta's shape")
    params = init
    trace = TrainTrace()
    static_weights = None
    if scheme.kind in STATIC_KINDS:
        static_weights = resolve_weights(scheme, params, ds, loss)
    for epoch in range(hyper.epochs + 1):
        if static_weights is not None:
            weights = static_weights
        else:
            try:
                weights = resolve_weights(scheme, params, ds, loss)
            except DivergenceError as exc:
                raise DivergenceError(
                    f"dynamic weights diverged at epoch {epoch}", epoch=epoch
                ) from exc
        obj = objective_value(params, ds, loss, weights, hyper.reg_lambda, hyper.reg_power)
        if not np.isfinite(obj):
            raise DivergenceError(f"objective became non-finite at epoch {epoch}", epoch=epoch)
        margins = np.asarray(margin(params, ds.features, ds.labels), dtype=np.float64)
        norm = float(np.linalg.norm(params.theta))
        alpha = 1 if params.kind == "linear" else 2
        trace.records.append(
            TraceRecord(
                epoch=epoch,
                objective=obj,
                min_margin=float(margins.min()),
                normalized_margin=float(margins.min()) / norm**alpha if norm > 0 else float("nan"),
                cosine_ref=cosine_to(params.theta, reference_direction)
                if reference_direction is not None and norm > 0
                else float("nan"),
                weight_hash=weights_hash(weights),
            )
        )
        if epoch == hyper.epochs:
            break
        grad = grad_params(
            params, ds.features, ds.labels, loss, weights, hyper.reg_lambda, hyper.reg_power
        )
        theta = params.theta - hyper.learning_rate * grad
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(f"parameters became non-finite at epoch {epoch + 1}", epoch=epoch + 1)
        params = params.replace_theta(theta)
    return params, trace


def minimize_objective(
    init: ModelParams,
    ds: Dataset,
    loss: LossSpec,
    weights: np.ndarray,
    reg_lambda: float,
    reg_power: float = 2.0,
    learning_rate: float = 1.0,
    max_iters: int = 20000,
    grad_tol: float = 1e-10,
) -> tuple[ModelParams, bool]:
    """Deterministic line-search gradient descent to a stationary point.

    Used for regularized-path studies where "the" minimizer of a fixed
    weighted objective is needed rather than a fixed number of GD epochs.
    Returns (params, converged).
    """
    params = init
    obj = objective_value(params, ds, loss, weights, reg_lambda, reg_power)
    lr = learning_rate
    for _ in range(max_iters):
        grad = grad_params(params, ds.features, ds.labels, loss, weights, reg_lambda, reg_power)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= grad_tol:
            return params, True
        while True:
            cand = params.replace_theta(params.theta - lr * grad)
            cand_obj = objective_value(cand, ds, loss, weights, reg_lambda, reg_power)
            if np.isfinite(cand_obj) and cand_obj <= obj - 1e-4 * lr * gnorm**2:
                params, obj = cand, cand_obj
                lr = min(lr * 1.25, 1e6)
                break
            lr *= 0.5
            if lr < 1e-14:
                return params, gnorm <= 1e-6  # flat region; report best effort
    return params, False

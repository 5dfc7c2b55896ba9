"""Per-sample difficulty profiles from repeated held-out training.

The difficulty of sample i is its expected loss under models trained on data
that excludes (kfold mode) or perturbs (perturb mode) it:

- ``kfold``: R repeats of a K-fold plan; in each repeat every sample is
  predicted exactly once, by the model trained without its fold;
- ``perturb``: R models trained on a jittered copy of the full set (i.i.d.
  Gaussian feature noise with per-coordinate std ``delta``) and evaluated at
  the original samples.

The profile splits the error into bias (loss of the mean prediction) and
variance (the remainder; exact for squared loss, a convexity-gap proxy
otherwise), summarizes held-out margins by mean/spread, attaches the
epistemic-uncertainty reading of the prediction spread, and scores the margin
sample of each point for normality via skewness/kurtosis Z-statistics.

All inner trainings derive their seeds from (master_seed, purpose, r[, k]), so
profiles are byte-stable under any ``jobs`` setting.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy import stats

from .datagen import Dataset, make_fold_plan
from .errors import (
    DegenerateInputError,
    DivergenceError,
    EstimationFailureError,
    SpecificationError,
)
from .models import LossSpec, ModelKind, init_params, forward, input_gradient, loss_value
from .optimizer import Hyper, WeightScheme, train
from .seeding import child_sequence, rng_for
from .serialization import fmt_float, read_csv, write_csv


@dataclass(frozen=True)
class ModelFamily:
    """Architecture + loss + optimizer settings drawn fresh for every inner run."""

    kind: ModelKind
    dims: tuple[int, int, int]
    loss: LossSpec
    hyper: Hyper


@dataclass(frozen=True)
class EstimatorConfig:
    family: ModelFamily
    folds: int = 5
    repeats: int = 20
    mode: Literal["kfold", "perturb"] = "kfold"
    delta: float = 0.0
    tau_inv: float = 0.0
    master_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("kfold", "perturb"):
            raise SpecificationError(f"unknown estimator mode {self.mode!r}")
        if self.repeats < 2:
            raise SpecificationError("need at least two repeats for spread estimates")
        if self.mode == "kfold" and self.folds < 2:
            raise SpecificationError("need at least two folds")
        if self.delta < 0 or not np.isfinite(self.delta):
            raise SpecificationError("perturbation scale must be finite and >= 0")
        if self.tau_inv < 0:
            raise SpecificationError("noise precision term must be >= 0")


@dataclass
class DifficultyProfile:
    err: np.ndarray
    bias: np.ndarray
    variance: np.ndarray
    mu_hat: np.ndarray
    sigma2_hat: np.ndarray
    uncertainty: np.ndarray
    z_skew: np.ndarray
    z_kurt: np.ndarray
    noise_flag: np.ndarray
    class_of: np.ndarray
    margin_samples: np.ndarray  # (repeats_kept, n)
    predictions: np.ndarray  # (repeats_kept, n) or (repeats_kept, n, C)
    loss_kind: str
    mode: str
    discarded: int
    mean_input_gradient: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.err.shape[0]

    @property
    def repeats_kept(self) -> int:
        return self.margin_samples.shape[0]

    def correct_probability(self) -> np.ndarray:
        """Per-sample fraction of held-out models that classify it correctly."""
        return (self.margin_samples > 0.0).mean(axis=0)


# ---------------------------------------------------------------------------
# Closed-form error law, uncertainty, normality scores
# ---------------------------------------------------------------------------


def closed_form_error(mu, sigma2):
    """exp(-mu + sigma2/2): expected exponential loss of N(mu, sigma2) margins.

    Monotone decreasing in mu and increasing in sigma2; may overflow to +inf
    for extreme arguments, which is returned as such rather than raised.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma2))):
        raise SpecificationError("closed-form error needs finite mu and sigma2")
    if np.any(sigma2 < 0):
        raise SpecificationError("sigma2 must be >= 0")
    with np.errstate(over="ignore"):
        out = np.exp(-mu + sigma2 / 2.0)
    return float(out) if out.ndim == 0 else out


def epistemic_uncertainty(predictions: np.ndarray, tau_inv: float = 0.0) -> np.ndarray | float:
    """tau_inv + mean_k f_k^2 - (mean_k f_k)^2 over an ensemble axis.

    ``predictions`` is (K,), (K, n), or (K, n, C); K >= 2 required. Vector
    outputs contribute through their squared norm.
    """
    p = np.asarray(predictions, dtype=np.float64)
    if p.ndim == 0 or p.shape[0] < 2:
        raise SpecificationError("need at least two ensemble members")
    if not np.all(np.isfinite(p)):
        raise SpecificationError("non-finite ensemble prediction")
    if tau_inv < 0:
        raise SpecificationError("tau_inv must be >= 0")
    if p.ndim == 3:
        second = (p * p).sum(axis=2).mean(axis=0)
        first = (p.mean(axis=0) ** 2).sum(axis=1)
    else:
        second = (p * p).mean(axis=0)
        first = p.mean(axis=0) ** 2
    out = tau_inv + second - first
    return float(out) if np.ndim(out) == 0 else out


def gaussianity_z(samples: np.ndarray) -> tuple[float, float]:
    """Skewness and excess-kurtosis Z-statistics against the normal null.

    Uses the bias-corrected sample statistics G1/G2, whose exact normal-theory
    standard errors are

        SE_skew = sqrt(6 n (n-1) / ((n-2)(n+1)(n+3)))
        SE_kurt = 2 SE_skew sqrt((n^2-1) / ((n-3)(n+5)))

    Both Z-values are approximately standard normal for normal data once n is
    moderately large; n >= 8 is required for the formulas to make sense.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size < 8:
        raise SpecificationError("normality scores need a vector of >= 8 samples")
    if not np.all(np.isfinite(x)):
        raise SpecificationError("non-finite sample")
    if np.var(x) == 0.0:
        raise DegenerateInputError("normality scores undefined for constant samples")
    n = x.size
    g1 = float(stats.skew(x, bias=False))
    g2 = float(stats.kurtosis(x, fisher=True, bias=False))
    se_skew = np.sqrt(6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0)))
    se_kurt = 2.0 * se_skew * np.sqrt((n * n - 1.0) / ((n - 3.0) * (n + 5.0)))
    return g1 / se_skew, g2 / se_kurt


# ---------------------------------------------------------------------------
# Profile estimation
# ---------------------------------------------------------------------------


def _run_kfold_repeat(ds: Dataset, cfg: EstimatorConfig, r: int, want_grad: bool):
    fam = cfg.family
    plan_seed = child_sequence(cfg.master_seed, "fold", r).generate_state(1)[0]
    plan = make_fold_plan(ds.n, cfg.folds, int(plan_seed))
    preds = np.empty((ds.n, fam.dims[2])) if fam.dims[2] > 1 else np.empty(ds.n)
    grads = np.empty((ds.n, ds.dim)) if want_grad else None
    equal = WeightScheme(kind="equal")
    for k in range(cfg.folds):
        init_seed = child_sequence(cfg.master_seed, "init", r, k).generate_state(1)[0]
        init = init_params(fam.kind, fam.dims, int(init_seed))
        model, _ = train(init, ds.subset(plan.training(k)), equal, fam.loss, fam.hyper)
        held = plan.held_out(k)
        preds[held] = forward(model, ds.features[held])
        if want_grad:
            grads[held] = input_gradient(model, ds.features[held])
    return preds, grads


def _run_perturb_repeat(ds: Dataset, cfg: EstimatorConfig, r: int, want_grad: bool):
    fam = cfg.family
    jitter = rng_for(cfg.master_seed, "perturb", r).standard_normal(ds.features.shape)
    perturbed = Dataset(
        features=ds.features + cfg.delta * jitter,
        labels=ds.labels,
        noise_flag=ds.noise_flag,
        class_of=ds.class_of,
        spec=ds.spec,
    )
    init_seed = child_sequence(cfg.master_seed, "init", r).generate_state(1)[0]
    init = init_params(fam.kind, fam.dims, int(init_seed))
    model, _ = train(init, perturbed, WeightScheme(kind="equal"), fam.loss, fam.hyper)
    preds = forward(model, ds.features)
    grads = input_gradient(model, ds.features) if want_grad else None
    return np.asarray(preds, dtype=np.float64), grads


def _margins_from(predictions: np.ndarray, labels: np.ndarray) -> np.ndarray:
    if predictions.ndim == 1:
        return labels * predictions
    idx = np.arange(labels.shape[0])
    own = predictions[idx, labels - 1]
    masked = predictions.copy()
    masked[idx, labels - 1] = -np.inf
    return own - masked.max(axis=1)


def estimate_error_profile(
    ds: Dataset, cfg: EstimatorConfig, jobs: int = 1, with_input_gradients: bool = False
) -> DifficultyProfile:
    """Run the R x (K) inner trainings and assemble the per-sample profile.

    Repeats whose training diverges are discarded and counted; losing more
    than half of them raises :class:`EstimationFailureError`. Results do not
    depend on ``jobs`` (each repeat derives every seed from its own index).
    """
    fam = cfg.family
    if fam.dims[0] != ds.dim:
        raise SpecificationError("model input dimension must match the dataset")
    if with_input_gradients and fam.dims[2] != 1:
        raise SpecificationError("input gradients need single-score models")
    runner = _run_kfold_repeat if cfg.mode == "kfold" else _run_perturb_repeat

    def job(r: int):
        try:
            return r, runner(ds, cfg, r, with_input_gradients)
        except DivergenceError:
            return r, None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = dict(pool.map(job, range(cfg.repeats)))
    else:
        outcomes = dict(map(job, range(cfg.repeats)))
    kept = [outcomes[r] for r in range(cfg.repeats) if outcomes[r] is not None]
    discarded = cfg.repeats - len(kept)
    if discarded * 2 > cfg.repeats:
        raise EstimationFailureError(
            f"{discarded}/{cfg.repeats} estimation repeats diverged"
        )
    predictions = np.stack([preds for preds, _ in kept])
    margins = np.stack([_margins_from(p, ds.labels) for p in predictions])

    per_rep_loss = np.stack([loss_value(fam.loss, p, ds.labels) for p in predictions])
    err = per_rep_loss.mean(axis=0)
    bias = np.asarray(loss_value(fam.loss, predictions.mean(axis=0), ds.labels))
    variance = err - bias
    mu_hat = margins.mean(axis=0)
    sigma2_hat = margins.var(axis=0, ddof=1)
    uncertainty = np.asarray(epistemic_uncertainty(predictions, cfg.tau_inv))

    z_skew = np.full(ds.n, np.nan)
    z_kurt = np.full(ds.n, np.nan)
    if margins.shape[0] >= 8:
        for i in range(ds.n):
            try:
                z_skew[i], z_kurt[i] = gaussianity_z(margins[:, i])
            except DegenerateInputError:
                pass  # constant margin sample: leave nan

    grad_mean = None
    if with_input_gradients:
        grad_mean = np.mean(np.stack([g for _, g in kept]), axis=0)
    return DifficultyProfile(
        err=err,
        bias=bias,
        variance=variance,
        mu_hat=mu_hat,
        sigma2_hat=sigma2_hat,
        uncertainty=uncertainty,
        z_skew=z_skew,
        z_kurt=z_kurt,
        noise_flag=ds.noise_flag.copy(),
        class_of=ds.class_of.copy(),
        margin_samples=margins,
        predictions=predictions,
        loss_kind=fam.loss.kind,
        mode=cfg.mode,
        discarded=discarded,
        mean_input_gradient=grad_mean,
    )


def verify_lognormal_law(profile: DifficultyProfile) -> np.ndarray:
    """Per-sample relative gap between closed-form and empirical error.

    Only meaningful for exponential loss, where the empirical error is the
    mean of exp(-margin) over held-out repeats and the closed form plugs the
    fitted (mu_hat, sigma2_hat) into exp(-mu + sigma2/2).
    """
    if profile.loss_kind != "exponential":
        raise SpecificationError("the closed-form law is for exponential loss")
    if profile.margin_samples.size == 0:
        raise SpecificationError("profile holds no margin samples")
    predicted = closed_form_error(profile.mu_hat, profile.sigma2_hat)
    empirical = np.exp(-profile.margin_samples).mean(axis=0)
    return np.abs(predicted - empirical) / empirical


PROFILE_HEADER = [
    "idx", "err", "bias", "variance", "mu_hat", "sigma2_hat",
    "uncertainty", "z_skew", "z_kurt", "noise_flag", "class",
]


def save_profile_csv(profile: DifficultyProfile, path: str | Path) -> None:
    rows = (
        [str(i)]
        + [
            fmt_float(col[i])
            for col in (
                profile.err, profile.bias, profile.variance, profile.mu_hat,
                profile.sigma2_hat, profile.uncertainty, profile.z_skew, profile.z_kurt,
            )
        ]
        + [str(int(profile.noise_flag[i])), str(int(profile.class_of[i]))]
        for i in range(profile.n)
    )
    write_csv(path, PROFILE_HEADER, rows)


def load_profile_csv(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Profile table as a column dict (the CSV does not carry raw samples)."""
    header, rows, version = read_csv(path)
    if header != PROFILE_HEADER:
        raise SpecificationError(f"{path}: not a difficulty profile (header {header!r})")
    cols = {name: np.array([float(r[j]) for r in rows]) for j, name in enumerate(header)}
    cols["idx"] = cols["idx"].astype(np.int64)
    cols["noise_flag"] = cols["noise_flag"].astype(bool)
    cols["class"] = cols["class"].astype(np.int64)
    return cols, version

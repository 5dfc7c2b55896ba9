"""Empirical validators for the lab's qualitative claims.

Each check builds its own data from a seed, runs the relevant pipeline, and
returns a :class:`CheckVerdict` with a three-state outcome: ``passed``,
``failed``, or ``inconclusive`` when a precondition gate (learnability,
imbalance ratio, pair availability) is unmet — an unmet gate is not a failure.
Every statistic that feeds the pass/fail decision is recorded in the verdict,
so a regression is diagnosable from the artifact alone, and every random
draw derives from the check's seed, making verdicts bit-reproducible.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import spearmanr

from . import SCHEMA_VERSION
from .datagen import Dataset, DatasetSpec, NoiseSpec, apply_feature_noise, apply_label_noise, gen_gaussian_mixture, with_seed
from .difficulty import (
    DifficultyProfile,
    EstimatorConfig,
    ModelFamily,
    closed_form_error,
    estimate_error_profile,
)
from .errors import DivergenceError, SpecificationError
from .maxmargin import solve_max_margin
from .models import LossSpec, forward, init_params, loss_value, margin
from .optimizer import Hyper, WeightScheme, make_weights, minimize_objective, normalized_margin, train
from .seeding import child_sequence, rng_for
from .serialization import config_digest, dumps_canonical, fmt_float, read_csv, write_csv, atomic_write_text

Outcome = Literal["passed", "failed", "inconclusive"]


@dataclass
class CheckVerdict:
    check_id: str
    outcome: Outcome
    statistics: dict[str, float]
    config_digest: str
    seed: int
    headline: str  # key into statistics shown in the summary CSV

    @property
    def passed(self) -> bool:
        return self.outcome == "passed"

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "check_id": self.check_id,
            "passed": self.passed,
            "outcome": self.outcome,
            "statistics": self.statistics,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "headline": self.headline,
        }


def save_verdicts_jsonl(verdicts: Sequence[CheckVerdict], path: str | Path) -> None:
    atomic_write_text(path, "".join(dumps_canonical(v.to_dict()) + "\n" for v in verdicts))


def load_verdicts_jsonl(path: str | Path) -> tuple[list[CheckVerdict], int]:
    verdicts = []
    version = SCHEMA_VERSION
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            version = int(doc.get("schema_version", SCHEMA_VERSION))
            verdicts.append(
                CheckVerdict(
                    check_id=doc["check_id"],
                    outcome=doc["outcome"],
                    statistics={k: float(v) for k, v in doc["statistics"].items()},
                    config_digest=doc["config_digest"],
                    seed=int(doc["seed"]),
                    headline=doc["headline"],
                )
            )
    return verdicts, version


SUMMARY_HEADER = ["check_id", "passed", "headline_statistic"]


def save_check_summary_csv(verdicts: Sequence[CheckVerdict], path: str | Path) -> None:
    rows = (
        [v.check_id, str(int(v.passed)), fmt_float(v.statistics.get(v.headline, float("nan")))]
        for v in verdicts
    )
    write_csv(path, SUMMARY_HEADER, rows)


def _seed_int(seed: int, *keys) -> int:
    return int(child_sequence(seed, *keys).generate_state(1)[0])


def _estimator_for(cfg: EstimatorConfig, master_seed: int) -> EstimatorConfig:
    return dataclasses.replace(cfg, master_seed=master_seed)


def _bootstrap_gap_ci(
    hard: np.ndarray, easy: np.ndarray, seed: int, draws: int = 2000
) -> tuple[float, float]:
    """Percentile bootstrap 95% CI for mean(hard) - mean(easy)."""
    rng = rng_for(seed, "bootstrap")
    idx_h = rng.integers(0, hard.size, size=(draws, hard.size))
    idx_e = rng.integers(0, easy.size, size=(draws, easy.size))
    gaps = hard[idx_h].mean(axis=1) - easy[idx_e].mean(axis=1)
    low, high = np.percentile(gaps, [2.5, 97.5])
    return float(low), float(high)


# ---------------------------------------------------------------------------
# Label noise: corrupted samples become measurably harder; mixed-risk identity
# ---------------------------------------------------------------------------


def check_label_noise(
    base: DatasetSpec,
    rate: float,
    cfg: EstimatorConfig,
    seed: int,
    enum_limit: int = 10,
) -> CheckVerdict:
    """Corrupted-label difficulty gap plus the mixed-risk linearity identity.

    Gate: the clean problem must be learnable (mean per-sample correct
    probability > 0.5), otherwise the verdict is inconclusive. The difficulty
    gap must be positive with a bootstrap 95% interval excluding 0. The
    mixed-risk identity L'(pi) = (1-pi) L* + pi L(f, y') is verified exactly
    at pi in {0, 1} and against full enumeration of flip patterns on the
    first <= ``enum_limit`` samples.
    """
    digest = config_digest(
        {"check": "label_noise", "base": dataclasses.asdict(base), "rate": rate,
         "folds": cfg.folds, "repeats": cfg.repeats, "family_kind": cfg.family.kind, "seed": seed}
    )
    ds = gen_gaussian_mixture(with_seed(base, _seed_int(seed, "data")))
    clean_profile = estimate_error_profile(ds, _estimator_for(cfg, _seed_int(seed, "clean-est")))
    p_correct = float(clean_profile.correct_probability().mean())
    stats: dict[str, float] = {"p_correct_mean": p_correct, "rate": rate}
    if p_correct <= 0.5:
        stats["err_gap"] = float("nan")
        return CheckVerdict("label_noise", "inconclusive", stats, digest, seed, "err_gap")

    noisy = apply_label_noise(ds, NoiseSpec(kind="uniform_label", rate=rate, seed=_seed_int(seed, "noise")))
    noisy_profile = estimate_error_profile(noisy, _estimator_for(cfg, _seed_int(seed, "noisy-est")))
    flags = noisy.noise_flag
    if flags.sum() == 0 or (~flags).sum() == 0:
        stats["err_gap"] = float("nan")
        return CheckVerdict("label_noise", "inconclusive", stats, digest, seed, "err_gap")
    hard, easy = noisy_profile.err[flags], noisy_profile.err[~flags]
    gap = float(hard.mean() - easy.mean())
    ci_low, ci_high = _bootstrap_gap_ci(hard, easy, _seed_int(seed, "ci"))
    stats.update(
        err_gap=gap, ci_low=ci_low, ci_high=ci_high,
        err_noisy_mean=float(hard.mean()), err_clean_mean=float(easy.mean()),
        n_noisy=float(flags.sum()),
    )

    # Mixed-risk identity for one fixed model trained on the clean data.
    fam = cfg.family
    model, _ = train(
        init_params(fam.kind, fam.dims, _seed_int(seed, "mix-init")),
        ds, WeightScheme(kind="equal"), fam.loss, fam.hyper,
    )
    scores = forward(model, ds.features)
    loss_clean = np.asarray(loss_value(fam.loss, scores, ds.labels))
    loss_flipped = np.asarray(loss_value(fam.loss, scores, -ds.labels))
    l_star, l_flip = float(loss_clean.mean()), float(loss_flipped.mean())

    def corrupted_risk(pi: float, key: str) -> float:
        corrupted = apply_label_noise(ds, NoiseSpec(kind="uniform_label", rate=pi, seed=_seed_int(seed, key)))
        return float(np.mean(loss_value(fam.loss, scores, corrupted.labels)))

    gap_pi0 = abs(corrupted_risk(0.0, "pi0") - l_star)
    gap_pi1 = abs(corrupted_risk(1.0, "pi1") - l_flip)

    m = min(enum_limit, ds.n)
    pattern_risk = 0.0
    for bits in range(1 << m):
        flips = np.array([(bits >> i) & 1 for i in range(m)], dtype=bool)
        prob = rate ** flips.sum() * (1.0 - rate) ** (m - flips.sum())
        pattern_risk += prob * float(np.where(flips, loss_flipped[:m], loss_clean[:m]).mean())
    mixed = (1.0 - rate) * float(loss_clean[:m].mean()) + rate * float(loss_flipped[:m].mean())
    enum_gap_rel = abs(pattern_risk - mixed) / abs(pattern_risk)
    stats.update(
        l_star=l_star, l_flipped=l_flip, eq_gap_pi0=gap_pi0, eq_gap_pi1=gap_pi1,
        enum_expectation=pattern_risk, mixed_prediction=mixed, enum_gap_rel=enum_gap_rel,
    )
    ok = ci_low > 0.0 and gap_pi0 <= 1e-12 and gap_pi1 <= 1e-12 and enum_gap_rel <= 0.02
    return CheckVerdict("label_noise", "passed" if ok else "failed", stats, digest, seed, "err_gap")


# ---------------------------------------------------------------------------
# Feature noise: gradient-aligned perturbations move difficulty both ways
# ---------------------------------------------------------------------------


def check_feature_noise(
    base: DatasetSpec,
    epsilon: float,
    cfg: EstimatorConfig,
    seed: int,
) -> CheckVerdict:
    """Adversarial feature shifts raise mean difficulty; promoted shifts lower it.

    The perturbation criterion is label-free (sign of dot(step, reference
    row)); to make "adversarial" mean "harder" for both classes the reference
    passed to the generator is the estimated *margin* gradient, i.e. the
    label-signed mean input gradient from the clean profile. Both directions
    are validated by re-estimating the profile on the perturbed data.
    """
    digest = config_digest(
        {"check": "feature_noise", "base": dataclasses.asdict(base), "epsilon": epsilon,
         "folds": cfg.folds, "repeats": cfg.repeats, "family_kind": cfg.family.kind, "seed": seed}
    )
    ds = gen_gaussian_mixture(with_seed(base, _seed_int(seed, "data")))
    clean_profile = estimate_error_profile(
        ds, _estimator_for(cfg, _seed_int(seed, "clean-est")), with_input_gradients=True
    )
    p_correct = float(clean_profile.correct_probability().mean())
    stats: dict[str, float] = {"p_correct_mean": p_correct, "epsilon": epsilon}
    if p_correct <= 0.5:
        stats["adv_minus_clean"] = float("nan")
        return CheckVerdict("feature_noise", "inconclusive", stats, digest, seed, "adv_minus_clean")
    reference = ds.labels[:, None] * clean_profile.mean_input_gradient
    skipped = {}
    errs = {}
    for direction in ("adversarial", "promoted"):
        spec = NoiseSpec(
            kind="feature", rate=1.0, seed=_seed_int(seed, "mask", direction),
            epsilon=epsilon, direction=direction,
        )
        shifted, n_skipped = apply_feature_noise(ds, spec, reference)
        profile = estimate_error_profile(shifted, _estimator_for(cfg, _seed_int(seed, "est", direction)))
        errs[direction] = float(profile.err.mean())
        skipped[direction] = n_skipped
    err_clean = float(clean_profile.err.mean())
    stats.update(
        err_clean_mean=err_clean,
        err_adversarial_mean=errs["adversarial"],
        err_promoted_mean=errs["promoted"],
        adv_minus_clean=errs["adversarial"] - err_clean,
        clean_minus_promoted=err_clean - errs["promoted"],
        skipped_rows=float(skipped["adversarial"] + skipped["promoted"]),
    )
    ok = errs["adversarial"] > err_clean and errs["promoted"] < err_clean
    return CheckVerdict("feature_noise", "passed" if ok else "failed", stats, digest, seed, "adv_minus_clean")


# ---------------------------------------------------------------------------
# Imbalance: minority samples are harder; balanced weights recover recall
# ---------------------------------------------------------------------------


def check_imbalance(
    spec: DatasetSpec,
    cfg: EstimatorConfig,
    seed: int,
    train_seeds: int = 10,
    test_scale: int = 20,
) -> CheckVerdict:
    """Minority class difficulty and the class-balanced recall comparison.

    Gate: imbalance ratio must exceed e. Asserts (a) mean sigmoid-margin
    probability is lower on the minority class, (b) mean difficulty is higher
    there, and (c) class-balanced weights beat equal weights on minority
    recall for >= 80% of ``train_seeds`` fresh draws (strict improvement).
    """
    digest = config_digest(
        {"check": "imbalance", "spec": dataclasses.asdict(spec), "folds": cfg.folds,
         "repeats": cfg.repeats, "family_kind": cfg.family.kind,
         "train_seeds": train_seeds, "seed": seed}
    )
    stats: dict[str, float] = {"imbalance_ratio": spec.imbalance_ratio}
    if spec.imbalance_ratio <= np.e:
        stats["recall_improved_count"] = float("nan")
        return CheckVerdict("imbalance", "inconclusive", stats, digest, seed, "recall_improved_count")
    minority = int(np.argmin(spec.class_counts))
    ds = gen_gaussian_mixture(with_seed(spec, _seed_int(seed, "data")))
    profile = estimate_error_profile(ds, _estimator_for(cfg, _seed_int(seed, "est")))
    small = profile.class_of == minority
    p_hat = expit(profile.margin_samples).mean(axis=0)
    stats.update(
        err_small_mean=float(profile.err[small].mean()),
        err_large_mean=float(profile.err[~small].mean()),
        p_small_mean=float(p_hat[small].mean()),
        p_large_mean=float(p_hat[~small].mean()),
    )

    fam = cfg.family
    test_spec = dataclasses.replace(
        spec, class_counts=tuple(test_scale * k for k in spec.class_counts)
    )
    improved = 0
    recalls_eq, recalls_cb = [], []
    for s in range(train_seeds):
        ds_s = gen_gaussian_mixture(with_seed(spec, _seed_int(seed, "sweep-data", s)))
        test_s = gen_gaussian_mixture(with_seed(test_spec, _seed_int(seed, "sweep-test", s)))
        init = init_params(fam.kind, fam.dims, _seed_int(seed, "sweep-init", s))
        model_eq, _ = train(init, ds_s, WeightScheme(kind="equal"), fam.loss, fam.hyper)
        model_cb, _ = train(init, ds_s, WeightScheme(kind="class_balanced"), fam.loss, fam.hyper)
        hold = test_s.class_of == minority
        rec_eq = float(
            (np.asarray(margin(model_eq, test_s.features[hold], test_s.labels[hold])) > 0).mean()
        )
        rec_cb = float(
            (np.asarray(margin(model_cb, test_s.features[hold], test_s.labels[hold])) > 0).mean()
        )
        recalls_eq.append(rec_eq)
        recalls_cb.append(rec_cb)
        improved += rec_cb > rec_eq
    stats.update(
        recall_improved_count=float(improved),
        recall_equal_mean=float(np.mean(recalls_eq)),
        recall_balanced_mean=float(np.mean(recalls_cb)),
        train_seeds=float(train_seeds),
    )
    ok = (
        stats["err_small_mean"] > stats["err_large_mean"]
        and stats["p_small_mean"] < stats["p_large_mean"]
        and improved >= int(np.ceil(0.8 * train_seeds))
    )
    return CheckVerdict("imbalance", "passed" if ok else "failed", stats, digest, seed, "recall_improved_count")


# ---------------------------------------------------------------------------
# Margin/error law on an estimated profile
# ---------------------------------------------------------------------------


def check_margin_error(
    profile: DifficultyProfile,
    seed: int = 0,
    sigma_match_rel: float = 0.10,
    mu_gap_rel: float = 0.20,
    min_pairs: int = 20,
) -> CheckVerdict:
    """Monotone error law: analytic grid, matched-variance pairs, normality.

    (a) exp(-mu + sigma2/2) is strictly decreasing in mu and increasing in
    sigma2 on the {0,1,2} x {0,1} grid (analytic, asserted exactly);
    (b) among sample pairs whose sigma2_hat agree within ``sigma_match_rel``
    of the median spread and whose mu_hat differ by at least ``mu_gap_rel``
    of the mu spread, err ordering opposes mu ordering in >= 95% of pairs
    (pairs where both mu and sigma2 increase together are excluded — the law
    does not order them); (c) the fraction of samples with both normality
    Z-scores inside +-1.96 is reported against the 80% line; a negative
    Spearman correlation between mu_hat and err ties the profile together.
    """
    digest = config_digest(
        {"check": "margin_error", "n": profile.n, "repeats": profile.repeats_kept,
         "loss": profile.loss_kind, "seed": seed}
    )
    if profile.n < 2:
        raise SpecificationError("need at least two profiled samples")
    grid_ok = True
    for s2 in (0.0, 1.0):
        vals = [closed_form_error(m, s2) for m in (0.0, 1.0, 2.0)]
        grid_ok &= vals[0] > vals[1] > vals[2]
    for m in (0.0, 1.0, 2.0):
        grid_ok &= closed_form_error(m, 0.0) < closed_form_error(m, 1.0)

    mu, s2, err = profile.mu_hat, profile.sigma2_hat, profile.err
    sigma_tol = sigma_match_rel * float(np.median(s2))
    mu_gap = mu_gap_rel * float(np.std(mu))
    agree = total = 0
    for i in range(profile.n):
        ds2 = np.abs(s2[i + 1 :] - s2[i])
        dmu = mu[i + 1 :] - mu[i]
        keep = (ds2 <= sigma_tol) & (np.abs(dmu) >= mu_gap)
        derr = err[i + 1 :] - err[i]
        total += int(keep.sum())
        agree += int(np.sum(keep & (dmu * derr < 0)))
    pair_agreement = agree / total if total else float("nan")

    both_in = np.isfinite(profile.z_skew) & np.isfinite(profile.z_kurt)
    both_in &= (np.abs(profile.z_skew) <= 1.96) & (np.abs(profile.z_kurt) <= 1.96)
    gaussian_fraction = float(both_in.mean())
    rho = float(spearmanr(mu, err).statistic)
    stats = {
        "grid_monotone": float(grid_ok),
        "pair_agreement": pair_agreement,
        "pairs_total": float(total),
        "gaussian_fraction": gaussian_fraction,
        "spearman_mu_err": rho,
    }
    if total < min_pairs:
        return CheckVerdict("margin_error", "inconclusive", stats, digest, seed, "gaussian_fraction")
    ok = grid_ok and pair_agreement >= 0.95 and gaussian_fraction >= 0.80 and rho < 0.0
    return CheckVerdict("margin_error", "passed" if ok else "failed", stats, digest, seed, "gaussian_fraction")


# ---------------------------------------------------------------------------
# Difficulty-proportional sampling weights on one sample pair
# ---------------------------------------------------------------------------


def check_dual_weights(
    margins_hard: np.ndarray,
    margins_easy: np.ndarray,
    model: Literal["linear_p", "exponential_p"],
    coefficients: tuple[float, ...],
    seed: int = 0,
) -> CheckVerdict:
    """Expected sampling weight of the harder sample under two weight models.

    The pair must be ordered: the first margin sample belongs to the sample
    with the larger empirical error (mean exponential loss). ``linear_p``
    with p = a*margin + b (a < 0) must rank by *mean margin*: E[p_i] >= E[p_j]
    iff mu_i <= mu_j — which can disagree with the error ordering when the
    spreads differ. ``exponential_p`` with p = c*exp(-margin) (c > 0) equals
    c times the empirical error by definition, so it always follows the error
    ordering; the verdict records when that happens *despite* mu_i > mu_j.
    """
    m_i = np.asarray(margins_hard, dtype=np.float64)
    m_j = np.asarray(margins_easy, dtype=np.float64)
    if m_i.ndim != 1 or m_j.ndim != 1 or m_i.size < 1 or m_j.size < 1:
        raise SpecificationError("need two nonempty margin-sample vectors")
    err_i = float(np.exp(-m_i).mean())
    err_j = float(np.exp(-m_j).mean())
    if err_i < err_j:
        raise SpecificationError("pair must be ordered hard-first: err_i >= err_j")
    mu_i, mu_j = float(m_i.mean()), float(m_j.mean())
    digest = config_digest(
        {"check": "dual_weights", "model": model, "coefficients": list(coefficients),
         "err": [err_i, err_j], "mu": [mu_i, mu_j], "seed": seed}
    )
    stats: dict[str, float] = {
        "err_hard": err_i, "err_easy": err_j, "mu_hard": mu_i, "mu_easy": mu_j,
    }
    if model == "linear_p":
        a, b = coefficients
        if a >= 0:
            raise SpecificationError("linear_p needs a negative slope")
        ep_i, ep_j = a * mu_i + b, a * mu_j + b
        ok = (ep_i >= ep_j) == (mu_i <= mu_j)
        check_id = "dual_weights_linear_p"
    elif model == "exponential_p":
        (c,) = coefficients
        if c <= 0:
            raise SpecificationError("exponential_p needs a positive scale")
        ep_i, ep_j = c * err_i, c * err_j
        ok = ep_i >= ep_j
        check_id = "dual_weights_exponential_p"
    else:
        raise SpecificationError(f"unknown weight model {model!r}")
    stats.update(
        ep_hard=ep_i, ep_easy=ep_j,
        follows_err=float(ep_i >= ep_j),
        mu_reversed=float(mu_i > mu_j),  # hard sample with larger mean margin
    )
    return CheckVerdict(check_id, "passed" if ok else "failed", stats, digest, seed, "follows_err")


# ---------------------------------------------------------------------------
# Regularization path to the max-margin direction, plus acceleration
# ---------------------------------------------------------------------------


def _materialize_weights(
    scheme: WeightScheme, ds: Dataset, family: ModelFamily, seed: int
) -> np.ndarray:
    """Fixed weight vector for a scheme, profiling difficulty if needed."""
    if scheme.kind in ("equal", "class_balanced", "custom_static"):
        return make_weights(scheme, n=ds.n, class_of=ds.class_of)
    cfg = EstimatorConfig(family=family, folds=5, repeats=10, master_seed=_seed_int(seed, "weights"))
    profile = estimate_error_profile(ds, cfg)
    if scheme.kind == "inverse_margin":
        return make_weights(scheme, margins=profile.mu_hat)
    return make_weights(scheme, errors=profile.err)


def check_margin_convergence(
    ds: Dataset,
    schemes: Sequence[WeightScheme],
    lambdas: Sequence[float],
    family: ModelFamily,
    seed: int,
    monotone_tol: float = 1e-3,
    accel_epochs: int = 20000,
    accel_threshold: float = 0.99,
) -> CheckVerdict:
    """Normalized margin along a shrinking regularization path.

    For each scheme the weighted exponential-loss objective with lambda
    ||theta||^2 is minimized at every lambda (warm-started down the list), and
    the normalized margin gamma_lambda is recorded. Asserts: gamma_lambda is
    non-decreasing as lambda decreases (within ``monotone_tol``); for linear
    models, the smallest-lambda value lands within 5% of the oracle maximum
    margin; schemes agree at the smallest lambda within 5% of the oracle; and
    the acceleration comparison holds — dynamic hard-first weights reach the
    oracle-direction cosine threshold in no more epochs than equal weights.
    """
    lambdas = [float(v) for v in lambdas]
    if any(v <= 0 for v in lambdas):
        raise SpecificationError("the margin path is a limit statement: lambda > 0 only")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise SpecificationError("lambda list must be strictly decreasing")
    digest = config_digest(
        {"check": "margin_convergence", "n": ds.n, "d": ds.dim,
         "schemes": [s.kind for s in schemes], "lambdas": lambdas,
         "family_kind": family.kind, "seed": seed}
    )
    linear = family.kind == "linear"
    oracle = solve_max_margin(ds) if linear else None

    finals: list[float] = []
    monotone = True
    dropped = 0
    stats: dict[str, float] = {}
    for s_idx, scheme in enumerate(schemes):
        weights = _materialize_weights(scheme, ds, family, seed)
        params = init_params(family.kind, family.dims, _seed_int(seed, "path-init", s_idx))
        gammas: list[float] = []
        for lam in lambdas:
            try:
                params, _ = minimize_objective(params, ds, family.loss, weights, reg_lambda=lam)
                gammas.append(normalized_margin(params, ds))
            except DivergenceError:
                dropped += 1
                continue
        if len(gammas) >= 2:
            monotone &= all(b >= a - monotone_tol for a, b in zip(gammas, gammas[1:]))
        if gammas:
            finals.append(gammas[-1])
            stats[f"gamma_final_{scheme.kind}"] = gammas[-1]
            stats[f"gamma_first_{scheme.kind}"] = gammas[0]
    if not finals:
        raise SpecificationError("every lambda run diverged")

    if oracle is not None:
        oracle_gap = max(abs(g - oracle.gamma_star) / oracle.gamma_star for g in finals)
        scheme_scale = oracle.gamma_star
        stats["gamma_star"] = oracle.gamma_star
    else:
        oracle_gap = float("nan")
        scheme_scale = max(abs(g) for g in finals)
    scheme_gap = (max(finals) - min(finals)) / scheme_scale if len(finals) > 1 else 0.0
    stats.update(
        monotone=float(monotone), oracle_gap_rel=oracle_gap,
        scheme_gap_rel=scheme_gap, lambdas_dropped=float(dropped),
    )

    epochs_equal = epochs_hard = float("nan")
    accel_ok = True
    if oracle is not None:
        hyper = Hyper(learning_rate=family.hyper.learning_rate, epochs=accel_epochs)
        init = init_params(family.kind, family.dims, _seed_int(seed, "accel-init"))

        def epochs_to_threshold(scheme: WeightScheme) -> float:
            try:
                _, trace = train(init, ds, scheme, family.loss, hyper,
                                 reference_direction=oracle.direction)
            except DivergenceError:
                return float("inf")  # diverged: threshold never reached
            reached = trace.epochs_to_cosine(accel_threshold)
            return float(reached) if reached is not None else float("inf")

        epochs_equal = epochs_to_threshold(WeightScheme(kind="equal"))
        epochs_hard = epochs_to_threshold(WeightScheme(kind="error_hard_first", dynamic=True))
        accel_ok = epochs_hard <= epochs_equal and np.isfinite(epochs_hard)
    stats.update(epochs_to_threshold_equal=epochs_equal, epochs_to_threshold_hard_first=epochs_hard)

    ok = monotone and scheme_gap <= 0.05 and accel_ok and (not linear or oracle_gap <= 0.05)
    return CheckVerdict(
        "margin_convergence", "passed" if ok else "failed", stats, digest, seed, "oracle_gap_rel"
    )


# ---------------------------------------------------------------------------
# Default suite
# ---------------------------------------------------------------------------


CHECK_IDS = (
    "label_noise", "feature_noise", "imbalance",
    "margin_error", "dual_weights", "margin_convergence",
)


def run_all_checks(seed: int, jobs: int = 1,
                   only: Sequence[str] = CHECK_IDS) -> list[CheckVerdict]:
    """The default benchmark suite behind ``lab check``."""
    from . import benchmarks as bm

    wanted = set(only)
    unknown = wanted - set(CHECK_IDS)
    if unknown:
        raise SpecificationError(f"unknown checks: {sorted(unknown)}")

    verdicts = []
    if "label_noise" in wanted:
        verdicts.append(check_label_noise(
            bm.noise_benchmark(), 0.1,
            bm.default_estimator(bm.mlp_family(), master_seed=0), seed=_seed_int(seed, "ln"),
        ))
    if "feature_noise" in wanted:
        verdicts.append(check_feature_noise(
            bm.noise_benchmark(), 0.25,
            bm.default_estimator(bm.mlp_family(), master_seed=0), seed=_seed_int(seed, "fn"),
        ))
    if "imbalance" in wanted:
        verdicts.append(check_imbalance(
            bm.imbalance_benchmark(),
            bm.default_estimator(bm.linear_family(), master_seed=0), seed=_seed_int(seed, "im"),
        ))
    if "margin_error" in wanted:
        profile = estimate_error_profile(
            gen_gaussian_mixture(bm.profile_benchmark(_seed_int(seed, "me-data"))),
            EstimatorConfig(family=bm.profile_family(), folds=5, repeats=30, master_seed=_seed_int(seed, "me-est")),
            jobs=jobs,
        )
        verdicts.append(check_margin_error(profile, seed=_seed_int(seed, "me")))

    if "dual_weights" in wanted:
        # Constructed Gaussian margin pair: large spread beats larger mean margin.
        rng = rng_for(seed, "dw")
        hard = 2.0 + np.sqrt(6.0) * rng.standard_normal(20000)
        easy = np.ones(20000)
        verdicts.append(check_dual_weights(hard, easy, "exponential_p", (1.0,), seed=_seed_int(seed, "dw-exp")))
        verdicts.append(check_dual_weights(hard, easy, "linear_p", (-1.0, 0.0), seed=_seed_int(seed, "dw-lin")))

    if "margin_convergence" in wanted:
        verdicts.append(check_margin_convergence(
            gen_gaussian_mixture(bm.linear_benchmark(_seed_int(seed, "mc-data"))),
            [WeightScheme(kind="equal"), WeightScheme(kind="error_hard_first")],
            [1e-1, 1e-2, 1e-3],
            bm.linear_family(),
            seed=_seed_int(seed, "mc"),
        ))
    return verdicts

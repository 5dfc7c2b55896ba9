"""Property-check battery tests.

The cheap checks are driven end to end with hand-constructed inputs whose
verdicts are computable on paper (dual weight models on two-point margin
vectors, margin/error law on synthetic Gaussian profiles); the expensive
benchmark checks are exercised through their input validation and the
verdict plumbing (JSONL and summary CSV round trips).
"""

from __future__ import annotations

import numpy as np
import pytest

from weightlab.difficulty import DifficultyProfile, gaussianity_z
from weightlab.errors import SpecificationError
from weightlab.models import LossSpec
from weightlab.optimizer import Hyper, WeightScheme
from weightlab.propcheck import (
    CHECK_IDS,
    SUMMARY_HEADER,
    CheckVerdict,
    check_dual_weights,
    check_margin_convergence,
    check_margin_error,
    load_verdicts_jsonl,
    run_all_checks,
    save_check_summary_csv,
    save_verdicts_jsonl,
)
from weightlab.serialization import read_csv

from conftest import random_separable


# ---------------------------------------------------------------------------
# verdict plumbing
# ---------------------------------------------------------------------------


def _verdict(check_id="margin_error", outcome="passed"):
    return CheckVerdict(
        check_id=check_id, outcome=outcome,
        statistics={"alpha": 0.5, "beta": float("nan")},
        config_digest="ab" * 8, seed=7, headline="alpha",
    )


def test_verdict_passed_flag_and_dict():
    v = _verdict()
    assert v.passed
    doc = v.to_dict()
    assert doc["schema_version"] == 1
    assert doc["passed"] is True and doc["outcome"] == "passed"
    assert not _verdict(outcome="inconclusive").passed


def test_verdicts_jsonl_round_trip(tmp_path):
    vs = [_verdict(), _verdict(check_id="imbalance", outcome="failed")]
    path = tmp_path / "verdicts.jsonl"
    save_verdicts_jsonl(vs, path)
    back, version = load_verdicts_jsonl(path)
    assert version == 1
    assert [v.check_id for v in back] == ["margin_error", "imbalance"]
    assert back[0].statistics["alpha"] == 0.5
    assert np.isnan(back[0].statistics["beta"])
    assert back[1].outcome == "failed" and not back[1].passed


def test_summary_csv_layout(tmp_path):
    path = tmp_path / "summary.csv"
    save_check_summary_csv([_verdict(), _verdict(outcome="failed")], path)
    header, rows, _ = read_csv(path)
    assert header == SUMMARY_HEADER
    assert rows[0] == ["margin_error", "1", "0.5"]
    assert rows[1][1] == "0"


# ---------------------------------------------------------------------------
# dual weight models on constructed margin pairs
# ---------------------------------------------------------------------------

# margins [0, 4]: mu = 2, err = (1 + e^-4)/2 ~ 0.509
# margins [1]:    mu = 1, err = e^-1        ~ 0.368
# so the harder sample has the LARGER mean margin (spread-driven difficulty)
HARD_SPREAD = np.array([0.0, 4.0])
EASY_TIGHT = np.array([1.0])


def test_exponential_weights_follow_error_by_identity():
    v = check_dual_weights(HARD_SPREAD, EASY_TIGHT, "exponential_p", (2.0,))
    assert v.check_id == "dual_weights_exponential_p"
    assert v.passed
    np.testing.assert_allclose(v.statistics["ep_hard"],
                               2.0 * v.statistics["err_hard"], rtol=1e-15)
    assert v.statistics["follows_err"] == 1.0
    assert v.statistics["mu_reversed"] == 1.0  # despite mu_hard > mu_easy


def test_linear_weights_rank_by_mean_margin_not_error():
    v = check_dual_weights(HARD_SPREAD, EASY_TIGHT, "linear_p", (-1.0, 0.0))
    assert v.check_id == "dual_weights_linear_p"
    assert v.passed  # consistent with its own definition...
    assert v.statistics["follows_err"] == 0.0  # ...but misses the hard sample


def test_linear_weights_agree_when_means_are_ordered():
    # margins [0, 2] vs [1, 1]: same-mean tie -> equal expected weights
    v = check_dual_weights(np.array([0.0, 2.0]), np.array([1.0, 1.0]),
                           "linear_p", (-0.5, 1.0))
    assert v.passed
    np.testing.assert_allclose(v.statistics["ep_hard"], v.statistics["ep_easy"])


def test_dual_weights_input_validation():
    with pytest.raises(SpecificationError):
        check_dual_weights(np.array([3.0]), np.array([0.0]), "exponential_p", (1.0,))
    with pytest.raises(SpecificationError):
        check_dual_weights(HARD_SPREAD, EASY_TIGHT, "linear_p", (0.5, 0.0))
    with pytest.raises(SpecificationError):
        check_dual_weights(HARD_SPREAD, EASY_TIGHT, "exponential_p", (-1.0,))
    with pytest.raises(SpecificationError):
        check_dual_weights(HARD_SPREAD, EASY_TIGHT, "softmax_p", (1.0,))
    with pytest.raises(SpecificationError):
        check_dual_weights(np.array([]), EASY_TIGHT, "exponential_p", (1.0,))


# ---------------------------------------------------------------------------
# margin/error law on synthetic profiles
# ---------------------------------------------------------------------------


def _gaussian_profile(mu, sigma, repeats=60, seed=0):
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    rng = np.random.default_rng(seed)
    margins = mu + sigma * rng.standard_normal((repeats, mu.size))
    z_skew = np.empty(mu.size)
    z_kurt = np.empty(mu.size)
    for i in range(mu.size):
        z_skew[i], z_kurt[i] = gaussianity_z(margins[:, i])
    zeros = np.zeros(mu.size)
    return DifficultyProfile(
        err=np.exp(-margins).mean(axis=0), bias=zeros, variance=zeros,
        mu_hat=margins.mean(axis=0), sigma2_hat=margins.var(axis=0, ddof=1),
        uncertainty=zeros, z_skew=z_skew, z_kurt=z_kurt,
        noise_flag=np.zeros(mu.size, dtype=bool),
        class_of=np.zeros(mu.size, dtype=np.int64),
        margin_samples=margins, predictions=margins.copy(),
        loss_kind="exponential", mode="kfold", discarded=0,
    )


def test_margin_error_law_passes_on_gaussian_profile():
    rng = np.random.default_rng(3)
    mu = rng.uniform(0.0, 3.0, size=40)
    profile = _gaussian_profile(mu, sigma=np.full(40, 0.4), seed=5)
    v = check_margin_error(profile)
    assert v.passed, v.statistics
    assert v.statistics["grid_monotone"] == 1.0
    assert v.statistics["pair_agreement"] >= 0.95
    assert v.statistics["gaussian_fraction"] >= 0.80
    assert v.statistics["spearman_mu_err"] < 0


def test_margin_error_inconclusive_when_no_pairs_match():
    # wildly different spreads leave no sigma-matched pairs
    profile = _gaussian_profile(np.array([0.5, 2.5]), np.array([0.05, 3.0]))
    v = check_margin_error(profile, min_pairs=1)
    assert v.outcome == "inconclusive"
    assert v.statistics["pairs_total"] == 0.0


def test_margin_error_needs_two_samples():
    profile = _gaussian_profile(np.array([1.0]), np.array([0.3]))
    with pytest.raises(SpecificationError):
        check_margin_error(profile)


# ---------------------------------------------------------------------------
# regularization-path check
# ---------------------------------------------------------------------------


def _tiny_family():
    from weightlab.difficulty import ModelFamily

    return ModelFamily(kind="linear", dims=(2, 0, 1), loss=LossSpec("exponential"),
                       hyper=Hyper(learning_rate=0.5, epochs=100))


def test_margin_convergence_rejects_bad_lambda_lists():
    rng = np.random.default_rng(0)
    ds = random_separable(rng, n=8, d=2)
    schemes = [WeightScheme(kind="equal")]
    with pytest.raises(SpecificationError):
        check_margin_convergence(ds, schemes, [0.1, 0.0], _tiny_family(), seed=0)
    with pytest.raises(SpecificationError):
        check_margin_convergence(ds, schemes, [0.01, 0.1], _tiny_family(), seed=0)
    with pytest.raises(SpecificationError):
        check_margin_convergence(ds, schemes, [0.1, 0.1], _tiny_family(), seed=0)


def test_margin_convergence_on_a_tiny_separable_problem():
    rng = np.random.default_rng(12)
    ds = random_separable(rng, n=10, d=2, gap=0.5)
    v = check_margin_convergence(
        ds,
        [WeightScheme(kind="equal"), WeightScheme(kind="error_hard_first")],
        [1e-1, 1e-2, 1e-3],
        _tiny_family(),
        seed=3,
        accel_epochs=5000,
    )
    assert v.passed, v.statistics
    assert v.statistics["monotone"] == 1.0
    assert v.statistics["oracle_gap_rel"] <= 0.05
    assert (v.statistics["epochs_to_threshold_hard_first"]
            <= v.statistics["epochs_to_threshold_equal"])


# ---------------------------------------------------------------------------
# suite wiring
# ---------------------------------------------------------------------------


def test_check_ids_are_the_published_six():
    assert CHECK_IDS == (
        "label_noise", "feature_noise", "imbalance",
        "margin_error", "dual_weights", "margin_convergence",
    )


def test_unknown_check_id_rejected():
    with pytest.raises(SpecificationError):
        run_all_checks(seed=0, only=("margin_error", "telepathy"))


def test_dual_weights_suite_entry(tmp_path):
    verdicts = run_all_checks(seed=11, only=("dual_weights",))
    assert [v.check_id for v in verdicts] == [
        "dual_weights_exponential_p", "dual_weights_linear_p",
    ]
    assert all(v.passed for v in verdicts)
    # the constructed pair is the spread-beats-mean configuration
    assert verdicts[0].statistics["mu_reversed"] == 1.0
    path = tmp_path / "verdicts.jsonl"
    save_verdicts_jsonl(verdicts, path)
    back, _ = load_verdicts_jsonl(path)
    assert [v.to_dict() for v in back] == [v.to_dict() for v in verdicts]

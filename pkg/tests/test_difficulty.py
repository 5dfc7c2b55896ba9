"""Per-sample difficulty estimation tests.

closed_form_error / epistemic_uncertainty / gaussianity_z are pinned against
hand arithmetic and an independent moment-based oracle; the full estimator is
checked for its algebraic identities (squared-loss decomposition, uncertainty
= variance in perturb mode), determinism, symmetry, and the planted-noise and
rank-correlation behaviours the profile exists to expose.
"""

from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from weightlab.benchmarks import linear_family, profile_benchmark
from weightlab.datagen import gen_gaussian_mixture
from weightlab.difficulty import (
    PROFILE_HEADER,
    DifficultyProfile,
    EstimatorConfig,
    ModelFamily,
    closed_form_error,
    epistemic_uncertainty,
    estimate_error_profile,
    gaussianity_z,
    load_profile_csv,
    save_profile_csv,
    verify_lognormal_law,
)
from weightlab.errors import (
    DegenerateInputError,
    EstimationFailureError,
    SpecificationError,
)
from weightlab.models import LossSpec
from weightlab.optimizer import Hyper

from conftest import binary_dataset


def small_family(loss="exponential", epochs=60, lr=0.2):
    return ModelFamily(
        kind="linear", dims=(2, 0, 1), loss=LossSpec(loss),
        hyper=Hyper(learning_rate=lr, epochs=epochs),
    )


def symmetric_dataset():
    """Four points symmetric under (x, y) -> (-x, -y); indices 0/1 mirror 2/3."""
    X = np.array([[1.0, 0.8], [0.9, 1.1], [-1.0, -0.8], [-0.9, -1.1],
                  [1.2, 0.7], [-1.2, -0.7], [0.8, 1.2], [-0.8, -1.2]])
    y = np.array([1, 1, -1, -1, 1, -1, 1, -1])
    return binary_dataset(X, y)


# ---------------------------------------------------------------------------
# closed-form error law
# ---------------------------------------------------------------------------


def test_closed_form_error_hand_values():
    assert closed_form_error(0.0, 0.0) == 1.0
    assert closed_form_error(1.0, 2.0) == 1.0  # exponent cancels
    np.testing.assert_allclose(closed_form_error(2.0, 0.0), np.exp(-2.0), rtol=1e-15)


def test_closed_form_error_monotonicity():
    mus = np.linspace(-2.0, 2.0, 9)
    sig = np.linspace(0.0, 3.0, 7)
    for s in sig:
        vals = closed_form_error(mus, np.full_like(mus, s))
        assert np.all(np.diff(vals) < 0)  # decreasing in mu
    for m in mus:
        vals = closed_form_error(np.full_like(sig, m), sig)
        assert np.all(np.diff(vals) > 0)  # increasing in sigma2


def test_closed_form_error_overflow_is_inf_not_raise():
    assert closed_form_error(-1000.0, 0.0) == np.inf


def test_closed_form_error_input_validation():
    with pytest.raises(SpecificationError):
        closed_form_error(0.0, -0.1)
    with pytest.raises(SpecificationError):
        closed_form_error(np.nan, 1.0)


# ---------------------------------------------------------------------------
# epistemic uncertainty
# ---------------------------------------------------------------------------


def test_uncertainty_two_point_arithmetic():
    assert epistemic_uncertainty(np.array([0.0, 2.0])) == 1.0
    assert epistemic_uncertainty(np.array([0.0, 2.0]), tau_inv=0.5) == 1.5


def test_uncertainty_zero_for_identical_predictions():
    assert epistemic_uncertainty(np.full(5, 3.3)) == pytest.approx(0.0, abs=1e-12)


def test_uncertainty_matrix_is_per_sample():
    preds = np.array([[0.0, 1.0], [2.0, 1.0]])  # spread on sample 0 only
    out = epistemic_uncertainty(preds)
    np.testing.assert_allclose(out, [1.0, 0.0])


def test_uncertainty_needs_an_ensemble():
    with pytest.raises(SpecificationError):
        epistemic_uncertainty(np.array([1.0]))
    with pytest.raises(SpecificationError):
        epistemic_uncertainty(np.array([0.0, 2.0]), tau_inv=-0.1)


# ---------------------------------------------------------------------------
# normality Z-scores
# ---------------------------------------------------------------------------


def test_symmetric_sample_has_zero_skew_score():
    z_skew, _ = gaussianity_z(np.array([-1.0, 0.0, 1.0] * 3))
    assert z_skew == 0.0


def test_gaussianity_input_validation():
    with pytest.raises(SpecificationError):
        gaussianity_z(np.arange(7.0))  # n < 8
    with pytest.raises(DegenerateInputError):
        gaussianity_z(np.ones(12))


def test_gaussianity_against_moment_oracle():
    # recompute G1/G2 and their normal-theory standard errors from raw moments
    rng = np.random.default_rng(99)
    x = rng.gamma(2.0, size=40)
    n = x.size
    m = x.mean()
    m2 = ((x - m) ** 2).mean()
    m3 = ((x - m) ** 3).mean()
    m4 = ((x - m) ** 4).mean()
    g1 = (np.sqrt(n * (n - 1.0)) / (n - 2.0)) * m3 / m2**1.5
    g2 = ((n + 1.0) * (m4 / m2**2 - 3.0) + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0))
    se_skew = np.sqrt(6.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0) * (n + 3.0)))
    se_kurt = 2.0 * se_skew * np.sqrt((n * n - 1.0) / ((n - 3.0) * (n + 5.0)))
    z_skew, z_kurt = gaussianity_z(x)
    np.testing.assert_allclose(z_skew, g1 / se_skew, rtol=1e-12)
    np.testing.assert_allclose(z_kurt, g2 / se_kurt, rtol=1e-12)


def test_gaussian_null_acceptance_rate():
    # under N(0,1) roughly 95% of |z| values stay below 1.96
    rng = np.random.default_rng(1234)
    inside_skew = inside_kurt = 0
    trials = 200
    for _ in range(trials):
        z_s, z_k = gaussianity_z(rng.standard_normal(1000))
        inside_skew += abs(z_s) <= 1.96
        inside_kurt += abs(z_k) <= 1.96
    assert 0.92 <= inside_skew / trials <= 0.98
    assert 0.92 <= inside_kurt / trials <= 0.98


def test_skewed_sample_is_rejected():
    rng = np.random.default_rng(7)
    z_skew, _ = gaussianity_z(rng.exponential(size=1000))
    assert abs(z_skew) > 1.96


# ---------------------------------------------------------------------------
# profile estimation
# ---------------------------------------------------------------------------


def test_estimator_config_validation():
    fam = small_family()
    with pytest.raises(SpecificationError):
        EstimatorConfig(family=fam, repeats=1)
    with pytest.raises(SpecificationError):
        EstimatorConfig(family=fam, folds=1)
    with pytest.raises(SpecificationError):
        EstimatorConfig(family=fam, mode="loocv")
    with pytest.raises(SpecificationError):
        EstimatorConfig(family=fam, delta=-0.1)


def test_model_dims_must_match_dataset():
    ds = symmetric_dataset()
    fam = ModelFamily(kind="linear", dims=(3, 0, 1), loss=LossSpec("exponential"),
                      hyper=Hyper(epochs=5))
    with pytest.raises(SpecificationError):
        estimate_error_profile(ds, EstimatorConfig(family=fam, folds=2, repeats=2))


def test_profile_is_deterministic_and_job_count_free():
    ds = symmetric_dataset()
    cfg = EstimatorConfig(family=small_family(epochs=20), folds=2, repeats=4,
                          master_seed=5)
    a = estimate_error_profile(ds, cfg)
    b = estimate_error_profile(ds, cfg)
    c = estimate_error_profile(ds, cfg, jobs=2)
    for other in (b, c):
        np.testing.assert_array_equal(a.err, other.err)
        np.testing.assert_array_equal(a.margin_samples, other.margin_samples)
        np.testing.assert_array_equal(a.predictions, other.predictions)


def test_squared_loss_decomposition_is_exact():
    ds = symmetric_dataset()
    cfg = EstimatorConfig(family=small_family(loss="squared", epochs=30, lr=0.1),
                          folds=2, repeats=6, master_seed=3)
    prof = estimate_error_profile(ds, cfg)
    np.testing.assert_allclose(prof.bias + prof.variance, prof.err, atol=1e-12)
    spread = ((prof.predictions - prof.predictions.mean(axis=0)) ** 2).mean(axis=0)
    np.testing.assert_allclose(prof.variance, spread, atol=1e-10)
    assert np.all(prof.err >= 0)


def test_mirror_pair_has_statistically_equal_difficulty():
    # the dataset is invariant under (x, y) -> (-x, -y), so mirrored samples
    # should agree within sampling noise of the repeat distribution
    ds = symmetric_dataset()
    cfg = EstimatorConfig(family=small_family(epochs=40), folds=2, repeats=16,
                          master_seed=11)
    prof = estimate_error_profile(ds, cfg)
    per_rep = np.exp(-prof.margin_samples)  # per-repeat exponential losses
    for i, j in ((0, 2), (1, 3)):
        se = np.sqrt(per_rep[:, i].var(ddof=1) + per_rep[:, j].var(ddof=1))
        se /= np.sqrt(prof.repeats_kept)
        assert abs(prof.err[i] - prof.err[j]) <= 2.0 * max(se, 1e-12)


def test_planted_mislabeled_point_is_hardest():
    spec = profile_benchmark(seed=29)
    ds = gen_gaussian_mixture(spec)
    labels = ds.labels.copy()
    flags = ds.noise_flag.copy()
    labels[0] = -labels[0]  # plant one wrong label
    flags[0] = True
    noisy = binary_dataset(ds.features, labels, noise_flag=flags)
    cfg = EstimatorConfig(family=small_family(epochs=40), folds=5, repeats=6,
                          master_seed=13)
    prof = estimate_error_profile(noisy, cfg)
    assert prof.err[0] > prof.err[~prof.noise_flag].mean()


def test_difficulty_rank_correlates_negatively_with_margin_mean():
    ds = gen_gaussian_mixture(profile_benchmark(seed=41))
    cfg = EstimatorConfig(family=small_family(epochs=40), folds=5, repeats=6,
                          master_seed=17)
    prof = estimate_error_profile(ds, cfg)
    rho = stats.spearmanr(prof.mu_hat, prof.err).statistic
    assert rho < 0


def _conflicting_dataset():
    # A=(1,0,+1) B=(1,0,-1) C=(-1,0,+1) D=(-1,0,-1): every 2-point training
    # set except {A,D} / {B,C} yields a cosh-shaped objective that oscillates
    # to overflow at a huge learning rate
    X = np.array([[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [-1.0, 0.0]])
    return binary_dataset(X, np.array([1, -1, 1, -1]))


def test_divergent_repeats_fail_loudly_past_half():
    ds = _conflicting_dataset()
    fam = small_family(epochs=200, lr=1e6)
    cfg = EstimatorConfig(family=fam, folds=2, repeats=4, master_seed=4)
    with pytest.raises(EstimationFailureError):
        estimate_error_profile(ds, cfg)


def test_exactly_half_discarded_is_still_tolerated():
    ds = _conflicting_dataset()
    fam = small_family(epochs=200, lr=1e6)
    cfg = EstimatorConfig(family=fam, folds=2, repeats=4, master_seed=0)
    with np.errstate(invalid="ignore"):  # kept repeats overflow on purpose
        prof = estimate_error_profile(ds, cfg)
    assert prof.discarded == 2
    assert prof.repeats_kept == 2


def test_perturb_mode_uncertainty_equals_variance_for_squared_loss():
    ds = gen_gaussian_mixture(profile_benchmark(seed=57))
    fam = small_family(loss="squared", epochs=40, lr=0.1)
    cfg = EstimatorConfig(family=fam, mode="perturb", delta=0.05, repeats=8,
                          master_seed=23)
    prof = estimate_error_profile(ds, cfg)
    np.testing.assert_allclose(prof.uncertainty, prof.variance, atol=1e-9)


def test_input_gradients_have_feature_shape():
    ds = symmetric_dataset()
    cfg = EstimatorConfig(family=small_family(epochs=10), folds=2, repeats=2,
                          master_seed=2)
    prof = estimate_error_profile(ds, cfg, with_input_gradients=True)
    assert prof.mean_input_gradient.shape == (ds.n, ds.dim)
    assert np.all(np.isfinite(prof.mean_input_gradient))


# ---------------------------------------------------------------------------
# closed-form law verification
# ---------------------------------------------------------------------------


def _profile_with_margins(margins, loss_kind="exponential"):
    r, n = margins.shape
    z = np.zeros(n)
    return DifficultyProfile(
        err=np.exp(-margins).mean(axis=0), bias=z, variance=z,
        mu_hat=margins.mean(axis=0), sigma2_hat=margins.var(axis=0, ddof=1),
        uncertainty=z, z_skew=z, z_kurt=z,
        noise_flag=np.zeros(n, dtype=bool), class_of=np.zeros(n, dtype=np.int64),
        margin_samples=margins, predictions=margins.copy(),
        loss_kind=loss_kind, mode="kfold", discarded=0,
    )


def test_constant_margins_have_zero_gap():
    margins = np.full((6, 3), 0.7)
    gaps = verify_lognormal_law(_profile_with_margins(margins))
    np.testing.assert_allclose(gaps, 0.0, atol=1e-12)


def test_lognormal_law_needs_exponential_loss():
    margins = np.full((6, 3), 0.7)
    with pytest.raises(SpecificationError):
        verify_lognormal_law(_profile_with_margins(margins, loss_kind="squared"))


def test_gaussian_margins_match_the_law_closely():
    # with truly Gaussian margins the fitted closed form tracks the empirical
    # mean of exp(-margin); R=500 keeps the median gap small
    rng = np.random.default_rng(71)
    mu = rng.uniform(0.5, 2.0, size=30)
    sd = rng.uniform(0.1, 0.6, size=30)
    margins = mu + sd * rng.standard_normal((500, 30))
    gaps = verify_lognormal_law(_profile_with_margins(margins))
    assert np.median(gaps) <= 0.05


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def test_profile_csv_round_trip(tmp_path):
    ds = symmetric_dataset()
    cfg = EstimatorConfig(family=small_family(epochs=10), folds=2, repeats=2,
                          master_seed=0)
    prof = estimate_error_profile(ds, cfg)
    path = tmp_path / "profile.csv"
    save_profile_csv(prof, path)
    cols, version = load_profile_csv(path)
    assert list(cols) == PROFILE_HEADER
    np.testing.assert_array_equal(cols["idx"], np.arange(ds.n))
    np.testing.assert_array_equal(cols["err"], prof.err)  # %.17g round trip
    np.testing.assert_array_equal(cols["class"], prof.class_of)
    assert version == 1


def test_foreign_csv_rejected(tmp_path):
    from weightlab.serialization import write_csv

    path = tmp_path / "other.csv"
    write_csv(path, ["a", "b"], [["1", "2"]])
    with pytest.raises(SpecificationError):
        load_profile_csv(path)

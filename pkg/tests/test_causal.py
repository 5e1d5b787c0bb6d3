import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causeg import rng
from causeg.causal import (
    ate_from_cate,
    compute_ate,
    design_matrix,
    effect_coefficients,
    fit_assignment_propensity,
    fit_propensity_outcome,
    fit_s_learner,
    fit_t_learner,
    predict_cate,
    segment_indicators,
)
from causeg.errors import ValidationError
from causeg.learners import fit_ridge, predict
from causeg.synth import SynthConfig, generate

from .conftest import make_dataset


def constant_effect_world(n=500, seed=0):
    gen = np.random.default_rng(seed)
    X = gen.random((n, 3))
    t = np.arange(n) % 2
    y = 1.0 + X @ [0.3, -0.2, 0.1] + 0.5 * t
    return make_dataset(X, t, y)


def test_t_learner_constant_effect():
    ds = constant_effect_world()
    cate = predict_cate(fit_t_learner(ds), ds.covariates)
    np.testing.assert_allclose(cate, 0.5, atol=1e-6)


def test_t_learner_equals_separate_subset_fits():
    gen = np.random.default_rng(1)
    X = gen.normal(size=(300, 2))
    t = (gen.random(300) < 0.5).astype(int)
    y = gen.normal(size=300) + X[:, 0] * t
    ds = make_dataset(X, t, y)
    model = fit_t_learner(ds, lam=0.2)
    m1 = fit_ridge(X[t == 1], y[t == 1], 0.2)
    m0 = fit_ridge(X[t == 0], y[t == 0], 0.2)
    Xq = gen.normal(size=(10, 2))
    np.testing.assert_allclose(predict_cate(model, Xq), predict(m1, Xq) - predict(m0, Xq), atol=1e-12)


def test_s_learner_without_interactions_gives_constant_cate():
    ds, _ = generate(SynthConfig(n_units=1_000), seed=2)
    model = fit_s_learner(ds, interactions=False)
    cate = predict_cate(model, ds.covariates)
    assert np.ptp(cate) < 1e-9


def test_s_learner_recovers_slope():
    gen = np.random.default_rng(3)
    n = 10_000
    X = gen.random((n, 2))
    t = (gen.random(n) < 0.5).astype(int)
    y = 0.4 * X[:, 1] + t * (0.2 + 1.5 * X[:, 0]) + gen.normal(size=n) * 0.1
    model = fit_s_learner(make_dataset(X, t, y))
    w, b = effect_coefficients(model)
    assert w[0] == pytest.approx(1.5, rel=0.05)
    assert b == pytest.approx(0.2, abs=0.05)


def test_s_learner_hand_case():
    # two units, one per arm, no covariate information: the CATE is y1 - y0
    ds = make_dataset(np.zeros((2, 1)), [0, 1], [2.0, 5.0])
    cate = predict_cate(fit_s_learner(ds, interactions=False, lam=1e-12), np.zeros((2, 1)))
    np.testing.assert_allclose(cate, 3.0, atol=1e-9)


@pytest.mark.parametrize("kind", ["s", "t"])
def test_effect_coefficients_reproduce_predictions(kind, small_world):
    ds, _ = small_world
    seg = segment_indicators(np.arange(ds.n) % 3, 3)
    if kind == "s":
        model = fit_s_learner(ds, degree=2, segments=seg, segment_interactions=True)
    else:
        model = fit_t_learner(ds, degree=2, segments=seg)
    w, b = effect_coefficients(model)
    D = design_matrix(ds.covariates, 2, seg)
    np.testing.assert_allclose(D @ w + b, predict_cate(model, ds.covariates, seg), atol=1e-9)


def test_segment_indicators_drop_reference():
    np.testing.assert_array_equal(segment_indicators([0, 1, 2, 1], 3), [[0, 0], [1, 0], [0, 1], [1, 0]])


def test_segment_column_mismatch_is_rejected(small_world):
    ds, _ = small_world
    model = fit_t_learner(ds, segments=segment_indicators(np.arange(ds.n) % 3, 3))
    with pytest.raises(ValidationError):
        predict_cate(model, ds.covariates)


def test_empty_arm_is_rejected():
    with pytest.raises(ValidationError, match="control arm is empty"):
        fit_t_learner(make_dataset(np.zeros((3, 1)), [1, 1, 1], [1.0, 2.0, 3.0]))


def test_compute_ate_trivial():
    ds = make_dataset(np.zeros((4, 1)), [1, 1, 0, 0], [3.0, 5.0, 1.0, 1.0])
    est = compute_ate(ds)
    assert est.ate == 3.0
    # var([3, 5]) = 2 over 2 units, var([1, 1]) = 0
    assert est.se == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(shift=st.floats(-100, 100), seed=st.integers(0, 10_000))
def test_compute_ate_invariances(shift, seed):
    gen = np.random.default_rng(seed)
    n = 40
    t = np.r_[np.ones(20, int), np.zeros(20, int)]
    y = gen.normal(size=n)
    base = compute_ate(make_dataset(np.zeros((n, 1)), t, y))
    shifted = compute_ate(make_dataset(np.zeros((n, 1)), t, y + shift))
    perm = gen.permutation(n)
    permuted = compute_ate(make_dataset(np.zeros((n, 1)), t[perm], y[perm]))
    assert shifted.ate == pytest.approx(base.ate, abs=1e-9)
    assert shifted.se == pytest.approx(base.se, rel=1e-6)
    assert permuted.ate == pytest.approx(base.ate, abs=1e-12)
    assert permuted.se == pytest.approx(base.se, rel=1e-12)


def test_compute_ate_se_matches_unit_bootstrap():
    ds, _ = generate(SynthConfig(n_units=5_000), seed=4)
    est = compute_ate(ds)
    gen = np.random.default_rng(0)
    reps = np.empty(2_000)
    for b in range(reps.size):
        idx = gen.integers(0, ds.n, ds.n)
        t, y = ds.treatment[idx], ds.outcome[idx]
        reps[b] = y[t == 1].mean() - y[t == 0].mean()
    assert est.se == pytest.approx(reps.std(ddof=1), rel=0.15)


def test_ate_from_cate_se_tracks_sd_over_root_n():
    cate = rng.stream(5, "test").normal(size=4_000) * 2.0
    est = ate_from_cate(cate, n_boot=1_000, seed=1)
    assert est.ate == pytest.approx(cate.mean())
    assert est.se == pytest.approx(cate.std(ddof=1) / np.sqrt(cate.size), rel=0.10)


def test_ate_from_cate_constant_and_deterministic():
    assert ate_from_cate(np.full(10, 0.5)).se == 0.0
    cate = np.linspace(0, 1, 50)
    assert ate_from_cate(cate, seed=3) == ate_from_cate(cate, seed=3)
    with pytest.raises(ValidationError):
        ate_from_cate(cate, n_boot=99)


def test_propensity_outcome_uses_control_rows_only():
    gen = np.random.default_rng(6)
    X = gen.normal(size=(200, 2))
    t = np.arange(200) % 2
    y = X[:, 0] + gen.normal(size=200) + 100.0 * t
    m = fit_propensity_outcome(make_dataset(X, t, y), lam=0.1)
    ref = fit_ridge(X[t == 0], y[t == 0], 0.1)
    np.testing.assert_allclose(m.weights, ref.weights, atol=1e-12)
    assert m.intercept == pytest.approx(ref.intercept, abs=1e-12)


def test_propensity_outcome_picks_logit_for_binary_outcomes():
    gen = np.random.default_rng(7)
    X = gen.normal(size=(300, 1))
    y = (X[:, 0] + gen.normal(size=300) > 0).astype(float)
    m = fit_propensity_outcome(make_dataset(X, np.arange(300) % 2, y))
    assert m.link == "logit"


def test_purchase_propensity_anticorrelates_with_effect(default_world):
    ds, truth = default_world
    p = predict(fit_propensity_outcome(ds, degree=2), design_matrix(ds.covariates, 2))
    assert np.corrcoef(p, truth.true_cate)[0, 1] < 0


def test_assignment_propensity_recovers_confounded_law():
    ds, truth = generate(SynthConfig(assignment="confounded"), seed=8)
    p = predict(fit_assignment_propensity(ds), ds.covariates)
    close = np.abs(p - truth.true_assignment_propensity) <= 0.1
    assert close.mean() >= 0.9


@pytest.mark.slow
def test_diff_in_means_interval_coverage():
    hits = 0
    for seed in range(100):
        ds, _ = generate(SynthConfig(n_units=2_000), seed=seed)
        est = compute_ate(ds)
        hits += abs(est.ate - 0.5) <= 3 * est.se
    assert hits >= 95

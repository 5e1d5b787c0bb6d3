import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causeg import rng
from causeg.errors import ValidationError
from causeg.evaluation import (
    STRATEGIES,
    StrategyRanking,
    UpliftCurve,
    bootstrap_band,
    bootstrap_curves,
    correlation,
    grid,
    oracle_gain_curve,
    qini_coefficient,
    qini_curve,
    random_baseline,
    rank_by_strategy,
    simulate_strategies,
    strategy_summary,
)
from causeg.segmentation import kmeans
from causeg.synth import SynthConfig, generate

from .conftest import make_dataset

Y6 = np.array([1.0, 0.0, 1.0, 1.0, 0.0, 1.0])
T6 = np.array([1, 1, 0, 1, 0, 0])


def brute_force_qini(y, t, order):
    """Direct per-prefix evaluation, no cumulative sums."""
    out = []
    for m in range(len(y) + 1):
        top = list(order[:m])
        n_t = sum(1 for i in top if t[i] == 1)
        n_c = m - n_t
        s_t = sum(y[i] for i in top if t[i] == 1)
        s_c = sum(y[i] for i in top if t[i] == 0)
        out.append(s_t - (s_c * n_t / n_c if n_c else 0.0))
    return np.array(out)


def test_rank_by_cate_is_descending():
    ds = make_dataset(np.zeros((3, 1)), [0, 1, 0], [0.0, 1.0, 0.0])
    r = rank_by_strategy(ds, None, [0.3, 0.1, 0.9], np.zeros(3), "causal_effect")
    assert r.order.tolist() == [2, 0, 1]
    r = rank_by_strategy(ds, None, np.zeros(3), [0.3, 0.1, 0.9], "propensity")
    assert r.order.tolist() == [2, 0, 1]


def test_ties_keep_index_order():
    ds = make_dataset(np.zeros((4, 1)), [0, 1, 0, 1], np.zeros(4))
    assert rank_by_strategy(ds, None, [1.0, 2.0, 1.0, 2.0], np.zeros(4), "causal_effect").order.tolist() == [1, 3, 0, 2]


def test_unknown_strategy():
    ds = make_dataset(np.zeros((2, 1)), [0, 1], [0.0, 1.0])
    with pytest.raises(ValidationError):
        rank_by_strategy(ds, None, np.zeros(2), np.zeros(2), "oracle")


def test_random_ranking_is_seeded_permutation():
    ds = make_dataset(np.zeros((50, 1)), np.arange(50) % 2, np.zeros(50))
    a = rank_by_strategy(ds, None, np.zeros(50), np.zeros(50), "random", seed=3)
    b = rank_by_strategy(ds, None, np.zeros(50), np.zeros(50), "random", seed=3)
    assert sorted(a.order.tolist()) == list(range(50))
    np.testing.assert_array_equal(a.order, b.order)


def test_kmeans_ranking_visits_clusters_by_propensity(small_world):
    ds, _ = small_world
    prop = ds.covariates[:, 0]
    r = rank_by_strategy(ds, ds.covariates, np.zeros(ds.n), prop, "kmeans", k=3, seed=5)
    assert sorted(r.order.tolist()) == list(range(ds.n))
    labels = kmeans(ds.covariates, 3, seed=rng.child_seed(5, rng.KMEANS_INIT)).assignment.labels
    visited = labels[r.order]
    blocks = [visited[0]] + [b for a, b in zip(visited, visited[1:]) if a != b]
    assert len(blocks) == 3  # each cluster is one contiguous block
    means = [prop[labels == c].mean() for c in blocks]
    assert means == sorted(means, reverse=True)


def test_oracle_gain_hand_case():
    tau = np.array([1.0, -1.0, 2.0, 0.0])
    r = StrategyRanking("causal_effect", np.array([2, 0, 3, 1]))
    curve = oracle_gain_curve(r, tau, n_points=5)
    np.testing.assert_array_equal(curve.values, [0.0, 2.0, 3.0, 3.0, 2.0])
    np.testing.assert_array_equal(curve.fractions, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_qini_six_unit_oracle():
    got = qini_curve(Y6, T6, -np.arange(6.0), n_points=7).values
    np.testing.assert_allclose(got, [0.0, 1.0, 1.0, -1.0, -1.0, 0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(got, brute_force_qini(Y6, T6, np.arange(6)), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    data=st.lists(st.tuples(st.floats(-5, 5), st.integers(0, 1), st.floats(0, 1)), min_size=2, max_size=25),
)
def test_qini_matches_brute_force(data):
    y = np.array([d[0] for d in data])
    t = np.array([d[1] for d in data])
    s = np.array([d[2] for d in data])
    if t.all() or not t.any():
        t[0] = 1 - t[0]
    n = len(y)
    got = qini_curve(y, t, s, n_points=n + 1).values
    order = np.argsort(-s, kind="stable")
    np.testing.assert_allclose(got, brute_force_qini(y, t, order), atol=1e-9)


def test_qini_grid_uses_floor_cuts():
    # 6 units on a 4-point grid: prefixes floor(6 * i / 3) = 0, 2, 4, 6
    got = qini_curve(Y6, T6, -np.arange(6.0), n_points=4).values
    np.testing.assert_allclose(got, [0.0, 1.0, -1.0, 0.0], atol=1e-12)


def test_qini_needs_both_arms():
    with pytest.raises(ValidationError):
        qini_curve([1.0, 2.0], [1, 1], [0.0, 1.0])


def test_coefficient_of_triangle():
    # peak h at the midpoint, zero at both ends: area h/2 above the flat random line
    h = 3.0
    curve = UpliftCurve(grid(3), np.array([0.0, h, 0.0]))
    assert qini_coefficient(curve) == pytest.approx(h / 2)


def test_coefficient_refinement_converges_to_integral():
    # values p^2 against the line p: exact area is 1/3 - 1/2 = -1/6
    errors = []
    for n_points in (11, 101, 1001):
        g = grid(n_points)
        errors.append(abs(qini_coefficient(UpliftCurve(g, g**2)) + 1 / 6))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 1e-6


def test_random_baseline_is_line_to_endpoint():
    c = UpliftCurve(grid(5), np.array([0.0, 3.0, 1.0, 5.0, 2.0]))
    np.testing.assert_allclose(random_baseline(c).values, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert qini_coefficient(random_baseline(c)) == 0.0


def test_curve_validation():
    with pytest.raises(ValidationError):
        UpliftCurve(np.array([0.0, 0.5]), np.array([0.0, 1.0]))
    with pytest.raises(ValidationError):
        grid(1)


def test_simulated_curves_share_endpoints(small_world):
    ds, truth = small_world
    curves = simulate_strategies(ds, truth, truth.true_cate, ds.covariates[:, 0], seed=1)
    assert set(curves) == set(STRATEGIES)
    ends = [c.values[-1] for c in curves.values()]
    assert all(c.values[0] == 0.0 for c in curves.values())
    assert max(ends) - min(ends) <= 1e-9
    summary = strategy_summary(curves)
    assert summary["causal_effect"]["area_over_random"] > 0


def test_oracle_curve_of_true_ranking_is_concave():
    ds, truth = generate(SynthConfig(n_units=10_000), seed=3)
    r = rank_by_strategy(ds, None, truth.true_cate, np.zeros(ds.n), "causal_effect")
    v = oracle_gain_curve(r, truth.true_cate).values
    assert np.all(np.diff(v, 2) <= 1e-9)


def test_null_world_curves_are_flat():
    ds, truth = generate(SynthConfig(n_units=2_000, effect_scale=0.0), seed=4)
    curves = simulate_strategies(ds, truth, np.zeros(ds.n), ds.covariates[:, 0], seed=1)
    for c in curves.values():
        np.testing.assert_array_equal(c.values, 0.0)


def test_empirical_curves_without_truth(small_world):
    ds, truth = small_world
    curves = simulate_strategies(ds, None, truth.true_cate, ds.covariates[:, 0], seed=2)
    direct = qini_curve(ds.outcome, ds.treatment, truth.true_cate)
    np.testing.assert_allclose(curves["causal_effect"].values, direct.values, atol=1e-9)


def test_band_contains_estimate_and_is_ordered(small_world):
    ds, truth = small_world
    lower, upper = bootstrap_band(ds, truth.true_cate, level=0.9, n_boot=200, seed=0)
    est = qini_curve(ds.outcome, ds.treatment, truth.true_cate)
    assert np.all(lower.values <= upper.values)
    assert np.all(lower.values <= est.values) and np.all(est.values <= upper.values)


def test_band_is_seeded(small_world):
    ds, truth = small_world
    a = bootstrap_band(ds, truth.true_cate, n_boot=200, n_points=11, seed=5)
    b = bootstrap_band(ds, truth.true_cate, n_boot=200, n_points=11, seed=5)
    np.testing.assert_array_equal(a[0].values, b[0].values)
    np.testing.assert_array_equal(a[1].values, b[1].values)


def test_band_arguments():
    ds = make_dataset(np.zeros((4, 1)), [0, 1, 0, 1], np.zeros(4))
    with pytest.raises(ValidationError):
        bootstrap_band(ds, np.zeros(4), n_boot=199)
    with pytest.raises(ValidationError):
        bootstrap_band(ds, np.zeros(4), level=1.0)


def test_single_arm_resamples_are_redrawn():
    # with 3 units and one control, about 30% of draws miss an arm
    reps = bootstrap_curves(np.array([1.0, 2.0, 3.0]), np.array([1, 1, 0]), np.arange(3.0), 50, 4, seed=0)
    assert reps.shape == (50, 4) and np.all(np.isfinite(reps))


def test_correlation_cases():
    x = np.arange(10.0)
    assert correlation(x, 2 * x + 1) == pytest.approx(1.0)
    assert correlation(x, -x) == pytest.approx(-1.0)
    assert correlation([1.0, 2.0, 3.0, 4.0], [1.0, -1.0, -1.0, 1.0]) == pytest.approx(0.0)
    with pytest.raises(ValidationError):
        correlation(x, np.ones(10))
    with pytest.raises(ValidationError):
        correlation(x, x[:5])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 10), shift=st.floats(-10, 10))
def test_correlation_invariances(seed, scale, shift):
    gen = np.random.default_rng(seed)
    a, b = gen.normal(size=30), gen.normal(size=30)
    r = correlation(a, b)
    assert correlation(b, a) == pytest.approx(r, abs=1e-12)
    assert correlation(a * scale + shift, b) == pytest.approx(r, abs=1e-9)
    assert correlation(-a, b) == pytest.approx(-r, abs=1e-12)
    assert correlation(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)

"""Stochastic sampler: channel draws, strategy execution, estimates, density matrices."""
import numpy as np
import pytest
from scipy import stats

from _generators import build_graph, random_strategy_tree, seeded, two_path_graph
from qnet import (
    CostVector,
    DensityMatrix4,
    GraphFormatError,
    Leaf,
    OperationCosts,
    Purify,
    Swap,
    bell_fidelity,
    dephase_bell,
    estimate,
    evaluate_strategy,
    swap_fidelity,
)
from qnet.montecarlo import execute_strategy, sample_channel


def test_sample_channel_rates():
    rng = np.random.default_rng(0)
    cost = CostVector(0.7, 0.5)
    n = 20000
    draws = [sample_channel(cost, rng) for _ in range(n)]
    delivered = sum(s.delivered for s in draws)
    flipped = sum(s.phase_flipped for s in draws)
    assert abs(delivered / n - 0.5) <= 3 * (0.25 / n) ** 0.5
    # flips are only reported on delivered pairs
    assert abs(flipped / delivered - 0.3) <= 3 * (0.3 * 0.7 / delivered) ** 0.5
    assert all(s.delivered or not s.phase_flipped for s in draws)


def test_sample_channel_ideal_is_certain():
    rng = np.random.default_rng(1)
    for _ in range(100):
        s = sample_channel(CostVector(1.0, 1.0), rng)
        assert s.delivered and not s.phase_flipped


def test_execute_strategy_deterministic_extremes():
    rng = np.random.default_rng(2)
    # two fully flipped channels cancel through a swap
    g = build_graph(
        [("c1", "A", "B", 0.0, 1.0), ("c2", "A", "B", 0.0, 1.0)]
    )
    for _ in range(50):
        s = execute_strategy(Swap(Leaf("c1"), Leaf("c2")), g, rng)
        assert s.delivered and not s.phase_flipped
    # purifying two flipped channels accepts (the flips agree) but stays flipped
    for _ in range(50):
        s = execute_strategy(Purify(Leaf("c1"), Leaf("c2")), g, rng)
        assert s.delivered and s.phase_flipped
    # disagreeing inputs never pass physical acceptance
    g2 = build_graph(
        [("c1", "A", "B", 1.0, 1.0), ("c2", "A", "B", 0.0, 1.0)]
    )
    for _ in range(50):
        assert not execute_strategy(Purify(Leaf("c1"), Leaf("c2")), g2, rng).delivered


def test_execute_strategy_requires_distinct_channels():
    g = build_graph([("c1", "A", "B", 0.9, 0.9)])
    rng = np.random.default_rng(3)
    with pytest.raises(ValueError):
        execute_strategy(Swap(Leaf("c1"), Leaf("c1")), g, rng)
    with pytest.raises(GraphFormatError):
        execute_strategy(Leaf("ghost"), g, rng)


def test_estimate_swap_example():
    g = build_graph(
        [("c1", "A", "B", 0.9, 1.0), ("c2", "A", "B", 0.9, 1.0)]
    )
    est = estimate(Swap(Leaf("c1"), Leaf("c2")), g, 200000, seed=0)
    assert est.success_hat == 1.0
    assert abs(est.fidelity_hat - 0.82) <= 3 * est.std_error_fidelity


def test_estimate_purify_example():
    g = build_graph(
        [("c1", "A", "B", 0.7, 1.0), ("c2", "A", "B", 0.7, 1.0)]
    )
    est = estimate(Purify(Leaf("c1"), Leaf("c2")), g, 200000, seed=1)
    assert abs(est.success_hat - 0.58) <= 3 * est.std_error_success
    assert abs(est.fidelity_hat - 0.8448275862068965) <= 3 * est.std_error_fidelity


def test_estimate_purify_identity_partner():
    g = build_graph(
        [("c1", "A", "B", 0.77, 1.0), ("c2", "A", "B", 0.5, 1.0)]
    )
    est = estimate(Purify(Leaf("c1"), Leaf("c2")), g, 200000, seed=2)
    assert abs(est.fidelity_hat - 0.77) <= 3 * est.std_error_fidelity


def test_estimate_ideal_leaf_is_exact():
    g = build_graph([("c1", "A", "B", 1.0, 1.0)])
    est = estimate(Leaf("c1"), g, 10000, seed=3)
    assert est.fidelity_hat == 1.0
    assert est.success_hat == 1.0
    assert est.std_error_fidelity == 0.0
    assert est.std_error_success == 0.0


def test_estimate_two_path_strategy():
    g = two_path_graph()
    tree = Purify(Swap(Leaf("c1"), Leaf("c2")), Swap(Leaf("c3"), Leaf("c4")))
    analytic = evaluate_strategy(tree, g)
    est = estimate(tree, g, 400000, seed=4)
    assert abs(est.fidelity_hat - analytic.fidelity) <= 4 * est.std_error_fidelity
    assert abs(est.success_hat - analytic.success) <= 4 * est.std_error_success


def test_estimate_zero_delivery_marker():
    g = build_graph([("c1", "A", "B", 0.9, 0.0)])
    est = estimate(Leaf("c1"), g, 5000, seed=5)
    assert est.fidelity_hat is None
    assert est.std_error_fidelity is None
    assert est.success_hat == 0.0
    assert est.samples == 5000


def test_estimate_validation():
    g = build_graph([("c1", "A", "B", 0.9, 0.9)])
    with pytest.raises(ValueError):
        estimate(Leaf("c1"), g, 0, seed=0)
    with pytest.raises(ValueError):
        estimate(Leaf("c1"), g, 100, seed=0, threads=0)
    with pytest.raises(GraphFormatError):
        estimate(Leaf("missing"), g, 100, seed=0)


def test_estimate_thread_count_never_changes_numbers():
    g = two_path_graph()
    tree = Purify(Swap(Leaf("c1"), Leaf("c2")), Swap(Leaf("c3"), Leaf("c4")))
    # deliberately not a multiple of the chunk size
    single = estimate(tree, g, 200001, seed=9, threads=1)
    multi = estimate(tree, g, 200001, seed=9, threads=4)
    assert single == multi
    assert estimate(tree, g, 200001, seed=9, threads=2) == single


def test_estimate_is_reproducible_per_seed():
    g = build_graph(
        [("c1", "A", "B", 0.8, 0.7), ("c2", "A", "B", 0.75, 0.9)]
    )
    tree = Purify(Leaf("c1"), Leaf("c2"))
    assert estimate(tree, g, 50000, seed=11) == estimate(tree, g, 50000, seed=11)


def test_acceptance_off_purify_keeps_left_marginal():
    # without post-selection the delivered state is the unconditioned mixture,
    # so the flip rate follows the left input alone
    ops = OperationCosts(physical_acceptance=False)
    g = build_graph(
        [("c1", "A", "B", 0.9, 1.0), ("c2", "A", "B", 0.6, 1.0)], ops=ops
    )
    est = estimate(Purify(Leaf("c1"), Leaf("c2")), g, 200000, seed=6)
    assert est.success_hat == 1.0
    assert abs(est.fidelity_hat - 0.9) <= 4 * est.std_error_fidelity


def test_swap_xor_law_chi_square():
    g = build_graph(
        [("c1", "A", "B", 0.8, 1.0), ("c2", "A", "B", 0.7, 1.0)]
    )
    tree = Swap(Leaf("c1"), Leaf("c2"))
    expected = swap_fidelity(0.8, 0.7)
    n = 100000
    for seed in (0, 1, 2):
        est = estimate(tree, g, n, seed=seed)
        unflipped = round(est.fidelity_hat * n)
        result = stats.chisquare(
            [unflipped, n - unflipped], [expected * n, (1 - expected) * n]
        )
        assert result.pvalue > 0.001


def test_purify_acceptance_rate_equals_swap_fidelity():
    g = build_graph(
        [("c1", "A", "B", 0.85, 1.0), ("c2", "A", "B", 0.65, 1.0)]
    )
    est = estimate(Purify(Leaf("c1"), Leaf("c2")), g, 200000, seed=7)
    assert abs(est.success_hat - swap_fidelity(0.85, 0.65)) <= 4 * est.std_error_success


def test_random_trees_match_analytic_costs():
    # a smaller sweep of the full oracle-agreement check
    for seed in range(8):
        tree, g = random_strategy_tree(seeded(seed))
        analytic = evaluate_strategy(tree, g)
        est = estimate(tree, g, 120000, seed=seed)
        se_s = max(est.std_error_success, 1e-6)
        assert abs(est.success_hat - analytic.success) <= 4 * se_s
        if est.fidelity_hat is not None:
            se_f = max(est.std_error_fidelity, 1e-6)
            assert abs(est.fidelity_hat - analytic.fidelity) <= 4 * se_f


def test_density_matrix_validation():
    good = np.diag([0.5, 0.0, 0.0, 0.5]).astype(complex)
    DensityMatrix4(good)
    with pytest.raises(ValueError):
        DensityMatrix4(np.eye(3))
    bad = good.copy()
    bad[0, 1] = 0.3  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix4(bad)
    with pytest.raises(ValueError):
        DensityMatrix4(np.diag([0.9, 0.0, 0.0, 0.5]).astype(complex))
    with pytest.raises(ValueError):
        DensityMatrix4(np.diag([1.5, -0.5, 0.0, 0.0]).astype(complex))


def test_dephase_bell_fixed_points():
    assert abs(bell_fidelity(dephase_bell(1.0)) - 1.0) <= 1e-12
    assert abs(bell_fidelity(dephase_bell(0.0)) - 0.5) <= 1e-12
    assert abs(bell_fidelity(dephase_bell(0.8)) - 0.9) <= 1e-12


def test_dephase_bell_grid_invariants():
    for p in np.linspace(0.0, 1.0, 101):
        state = dephase_bell(float(p))
        m = state.matrix
        assert np.max(np.abs(m - m.conj().T)) <= 1e-12
        assert abs(np.trace(m).real - 1.0) <= 1e-12
        assert np.linalg.eigvalsh(m).min() >= -1e-10
        assert abs(bell_fidelity(state) - (1.0 + p) / 2.0) <= 1e-12

import math

import numpy as np
import pytest

from owsglab import (
    DensityState,
    RegisterLayout,
    basis_state,
    classical_state,
    conditional_renyi,
    conditional_renyi_classical,
    make_cq_state,
    maximally_mixed,
    partial_trace,
    pure_state,
    renyi,
    sandwiched_divergence,
    single,
    smooth_s0,
    smooth_sinf,
    tensor,
    von_neumann,
)
from owsglab.entropy import (
    renyi_from_spectrum,
    tensor_power_spectrum,
    waterfill_cap,
)
from owsglab.oracles import brute_grid_conditional, smooth_s0_oracle, smooth_sinf_oracle
from owsglab.sampling import random_cq, random_density, spawn_rngs


def diag_state(probs, name="A"):
    return classical_state(probs, single(name, len(probs), True))


# -- von Neumann -------------------------------------------------------


def test_von_neumann_pure_is_zero():
    assert von_neumann(basis_state(0, single("A", 4))) < 1e-12


def test_von_neumann_maximally_mixed():
    assert abs(von_neumann(maximally_mixed(single("A", 8))) - 3.0) < 1e-12


def test_von_neumann_three_quarters():
    # -0.75 log 0.75 - 0.25 log 0.25
    assert abs(von_neumann(diag_state([0.75, 0.25])) - 0.8112781244591328) < 1e-12


# -- Renyi -------------------------------------------------------------


def test_renyi_flat_state_independent_of_alpha():
    rho = maximally_mixed(single("A", 2))
    for alpha in [0.0, 0.5, 1.0, 2.0, 7.0, math.inf]:
        assert abs(renyi(rho, alpha) - 1.0) < 1e-12


def test_renyi_collision_example():
    # (1/(1-2)) log(9/16 + 1/16) = -log(10/16)
    assert abs(renyi(diag_state([0.75, 0.25]), 2) - 0.6780719051126378) < 1e-12


def test_renyi_min_entropy_example():
    # -log(3/4)
    assert abs(renyi(diag_state([0.75, 0.25]), math.inf) - 0.4150374992788438) < 1e-12


def test_renyi_limits_match_neighbors():
    rng = np.random.default_rng(0)
    rho = random_density(rng, single("A", 4))
    assert abs(renyi(rho, 1) - von_neumann(rho)) < 1e-12
    assert abs(renyi(rho, 1.0001) - von_neumann(rho)) < 1e-3
    assert abs(renyi(rho, 0) - 2.0) < 1e-12  # full-rank sample


# -- sandwiched divergence --------------------------------------------


def test_divergence_of_state_with_itself():
    rng = np.random.default_rng(1)
    rho = random_density(rng, single("A", 3))
    for alpha in [0.5, 1.0, 1.5, 2.0, math.inf]:
        assert abs(sandwiched_divergence(rho, rho, alpha)) < 1e-9


def test_divergence_max_order_operator_bound():
    # min{lambda : rho <= 2^lambda sigma} for diag(1,0) vs I/2 is 1 bit
    rho = diag_state([1.0, 0.0])
    sigma = DensityState(np.eye(2) / 2, rho.layout, validate=False)
    assert abs(sandwiched_divergence(rho, sigma, math.inf) - 1.0) < 1e-12


def test_divergence_collision_commuting_example():
    rho = diag_state([0.75, 0.25])
    sigma = DensityState(np.eye(2) / 2, rho.layout, validate=False)
    # log(sum p^2/q) = log(5/4)
    assert abs(sandwiched_divergence(rho, sigma, 2) - 0.32192809488736235) < 1e-12


def test_divergence_support_violation_is_infinite():
    rho = diag_state([0.5, 0.5])
    sigma = DensityState(np.diag([1.0, 0.0]), rho.layout, validate=False)
    assert sandwiched_divergence(rho, sigma, 2) == math.inf
    assert sandwiched_divergence(rho, sigma, math.inf) == math.inf


def test_divergence_monotone_in_alpha():
    rng = np.random.default_rng(2)
    rho = random_density(rng, single("A", 3))
    sigma = random_density(rng, single("A", 3))
    alphas = [0.5, 0.8, 1.0, 1.3, 2.0, 4.0, math.inf]
    vals = [sandwiched_divergence(rho, sigma, a) for a in alphas]
    for lo, hi in zip(vals, vals[1:]):
        assert hi >= lo - 1e-9


# -- conditional Renyi -------------------------------------------------


def two_qubit_layout():
    return RegisterLayout([("A", 2, False), ("B", 2, False)])


def test_conditional_product_reduces_to_marginal_entropy():
    rng = np.random.default_rng(3)
    a = random_density(rng, single("A", 2))
    b = random_density(rng, single("B", 2))
    rho = tensor(a, b)
    for alpha in [0.5, 1.0, 4 / 3, 2.0, math.inf]:
        got = conditional_renyi(rho, "A", "B", alpha).value
        want = renyi(a, alpha)
        assert abs(got - want) < 2e-6, (alpha, got, want)


def test_conditional_perfectly_correlated_classical_is_zero():
    s0 = basis_state(0, single("B", 2, True))
    s1 = basis_state(1, single("B", 2, True))
    rho = make_cq_state([0.5, 0.5], [s0, s1])
    for alpha in [0.5, 1.0, 2.0, math.inf]:
        assert abs(conditional_renyi(rho, "X", "B", alpha).value) < 1e-6


def test_conditional_maximally_entangled_is_minus_one():
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = pure_state(v, two_qubit_layout())
    for alpha in [1.0, 2.0, math.inf]:
        assert abs(conditional_renyi(rho, "A", "B", alpha).value + 1.0) < 1e-6


def test_conditional_alpha_below_half_rejected():
    rho = maximally_mixed(two_qubit_layout())
    with pytest.raises(ValueError):
        conditional_renyi(rho, "A", "B", 0.3)


def test_conditional_matches_brute_grid():
    rngs = spawn_rngs(4, 6)
    for rng in rngs:
        rho = random_density(rng, two_qubit_layout())
        for alpha in [0.5, 2.0, math.inf]:
            got = conditional_renyi(rho, "A", "B", alpha).value
            oracle = brute_grid_conditional(rho, "A", "B", alpha)
            assert abs(got - oracle) < 1e-4, (alpha, got, oracle)


def test_conditional_classical_decomposition_agrees():
    rng = np.random.default_rng(5)
    lay = RegisterLayout([("A", 2, False), ("B", 2, False)])
    probs = [0.3, 0.7]
    blocks = [random_density(rng, lay) for _ in range(2)]
    rho = make_cq_state(probs, blocks)
    for alpha in [0.5, 1.0, 2.0, math.inf]:
        via_blocks = conditional_renyi_classical(rho, "X", ["A"], ["B"], alpha)
        direct = conditional_renyi(rho, ["A"], ["B", "X"], alpha).value
        assert abs(via_blocks - direct) < 1e-4, alpha


def test_conditional_classical_single_block_reduces():
    rng = np.random.default_rng(6)
    lay = RegisterLayout([("A", 2, False), ("B", 2, False)])
    block = random_density(rng, lay)
    rho = make_cq_state([1.0], [block])
    for alpha in [0.5, 2.0]:
        via = conditional_renyi_classical(rho, "X", ["A"], ["B"], alpha)
        ref = conditional_renyi(block, "A", "B", alpha).value
        assert abs(via - ref) < 1e-6


def test_conditional_trivial_b_pure_blocks():
    # B trivial, per-x pure states on A: S_alpha(A|B)_x = 0 for all alpha
    lay = single("A", 2)
    rho = make_cq_state([0.5, 0.5], [basis_state(0, lay), basis_state(1, lay)])
    for alpha in [0.5, 1.0, 2.0, math.inf]:
        assert abs(conditional_renyi_classical(rho, "X", ["A"], [], alpha)) < 1e-9


def test_conditional_value_bounded_by_register_size():
    rngs = spawn_rngs(7, 5)
    for rng in rngs:
        rho = random_cq(rng, 2, 2)
        for alpha in [0.5, 2.0, math.inf]:
            v = conditional_renyi(rho, "X", "Q", alpha).value
            assert v <= 1.0 + 1e-7
            assert v >= -1e-6  # classical X conditioned on quantum is nonnegative


# -- smoothing ---------------------------------------------------------


def test_smoothing_eps_zero_is_unsmoothed():
    p = np.array([0.5, 0.3, 0.2])
    assert abs(smooth_s0(p, 0.0) - np.log2(3)) < 1e-12
    assert abs(smooth_sinf(p, 0.0) + np.log2(0.5)) < 1e-12


def test_smooth_s0_tail_cut_example():
    delta = 0.004
    eps = 0.01
    p = np.array([0.5 - delta, 0.5 - delta, delta, delta])
    assert 2 * delta <= eps
    assert abs(smooth_s0(p, eps) - 1.0) < 1e-12


def test_smooth_sinf_flat_cap():
    p = np.ones(8) / 8
    eps = 0.05
    got = smooth_sinf(p, eps)
    assert got <= 3.0 + np.log2(1 / (1 - eps)) + 1e-12
    assert abs(got - (3.0 + np.log2(1 / (1 - eps)))) < 1e-12


def test_smoothing_matches_exhaustive_oracle():
    rngs = spawn_rngs(8, 10)
    for rng in rngs:
        p = rng.dirichlet(np.ones(6))
        for eps in [0.0, 0.01, 0.1, 0.3]:
            assert abs(smooth_s0(p, eps) - smooth_s0_oracle(p, eps)) < 1e-12
            assert abs(smooth_sinf(p, eps) - smooth_sinf_oracle(p, eps)) < 2e-3


def test_waterfill_cap_conserves_mass():
    rng = np.random.default_rng(9)
    p = rng.dirichlet(np.ones(5))
    eps = 0.07
    c = waterfill_cap(p, eps)
    assert abs(np.clip(p - c, 0, None).sum() - eps) < 1e-12


def test_tensor_power_spectrum():
    p = np.array([0.75, 0.25])
    got = np.sort(tensor_power_spectrum(p, 2))
    want = np.sort(np.array([0.5625, 0.1875, 0.1875, 0.0625]))
    assert np.allclose(got, want)
    assert abs(renyi_from_spectrum(tensor_power_spectrum(p, 3), 2) - 3 * renyi_from_spectrum(p, 2)) < 1e-9

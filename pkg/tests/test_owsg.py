import numpy as np
import pytest

from owsglab import DimensionCapError, conditional_renyi, partial_trace, renyi
from owsglab.owsg import (
    build_tau,
    classical_owf_instance,
    constant_guess_adversary,
    find_i_star,
    instance_from_descriptor,
    measure_one_wayness,
    orthogonal_pure_instance,
    pgm_adversary,
    random_guess_adversary,
    random_mixed_instance,
    wilson_interval,
)
from owsglab.sampling import spawn_rngs


def test_tau_constant_state_is_product():
    inst = random_mixed_instance(n=2, m=2, seed=0, d_q=2)
    # replace keyed states by one fixed state
    fixed = inst.states[0]
    inst.states = [fixed] * 4
    tau = build_tau(inst, 2)
    x_marg = partial_trace(tau, ["X"]).matrix
    q_marg = partial_trace(tau, ["Q1", "Q2"]).matrix
    assert np.abs(tau.matrix - np.kron(x_marg, q_marg)).max() < 1e-10


def test_tau_orthogonal_pure_maximally_correlated():
    inst = orthogonal_pure_instance(n=1, m=1)
    tau = build_tau(inst, 1)
    assert np.allclose(tau.matrix, np.diag([0.5, 0, 0, 0.5]))


def test_tau_structure_random_instance():
    inst = random_mixed_instance(n=2, m=2, seed=1)
    tau = build_tau(inst, 2)
    assert abs(np.trace(tau.matrix).real - 1) < 1e-9
    assert tau.layout.names == ("X", "Q1", "Q2")
    assert tau.layout.subsystem("X").classical
    # X block structure: no coherences between keys
    d_q = 4
    m = tau.matrix.reshape(4, d_q, 4, d_q)
    for x in range(4):
        for y in range(4):
            if x != y:
                assert np.abs(m[x, :, y, :]).max() < 1e-12


def test_tau_dimension_cap():
    inst = orthogonal_pure_instance(n=4, m=4)
    with pytest.raises(DimensionCapError):
        build_tau(inst, 4)  # 16 * 16^4 far beyond the cap


def test_correctness_of_builtins():
    for inst in (
        orthogonal_pure_instance(2, 2),
        random_mixed_instance(2, 2, seed=2),
        classical_owf_instance(3, 2, 2, seed=3),
    ):
        assert inst.correctness() >= 1 - 1e-6


def test_find_i_star_copies_independent_of_key():
    inst = random_mixed_instance(n=2, m=2, seed=4)
    inst.states = [inst.states[0]] * 4
    res = find_i_star(inst)
    assert res.i_star == 1
    assert abs(res.gap) < 1e-6
    assert all(abs(g) < 1e-6 for i, g in res.gap_profile.items() if i >= 1)


def test_find_i_star_orthogonal_pure():
    inst = orthogonal_pure_instance(n=2, m=2)
    res = find_i_star(inst)
    # one copy already reveals the key: S_2(X|Q^1) = 0, so every gap
    # from i = 1 on vanishes
    assert res.i_star == 1
    assert abs(res.gap) < 1e-6
    assert abs(res.entropies[1]) < 1e-6


def test_find_i_star_telescoping_identity():
    for seed, rng in enumerate(spawn_rngs(5, 5)):
        inst = random_mixed_instance(n=3, m=3, seed=seed + 10)
        res = find_i_star(inst)
        total = sum(res.gap_profile[i] for i in range(inst.m))
        direct = res.entropies[0] - res.entropies[inst.m]
        assert abs(total - direct) < 1e-6
        assert total <= inst.n + 1e-6
        # the window i in [m] always contains a gap below n/m
        assert res.gap <= inst.n / inst.m + 1e-6
        assert res.within_threshold


def test_one_wayness_orthogonal_is_invertible():
    inst = orthogonal_pure_instance(n=2, m=1)
    rep = measure_one_wayness(inst, pgm_adversary(inst), trials=300, seed=0)
    assert rep.acceptance_mean > 0.99  # designed negative control


def test_one_wayness_random_guess_baseline():
    inst = orthogonal_pure_instance(n=2, m=1)
    rep = measure_one_wayness(inst, random_guess_adversary(inst), trials=400, seed=1)
    assert abs(rep.acceptance_mean - 0.25) < 0.1
    assert rep.wilson_low <= rep.acceptance_mean <= rep.wilson_high


def test_one_wayness_constant_guess_on_fixed_state():
    inst = random_mixed_instance(n=2, m=1, seed=6)
    inst.states = [inst.states[0]] * 4
    rep = measure_one_wayness(inst, constant_guess_adversary(inst, 3), trials=200, seed=2)
    # identical states: acceptance equals the fixed guess's verification rate
    assert abs(rep.acceptance_mean - 1.0) < 1e-9


def test_wilson_interval_sane():
    lo, hi = wilson_interval(50, 100)
    assert 0.4 < lo < 0.5 < hi < 0.6
    lo, hi = wilson_interval(0, 0)
    assert (lo, hi) == (0.0, 1.0)


def test_instance_descriptor_roundtrip():
    inst = instance_from_descriptor(
        {"type": "random_mixed", "n": 2, "m": 2, "seed": 9, "params": {"d_q": 2, "d_env": 4}}
    )
    assert inst.n == 2 and inst.m == 2 and inst.label == "random_mixed"
    with pytest.raises(ValueError):
        instance_from_descriptor({"type": "bogus", "n": 1, "m": 1})


def test_classical_owf_collisions_accepted():
    inst = classical_owf_instance(3, 1, 1, seed=11)
    f = inst.f_table
    # any preimage of f(x) verifies
    x = 0
    partner = next(y for y in range(8) if f[y] == f[x])
    assert inst.ver(partner, inst.states[x]) > 0.99

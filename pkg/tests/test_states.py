import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from owsglab import (
    CqMarkovChain,
    DensityState,
    LayoutError,
    RegisterLayout,
    basis_state,
    bures,
    classical_state,
    fidelity,
    make_cq_state,
    markov_recovery,
    maximally_mixed,
    partial_trace,
    permute,
    pure_state,
    purify,
    single,
    spectral_decompose,
    tensor,
    trace_distance,
    uhlmann_extension,
)
from owsglab.sampling import random_cq, random_density, random_pure, spawn_rngs


def bell_state():
    lay = RegisterLayout([("A", 2, False), ("B", 2, False)])
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    return pure_state(v, lay)


def test_make_cq_point_mass_product():
    q = basis_state(0, single("Q", 2))
    out = make_cq_state([0.5, 0.5], [q, q])
    assert np.allclose(out.matrix, np.diag([0.5, 0, 0.5, 0]))


def test_make_cq_degenerate_distribution():
    rng = np.random.default_rng(0)
    rho0 = random_density(rng, single("Q", 3))
    out = make_cq_state([1.0, 0.0], [rho0, rho0])
    expect = np.zeros((6, 6), dtype=complex)
    expect[:3, :3] = rho0.matrix
    assert np.allclose(out.matrix, expect)


def test_make_cq_maximally_correlated():
    s0 = basis_state(0, single("Q", 2))
    s1 = basis_state(1, single("Q", 2))
    out = make_cq_state([0.5, 0.5], [s0, s1])
    assert np.allclose(out.matrix, np.diag([0.5, 0, 0, 0.5]))


def test_make_cq_rejects_negative_probability():
    q = basis_state(0, single("Q", 2))
    with pytest.raises(ValueError):
        make_cq_state([1.5, -0.5], [q, q])


def test_make_cq_rejects_mismatched_layouts():
    with pytest.raises(LayoutError):
        make_cq_state(
            [0.5, 0.5], [basis_state(0, single("Q", 2)), basis_state(0, single("Q", 3))]
        )


def test_tensor_of_mixed_is_mixed():
    a = maximally_mixed(single("A", 2))
    b = maximally_mixed(single("B", 2))
    assert np.allclose(tensor(a, b).matrix, np.eye(4) / 4)


def test_tensor_unit():
    rng = np.random.default_rng(1)
    rho = random_density(rng, single("A", 3))
    unit = maximally_mixed(single("U", 1))
    assert np.allclose(tensor(rho, unit).matrix, rho.matrix)


def test_tensor_rank_one_projector():
    zero = basis_state(0, single("A", 2))
    plus = pure_state(np.array([1, 1]) / np.sqrt(2), single("B", 2))
    out = tensor(zero, plus)
    v = np.array([1, 1, 0, 0]) / np.sqrt(2)
    assert np.allclose(out.matrix, np.outer(v, v))


def test_partial_trace_of_product():
    rng = np.random.default_rng(2)
    a = random_density(rng, single("A", 2))
    b = random_density(rng, single("B", 3))
    joint = tensor(a, b)
    assert np.allclose(partial_trace(joint, ["A"]).matrix, a.matrix, atol=1e-12)
    assert np.allclose(partial_trace(joint, ["B"]).matrix, b.matrix, atol=1e-12)


def test_partial_trace_bell_is_mixed():
    rho = bell_state()
    for keep in (["A"], ["B"]):
        assert np.allclose(partial_trace(rho, keep).matrix, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_of_cq_gives_average():
    rng = np.random.default_rng(3)
    states = [random_density(rng, single("Q", 2)) for _ in range(4)]
    probs = np.array([0.4, 0.3, 0.2, 0.1])
    cq = make_cq_state(probs, states)
    avg = sum(p * s.matrix for p, s in zip(probs, states))
    assert np.allclose(partial_trace(cq, ["Q"]).matrix, avg, atol=1e-12)


def test_partial_trace_unknown_name():
    with pytest.raises(KeyError):
        partial_trace(bell_state(), ["C"])


def test_spectral_decompose_diagonal():
    rho = classical_state([0.75, 0.25], single("A", 2, True))
    dec = spectral_decompose(rho)
    assert np.allclose(dec.eigenvalues, [0.75, 0.25])


def test_spectral_decompose_plus_state():
    plus = pure_state(np.array([1, 1]) / np.sqrt(2), single("A", 2))
    dec = spectral_decompose(plus)
    assert np.allclose(dec.eigenvalues, [1.0, 0.0], atol=1e-12)
    v = dec.eigenvectors[:, 0]
    assert abs(abs(v @ np.array([1, 1]) / np.sqrt(2)) - 1) < 1e-12


def test_spectral_roundtrip_random():
    rng = np.random.default_rng(4)
    rho = random_density(rng, single("A", 4))
    dec = spectral_decompose(rho)
    assert np.abs(dec.reconstruct() - rho.matrix).max() < 1e-10


def test_distances_on_equal_states():
    rng = np.random.default_rng(5)
    rho = random_density(rng, single("A", 3))
    assert trace_distance(rho, rho) < 1e-12
    assert abs(fidelity(rho, rho) - 1) < 1e-10
    assert bures(rho, rho) < 1e-5


def test_distances_on_orthogonal_pure():
    a = basis_state(0, single("A", 2))
    b = basis_state(1, single("A", 2))
    assert abs(trace_distance(a, b) - 2.0) < 1e-12
    assert fidelity(a, b) < 1e-10
    assert abs(bures(a, b) - 1.0) < 1e-10


def test_trace_distance_commuting_example():
    rho = classical_state([0.75, 0.25], single("A", 2, True))
    sig = maximally_mixed(single("A", 2)).rename(A="A")
    sig = DensityState(sig.matrix, rho.layout, validate=False)
    assert abs(trace_distance(rho, sig) - 0.5) < 1e-12


def test_trace_distance_triangle_random():
    rngs = spawn_rngs(6, 30)
    for rng in rngs:
        a = random_density(rng, single("A", 4))
        b = random_density(rng, single("A", 4))
        c = random_density(rng, single("A", 4))
        assert trace_distance(a, b) <= trace_distance(a, c) + trace_distance(c, b) + 1e-10


def test_layout_mismatch_raises():
    a = maximally_mixed(single("A", 2))
    b = maximally_mixed(single("B", 2))
    with pytest.raises(LayoutError):
        trace_distance(a, b)


def test_purify_reduces_to_state():
    rng = np.random.default_rng(7)
    rho = random_density(rng, single("A", 3))
    vec, layout = purify(rho)
    full = np.outer(vec, vec.conj())
    joint = DensityState(full, layout, validate=False)
    assert np.allclose(partial_trace(joint, ["A"]).matrix, rho.matrix, atol=1e-10)


def test_uhlmann_extension_same_marginal_gives_zero_distance():
    rng = np.random.default_rng(8)
    rho_ab = random_density(
        rng, RegisterLayout([("A", 2, False), ("B", 2, False)])
    )
    sigma_a = partial_trace(rho_ab, ["A"])
    theta = uhlmann_extension(rho_ab, sigma_a)
    assert bures(theta, rho_ab) < 1e-5
    assert np.allclose(partial_trace(theta, ["A"]).matrix, sigma_a.matrix, atol=1e-9)


def test_uhlmann_extension_product_case():
    rng = np.random.default_rng(9)
    a = random_density(rng, single("A", 2))
    b = random_density(rng, single("B", 2))
    rho_ab = tensor(a, b)
    sigma_a = random_density(rng, single("A", 2))
    theta = uhlmann_extension(rho_ab, sigma_a)
    assert abs(bures(theta, rho_ab) - bures(sigma_a, a)) < 1e-7


def test_uhlmann_extension_random_marginal_match():
    rngs = spawn_rngs(10, 5)
    lay = RegisterLayout([("A", 2, False), ("B", 2, False)])
    for rng in rngs:
        rho_ab = random_density(rng, lay)
        sigma_a = random_density(rng, single("A", 2))
        theta = uhlmann_extension(rho_ab, sigma_a)
        assert np.abs(partial_trace(theta, ["A"]).matrix - sigma_a.matrix).max() < 1e-9
        # distance preservation
        rho_a = partial_trace(rho_ab, ["A"])
        assert abs(bures(theta, rho_ab) - bures(sigma_a, rho_a)) < 1e-6


def _random_markov_chain(rng, d_a=2, d_x=2, d_b=2):
    probs = rng.dirichlet(np.ones(d_x))
    mats = np.zeros((d_a * d_x * d_b,) * 2, dtype=complex)
    for x in range(d_x):
        ra = random_density(rng, single("A", d_a)).matrix
        rb = random_density(rng, single("B", d_b)).matrix
        blk = probs[x] * np.kron(ra, rb)
        # embed at A x {x} x B
        for i in range(d_a):
            for j in range(d_a):
                rows = slice((i * d_x + x) * d_b, (i * d_x + x + 1) * d_b)
                cols = slice((j * d_x + x) * d_b, (j * d_x + x + 1) * d_b)
                mats[rows, cols] = blk[i * d_b:(i + 1) * d_b, j * d_b:(j + 1) * d_b]
    lay = RegisterLayout([("A", d_a, False), ("X", d_x, True), ("B", d_b, False)])
    return DensityState(mats, lay, validate=False)


def test_markov_recovery_reconstructs():
    rngs = spawn_rngs(11, 5)
    for rng in rngs:
        st = _random_markov_chain(rng)
        chain = CqMarkovChain(st, ("A",), "X", ("B",))
        rec = markov_recovery(chain)
        reduced = partial_trace(st, ["A", "X"])
        rebuilt = rec.apply(reduced)
        reference = permute(st, ["A", "X", "B"])
        assert np.abs(rebuilt.matrix - reference.matrix).max() < 1e-9


def test_markov_recovery_deterministic_function():
    # B = X deterministically
    lay_b = single("B", 2, True)
    s0 = basis_state(0, lay_b)
    s1 = basis_state(1, lay_b)
    inner = make_cq_state([0.5, 0.5], [s0, s1])  # X tensor B
    st = tensor(maximally_mixed(single("A", 2)), inner)
    st = permute(st, ["A", "X", "B"])
    chain = CqMarkovChain(st, ("A",), "X", ("B",))
    rec = markov_recovery(chain)
    rebuilt = rec.apply(partial_trace(st, ["A", "X"]))
    assert np.abs(rebuilt.matrix - st.matrix).max() < 1e-10


def test_markov_validation_rejects_correlated():
    # A Bell pair across the A-B cut inside the X=0 block is not a product
    lay = RegisterLayout([("A", 2, False), ("X", 2, True), ("B", 2, False)])
    phi = np.outer(*(2 * [np.array([1, 0, 0, 1]) / np.sqrt(2)]))
    m = np.zeros((8, 8), dtype=complex)
    for a1 in range(2):
        for b1 in range(2):
            for a2 in range(2):
                for b2 in range(2):
                    m[(a1 * 2 + 0) * 2 + b1, (a2 * 2 + 0) * 2 + b2] = phi[
                        a1 * 2 + b1, a2 * 2 + b2
                    ]
    st = DensityState(m, lay, validate=False)
    with pytest.raises(ValueError):
        CqMarkovChain(st, ("A",), "X", ("B",))


def test_permute_round_trip():
    rng = np.random.default_rng(12)
    lay = RegisterLayout([("A", 2, False), ("B", 3, False), ("C", 2, False)])
    rho = random_density(rng, lay)
    out = permute(permute(rho, ["C", "A", "B"]), ["A", "B", "C"])
    assert np.abs(out.matrix - rho.matrix).max() < 1e-12


def test_serialization_exact_roundtrip():
    rng = np.random.default_rng(13)
    lay = RegisterLayout([("X", 2, True), ("Q", 3, False)])
    rho = random_cq(rng, 2, 3)
    text = rho.to_json()
    back = DensityState.from_json(text)
    assert back.layout == rho.layout
    assert np.array_equal(back.matrix, rho.matrix)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_serialization_roundtrip_property(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, single("A", 3))
    assert np.array_equal(DensityState.from_json(rho.to_json()).matrix, rho.matrix)


def test_classical_validation_rejects_coherence():
    lay = single("X", 2, True)
    m = np.array([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        DensityState(m, lay)


def test_partial_trace_after_tensor_identity():
    rngs = spawn_rngs(14, 8)
    for rng in rngs:
        a = random_density(rng, single("A", 3))
        b = random_density(rng, single("B", 2))
        out = partial_trace(tensor(a, b), ["A"])
        assert np.abs(out.matrix - a.matrix).max() < 1e-12

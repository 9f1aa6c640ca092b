"""Classical two-universal hashing and quantum decoupling extractors.

The classical extractor is the identity-plus-Toeplitz family
M = [I_l | T] over GF(2): two-universal (collisions only through the
Toeplitz block) and surjective for every seed, so hashing a uniform
input gives exactly uniform output. The seed register is padded to the
conventional n + l - 1 bits; only the n - 1 bits parametrizing T are
consumed.

The quantum extractor applies a sampled unitary to
input (x) |0..0><0..0| (x) uniform-seed and traces a fixed register.
Dense simulation samples Haar unitaries (dim <= 2^7 by default); for
stabilizer inputs under uniformly random Cliffords the output distance
and rank are computed exactly through the Pauli image, which is
uniform over signed non-identity Paulis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import check_dim
from .registers import RegisterLayout, Subsystem
from .states import DensityState, partial_trace, permute, trace_norm
from .entropy import conditional_renyi, smooth_s0, smooth_sinf
from .states import clipped_spectrum
from .sampling import haar_unitary, spawn_rngs


# ---------------------------------------------------------------------------
# Toeplitz-based two-universal hashing
# ---------------------------------------------------------------------------


def _bits_from_int(value: int, width: int) -> np.ndarray:
    return np.array([(value >> k) & 1 for k in range(width)], dtype=np.uint8)


def _int_from_bits(bits: np.ndarray) -> int:
    return int(sum(int(b) << k for k, b in enumerate(bits)))


@dataclass(frozen=True)
class ToeplitzHash:
    """One member of the [I | Toeplitz] family.

    seed_bits has the conventional length n_in + l_out - 1; the matrix
    is M = [I_l | T] with T[i, j] = seed[(n_in - l_out - 1) + i - j]
    built from the first n_in - 1 seed bits (the rest is padding and
    never read).
    """

    n_in: int
    l_out: int
    seed_bits: tuple

    def __post_init__(self):
        if self.l_out > self.n_in:
            raise ValueError("output length cannot exceed input length")
        if self.l_out < 0 or self.n_in < 1:
            raise ValueError("bad hash dimensions")
        want = max(self.n_in + self.l_out - 1, 0)
        if len(self.seed_bits) != want:
            raise ValueError(f"seed must have {want} bits")

    @property
    def effective_seed_len(self) -> int:
        return self.n_in - 1

    def matrix(self) -> np.ndarray:
        l, n = self.l_out, self.n_in
        m = np.zeros((l, n), dtype=np.uint8)
        for i in range(l):
            m[i, i] = 1
        k = n - l
        s = np.asarray(self.seed_bits, dtype=np.uint8)
        for i in range(l):
            for j in range(k):
                m[i, l + j] = s[(k - 1) + i - j]
        return m

    def __call__(self, x_bits: np.ndarray) -> np.ndarray:
        return hash_eval(self, x_bits)


def hash_eval(h: ToeplitzHash, x_bits) -> np.ndarray:
    """M x over GF(2); raises on length mismatch."""
    x = np.asarray(x_bits, dtype=np.uint8)
    if x.size != h.n_in:
        raise ValueError(f"input has {x.size} bits, hash expects {h.n_in}")
    if h.l_out == 0:
        return np.zeros(0, dtype=np.uint8)
    return (h.matrix() @ x) % 2


def hash_from_seed_int(n_in: int, l_out: int, seed_value: int) -> ToeplitzHash:
    width = max(n_in + l_out - 1, 0)
    return ToeplitzHash(n_in, l_out, tuple(_bits_from_int(seed_value, width)))


def all_hashes(n_in: int, l_out: int):
    """Every distinct member of the family (effective seed bits only)."""
    eff = n_in - 1
    width = max(n_in + l_out - 1, 0)
    for v in range(2 ** eff):
        bits = _bits_from_int(v, eff)
        padded = np.concatenate([bits, np.zeros(width - eff, dtype=np.uint8)])
        yield ToeplitzHash(n_in, l_out, tuple(padded))


def collision_probability(n_in: int, l_out: int) -> float:
    """Exhaustive worst-case collision probability over the family."""
    if l_out == 0:
        return 1.0
    worst = 0.0
    hashes = list(all_hashes(n_in, l_out))
    outs = np.stack(
        [
            np.array([_int_from_bits(hash_eval(h, _bits_from_int(x, n_in)))
                      for h in hashes])
            for x in range(2 ** n_in)
        ]
    )
    for x in range(2 ** n_in):
        for y in range(x + 1, 2 ** n_in):
            worst = max(worst, float(np.mean(outs[x] == outs[y])))
    return worst


# ---------------------------------------------------------------------------
# classical extractor on cq states
# ---------------------------------------------------------------------------


def _cq_blocks(state: DensityState, x_name: str):
    ordered = permute(
        state, [x_name] + [n for n in state.layout.names if n != x_name]
    )
    d_x = ordered.layout.subsystem(x_name).dim
    d_q = ordered.dim // d_x
    blocks = []
    for x in range(d_x):
        blk = ordered.matrix[x * d_q:(x + 1) * d_q, x * d_q:(x + 1) * d_q]
        blocks.append((float(np.trace(blk).real), blk))
    q_layout = ordered.layout.restrict(
        [n for n in state.layout.names if n != x_name]
    )
    return blocks, q_layout


def apply_classical_extractor(
    state: DensityState,
    l_out: int,
    l_prime: int,
    *,
    x_name: str = "X",
) -> DensityState:
    """Dense state X (x) H (x) prefix (x) Q after hashing the classical
    register with a uniform seed.

    Appends a uniform seed register H of n + l_out - 1 bits and the
    l_prime-bit prefix of the hash output as a classical register Y.
    """
    if l_prime > l_out:
        raise ValueError("prefix cannot exceed the hash output length")
    blocks, q_layout = _cq_blocks(state, x_name)
    n = int(round(math.log2(len(blocks))))
    if 2 ** n != len(blocks):
        raise ValueError("classical register must hold n-bit strings")
    seeds = list(all_hashes(n, l_out))
    n_seed_states = 2 ** max(n + l_out - 1, 0)
    d_x = len(blocks)
    d_y = 2 ** l_prime
    d_q = q_layout.total_dim
    d = d_x * n_seed_states * d_y * d_q
    check_dim(d, "extractor output")
    eff = 2 ** (n - 1)
    pad = n_seed_states // eff
    out = np.zeros((d, d), dtype=complex)
    for si, h in enumerate(seeds):
        for x, (p, blk) in enumerate(blocks):
            if p <= 0:
                continue
            y_bits = hash_eval(h, _bits_from_int(x, n))[:l_prime]
            y = _int_from_bits(y_bits)
            for rep in range(pad):
                s_index = rep * eff + si
                base = ((x * n_seed_states + s_index) * d_y + y) * d_q
                out[base:base + d_q, base:base + d_q] += blk / (eff * pad)
    subs = (
        [state.layout.subsystem(x_name)]
        + [Subsystem("H", n_seed_states, True), Subsystem("Y", d_y, True)]
        + list(q_layout.subsystems)
    )
    return DensityState(out, RegisterLayout(subs), validate=False)


def hashed_distance_to_uniform(
    state: DensityState,
    l_out: int,
    l_prime: int,
    *,
    x_name: str = "X",
    seed_values: Sequence[int] | None = None,
) -> float:
    """Exact l1 distance of (Q, H, prefix) from Q (x) uniform (x) uniform.

    Computed blockwise over seeds and prefix values, so no dense
    product state is ever materialized. ``seed_values`` restricts to a
    sampled sub-family (mean over the sample), otherwise the full
    family average is exact.
    """
    blocks, _ = _cq_blocks(state, x_name)
    n = int(round(math.log2(len(blocks))))
    d_y = 2 ** l_prime
    avg_q = sum(blk for _, blk in blocks)
    hashes = (
        list(all_hashes(n, l_out))
        if seed_values is None
        else [hash_from_seed_int(n, l_out, v) for v in seed_values]
    )
    total = 0.0
    for h in hashes:
        buckets = [np.zeros_like(avg_q) for _ in range(d_y)]
        for x, (p, blk) in enumerate(blocks):
            if p <= 0:
                continue
            y = _int_from_bits(hash_eval(h, _bits_from_int(x, n))[:l_prime])
            buckets[y] += blk
        d_h = sum(trace_norm(b - avg_q / d_y) for b in buckets)
        total += d_h
    return total / len(hashes)


def leftover_hash_audit(
    state: DensityState,
    l_prime: int,
    *,
    l_out: int | None = None,
    x_name: str = "X",
    q_names: Sequence[str] | None = None,
    seed_values: Sequence[int] | None = None,
) -> dict:
    """Measure the hashed state's distance to uniform and compare with
    the collision-entropy bound 2^{-(l - l')/2}, l = S_2(X|Q)."""
    if q_names is None:
        q_names = [nm for nm in state.layout.names if nm != x_name]
    l_collision = (
        conditional_renyi(state, [x_name], list(q_names), 2.0).value
        if q_names
        else conditional_renyi(state, [x_name], [], 2.0).value
    )
    use_l_out = l_out if l_out is not None else max(l_prime, 0)
    measured = hashed_distance_to_uniform(
        state, use_l_out, l_prime, x_name=x_name, seed_values=seed_values
    )
    bound = 2.0 ** (-(l_collision - l_prime) / 2.0)
    return {
        "l": l_collision,
        "l_prime": l_prime,
        "measured_distance": measured,
        "bound": bound,
        "pass": bool(measured <= bound + 1e-9),
    }


# ---------------------------------------------------------------------------
# quantum extractor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantumExtractorSpec:
    """Shape of one extractor run: n input qubits, ancilla zeros, seed
    qubits, output qubits kept after the trace; the sampler is 'haar'
    (dense) or 'two_design' (exact Clifford pushforward for stabilizer
    inputs)."""

    n_qubits: int
    seed_len: int
    output_len: int
    ancilla: int = 1
    unitary_sampler: str = "haar"

    def __post_init__(self):
        if self.seed_len < 0 or self.ancilla < 0:
            raise ValueError("register sizes must be nonnegative")
        if self.output_len > self.total_qubits:
            raise ValueError("output cannot exceed the total system")
        if self.unitary_sampler not in ("haar", "two_design"):
            raise ValueError("sampler must be 'haar' or 'two_design'")

    @property
    def total_qubits(self) -> int:
        return self.n_qubits + self.ancilla + self.seed_len

    @property
    def traced_qubits(self) -> int:
        return self.total_qubits - self.output_len


def seed_length_for(n_qubits: int, s_inf_eps: float, kappa: int) -> int:
    """Seed law: ceil(4n - Sinf^eps(input)) + kappa."""
    return max(0, math.ceil(4 * n_qubits - s_inf_eps) + kappa)


def apply_quantum_extractor(
    psi: DensityState, spec: QuantumExtractorSpec, rng: np.random.Generator
) -> DensityState:
    """Dense path: append |0><0| ancillas and a maximally mixed seed,
    conjugate by a sampled unitary, trace the trailing register."""
    n_q = int(round(math.log2(psi.dim)))
    if n_q != spec.n_qubits:
        raise ValueError("input does not match the spec's qubit count")
    if spec.unitary_sampler != "haar":
        raise ValueError("dense path samples Haar unitaries; use the "
                         "stabilizer audit for two-design sampling")
    d_total = 2 ** spec.total_qubits
    check_dim(d_total, "extractor system")
    d_anc = 2 ** spec.ancilla
    d_seed = 2 ** spec.seed_len
    anc = np.zeros((d_anc, d_anc), dtype=complex)
    anc[0, 0] = 1.0
    m = np.kron(np.kron(psi.matrix, anc), np.eye(d_seed) / d_seed)
    g = haar_unitary(rng, d_total)
    m = g @ m @ g.conj().T
    d_out = 2 ** spec.output_len
    d_s = 2 ** spec.traced_qubits
    red = m.reshape(d_out, d_s, d_out, d_s).trace(axis1=1, axis2=3)
    lay = RegisterLayout([Subsystem("OUT", d_out, False)])
    return DensityState(red, lay, validate=False)


def distance_to_uniform(state: DensityState) -> float:
    d = state.dim
    return trace_norm(state.matrix - np.eye(d) / d)


def quantum_extractor_rank_audit(
    psi: DensityState,
    spec: QuantumExtractorSpec,
    delta: float,
    rng: np.random.Generator,
) -> dict:
    """Check S0^delta(output) <= S0^delta(input) + seed_len on a sample.

    The inequality is guaranteed whenever the spec traces nothing (the
    unitary preserves rank) or the seed law couples the output length
    below S0^delta(input) + seed_len; tracing can otherwise grow the
    rank by up to 2^|S|, so out-of-regime specs may legitimately fail.
    """
    out = apply_quantum_extractor(psi, spec, rng)
    lhs = smooth_s0(out, delta)
    rhs = smooth_s0(psi, delta) + spec.seed_len
    return {
        "s0_output": lhs,
        "s0_input_plus_seed": rhs,
        "slack": rhs - lhs,
        "distance_to_uniform": distance_to_uniform(out),
        "pass": bool(rhs - lhs >= -1e-9),
    }


# ---------------------------------------------------------------------------
# exact Clifford pushforward for maximally mixed inputs
# ---------------------------------------------------------------------------
#
# With psi maximally mixed on n qubits, the extractor input is
# 2^-(n+s) P with P the rank-2^{n+s} projector stabilized by Z on each
# ancilla qubit. A uniformly random Clifford maps that stabilizer
# group to uniformly random commuting signed Paulis, so for a single
# ancilla the traced output is exactly
#     uniform + (sign) 2^{|S|-(n+s+1)} P'_out
# when the image Pauli P' acts trivially on the traced register, and
# exactly uniform otherwise. Distances and ranks follow in closed form.


@dataclass
class StabilizerExtractorSample:
    survived: bool
    distance: float
    s0_output: float


def _survival_probability(total_qubits: int, out_qubits: int) -> float:
    return (4.0 ** out_qubits - 1.0) / (4.0 ** total_qubits - 1.0)


def stabilizer_extractor_sample(
    spec: QuantumExtractorSpec,
    rng: np.random.Generator,
    delta: float = 0.0,
    coupling_u: float | None = None,
) -> StabilizerExtractorSample:
    """One exact sample for a maximally mixed input and one ancilla.

    ``coupling_u`` (a uniform variate) enables common-random-number
    coupling across parameter sweeps: the survival event is u < p with
    p the exact survival probability of the Pauli image.
    """
    if spec.ancilla != 1:
        raise ValueError("the stabilizer path models one ancilla qubit")
    p_surv = _survival_probability(spec.total_qubits, spec.output_len)
    u = rng.uniform() if coupling_u is None else coupling_u
    survived = bool(u < p_surv)
    out = spec.output_len
    if survived:
        # output eigenvalues: half at 2^{1-out}, half at 0
        distance = 1.0
        n_pos = 2 ** (out - 1)
        removable = int(math.floor(delta * n_pos))
        s0 = math.log2(max(n_pos - removable, 1))
    else:
        distance = 0.0
        n_pos = 2 ** out
        removable = int(math.floor(delta * n_pos))
        s0 = math.log2(max(n_pos - removable, 1))
    return StabilizerExtractorSample(survived, distance, s0)


def stabilizer_extractor_audit(
    n_qubits: int,
    kappa_values: Sequence[int],
    samples: int,
    seed: int,
    *,
    eps: float = 0.01,
    delta: float = 0.01,
    output_len: int | None = None,
) -> dict:
    """Sweep the seed-law margin kappa for a maximally mixed input.

    Per kappa: mean exact distance to uniform over ``samples`` Clifford
    draws (coupled across the sweep with common random numbers) and the
    rank-law slack of every sample.
    """
    s_inf = smooth_sinf(np.full(2 ** n_qubits, 2.0 ** -n_qubits), eps)
    out_len = output_len if output_len is not None else 4 * n_qubits + 1
    rngs = spawn_rngs(seed, samples)
    base_us = [r.uniform() for r in rngs]
    results = {}
    for kappa in kappa_values:
        s_q = seed_length_for(n_qubits, s_inf, kappa)
        spec = QuantumExtractorSpec(
            n_qubits=n_qubits,
            seed_len=s_q,
            output_len=out_len,
            ancilla=1,
            unitary_sampler="two_design",
        )
        if spec.traced_qubits < 0:
            raise ValueError("output exceeds the system at this kappa")
        dists, slacks = [], []
        rhs = smooth_s0(np.full(2 ** n_qubits, 2.0 ** -n_qubits), delta) + s_q
        for u, rng in zip(base_us, spawn_rngs(seed + 1, samples)):
            sample = stabilizer_extractor_sample(spec, rng, delta, coupling_u=u)
            dists.append(sample.distance)
            slacks.append(rhs - sample.s0_output)
        results[kappa] = {
            "seed_len": s_q,
            "traced_qubits": spec.traced_qubits,
            "mean_distance": float(np.mean(dists)),
            "min_rank_slack": float(np.min(slacks)),
        }
    return {
        "n_qubits": n_qubits,
        "output_len": out_len,
        "eps": eps,
        "delta": delta,
        "samples": samples,
        "per_kappa": results,
    }

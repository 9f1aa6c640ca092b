"""Keyed state generators, their multi-copy cq states, the balanced-cut
search over copy counts, and empirical key-inversion measurement."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import check_dim
from .registers import RegisterLayout, Subsystem, single
from .states import DensityState, make_cq_state, tensor_all
from .entropy import conditional_renyi
from .sampling import ginibre, random_isometry, spawn_rngs


@dataclass
class OwsgInstance:
    """A concrete keyed generator: key distribution, keyed states and an
    (unbounded, exactly computed) acceptance test.

    ``ver(x_prime, sigma)`` returns the acceptance probability of the
    test on one fresh copy; builtin instances use the support projector
    of the claimed key's state, which accepts the true key with
    probability one.
    """

    n: int
    m: int
    key_probs: np.ndarray
    states: list[DensityState]
    ver: Callable[[int, DensityState], float]
    label: str = "custom"

    def __post_init__(self):
        self.key_probs = np.asarray(self.key_probs, dtype=float)
        if self.key_probs.size != 2 ** self.n:
            raise ValueError("key distribution must cover all n-bit keys")
        if abs(self.key_probs.sum() - 1.0) > 1e-9:
            raise ValueError("key distribution must sum to 1")
        lay = self.states[0].layout
        for s in self.states[1:]:
            if s.layout != lay:
                raise ValueError("keyed states must share a layout")

    @property
    def d_q(self) -> int:
        return self.states[0].dim

    def correctness(self) -> float:
        """Average acceptance of the true key on a fresh copy."""
        return float(
            sum(
                p * self.ver(x, self.states[x])
                for x, p in enumerate(self.key_probs)
                if p > 0
            )
        )


def _support_projector(state: DensityState, thresh: float = 1e-10) -> np.ndarray:
    w, v = np.linalg.eigh(state.matrix)
    cols = v[:, w > thresh]
    return cols @ cols.conj().T


def projective_verifier(states: Sequence[DensityState]) -> Callable[[int, DensityState], float]:
    projs = [_support_projector(s) for s in states]

    def ver(x_prime: int, sigma: DensityState) -> float:
        return float(np.real(np.trace(projs[x_prime] @ sigma.matrix)))

    return ver


# ---------------------------------------------------------------------------
# builtin instances
# ---------------------------------------------------------------------------


def orthogonal_pure_instance(n: int, m: int) -> OwsgInstance:
    """phi_x = |x><x|: perfectly verifiable and trivially invertible;
    the designed negative control for one-wayness measurement."""
    d = 2 ** n
    lay = single("Q", d)
    states = []
    for x in range(d):
        v = np.zeros(d, dtype=complex)
        v[x] = 1.0
        states.append(DensityState(np.outer(v, v.conj()), lay, validate=False))
    probs = np.full(d, 1.0 / d)
    return OwsgInstance(n, m, probs, states, projective_verifier(states), "orthogonal_pure")


def random_mixed_instance(
    n: int,
    m: int,
    seed: int = 0,
    d_q: int = 2,
    d_env: int = 2,
    uniform_keys: bool = True,
) -> OwsgInstance:
    """Keyed mixed states: each key maps to the environment trace of an
    independent Haar-random purification on Q (x) E, so d_env tunes the
    output entropy (d_env = 1 gives pure outputs)."""
    rng = np.random.default_rng(seed)
    d = 2 ** n
    lay = single("Q", d_q)
    states = []
    for _ in range(d):
        vec = ginibre(rng, d_q * d_env, 1).ravel()
        vec /= np.linalg.norm(vec)
        big = np.outer(vec, vec.conj())
        red = big.reshape(d_q, d_env, d_q, d_env).trace(axis1=1, axis2=3)
        states.append(DensityState(red, lay, validate=False))
    probs = np.full(d, 1.0 / d) if uniform_keys else rng.dirichlet(np.ones(d))
    return OwsgInstance(n, m, probs, states, projective_verifier(states), "random_mixed")


def classical_owf_instance(n: int, m: int, n_out: int, seed: int = 0) -> OwsgInstance:
    """phi_x = |f(x)><f(x)| for a random compressing f: the classical
    benchmark whose analysis the quantum pipeline mirrors."""
    rng = np.random.default_rng(seed)
    d = 2 ** n
    d_out = 2 ** n_out
    f = rng.integers(0, d_out, size=d)
    lay = single("Q", d_out)
    states = []
    for x in range(d):
        v = np.zeros(d_out, dtype=complex)
        v[f[x]] = 1.0
        states.append(DensityState(np.outer(v, v.conj()), lay, validate=False))
    probs = np.full(d, 1.0 / d)
    inst = OwsgInstance(n, m, probs, states, projective_verifier(states), "classical_owf")
    inst.f_table = f
    return inst


def instance_from_descriptor(desc: dict) -> OwsgInstance:
    """Build a builtin instance from {type, n, m, seed, params}."""
    kind = desc.get("type")
    n = int(desc["n"])
    m = int(desc["m"])
    params = desc.get("params", {})
    seed = int(desc.get("seed", 0))
    if kind == "orthogonal_pure":
        return orthogonal_pure_instance(n, m)
    if kind == "random_mixed":
        return random_mixed_instance(
            n, m, seed,
            d_q=int(params.get("d_q", 2)),
            d_env=int(params.get("d_env", 2)),
            uniform_keys=bool(params.get("uniform_keys", True)),
        )
    if kind == "classical_owf":
        return classical_owf_instance(n, m, int(params.get("n_out", max(1, n - 1))), seed)
    raise ValueError(f"unknown instance type {kind!r}")


# ---------------------------------------------------------------------------
# multi-copy states
# ---------------------------------------------------------------------------


def build_tau(inst: OwsgInstance, i: int) -> DensityState:
    """The cq state sum_x p_x |x><x| (x) phi_x^{(x) i} on (X, Q1..Qi)."""
    if i < 0:
        raise ValueError("copy count must be nonnegative")
    d = 2 ** inst.n
    check_dim(d * inst.d_q ** i, "multi-copy state")
    if i == 0:
        probs = inst.key_probs.astype(complex)
        lay = RegisterLayout([Subsystem("X", d, True)])
        return DensityState(np.diag(probs), lay, validate=False)
    copies = []
    for x in range(d):
        per = [inst.states[x].rename(Q=f"Q{j + 1}") for j in range(i)]
        copies.append(tensor_all(per))
    return make_cq_state(inst.key_probs, copies, x_name="X")


@dataclass
class IStarResult:
    i_star: int
    gap: float
    gap_profile: dict[int, float]
    entropies: dict[int, float]
    threshold: float
    within_threshold: bool


def find_i_star(inst: OwsgInstance, c_prime: float | None = None) -> IStarResult:
    """Smallest copy count i in [m] whose collision-entropy gap
    S_2(X|Q^i) - S_2(X|Q^{i+1}) is at most c' log2(n) (threshold n/m
    when c' is omitted).

    The profile also includes the i = 0 gap, so the telescoping
    identity sum_{i<m} gap_i = S_2(X) - S_2(X|Q^m) can be checked; the
    window i in [m] always contains a gap <= S_2(X|Q^1)/m <= n/m.
    """
    if c_prime is not None:
        threshold = c_prime * math.log2(max(inst.n, 2))
    else:
        threshold = inst.n / inst.m
    ent: dict[int, float] = {}
    for i in range(inst.m + 2):
        tau = build_tau(inst, i)
        if i == 0:
            from .entropy import renyi

            ent[0] = renyi(tau, 2.0)
        else:
            ent[i] = conditional_renyi(
                tau, "X", [f"Q{j + 1}" for j in range(i)], 2.0
            ).value
    gaps = {i: ent[i] - ent[i + 1] for i in range(inst.m + 1)}
    best_i, best_gap = None, math.inf
    for i in range(1, inst.m + 1):
        if gaps[i] <= threshold + 1e-9:
            best_i, best_gap = i, gaps[i]
            break
    within = best_i is not None
    if best_i is None:
        best_i = min(range(1, inst.m + 1), key=lambda i: gaps[i])
        best_gap = gaps[best_i]
    return IStarResult(best_i, best_gap, gaps, ent, threshold, within)


# ---------------------------------------------------------------------------
# adversaries and one-wayness measurement
# ---------------------------------------------------------------------------


def multi_copy_state(inst: OwsgInstance, x: int) -> DensityState:
    per = [inst.states[x].rename(Q=f"Q{j + 1}") for j in range(inst.m)]
    return tensor_all(per)


def pgm_adversary(inst: OwsgInstance) -> Callable[[DensityState, np.random.Generator], int]:
    """Pretty-good-measurement key discrimination on the m-copy state;
    exact discrimination when the keyed states are orthogonal."""
    d = 2 ** inst.n
    check_dim(inst.d_q ** inst.m, "adversary input")
    sigs = [multi_copy_state(inst, x).matrix for x in range(d)]
    avg = sum(p * s for p, s in zip(inst.key_probs, sigs))
    w, v = np.linalg.eigh((avg + avg.conj().T) / 2)
    inv = np.zeros_like(w)
    pos = w > 1e-12
    inv[pos] = w[pos] ** -0.5
    root = (v * inv) @ v.conj().T
    effects = [
        root @ (p * s) @ root for p, s in zip(inst.key_probs, sigs)
    ]
    # complete the measurement on the kernel of avg
    residual = np.eye(avg.shape[0]) - sum(effects)

    def adversary(q_state: DensityState, rng: np.random.Generator) -> int:
        probs = np.array(
            [max(np.real(np.trace(e @ q_state.matrix)), 0.0) for e in effects]
        )
        tail = max(np.real(np.trace(residual @ q_state.matrix)), 0.0)
        total = probs.sum() + tail
        probs = probs / total
        tail = tail / total
        u = rng.uniform()
        if u < tail:
            return int(rng.integers(0, d))
        return int(rng.choice(d, p=probs / probs.sum()))

    return adversary


def random_guess_adversary(inst: OwsgInstance):
    d = 2 ** inst.n

    def adversary(q_state: DensityState, rng: np.random.Generator) -> int:
        return int(rng.integers(0, d))

    return adversary


def constant_guess_adversary(inst: OwsgInstance, guess: int = 0):
    def adversary(q_state: DensityState, rng: np.random.Generator) -> int:
        return guess

    return adversary


def wilson_interval(successes: float, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1 + z ** 2 / trials
    center = (phat + z ** 2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z ** 2 / (4 * trials ** 2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class OneWaynessReport:
    trials: int
    acceptance_mean: float
    wilson_low: float
    wilson_high: float
    guess_rate: float


def measure_one_wayness(
    inst: OwsgInstance,
    adversary: Callable[[DensityState, np.random.Generator], int],
    trials: int = 1000,
    seed: int = 0,
) -> OneWaynessReport:
    """Monte Carlo estimate of the verifier's acceptance of the
    adversary's key guess from m copies.

    Acceptance is sampled per trial from the exact per-guess acceptance
    probability, and an (approximate, Wilson) confidence interval is
    reported alongside the exact-probability mean.
    """
    rngs = spawn_rngs(seed, trials)
    d = 2 ** inst.n
    accept_probs = []
    successes = 0
    exact_matches = 0
    state_cache: dict[int, DensityState] = {}
    for rng in rngs:
        x = int(rng.choice(d, p=inst.key_probs))
        if x not in state_cache:
            state_cache[x] = multi_copy_state(inst, x)
        guess = adversary(state_cache[x], rng)
        p_acc = inst.ver(guess, inst.states[x])
        accept_probs.append(p_acc)
        successes += int(rng.uniform() < p_acc)
        exact_matches += int(guess == x)
    lo, hi = wilson_interval(successes, trials)
    return OneWaynessReport(
        trials=trials,
        acceptance_mean=float(np.mean(accept_probs)),
        wilson_low=lo,
        wilson_high=hi,
        guess_rate=exact_matches / trials,
    )

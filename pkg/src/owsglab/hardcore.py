"""Multi-bit hardcore functions from inner products, and the
list-decoding attack that turns a parity predictor into key candidates.

The hardcore value g(x, r) takes overlapping n-bit windows of the
2n-bit randomizer r and outputs their GF(2) inner products with x; a
predictor that guesses any window parity with advantage over a coin is
fed to the standard list decoder to recover candidate keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sampling import spawn_rngs


@dataclass(frozen=True)
class HardcoreSpec:
    """Output length and input sizes: r is 2n bits, the output collects
    out_len <= n window parities."""

    n: int
    out_len: int

    def __post_init__(self):
        if not (0 <= self.out_len <= self.n):
            raise ValueError("out_len must lie in [0, n]")
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def r_len(self) -> int:
        return 2 * self.n


def hardcore_eval(spec: HardcoreSpec, x_bits, r_bits) -> np.ndarray:
    """Bit i is <x, r[i : i+n]> mod 2."""
    x = np.asarray(x_bits, dtype=np.uint8)
    r = np.asarray(r_bits, dtype=np.uint8)
    if x.size != spec.n or r.size != spec.r_len:
        raise ValueError(
            f"need |x| = {spec.n} and |r| = {spec.r_len}, got {x.size}, {r.size}"
        )
    out = np.empty(spec.out_len, dtype=np.uint8)
    for i in range(spec.out_len):
        out[i] = int(x @ r[i:i + spec.n]) % 2
    return out


def hardcore_eval_int(spec: HardcoreSpec, x: int, r: int) -> int:
    xb = np.array([(x >> k) & 1 for k in range(spec.n)], dtype=np.uint8)
    rb = np.array([(r >> k) & 1 for k in range(spec.r_len)], dtype=np.uint8)
    bits = hardcore_eval(spec, xb, rb)
    return int(sum(int(b) << k for k, b in enumerate(bits)))


# ---------------------------------------------------------------------------
# list decoding
# ---------------------------------------------------------------------------


def _votes_needed(n: int, advantage: float) -> int:
    adv = min(max(advantage, 0.05), 0.5)
    m = math.ceil(math.log2(2 * n / adv ** 2)) + 1
    return int(min(max(m, 3), 11))


def gl_decode(
    predictor: Callable[[np.ndarray, np.random.Generator], int],
    n: int,
    advantage_estimate: float,
    rng: np.random.Generator,
) -> list[int]:
    """List-decode a parity predictor.

    ``predictor(r_bits, rng)`` should approximate <x, r> mod 2 for a
    hidden x on a 1/2 + advantage fraction of uniform r. The decoder
    draws m reference strings, enumerates all 2^m guesses for their
    parities, and reconstructs each coordinate by majority vote over
    the pairwise-independent nonempty subsets. Queries: O(2^m n) with
    m ~ log(n / advantage^2); when the predictor agrees with a true
    parity at the stated advantage, x lands in the returned list with
    constant probability.
    """
    m = _votes_needed(n, advantage_estimate)
    refs = rng.integers(0, 2, size=(m, n)).astype(np.uint8)
    subsets = np.arange(1, 2 ** m, dtype=np.int64)
    member = ((subsets[:, None] >> np.arange(m)[None, :]) & 1).astype(np.uint8)
    combos = member @ refs % 2  # (S, n): xor of the chosen reference strings
    # query the predictor once per (coordinate, subset)
    unit = np.eye(n, dtype=np.uint8)
    n_sub = subsets.size
    responses = np.zeros((n, n_sub), dtype=np.int64)
    for i in range(n):
        queries = unit[i][None, :] ^ combos
        for idx in range(n_sub):
            responses[i, idx] = predictor(queries[idx], rng) & 1
    # majority votes for all 2^m parity guesses at once:
    # mean_s(resp ^ par) = (sum_resp + sum_par - 2 resp.par) / S
    guesses = np.arange(2 ** m, dtype=np.int64)
    guess_bits = ((guesses[:, None] >> np.arange(m)[None, :]) & 1).astype(np.int64)
    sub_par = guess_bits @ member.T.astype(np.int64) % 2  # (G, S)
    sum_resp = responses.sum(axis=1)  # (n,)
    sum_par = sub_par.sum(axis=1)  # (G,)
    dots = responses @ sub_par.T  # (n, G)
    wrong_frac = (sum_resp[:, None] + sum_par[None, :] - 2 * dots) / n_sub
    bits = (wrong_frac > 0.5).astype(np.int64)  # (n, G)
    weights = 1 << np.arange(n, dtype=np.int64)
    candidates = (weights[:, None] * bits).sum(axis=0)
    seen = []
    for c in candidates.tolist():
        if c not in seen:
            seen.append(c)
    return seen


def parity_predictor(x: int, n: int, flip_rate: float = 0.0):
    """Oracle for <x, r> with independent random flips at flip_rate."""
    xb = np.array([(x >> k) & 1 for k in range(n)], dtype=np.uint8)

    def predictor(r_bits: np.ndarray, rng: np.random.Generator) -> int:
        bit = int(xb @ np.asarray(r_bits, dtype=np.uint8)) % 2
        if flip_rate > 0 and rng.uniform() < flip_rate:
            bit ^= 1
        return bit

    return predictor


def coin_predictor():
    def predictor(r_bits: np.ndarray, rng: np.random.Generator) -> int:
        return int(rng.integers(0, 2))

    return predictor


def decode_success_rate(
    n: int,
    flip_rate: float,
    trials: int,
    seed: int = 0,
    advantage: float | None = None,
) -> float:
    """Fraction of trials in which the hidden key appears in the list."""
    adv = advantage if advantage is not None else max(0.5 - flip_rate, 0.01)
    hits = 0
    for t, rng in enumerate(spawn_rngs(seed, trials)):
        x = int(rng.integers(0, 2 ** n))
        pred = parity_predictor(x, n, flip_rate)
        if x in gl_decode(pred, n, adv, rng):
            hits += 1
    return hits / trials

"""Seeded random states, unitaries and channels for trials and audits."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .registers import RegisterLayout, single
from .states import DensityState, partial_trace, tensor


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-trial generators derived from (seed, index)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary via QR with phase fixing."""
    q, r = np.linalg.qr(ginibre(rng, dim, dim))
    ph = np.diag(r)
    return q * (ph / np.abs(ph))


def random_density(
    rng: np.random.Generator,
    layout: RegisterLayout | int,
    rank: int | None = None,
) -> DensityState:
    """Ginibre-induced random mixed state of optional fixed rank."""
    if isinstance(layout, int):
        layout = single("S", layout)
    d = layout.total_dim
    r = rank if rank is not None else d
    g = ginibre(rng, d, r)
    m = g @ g.conj().T
    return DensityState(m / np.trace(m).real, layout, validate=False)


def random_pure(rng: np.random.Generator, layout: RegisterLayout | int) -> DensityState:
    if isinstance(layout, int):
        layout = single("S", layout)
    v = ginibre(rng, layout.total_dim, 1).ravel()
    v = v / np.linalg.norm(v)
    return DensityState(np.outer(v, v.conj()), layout, validate=False)


def random_probability_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    p = rng.dirichlet(np.ones(n))
    return p


def random_cq(
    rng: np.random.Generator,
    d_x: int,
    d_q: int,
    *,
    x_name: str = "X",
    q_name: str = "Q",
    rank: int | None = None,
) -> DensityState:
    """Random cq-state with classical first register."""
    from .states import make_cq_state

    probs = random_probability_vector(rng, d_x)
    q_layout = single(q_name, d_q)
    conds = [random_density(rng, q_layout, rank=rank) for _ in range(d_x)]
    return make_cq_state(probs, conds, x_name=x_name)


def random_isometry(rng: np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    """Isometry V with V^dag V = I, sampled from the Haar measure."""
    if d_out < d_in:
        raise ValueError("isometry needs d_out >= d_in")
    q, r = np.linalg.qr(ginibre(rng, d_out, d_in))
    ph = np.diag(r)
    return q * (ph / np.abs(ph))


def random_channel_pair(
    rng: np.random.Generator, d: int, d_env: int = 2
):
    """A random CPTP map (isometry followed by environment trace) as a
    function on d x d matrices."""
    v = random_isometry(rng, d, d * d_env)

    def channel(mat: np.ndarray) -> np.ndarray:
        big = v @ mat @ v.conj().T
        return big.reshape(d, d_env, d, d_env).trace(axis1=1, axis2=3)

    return channel


def random_two_flat_spectrum(
    rng: np.random.Generator, dim: int, support: int | None = None
) -> np.ndarray:
    """Spectrum whose nonzero values lie within a factor two of each other."""
    r = support if support is not None else int(rng.integers(1, dim + 1))
    base = rng.uniform(1.0, 2.0, size=r)
    p = np.zeros(dim)
    p[:r] = base / base.sum()
    return np.sort(p)[::-1]

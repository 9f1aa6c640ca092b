"""Independent ground-truth oracles for the variational entropy paths.

The conditional-entropy oracle minimizes the sandwiched divergence over
an explicit grid of conditioning states (Bloch parametrization for
qubit B, random restarts above), with its own inline divergence
evaluation so the search shares no optimizer code with the production
path. The smoothing oracle searches diagonal perturbations
exhaustively.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .states import DensityState
from .entropy import _reorder_ab  # layout plumbing only

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _oracle_divergence(rho: np.ndarray, sigma_b: np.ndarray, alpha: float, d_a: int) -> float:
    """Inline sandwiched divergence D_alpha(rho || 1 (x) sigma_b)."""
    big = np.kron(np.eye(d_a), sigma_b)
    w, v = np.linalg.eigh((big + big.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    if alpha >= 1:
        kern = v[:, w <= 1e-12]
        if kern.shape[1]:
            leak = np.real(np.einsum("ij,ik,kj->", kern.conj(), rho, kern))
            if leak > 1e-10:
                return float("inf")
    if math.isinf(alpha):
        inv = np.zeros_like(w)
        pos = w > 1e-14
        inv[pos] = w[pos] ** -0.5
        si = (v * inv) @ v.conj().T
        top = np.linalg.eigvalsh(si @ rho @ si).max()
        return float(np.log2(max(top, 1e-300)))
    power = (1.0 - alpha) / (2.0 * alpha)
    out = np.zeros_like(w)
    pos = w > 1e-14
    out[pos] = w[pos] ** power
    sp = (v * out) @ v.conj().T
    m = sp @ rho @ sp
    ev = np.clip(np.linalg.eigvalsh((m + m.conj().T) / 2), 0.0, None)
    q = (ev[ev > 0] ** alpha).sum()
    if q <= 0:
        return float("inf")
    return float(np.log2(q) / (alpha - 1.0))


def _bloch(v: np.ndarray) -> np.ndarray:
    return 0.5 * (
        np.eye(2) + v[0] * _PAULI_X + v[1] * _PAULI_Y + v[2] * _PAULI_Z
    )


def brute_grid_conditional(
    state: DensityState,
    a_names: Sequence[str] | str,
    b_names: Sequence[str] | str,
    alpha: float,
    *,
    coarse_step: float = 0.1,
    refine_rounds: int = 6,
    restarts: int = 64,
    seed: int = 0,
) -> float:
    """Grid-search oracle for S_alpha(A|B).

    dim(B) = 2 uses a Bloch-vector grid refined down through 0.01 to
    ~1e-5 resolution around the best cell; dim(B) in {3, 4} falls back
    to random-restart Nelder-Mead over a Cholesky parametrization.
    """
    if isinstance(a_names, str):
        a_names = [a_names]
    if isinstance(b_names, str):
        b_names = [b_names]
    rho, d_a, d_b = _reorder_ab(state, a_names, b_names)
    if d_b == 1:
        w = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
        w = w[w > 0]
        if alpha == 1:
            return float(-(w * np.log2(w)).sum())
        if math.isinf(alpha):
            return float(-np.log2(w.max()))
        return float(np.log2((w ** alpha).sum()) / (1 - alpha))
    if d_b == 2:
        return -_bloch_grid_min(rho, d_a, alpha, coarse_step, refine_rounds)
    if d_b <= 4:
        return -_restart_min(rho, d_a, d_b, alpha, restarts, seed)
    raise ValueError("brute-grid oracle supports dim(B) <= 4")


def _batched_divergence(rho, sigmas, alpha, d_a):
    """Vectorized D_alpha(rho || 1 (x) sigma) over a stack of sigmas."""
    g = sigmas.shape[0]
    d_b = sigmas.shape[1]
    w, v = np.linalg.eigh(sigmas)
    w = np.clip(w, 0.0, None)
    power = -0.5 if math.isinf(alpha) else (1.0 - alpha) / (2.0 * alpha)
    wp = np.where(w > 1e-14, np.power(np.where(w > 1e-14, w, 1.0), power), 0.0)
    sp_b = np.einsum("gik,gk,gjk->gij", v, wp, v.conj())
    sp = np.einsum("ab,gij->gaibj", np.eye(d_a), sp_b).reshape(g, d_a * d_b, d_a * d_b)
    m = sp @ rho @ sp
    ev = np.clip(np.linalg.eigvalsh((m + m.conj().transpose(0, 2, 1)) / 2), 0.0, None)
    if math.isinf(alpha):
        out = np.log2(np.maximum(ev.max(axis=1), 1e-300))
    else:
        q = np.where(ev > 0, ev, 1.0) ** alpha
        q = np.where(ev > 0, q, 0.0).sum(axis=1)
        out = np.where(q > 0, np.log2(np.maximum(q, 1e-300)) / (alpha - 1.0), np.inf)
    if alpha >= 1:
        # support leak: weight of rho outside sigma's support
        kern = np.where(w <= 1e-12, 1.0, 0.0)
        if kern.any():
            proj_b = np.einsum("gik,gk,gjk->gij", v, kern, v.conj())
            proj = np.einsum(
                "ab,gij->gaibj", np.eye(d_a), proj_b
            ).reshape(g, d_a * d_b, d_a * d_b)
            leak = np.einsum("gij,ji->g", proj, rho).real
            out = np.where(leak > 1e-10, np.inf, out)
    return out


def _bloch_grid_min(rho, d_a, alpha, step, rounds) -> float:
    center = np.zeros(3)
    width = 2.0
    npts = int(round(width / step)) + 1
    best = np.inf
    best_v = center
    eye2 = np.eye(2)
    paulis = np.stack([_PAULI_X, _PAULI_Y, _PAULI_Z])
    for rnd in range(rounds):
        axes = [
            np.linspace(center[i] - width / 2, center[i] + width / 2, npts)
            for i in range(3)
        ]
        vs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        norms = np.linalg.norm(vs, axis=1)
        scale = np.where(norms > 0.999999, 0.999999 / np.maximum(norms, 1e-12), 1.0)
        vs = vs * scale[:, None]
        sigmas = 0.5 * (eye2[None, :, :] + np.einsum("gk,kij->gij", vs, paulis))
        vals = _batched_divergence(rho, sigmas, alpha, d_a)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_v = float(vals[k]), vs[k]
        center = best_v
        width = width * 2.5 / npts
        npts = 11
    return best


def _restart_min(rho, d_a, d_b, alpha, restarts, seed) -> float:
    from scipy.optimize import minimize

    rng = np.random.default_rng(seed)
    nparam = d_b + d_b * (d_b - 1)

    def unpack(theta):
        L = np.zeros((d_b, d_b), dtype=complex)
        k = 0
        for i in range(d_b):
            for j in range(i + 1):
                if i == j:
                    L[i, j] = theta[k]
                    k += 1
                else:
                    L[i, j] = theta[k] + 1j * theta[k + 1]
                    k += 2
        s = L @ L.conj().T
        tr = np.trace(s).real
        return s / tr if tr > 1e-14 else np.eye(d_b) / d_b

    best = np.inf
    for _ in range(restarts):
        theta0 = rng.normal(size=nparam)
        res = minimize(
            lambda th: _oracle_divergence(rho, unpack(th), alpha, d_a),
            theta0,
            method="Nelder-Mead",
            options={"maxiter": 2500, "xatol": 1e-10, "fatol": 1e-12},
        )
        best = min(best, float(res.fun))
    return best


# ---------------------------------------------------------------------------
# smoothing oracles
# ---------------------------------------------------------------------------


def smooth_s0_oracle(spectrum: np.ndarray, eps: float) -> float:
    """Exhaustive search over eigenvalue subsets to zero out, within the
    generalized trace-distance ball of radius eps."""
    p = np.asarray(spectrum, dtype=float)
    p = np.sort(p[p > 0])[::-1]
    n = p.size
    if n == 0:
        return 0.0
    if n > 16:
        raise ValueError("exhaustive smoothing oracle supports <= 16 eigenvalues")
    best = n
    for mask in range(2 ** n):
        removed = [i for i in range(n) if (mask >> i) & 1]
        mass = p[removed].sum() if removed else 0.0
        # removing mass m costs m/2 (l1) + m/2 (trace deficit) = m
        if mass <= eps + 1e-15:
            best = min(best, n - len(removed))
    return float(np.log2(max(best, 1)))


def smooth_sinf_oracle(spectrum: np.ndarray, eps: float, grid: int = 20000) -> float:
    """Fine grid over caps c, keeping the largest -log2(c) whose excess
    mass above c stays within eps."""
    p = np.asarray(spectrum, dtype=float)
    p = p[p > 0]
    if p.size == 0:
        return 0.0
    lo = 0.0
    hi = p.max()
    best = -np.log2(hi)
    for c in np.linspace(hi, max(hi / grid, 1e-12), grid):
        excess = np.clip(p - c, 0.0, None).sum()
        if excess <= eps + 1e-15:
            best = max(best, -np.log2(c))
        else:
            break
    return float(best)

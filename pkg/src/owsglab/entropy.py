"""Entropy functionals: von Neumann, Renyi, sandwiched divergence,
conditional Renyi entropies and smoothed min/max entropies.

All logarithms are base 2. Conditional quantities use the sandwiched
divergence minimized over states on the conditioning registers; the
supported order range is alpha in [1/2, infinity].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .config import DEFAULT_TOL, ConvergenceError, SupportViolation
from .states import DensityState, clipped_spectrum, partial_trace, permute

_EIG_FLOOR = 1e-300
_SUPPORT_TOL = 1e-10


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


def entropy_from_spectrum(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) if p.size else 0.0


def renyi_from_spectrum(p: np.ndarray, alpha: float) -> float:
    """Renyi entropy of a spectrum; alpha in [0, inf] with limits at
    0 (log rank), 1 (Shannon/von Neumann) and inf (-log p_max)."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    if p.size == 0:
        return 0.0
    if alpha == 0:
        return float(np.log2(p.size))
    if alpha == 1:
        return entropy_from_spectrum(p)
    if math.isinf(alpha):
        return float(-np.log2(p.max()))
    return float(np.log2((p ** alpha).sum()) / (1.0 - alpha))


def von_neumann(state: DensityState) -> float:
    """von Neumann entropy in bits, with 0 log 0 = 0."""
    return entropy_from_spectrum(clipped_spectrum(state.matrix))


def renyi(state: DensityState, alpha: float) -> float:
    return renyi_from_spectrum(clipped_spectrum(state.matrix), alpha)


def qubits(dim: int) -> float:
    """Register size |A| = log2(dim) in (possibly fractional) qubits."""
    return float(np.log2(dim))


# ---------------------------------------------------------------------------
# sandwiched divergence
# ---------------------------------------------------------------------------


def _herm(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _mpow(m: np.ndarray, power: float, support_floor: float = 1e-14) -> np.ndarray:
    """Matrix power on the support (pseudo-inverse for negative powers)."""
    w, v = np.linalg.eigh(_herm(m))
    w = np.clip(w, 0.0, None)
    out = np.zeros_like(w)
    pos = w > support_floor
    out[pos] = w[pos] ** power
    return (v * out) @ v.conj().T


def _support_leak(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Weight of rho outside sigma's support."""
    w, v = np.linalg.eigh(_herm(sigma))
    kern = v[:, w <= _SUPPORT_TOL]
    if kern.shape[1] == 0:
        return 0.0
    return float(np.real(np.einsum("ij,ik,kj->", kern.conj(), rho, kern)))


def sandwiched_divergence(
    rho: DensityState | np.ndarray,
    sigma: DensityState | np.ndarray,
    alpha: float,
) -> float:
    """Sandwiched alpha-Renyi divergence D_alpha(rho || sigma) in bits.

    For alpha >= 1 the divergence is +inf when supp(rho) is not
    contained in supp(sigma); that case returns ``float('inf')`` rather
    than raising, while dimension mismatches raise a
    :class:`SupportViolation` distinct from numeric failures.
    """
    r = rho.matrix if isinstance(rho, DensityState) else np.asarray(rho, dtype=complex)
    s = sigma.matrix if isinstance(sigma, DensityState) else np.asarray(sigma, dtype=complex)
    if r.shape != s.shape:
        raise SupportViolation(f"operand shapes differ: {r.shape} vs {s.shape}")
    if alpha < 0.5:
        raise ValueError("sandwiched divergence supported for alpha >= 1/2")
    leak = _support_leak(r, s)
    if alpha >= 1 and leak > _SUPPORT_TOL * 100:
        return float("inf")
    if alpha == 1:
        wr, vr = np.linalg.eigh(_herm(r))
        wr = np.clip(wr, 0.0, None)
        ws, vs = np.linalg.eigh(_herm(s))
        ws = np.clip(ws, _EIG_FLOOR, None)
        term_r = float((wr[wr > 0] * np.log2(wr[wr > 0])).sum())
        log_s = (vs * np.log2(ws)) @ vs.conj().T
        return term_r - float(np.real(np.trace(r @ log_s)))
    if math.isinf(alpha):
        si = _mpow(s, -0.5)
        m = si @ r @ si
        top = float(np.linalg.eigvalsh(_herm(m)).max())
        return float(np.log2(max(top, _EIG_FLOOR)))
    p = (1.0 - alpha) / (2.0 * alpha)
    sp = _mpow(s, p)
    m = sp @ r @ sp
    w = np.clip(np.linalg.eigvalsh(_herm(m)), 0.0, None)
    q = float((w[w > 0] ** alpha).sum())
    if q <= 0:
        return float("inf") if alpha > 1 else float("inf")
    return float(np.log2(q) / (alpha - 1.0))


def renyi_divergence_classical(p: np.ndarray, q: np.ndarray, alpha: float) -> float:
    """Sandwiched divergence of commuting (diagonal) inputs."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if alpha >= 1 and np.any((p > _SUPPORT_TOL) & (q <= _SUPPORT_TOL)):
        return float("inf")
    mask = p > 0
    if alpha == 1:
        return float((p[mask] * (np.log2(p[mask]) - np.log2(q[mask]))).sum())
    if math.isinf(alpha):
        return float(np.log2((p[mask] / q[mask]).max()))
    vals = p[mask] ** alpha * q[mask] ** (1 - alpha)
    return float(np.log2(vals.sum()) / (alpha - 1.0))


# ---------------------------------------------------------------------------
# conditional Renyi entropy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyQuery:
    """An entropy order together with a smoothing parameter."""

    alpha: float
    smoothing_eps: float = 0.0

    def __post_init__(self):
        if not (0 <= self.smoothing_eps < 1):
            raise ValueError("smoothing_eps must lie in [0, 1)")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if 0 < self.alpha < 0.5:
            raise ValueError(
                "conditional sandwiched queries need alpha >= 1/2 (or 0 for rank)"
            )


@dataclass
class ConditionalEntropyResult:
    value: float
    optimizer_sigma: np.ndarray
    method: str

    def __float__(self):
        return self.value


def _reorder_ab(state: DensityState, a_names, b_names):
    names = list(a_names) + list(b_names)
    traced = state if set(names) == set(state.layout.names) else partial_trace(state, names)
    ordered = permute(traced, list(a_names) + list(b_names))
    d_a = ordered.layout.restrict(a_names).total_dim
    d_b = ordered.layout.restrict(b_names).total_dim if b_names else 1
    return ordered.matrix, d_a, d_b


def _ptrace_first(mat: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    return mat.reshape(d_a, d_b, d_a, d_b).trace(axis1=0, axis2=2)


def _divergence_vs_sigma(rho: np.ndarray, sigma_b: np.ndarray, alpha: float, d_a: int) -> float:
    return sandwiched_divergence(rho, np.kron(np.eye(d_a), sigma_b), alpha)


def _fixed_point_sigma(
    rho: np.ndarray, d_a: int, d_b: int, alpha: float, iters: int, tol: float
) -> tuple[np.ndarray, float]:
    """Iterate sigma <- Tr_A[(sigma^p rho sigma^p)^alpha], tracking the
    best divergence value seen."""
    p = (1.0 - alpha) / (2.0 * alpha)
    sigma = _ptrace_first(rho, d_a, d_b)
    sigma = _herm(sigma) / np.trace(sigma).real
    # keep strictly positive for negative powers
    sigma = (1 - 1e-12) * sigma + 1e-12 * np.eye(d_b) / d_b
    best_val = _divergence_vs_sigma(rho, sigma, alpha, d_a)
    best_sigma = sigma
    prev = best_val
    for _ in range(iters):
        sp = np.kron(np.eye(d_a), _mpow(sigma, p))
        m = _mpow(sp @ rho @ sp, alpha)
        nxt = _ptrace_first(m, d_a, d_b)
        tr = np.trace(nxt).real
        if tr <= 0 or not np.isfinite(tr):
            break
        nxt = _herm(nxt) / tr
        sigma = _herm(0.5 * sigma + 0.5 * nxt)
        sigma = sigma / np.trace(sigma).real
        val = _divergence_vs_sigma(rho, sigma, alpha, d_a)
        if val < best_val:
            best_val, best_sigma = val, sigma
        if abs(val - prev) < tol:
            break
        prev = val
    return best_sigma, best_val


def _cholesky_unpack(theta: np.ndarray, d: int) -> np.ndarray:
    L = np.zeros((d, d), dtype=complex)
    k = 0
    for i in range(d):
        for j in range(i + 1):
            if i == j:
                L[i, j] = theta[k]
                k += 1
            else:
                L[i, j] = theta[k] + 1j * theta[k + 1]
                k += 2
    s = L @ L.conj().T
    tr = np.trace(s).real
    if tr < 1e-14:
        return np.eye(d) / d
    return s / tr


def _cholesky_pack(sigma: np.ndarray, d: int) -> np.ndarray:
    w, v = np.linalg.eigh(_herm(sigma))
    w = np.clip(w, 1e-12, None)
    L = np.linalg.cholesky((v * w) @ v.conj().T)
    theta = []
    for i in range(d):
        for j in range(i + 1):
            if i == j:
                theta.append(L[i, j].real)
            else:
                theta.extend([L[i, j].real, L[i, j].imag])
    return np.asarray(theta)


def _polish_sigma(
    rho: np.ndarray, d_a: int, d_b: int, alpha: float, sigma0: np.ndarray
) -> tuple[np.ndarray, float]:
    def objective(theta):
        return _divergence_vs_sigma(rho, _cholesky_unpack(theta, d_b), alpha, d_a)

    theta0 = _cholesky_pack(sigma0, d_b)
    res = minimize(
        objective,
        theta0,
        method="Nelder-Mead",
        options={"maxiter": 4000, "xatol": 1e-11, "fatol": 1e-13},
    )
    sigma = _cholesky_unpack(res.x, d_b)
    return sigma, float(res.fun)


def _min_entropy_sdp(rho: np.ndarray, d_a: int, d_b: int) -> tuple[np.ndarray, float]:
    """H_min(A|B) via the SDP min{Tr sigma : 1_A (x) sigma >= rho}."""
    import cvxpy as cp

    key = (d_a, d_b)
    cache = _min_entropy_sdp.__dict__.setdefault("_cache", {})
    if key not in cache:
        param = cp.Parameter((d_a * d_b, d_a * d_b), hermitian=True)
        sig = cp.Variable((d_b, d_b), hermitian=True)
        prob = cp.Problem(
            cp.Minimize(cp.real(cp.trace(sig))),
            [cp.kron(np.eye(d_a), sig) >> param],
        )
        cache[key] = (param, sig, prob)
    param, sig, prob = cache[key]
    param.value = _herm(rho)
    try:
        prob.solve(solver="CVXOPT")
    except Exception:
        prob.solve(solver="SCS", eps=1e-9)
    if prob.value is None or not np.isfinite(prob.value):
        raise ConvergenceError("min-entropy SDP failed to solve")
    sigma = _herm(np.asarray(sig.value))
    tr = np.trace(sigma).real
    return sigma / tr, float(-np.log2(prob.value))


def conditional_renyi(
    state: DensityState,
    a_names: Sequence[str] | str,
    b_names: Sequence[str] | str,
    alpha: float,
    *,
    polish: bool | None = None,
    iters: int = 300,
) -> ConditionalEntropyResult:
    """Conditional Renyi entropy S_alpha(A|B) = -min_sigma D_alpha(rho_AB || 1_A (x) sigma_B).

    alpha = 1 uses the exact optimizer sigma = rho_B; alpha = inf solves
    the min-entropy SDP; other orders run the fixed-point iteration on
    sigma_B seeded at rho_B, optionally polished by direct minimization.
    Registers outside A and B are traced out first.
    """
    if isinstance(a_names, str):
        a_names = [a_names]
    if isinstance(b_names, str):
        b_names = [b_names]
    if alpha < 0.5:
        raise ValueError("conditional entropies support alpha in [1/2, inf]")
    rho, d_a, d_b = _reorder_ab(state, a_names, b_names)
    if d_b == 1 or not b_names:
        val = renyi_from_spectrum(clipped_spectrum(rho), alpha)
        return ConditionalEntropyResult(val, np.eye(1), "closed_form")
    if alpha == 1:
        sigma = _ptrace_first(rho, d_a, d_b)
        s_ab = entropy_from_spectrum(clipped_spectrum(rho))
        s_b = entropy_from_spectrum(clipped_spectrum(sigma))
        return ConditionalEntropyResult(s_ab - s_b, sigma, "closed_form")
    if math.isinf(alpha):
        sigma, val = _min_entropy_sdp(rho, d_a, d_b)
        return ConditionalEntropyResult(val, sigma, "sdp")
    sigma, div = _fixed_point_sigma(rho, d_a, d_b, alpha, iters, 1e-13)
    method = "variational"
    # the fixed point is exact for alpha in [1/2, 3]; larger orders need a polish
    do_polish = polish if polish is not None else alpha > 3
    if do_polish:
        sigma2, div2 = _polish_sigma(rho, d_a, d_b, alpha, sigma)
        if div2 < div:
            sigma, div = sigma2, div2
    return ConditionalEntropyResult(-div, sigma, method)


def conditional_renyi_classical(
    state: DensityState,
    x_name: str,
    a_names: Sequence[str] | str,
    b_names: Sequence[str] | str,
    alpha: float,
    **kwargs,
) -> float:
    """S_alpha(A|B,X) for classical X via the per-block decomposition

        (alpha/(1-alpha)) log sum_x p_x 2^{((1-alpha)/alpha) S_alpha(A|B)_x}.

    Must agree with :func:`conditional_renyi` conditioning on (B, X)
    jointly; the classical route only needs per-block optimizations.
    """
    if isinstance(a_names, str):
        a_names = [a_names]
    if isinstance(b_names, str):
        b_names = [b_names]
    keep = [x_name] + list(a_names) + list(b_names)
    st = partial_trace(state, keep) if set(keep) != set(state.layout.names) else state
    ordered = permute(st, [x_name] + list(a_names) + list(b_names))
    d_x = ordered.layout.subsystem(x_name).dim
    d_rest = ordered.dim // d_x
    blocks = []
    for x in range(d_x):
        blk = ordered.matrix[x * d_rest:(x + 1) * d_rest, x * d_rest:(x + 1) * d_rest]
        p = np.trace(blk).real
        if p > 1e-14:
            blocks.append((p, blk / p))
    sub_layout = ordered.layout.restrict(list(a_names) + list(b_names))
    values = []
    weights = []
    for p, blk in blocks:
        sub = DensityState(blk, sub_layout, validate=False, tol=state.tol)
        values.append(conditional_renyi(sub, a_names, b_names, alpha, **kwargs).value)
        weights.append(p)
    return combine_classical_conditionals(np.asarray(weights), np.asarray(values), alpha)


def combine_classical_conditionals(
    weights: np.ndarray, values: np.ndarray, alpha: float
) -> float:
    """Combine per-block S_alpha(A|B) values over a classical register."""
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    if alpha == 1:
        return float((weights * values).sum())
    if math.isinf(alpha):
        return float(-np.log2((weights * np.exp2(-values)).sum()))
    c = (1.0 - alpha) / alpha
    return float(np.log2((weights * np.exp2(c * values)).sum()) / c)


# ---------------------------------------------------------------------------
# smoothed min/max entropies
# ---------------------------------------------------------------------------
#
# Smoothing ball: diagonal (same-eigenbasis) subnormalized perturbations
# within generalized trace distance
#     d(p, q) = (1/2) sum |p - q| + (1/2) |sum p - sum q| <= eps,
# so removing or capping a total eigenvalue mass of eps stays inside the
# ball. This makes both quantities exactly computable: S0 drops the
# smallest eigenvalues greedily, Sinf water-fills the top of the
# spectrum down.


def _spectrum_of(state_or_spectrum) -> np.ndarray:
    if isinstance(state_or_spectrum, DensityState):
        return clipped_spectrum(state_or_spectrum.matrix)
    p = np.asarray(state_or_spectrum, dtype=float)
    return np.sort(np.clip(p, 0.0, None))[::-1]


def smooth_s0(state_or_spectrum, eps: float) -> float:
    """Smoothed max-entropy S0^eps: log rank after greedily removing the
    smallest eigenvalues with total mass at most eps."""
    if not (0 <= eps < 1):
        raise ValueError("eps must lie in [0, 1)")
    p = _spectrum_of(state_or_spectrum)
    p = p[p > 0]
    if p.size == 0:
        return 0.0
    ascending = p[::-1]
    csum = np.cumsum(ascending)
    removable = int(np.searchsorted(csum, eps + 1e-15, side="right"))
    remaining = p.size - removable
    return float(np.log2(max(remaining, 1)))


def smooth_sinf(state_or_spectrum, eps: float) -> float:
    """Smoothed min-entropy Sinf^eps: -log of the capped top eigenvalue
    after water-filling eps mass off the top of the spectrum."""
    if not (0 <= eps < 1):
        raise ValueError("eps must lie in [0, 1)")
    p = _spectrum_of(state_or_spectrum)
    p = p[p > 0]
    if p.size == 0:
        return 0.0
    cap = waterfill_cap(p, eps)
    return float(-np.log2(cap))


def waterfill_cap(p: np.ndarray, eps: float) -> float:
    """Smallest cap c with sum_k max(p_k - c, 0) = eps (0 when eps = 0)."""
    p = np.sort(np.asarray(p, dtype=float))[::-1]
    if eps <= 0:
        return float(p[0])
    # with c between p[k] and p[k-1], excess = sum_{i<k}(p_i) - k*c
    csum = np.cumsum(p)
    for k in range(1, p.size + 1):
        c = (csum[k - 1] - eps) / k
        lower = p[k] if k < p.size else 0.0
        if c >= lower - 1e-300:
            return float(max(c, _EIG_FLOOR))
    return float(_EIG_FLOOR)


def tensor_power_spectrum(p: np.ndarray, t: int, *, tol: float = 1e-300) -> np.ndarray:
    """Spectrum of rho^{(x) t} from the spectrum of rho."""
    p = np.asarray(p, dtype=float)
    p = p[p > tol]
    out = np.array([1.0])
    for _ in range(t):
        out = np.multiply.outer(out, p).ravel()
    return np.sort(out)[::-1]

"""Exact finite-dimensional density-operator algebra on named registers.

States are immutable after construction; every operation returns a new
value, so instances can be shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .config import DEFAULT_TOL, LayoutError, Tolerances, check_dim
from .registers import RegisterLayout, Subsystem


class DensityState:
    """A density operator together with its register layout.

    Parameters
    ----------
    matrix : array_like
        Complex square matrix of dimension ``layout.total_dim``.
    layout : RegisterLayout
        Ordered named subsystems; classical subsystems must be
        block-diagonal in their computational basis.
    validate : bool
        Verify Hermiticity, positivity, unit trace and classical
        block-diagonality on construction.
    """

    def __init__(
        self,
        matrix,
        layout: RegisterLayout,
        *,
        validate: bool = True,
        tol: Tolerances = DEFAULT_TOL,
    ):
        mat = np.asarray(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise LayoutError(f"matrix must be square, got shape {mat.shape}")
        if mat.shape[0] != layout.total_dim:
            raise LayoutError(
                f"matrix dim {mat.shape[0]} does not match layout dim {layout.total_dim}"
            )
        self._m = mat
        self._m.setflags(write=False)
        self._layout = layout
        self._tol = tol
        if validate:
            self._validate()

    def _validate(self):
        m, tol = self._m, self._tol
        herm_err = np.abs(m - m.conj().T).max()
        if herm_err > tol.herm:
            raise ValueError(f"matrix not Hermitian (max asymmetry {herm_err:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > tol.trace:
            raise ValueError(f"trace {tr} deviates from 1 beyond {tol.trace}")
        w = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if w.min() < -tol.psd:
            raise ValueError(f"matrix not PSD (min eigenvalue {w.min():.3e})")
        self._validate_classical()

    def _validate_classical(self):
        m, tol = self._m, self._tol
        dims = self._layout.dims
        t = m.reshape(dims + dims)
        n = len(dims)
        for k, sub in enumerate(self._layout.subsystems):
            if not sub.classical or sub.dim == 1:
                continue
            idx_row = [slice(None)] * n
            idx_col = [slice(None)] * n
            for a in range(sub.dim):
                for b in range(sub.dim):
                    if a == b:
                        continue
                    idx_row[k] = a
                    idx_col[k] = b
                    block = t[tuple(idx_row) + tuple(idx_col)]
                    if np.abs(block).max() > tol.herm:
                        raise ValueError(
                            f"classical subsystem {sub.name!r} has off-diagonal "
                            f"weight {np.abs(block).max():.3e}"
                        )

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def layout(self) -> RegisterLayout:
        return self._layout

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    @property
    def tol(self) -> Tolerances:
        return self._tol

    def __repr__(self) -> str:
        return f"DensityState(dim={self.dim}, layout={self._layout!r})"

    def purity(self) -> float:
        return float(np.trace(self._m @ self._m).real)

    def rename(self, **renames: str) -> "DensityState":
        return DensityState(
            self._m, self._layout.replace(**renames), validate=False, tol=self._tol
        )

    def marginal(self, names: Sequence[str]) -> "DensityState":
        return partial_trace(self, keep=names)

    # -- serialization -------------------------------------------------

    def to_json(self) -> str:
        """Serialize to a JSON container with exact double round-trip.

        Matrix entries are stored row-major as interleaved
        real/imaginary pairs.
        """
        flat = self._m.ravel(order="C")
        inter = np.empty(2 * flat.size)
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        payload = {
            "layout": self._layout.to_json(),
            "matrix": inter.tolist(),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(
        cls, text: str, *, validate: bool = True, tol: Tolerances = DEFAULT_TOL
    ) -> "DensityState":
        payload = json.loads(text)
        layout = RegisterLayout.from_json(payload["layout"])
        inter = np.asarray(payload["matrix"], dtype=float)
        d = layout.total_dim
        if inter.size != 2 * d * d:
            raise LayoutError(
                f"matrix payload has {inter.size} entries, expected {2 * d * d}"
            )
        mat = (inter[0::2] + 1j * inter[1::2]).reshape(d, d)
        return cls(mat, layout, validate=validate, tol=tol)


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigen-decomposition of a state: descending eigenvalues and vectors.

    Eigenvalues are clipped at zero and renormalized to sum to one;
    ``eigenvectors[:, k]`` is the vector for ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T

    def rank(self, thresh: float = 0.0) -> int:
        return int(np.sum(self.eigenvalues > thresh))


def spectral_decompose(state: DensityState) -> SpectralDecomp:
    """Eigen-decompose a state with PSD clipping and renormalization."""
    m = state.matrix
    herm_err = np.abs(m - m.conj().T).max()
    if herm_err > state.tol.herm:
        raise ValueError(f"state not Hermitian beyond tolerance ({herm_err:.3e})")
    w, V = np.linalg.eigh((m + m.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    s = w.sum()
    if s > 0:
        w = w / s
    order = np.argsort(w)[::-1]
    return SpectralDecomp(w[order], V[:, order])


def clipped_spectrum(matrix: np.ndarray, psd_tol: float = DEFAULT_TOL.psd) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, negatives clipped, descending."""
    w = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    return np.sort(w)[::-1]


# ---------------------------------------------------------------------------
# construction and composition
# ---------------------------------------------------------------------------


def pure_state(vector, layout: RegisterLayout, *, tol: Tolerances = DEFAULT_TOL) -> DensityState:
    v = np.asarray(vector, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return DensityState(np.outer(v, v.conj()), layout, validate=False, tol=tol)


def basis_state(index: int, layout: RegisterLayout) -> DensityState:
    v = np.zeros(layout.total_dim, dtype=complex)
    v[index] = 1.0
    return pure_state(v, layout)


def maximally_mixed(layout: RegisterLayout) -> DensityState:
    d = layout.total_dim
    return DensityState(np.eye(d) / d, layout, validate=False)


def classical_state(probs, layout: RegisterLayout) -> DensityState:
    p = np.asarray(probs, dtype=float)
    if p.size != layout.total_dim:
        raise LayoutError("probability vector length does not match layout")
    return DensityState(np.diag(p.astype(complex)), layout, validate=True)


def make_cq_state(
    dist: Mapping[int, float] | Sequence[float],
    states: Mapping[int, DensityState] | Sequence[DensityState],
    *,
    x_name: str = "X",
    tol: Tolerances = DEFAULT_TOL,
) -> DensityState:
    """Assemble the classical-quantum state sum_x p(x) |x><x| (x) rho_x.

    ``dist`` maps labels 0..d-1 to probabilities (or is a plain
    probability vector); ``states`` supplies one state per label, all
    sharing a layout. The classical register is prepended.
    """
    if isinstance(dist, Mapping):
        labels = sorted(dist)
        probs = np.array([dist[x] for x in labels], dtype=float)
        state_list = [states[x] for x in labels]
    else:
        probs = np.asarray(dist, dtype=float)
        state_list = list(states)
    if len(state_list) != probs.size:
        raise LayoutError("need one conditional state per label")
    if probs.min() < -tol.trace:
        raise ValueError(f"negative probability {probs.min()}")
    if abs(probs.sum() - 1.0) > max(tol.trace, 1e-12 * probs.size):
        raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
    q_layout = state_list[0].layout
    for s in state_list[1:]:
        if s.layout != q_layout:
            raise LayoutError("conditional states must share a layout")
    dx = probs.size
    dq = q_layout.total_dim
    check_dim(dx * dq, "cq state")
    out = np.zeros((dx * dq, dx * dq), dtype=complex)
    for x, (p, s) in enumerate(zip(probs, state_list)):
        if p == 0.0:
            continue
        out[x * dq:(x + 1) * dq, x * dq:(x + 1) * dq] = p * s.matrix
    layout = RegisterLayout([Subsystem(x_name, dx, True)]).concat(q_layout)
    return DensityState(out, layout, validate=False, tol=tol)


def tensor(a: DensityState, b: DensityState) -> DensityState:
    check_dim(a.dim * b.dim, "tensor product")
    return DensityState(
        np.kron(a.matrix, b.matrix),
        a.layout.concat(b.layout),
        validate=False,
        tol=a.tol,
    )


def tensor_all(states: Sequence[DensityState]) -> DensityState:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def partial_trace(state: DensityState, keep: Sequence[str]) -> DensityState:
    """Trace out every subsystem not named in ``keep``.

    Kept subsystems retain their original relative order.
    """
    layout = state.layout
    keep_pos = sorted(layout.positions(keep))
    dims = layout.dims
    n = len(dims)
    t = state.matrix.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep_pos]
    for count, i in enumerate(traced):
        t = np.trace(t, axis1=i - count, axis2=i - count + (n - count))
    d_keep = int(np.prod([dims[i] for i in keep_pos])) if keep_pos else 1
    new_layout = RegisterLayout([layout.subsystems[i] for i in keep_pos])
    return DensityState(
        t.reshape(d_keep, d_keep), new_layout, validate=False, tol=state.tol
    )


def permute(state: DensityState, order: Sequence[str]) -> DensityState:
    """Reorder subsystems to the given name order."""
    layout = state.layout
    pos = layout.positions(order)
    if sorted(pos) != list(range(len(layout))):
        raise LayoutError("order must list every subsystem exactly once")
    dims = layout.dims
    n = len(dims)
    t = state.matrix.reshape(dims + dims)
    t = t.transpose(pos + [p + n for p in pos])
    d = state.dim
    new_layout = RegisterLayout([layout.subsystems[i] for i in pos])
    return DensityState(t.reshape(d, d), new_layout, validate=False, tol=state.tol)


def apply_unitary(state: DensityState, unitary: np.ndarray) -> DensityState:
    if unitary.shape != (state.dim, state.dim):
        raise LayoutError("unitary dimension mismatch")
    return DensityState(
        unitary @ state.matrix @ unitary.conj().T,
        state.layout,
        validate=False,
        tol=state.tol,
    )


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------


def _require_same_layout(a: DensityState, b: DensityState):
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout!r} vs {b.layout!r}")


def trace_norm(matrix: np.ndarray) -> float:
    w = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)
    return float(np.abs(w).sum())


def trace_distance(a: DensityState, b: DensityState) -> float:
    """Unnormalized l1 distance ||a - b||_1.

    The statistical distinguishing advantage of the optimal measurement
    is half this value; see :func:`distinguishing_advantage`.
    """
    _require_same_layout(a, b)
    return trace_norm(a.matrix - b.matrix)


def distinguishing_advantage(a: DensityState, b: DensityState) -> float:
    """(1/2)||a - b||_1, the optimal bias over a fair coin."""
    return 0.5 * trace_distance(a, b)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def fidelity(a: DensityState, b: DensityState) -> float:
    """Square-root fidelity F(a,b) = || sqrt(a) sqrt(b) ||_1."""
    _require_same_layout(a, b)
    ra = _psd_sqrt(a.matrix)
    inner = ra @ b.matrix @ ra
    w = np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None)
    return float(np.sqrt(w).sum())


def bures(a: DensityState, b: DensityState) -> float:
    """Bures metric sqrt(1 - F(a,b))."""
    return float(np.sqrt(max(0.0, 1.0 - fidelity(a, b))))


# ---------------------------------------------------------------------------
# purification and Uhlmann machinery
# ---------------------------------------------------------------------------


def purify(state: DensityState, ref_name: str = "REF") -> tuple[np.ndarray, RegisterLayout]:
    """Canonical square-root purification.

    Returns the vector sum_ij sqrt(rho)_ij |i>|j> on layout
    (original..., ref), whose reduced state on the original registers
    is exactly ``state``.
    """
    root = _psd_sqrt(state.matrix)
    vec = root.ravel(order="C")
    layout = state.layout.concat(
        RegisterLayout([Subsystem(ref_name, state.dim, False)])
    )
    return vec, layout


def uhlmann_extension(
    rho_ab: DensityState, sigma_a: DensityState
) -> DensityState:
    """Distance-preserving extension of sigma_A to the registers of rho_AB.

    Returns theta_AB with Tr_B theta = sigma_A and
    Bures(rho_AB, theta_AB) = Bures(rho_A, sigma_A), computed from the
    singular decomposition of the purification overlap.
    """
    a_names = sigma_a.layout.names
    for n in a_names:
        if n not in rho_ab.layout.names:
            raise LayoutError(f"subsystem {n!r} of sigma_A missing from rho_AB")
    b_names = [n for n in rho_ab.layout.names if n not in a_names]
    ordered = permute(rho_ab, list(a_names) + b_names)
    d_a = sigma_a.dim
    d_b = ordered.dim // d_a
    if sigma_a.layout.restrict(a_names).dims != ordered.layout.restrict(a_names).dims:
        raise LayoutError("sigma_A dimensions do not match rho_AB marginal")

    # |rho> on A(BR) with R of dim d_a*d_b; |sigma> on AC with C of dim d_a.
    rho_vec, _ = purify(ordered)
    d_br = d_b * ordered.dim
    rho_mat = rho_vec.reshape(d_a, d_br)
    sigma_vec, _ = purify(sigma_a)
    sigma_mat = sigma_vec.reshape(d_a, d_a)

    # Optimal isometry V: C -> BR maximizing <rho|(1 (x) V)|sigma>.
    K = rho_mat.conj().T @ sigma_mat          # (d_br, d_a)
    U, _, Vh = np.linalg.svd(K.T, full_matrices=False)   # K.T: (d_a, d_br)
    Viso = Vh.conj().T @ U.conj().T           # (d_br, d_a), isometry

    theta_mat = sigma_mat @ Viso.T            # coefficients on A x BR
    theta_vec = theta_mat.ravel(order="C")
    full = np.outer(theta_vec, theta_vec.conj())
    # trace out R (trailing factor of dim ordered.dim)
    d_ab = ordered.dim
    t = full.reshape(d_ab, d_ab, d_ab, d_ab)
    theta_ab = np.trace(t, axis1=1, axis2=3)
    theta = DensityState(theta_ab, ordered.layout, validate=False, tol=rho_ab.tol)
    return permute(theta, rho_ab.layout.names)


# ---------------------------------------------------------------------------
# cq-Markov chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CqMarkovChain:
    """State of the form sum_x p_x rho^A_x (x) |x><x| (x) rho^B_x.

    The chain is validated on construction: every x-block must factor
    into a product across the A/B cut within tolerance.
    """

    state: DensityState
    a_names: tuple[str, ...]
    x_name: str
    b_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "a_names", tuple(self.a_names))
        object.__setattr__(self, "b_names", tuple(self.b_names))
        self.validate()

    def blocks(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        """Per-x triples (p_x, rho^A_x, rho^B_x); zero-weight blocks get
        maximally mixed placeholders."""
        st = permute(self.state, list(self.a_names) + [self.x_name] + list(self.b_names))
        lay = st.layout
        d_a = lay.restrict(self.a_names).total_dim if self.a_names else 1
        d_x = lay.subsystem(self.x_name).dim
        d_b = lay.restrict(self.b_names).total_dim if self.b_names else 1
        t = st.matrix.reshape(d_a, d_x, d_b, d_a, d_x, d_b)
        out = []
        for x in range(d_x):
            block = t[:, x, :, :, x, :].reshape(d_a * d_b, d_a * d_b)
            p = np.trace(block).real
            if p <= 0:
                out.append((0.0, np.eye(d_a) / d_a, np.eye(d_b) / d_b))
                continue
            blk = block / p
            bt = blk.reshape(d_a, d_b, d_a, d_b)
            rho_a = np.trace(bt, axis1=1, axis2=3)
            rho_b = np.trace(bt, axis1=0, axis2=2)
            out.append((p, rho_a, rho_b))
        return out

    def validate(self, tol: float | None = None):
        tol = tol if tol is not None else self.state.tol.recon
        st = permute(self.state, list(self.a_names) + [self.x_name] + list(self.b_names))
        lay = st.layout
        d_a = lay.restrict(self.a_names).total_dim if self.a_names else 1
        d_x = lay.subsystem(self.x_name).dim
        d_b = lay.restrict(self.b_names).total_dim if self.b_names else 1
        t = st.matrix.reshape(d_a, d_x, d_b, d_a, d_x, d_b)
        for x in range(d_x):
            for y in range(d_x):
                if x == y:
                    continue
                if np.abs(t[:, x, :, :, y, :]).max() > self.state.tol.herm * 10:
                    raise ValueError("X register is not classical in this state")
        for x, (p, rho_a, rho_b) in enumerate(self.blocks()):
            if p == 0.0:
                continue
            block = t[:, x, :, :, x, :].reshape(d_a * d_b, d_a * d_b) / p
            err = np.abs(block - np.kron(rho_a, rho_b)).max()
            if err > max(tol, 1e-8):
                raise ValueError(
                    f"block x={x} violates the Markov product structure (err {err:.3e})"
                )


class MarkovRecovery:
    """CPTP map on X that reattaches B: |x><x| -> |x><x| (x) rho^B_x."""

    def __init__(self, chain: CqMarkovChain):
        self.chain = chain
        st = chain.state
        self.x_name = chain.x_name
        self.b_names = chain.b_names
        lay = st.layout
        self._d_x = lay.subsystem(chain.x_name).dim
        self._b_layout = lay.restrict(chain.b_names)
        self._cond_b = [rb for (_, _, rb) in chain.blocks()]

    def apply(self, state: DensityState) -> DensityState:
        """Apply id (x) Phi to a state containing the X register.

        The X register is decohered in its basis (a no-op for valid cq
        inputs) and the conditional B states are appended at the end of
        the layout.
        """
        lay = state.layout
        xs = lay.index(self.x_name)
        dims = lay.dims
        n = len(dims)
        d = state.dim
        d_b = self._b_layout.total_dim
        check_dim(d * d_b, "recovery output")
        t = state.matrix.reshape(dims + dims)
        out = np.zeros((d, d_b, d, d_b), dtype=complex)
        for x in range(self._d_x):
            sel_r = [slice(None)] * n
            sel_c = [slice(None)] * n
            sel_r[xs] = x
            sel_c[xs] = x
            block = t[tuple(sel_r) + tuple(sel_c)]
            # re-embed the x-diagonal block at full dimension
            full = np.zeros(dims + dims, dtype=complex)
            full[tuple(sel_r) + tuple(sel_c)] = block
            out += np.einsum(
                "ij,kl->ikjl", full.reshape(d, d), self._cond_b[x]
            )
        new_layout = lay.concat(self._b_layout)
        return DensityState(
            out.reshape(d * d_b, d * d_b), new_layout, validate=False, tol=state.tol
        )

    def apply_to_uniform(self) -> DensityState:
        """Phi applied to the uniform distribution on X; returns an XB state."""
        d_x = self._d_x
        d_b = self._b_layout.total_dim
        out = np.zeros((d_x * d_b, d_x * d_b), dtype=complex)
        for x in range(d_x):
            out[x * d_b:(x + 1) * d_b, x * d_b:(x + 1) * d_b] = self._cond_b[x] / d_x
        lay = RegisterLayout([Subsystem(self.x_name, d_x, True)]).concat(self._b_layout)
        return DensityState(out, lay, validate=False)


def markov_recovery(chain: CqMarkovChain) -> MarkovRecovery:
    """Recovery channel reproducing rho^{AXB} from rho^{AX}."""
    return MarkovRecovery(chain)

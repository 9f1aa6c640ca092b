"""Numerical tolerances and global limits."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances for state validation and checks.

    Defaults are tuned for double-precision eigensolvers at total
    dimension up to ~4096.
    """

    herm: float = 1e-9        # Hermiticity / classical block-diagonality
    psd: float = 1e-9         # eigenvalue clipping threshold
    trace: float = 1e-9       # trace-one check
    recon: float = 1e-8       # reconstruction / round-trip checks
    num: float = 1e-7         # generic inequality slack
    opt: float = 1e-4         # variational-vs-oracle agreement
    fid: float = 1e-7         # fidelity-based checks


DEFAULT_TOL = Tolerances()

_DEFAULT_DIM_CAP = 4096


def dim_cap() -> int:
    """Maximum total Hilbert-space dimension for dense states.

    Overridable through the LAB_DIM_CAP environment variable.
    """
    raw = os.environ.get("LAB_DIM_CAP")
    if raw is None:
        return _DEFAULT_DIM_CAP
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"LAB_DIM_CAP must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValueError("LAB_DIM_CAP must be positive")
    return value


class DimensionCapError(RuntimeError):
    """Raised when a requested dense construction exceeds the dimension cap."""


class LayoutError(ValueError):
    """Raised when register layouts are inconsistent with an operation."""


class SupportViolation(ValueError):
    """Raised when a divergence is undefined because supp(rho) exceeds supp(sigma)."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative optimizer fails to converge to tolerance."""

    def __init__(self, message: str, best_value: float | None = None):
        super().__init__(message)
        self.best_value = best_value


def check_dim(dim: int, what: str = "state") -> None:
    cap = dim_cap()
    if dim > cap:
        raise DimensionCapError(
            f"{what} needs dimension {dim}, exceeding the cap {cap} "
            "(set LAB_DIM_CAP to override)"
        )

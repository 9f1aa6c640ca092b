"""owsglab: desk-scale numerical laboratory for one-way state
generators, EFI pairs, spectral flattening, extractors and hardcore
functions."""

from .config import (
    DEFAULT_TOL,
    ConvergenceError,
    DimensionCapError,
    LayoutError,
    SupportViolation,
    Tolerances,
    dim_cap,
)
from .registers import RegisterLayout, Subsystem, single
from .states import (
    CqMarkovChain,
    DensityState,
    SpectralDecomp,
    basis_state,
    bures,
    classical_state,
    distinguishing_advantage,
    fidelity,
    make_cq_state,
    markov_recovery,
    maximally_mixed,
    partial_trace,
    permute,
    pure_state,
    purify,
    spectral_decompose,
    tensor,
    tensor_all,
    trace_distance,
    uhlmann_extension,
)
from .entropy import (
    ConditionalEntropyResult,
    EntropyQuery,
    conditional_renyi,
    conditional_renyi_classical,
    renyi,
    sandwiched_divergence,
    smooth_s0,
    smooth_sinf,
    von_neumann,
)

__version__ = "0.1.0"

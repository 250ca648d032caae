"""Fock-space laboratory for Gaussian states with a few Kerr-type non-linear layers."""

from .fock import (
    BasisMismatchError,
    BasisSizeError,
    DimensionMismatchError,
    FockBasis,
    OccupationVector,
    StateVector,
    apply_dense_operator,
    apply_diagonal_phase,
    basis_state,
    enumerate_basis,
    inner_product,
    vacuum,
)
from .gaussian import (
    CutoffError,
    GaussianSpec,
    apply_gaussian,
    apply_interferometer,
    clements_decompose,
    haar_unitary,
    prepare_psi_in,
)
from .gbs import (
    GbsInstance,
    chernoff_check,
    chernoff_cutoffs,
    gbs_probability,
    hafnian,
    pair_distribution,
)
from .hadamard import (
    ConditioningError,
    HadamardInstance,
    NumberConservingUnitary,
    cat_components,
    controlled_phase,
    hadamard_probabilities,
    prepare_lambda,
    recover_amplitude,
    run_hadamard,
    run_hadamard_chain,
)
from .nonlinear import (
    DegeneracyError,
    DiagonalHamiltonian,
    energy,
    kerr_evolve,
    nondegenerate_hamiltonian,
    spectrum,
    verify_nondegeneracy,
)
from .reduction import (
    AmplitudeSeries,
    Gpnl1Instance,
    amplitude,
    amplitude_series,
    reconstruct,
    run_reconstruction,
)

__version__ = "0.1.0"

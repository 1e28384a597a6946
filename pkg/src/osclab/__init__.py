"""Numerical laboratory for disordered harmonic oscillator lattices."""

__version__ = "0.1.0"

from .lattice import (
    BoxGeometry,
    boundary,
    dirichlet_laplacian,
    l1_distance,
    neighborhood,
    neumann_laplacian,
)
from .anderson import (
    DisorderConfig,
    DisorderSample,
    SpectralData,
    assemble,
    diagonalize,
    eigencorrelator,
    localized_modes,
    min_gap,
    sample_disorder,
)
from .freeboson import (
    counting_function,
    delta_field,
    dynamics_block_matrix,
    evolve,
    excitation_energy_density,
    many_body_energy,
    project_localized,
    sup_t_overlap,
    uniform_field,
    v_inverse,
    v_map,
)
from .weyl import (
    RestrictionData,
    WeylDescriptor,
    correlation_series,
    dynamic_correlation,
    laguerre,
    lr_weyl_commutator_norm,
    matrix_element,
    matrix_element_1d,
    pq_commutator_matrix,
    quasi_locality_bound,
    quasi_locality_error,
    restriction_constant,
)
from .fock_oracle import (
    OracleBundle,
    TruncationSpec,
    build_restricted_operators,
    ladder_matrices,
    oracle_commutator_norm,
    oracle_expectation,
    weyl_matrix_1d_oracle,
)

"""Shuffling maps on Z_2^N, their periodic attractors, random-map statistics
and a frozen spin-market model compiled to a shuffling map."""

__version__ = "0.1.0"

from .algebra import (
    ShufflingMap,
    circ,
    commutator,
    gamma,
    gamma_row,
    gast4_rhs,
    phi_iterate,
    poly_eval,
    quadrant_decode,
    quadrant_encode,
    star,
    star_power,
    truncator_step,
)
from .exceptions import CapacityError, DimensionError, DomainError, TieError, TieWarning, TruncatorError
from .map_space import (
    MapClassification,
    all_homomorphisms,
    classify,
    delta_set,
    enumerate_all_maps,
    image,
    is_homomorphism_circ,
    is_homomorphism_star,
    is_star_commutative,
    is_surjective,
    kernel,
    predicted_period,
    predicted_periods,
    sample_homomorphism,
)
from .orbits import TRANSIENT, Attractor, OrbitReport, analyze, p_star
from .random_maps import (
    MapMeasure,
    TransitionMatrix,
    annealed_step_law_check,
    first_return_law,
    increment_chain_law,
    increment_chain_monte_carlo,
    kernel_histogram,
    kernel_pmf_exact,
    kernel_pmf_limit,
    kernel_sizes,
    phi_matrix,
    return_time_distribution,
    sample_map,
    uniform_measure,
)
from .spin_market import (
    SpinModelParams,
    finite_beta_matrix,
    frozen_phi,
    frozen_successors,
    local_field,
    neighbor_table,
    regime_report,
)
from .sweeps import SweepResult, run_sweep

__all__ = [
    "all_homomorphisms",
    "analyze",
    "annealed_step_law_check",
    "Attractor",
    "CapacityError",
    "circ",
    "classify",
    "commutator",
    "delta_set",
    "DimensionError",
    "DomainError",
    "enumerate_all_maps",
    "finite_beta_matrix",
    "first_return_law",
    "frozen_phi",
    "frozen_successors",
    "gamma",
    "gamma_row",
    "gast4_rhs",
    "image",
    "increment_chain_law",
    "increment_chain_monte_carlo",
    "is_homomorphism_circ",
    "is_homomorphism_star",
    "is_star_commutative",
    "is_surjective",
    "kernel",
    "kernel_histogram",
    "kernel_pmf_exact",
    "kernel_pmf_limit",
    "kernel_sizes",
    "local_field",
    "MapClassification",
    "MapMeasure",
    "neighbor_table",
    "OrbitReport",
    "p_star",
    "phi_iterate",
    "phi_matrix",
    "poly_eval",
    "predicted_period",
    "predicted_periods",
    "quadrant_decode",
    "quadrant_encode",
    "regime_report",
    "return_time_distribution",
    "run_sweep",
    "sample_homomorphism",
    "sample_map",
    "ShufflingMap",
    "SpinModelParams",
    "star",
    "star_power",
    "SweepResult",
    "TieError",
    "TieWarning",
    "TRANSIENT",
    "TransitionMatrix",
    "truncator_step",
    "TruncatorError",
    "uniform_measure",
]

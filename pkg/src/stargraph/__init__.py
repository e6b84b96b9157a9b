"""Numerical laboratory for Schrödinger flows on star graphs.

Discretized star graphs and graph functions, vertex conditions and their
spectral data, Fourier-sine and Dollard transforms, linear propagators,
a split-step NLS solver and the scattering diagnostics built on them.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .graph import (
    GraphFunction,
    StarGraph,
    build_graph,
    edge_inner_product,
    edge_norms,
    h1_norm,
    inner_product,
    lp_norm,
    read_graph_function,
    sample_function,
    write_graph_function,
)
from .lab import (
    adversarial_test_function,
    dollard_profile,
    fit_power_law,
    free_pullback_series,
    pairing_audit,
    wave_operator,
)
from .nls import EvolutionConfig, Trajectory, evolve, weak_residual
from .propagators import (
    LinearPropagator,
    boundary_flux,
    cn_evolve,
    dirichlet_propagate,
    image_kernel_propagate,
    kirchhoff_propagate,
)
from .transforms import (
    SpectralField,
    dilation_apply,
    dilation_inverse,
    dollard_propagate,
    multiplier_apply,
    multiplier_inverse,
    sine_inverse,
    sine_transform,
)
from .vertex import (
    BoundState,
    VertexCondition,
    canonical,
    find_bound_states,
    resolvent_difference_rank,
    scattering_matrix,
    validate,
)

"""Discrete Calderon-Zygmund toolkit for singular integrals between separated measures."""

from .decomposition import (CZDecomposition, DecompositionError, DecompositionParams, PhiFunction,
                            besicovitch_select, build_phi, decompose, decompose_adregular,
                            decompose_measure, find_stopping_balls, level_at_percentile,
                            local_ratios)
from .geometry import (Scenario, cantor_measure, halfplane_scenario, lipschitz_scenario,
                       section5_measures)
from .kernels import KernelSpec
from .measures import (ADRegularity, Ball, DiscreteMeasure, FunctionOnMeasure, MeasureError,
                       ad_regularity_constants, ball_mass, combine, diameter, growth_constant)
from .operators import (NormEstimate, OperatorMatrix, assemble_matrix, operator_norm,
                        q_radial_maximal, radial_maximal, tail_bound_check, truncated_apply)
from .verify import InvariantReport, verify_decomposition

__version__ = "0.1.0"

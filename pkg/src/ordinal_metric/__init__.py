"""Recover a geodesic metric, up to scale, from ordinal distance comparisons."""

from .evaluation import BoundReport, RunConfig, check_bounds, sup_error, sweep
from .oracle import Distortion, OrdinalOracle, compare_max, query_count, with_distortion
from .reconstruction import (Chain, DegenerateSampleError, ReconstructionFailed,
                             ReconstructionResult, approx_midpoint, bracket_estimates,
                             diameter_pair, midpoint_candidates, predicted_level_lower_bound,
                             reconstruct, refine_chain, select_level)
from .repair import MetricMatrix, is_metric, max_triangle_violation, repair_additive
from .spaces import SampleSet, SpaceModel, geodesic_distance, hausdorff_to_space, make_space, sample

__version__ = "0.1.0"

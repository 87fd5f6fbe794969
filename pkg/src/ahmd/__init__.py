"""Exact finite-stage invariants of inductive systems with diagonal maps.

Spaces are finite simplicial complexes, open sets are up-closed simplex
families and eigenvalue maps are simplicial maps; every value is computed
with exact rational arithmetic.
"""
from .branched import (BranchedCover, BranchedPair, branched_join, cuntz_mean_dimension_sequence,
                       cuntz_ratio, induce, multiplicity)
from .capacity import (CapacityReport, TraceData, ocap_closed_set, ocap_element, sbp_probe,
                       sbrp_probe, svt_probe, trace_variation)
from .covers import (Cover, RefinementCertificate, greedy_refinement, join, mediant_bound, ord,
                     pullback_cover, refinement_dimension)
from .errors import InvariantError, ValidationError
from .nerve import NerveComplex, PartitionOfUnity, nerve, nerve_map, subordinate_partition, theta
from .simplicial import (ClosedSet, Complex, OpenSet, PLFunction, SimplicialMap,
                         barycentric_subdivide, closure_and_boundary, cycle_complex, open_star,
                         path_complex, preimage, simplex_complex, subdivide, subdivide_map)
from .system import (AHSystem, Block, DiagonalMap, Leg, MeanDimEstimate, ProjectionClass,
                     build_goodearl, compose_maps, mean_dimension_sequence, pullback_stage_cover,
                     subdivide_system)
from .variation import (FunctionFamily, oscillation, partition_family_lower_bound,
                        variation_dimension, variation_mean_dimension_sequence)

__version__ = "0.1.0"

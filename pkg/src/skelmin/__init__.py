"""Measure minimization over polyhedral skeletons.

Build rotondity-controlled polyhedral complexes, project sets onto their
d-skeletons with controlled measure increase, and minimize weighted Hausdorff
measure over admissible skeletons under topological constraint oracles.
"""

__version__ = "0.1.0"

from .errors import (CenterHit, ClearanceUnsatisfiable, DimensionMismatch,
                     EmptyRegion, InitInadmissible, MergeDegenerate,
                     NoCenterFound, ParseError, PeriodMismatch, SkelminError,
                     SubdivisionLimit, UnboundedRegion)
from .geometry import (Complex, FaceLattice, HalfSpace, Polyhedron, ShapeStats,
                       enumerate_subfaces, min_enclosing_ball, shape_stats,
                       validate_complex, vertex_enumeration)
from .grids import (DyadicGridSpec, MergeReport, ObstacleBall, ObstacleBox,
                    PeriodicTopology, build_dyadic, build_periodic,
                    carve_region, merge, rotation2d)
from .measure import (DensityField, LscReport, MeasureReport, Window,
                      hausdorff_distance, hausdorff_measure, local_hausdorff,
                      lsc_probe, measure_report, weighted_measure)
from .projection import (ConeRegion, MagneticStage, MapResult, PatchFit,
                         PiecewiseMap, RadialStage, apply_map, blend_check,
                         erode, ff_cascade, fit_patches, hole_extension,
                         magnetic_project, optimal_center, radial_project,
                         ring_extension)
from .simplicial import SimplicialSet, faces_to_set, sample_faces, simplex_volume
from .skeleton import (ConstraintOracle, OptimizerConfig, OptimizationOutcome,
                       ProbeReport, Skeleton, admissible, connectivity_oracle,
                       core_decompose, optimize, periodic_oracle,
                       quasiminimality_probe, separation_oracle,
                       skeleton_value, spanning_chain_oracle)
from .driver import PatchSpec, ProblemSpec, RunReport, gauge_report, run

"""coarsedim: a desk-scale laboratory for coarse-geometry covers and partitions."""

from .geometry import Box, BudgetError, DomainError
from .ordinals import (OrdinalCNF, OrdinalParseError, SetSystem, derive,
                       naive_rank, ord_of, ordinal_compare, parse_ordinal,
                       rank)
from .spaces import (CoarseUnionSpec, SpaceSpec, dist, enumerate_truncation,
                     is_member, membership_mask, truncation_mask, union_dist)
from .covers import (CoverFamily, CoverProblem, Covered,
                     NotCoveredWithinBudget, brick_cover, family_min_gap,
                     membership_report, search_cover, verify_cover,
                     verify_family)
from .partitions import (BuildPartitionError, FacePair, GridRegion,
                         NestedReport, PartitionCertificate, build_partition,
                         check_nested, random_obstacles, separates, skeleton,
                         subdivide, verify_partition)
from .adversary import (AdversaryParams, CoverHolds, CubeComplex,
                        ObstructionCertificate, refute_cover, stage_trace,
                        verify_certificate)

__version__ = "0.1.0"

__all__ = [
    "AdversaryParams", "Box", "BudgetError", "BuildPartitionError",
    "CoarseUnionSpec", "CoverFamily", "CoverHolds", "CoverProblem",
    "Covered", "CubeComplex", "DomainError", "FacePair", "GridRegion",
    "NestedReport", "NotCoveredWithinBudget", "ObstructionCertificate",
    "OrdinalCNF", "OrdinalParseError", "PartitionCertificate", "SetSystem",
    "SpaceSpec", "brick_cover", "build_partition", "check_nested", "derive",
    "dist", "enumerate_truncation", "family_min_gap", "is_member",
    "membership_mask", "membership_report", "naive_rank", "ord_of",
    "ordinal_compare", "parse_ordinal", "rank", "random_obstacles",
    "refute_cover", "search_cover", "separates", "skeleton", "stage_trace",
    "subdivide", "truncation_mask", "union_dist", "verify_certificate",
    "verify_cover", "verify_family", "verify_partition",
]

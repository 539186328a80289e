"""Desk-scale laboratory for finite metric measure spaces."""

from mmslab.core import (
    DiscreteGeodesic,
    FiniteMMS,
    ball,
    ball_indices,
    constant_speed_defect,
    evaluate,
    geodesics_between,
    load_space,
    restrict,
    save_space,
    scale,
    validate_space,
)
from mmslab.contraction import (
    DensityReport,
    McpReport,
    ScalarBoundReport,
    Schedule,
    chebyshev_times,
    mcp_check,
    model_coefficient,
    necklace_schedule,
    scalar_bound,
    schedule_density_check,
)
from mmslab.generators import (
    NecklaceParams,
    circle_space,
    euclidean_ball_grid,
    hawaiian_truncation,
    necklace,
    necklace_fibers,
    segment_space,
)
from mmslab.regularity import (
    GHCorrespondence,
    MassSplit,
    RegularMassReport,
    RegularityReport,
    ScanRow,
    correspondence_distortion,
    epsilon_regular_scan,
    gh_exact,
    gh_lower_bound,
    radius_levels,
    regular_set_measure,
)
from mmslab.symmetry import (
    ConditionAReport,
    CriticalScale,
    EnumerationResult,
    EscapeResult,
    EuclideanIsometry,
    FixedSet,
    IsometryMap,
    LargeFixReport,
    Subgroup,
    SubgroupProbe,
    compose,
    condition_a_scan,
    critical_scale,
    displacement,
    enumerate_isometries,
    euclidean_power_escape,
    fixed_set,
    generate_subgroup,
    invert,
    isometry_from_perm,
    large_fix_implies_small_displacement,
    small_subgroup_probe,
)
from mmslab.transport import (
    CompetitorReport,
    Coupling,
    GeodesicPlan,
    ProbeResult,
    TransportResult,
    as_measure,
    brute_force_w2,
    delta,
    is_induced_by_map,
    lift_to_geodesic_plan,
    plan_cost,
    plan_marginals,
    pushforward_at,
    solve_w2,
    symmetrized_competitor,
    uniform_on,
    uniqueness_probe,
    verify_competitor,
)

__all__ = [
    "CompetitorReport",
    "ConditionAReport",
    "Coupling",
    "CriticalScale",
    "DensityReport",
    "DiscreteGeodesic",
    "EnumerationResult",
    "EscapeResult",
    "EuclideanIsometry",
    "FiniteMMS",
    "FixedSet",
    "GHCorrespondence",
    "GeodesicPlan",
    "IsometryMap",
    "LargeFixReport",
    "MassSplit",
    "McpReport",
    "NecklaceParams",
    "ProbeResult",
    "RegularMassReport",
    "RegularityReport",
    "ScalarBoundReport",
    "Schedule",
    "ScanRow",
    "Subgroup",
    "SubgroupProbe",
    "TransportResult",
    "as_measure",
    "ball",
    "ball_indices",
    "brute_force_w2",
    "chebyshev_times",
    "circle_space",
    "compose",
    "condition_a_scan",
    "constant_speed_defect",
    "correspondence_distortion",
    "critical_scale",
    "delta",
    "displacement",
    "enumerate_isometries",
    "epsilon_regular_scan",
    "euclidean_ball_grid",
    "euclidean_power_escape",
    "evaluate",
    "fixed_set",
    "generate_subgroup",
    "geodesics_between",
    "gh_exact",
    "gh_lower_bound",
    "hawaiian_truncation",
    "invert",
    "is_induced_by_map",
    "isometry_from_perm",
    "large_fix_implies_small_displacement",
    "lift_to_geodesic_plan",
    "load_space",
    "mcp_check",
    "model_coefficient",
    "necklace",
    "necklace_fibers",
    "necklace_schedule",
    "plan_cost",
    "plan_marginals",
    "pushforward_at",
    "radius_levels",
    "regular_set_measure",
    "restrict",
    "save_space",
    "scalar_bound",
    "scale",
    "schedule_density_check",
    "segment_space",
    "small_subgroup_probe",
    "solve_w2",
    "symmetrized_competitor",
    "uniform_on",
    "uniqueness_probe",
    "validate_space",
    "verify_competitor",
]

__version__ = "0.1.0"

"""Finite truncations of group-geometric spaces, geodesic bicombings on
them, and an empirical certifier for convexity-type inequalities."""

from .errors import (
    BallTooSmall,
    BasepointNotFixed,
    BuildError,
    CclError,
    CertificationFailed,
    CombingDomainMismatch,
    ConfigError,
    DisconnectedPair,
    ElementOutsideBall,
    InvalidConeSpec,
    NotGeodesicInput,
    ParameterOutOfRange,
    PremiseNotCertified,
    RadiusTooSmall,
    SameOrbitBasepoints,
    SubspaceNotConvex,
    TriplesTooShort,
    UnknownScenario,
    UnsupportedGroup,
)
from .metricgraph import (
    Ball,
    GeodesicPath,
    GraphPoint,
    MetricGraph,
    ball,
    canonical_geodesic,
    shortest_distance,
)
from .combing import CanonicalCombing, Combing, TableCombing
from .groups import (
    CayleyBall,
    ConedBall,
    ConedCayleySpec,
    DirectProduct,
    FiniteCyclic,
    FreeAbelian,
    FreeGroup,
    FreeProduct,
    Subgroup,
    cayley_ball,
    coned_cayley_ball,
    relative_diameter,
    relative_properness_probe,
    schwarz_milnor_probe,
    word_morphism,
)
from .cones import (
    ConeSpec,
    ConedCombing,
    ConedSpace,
    GraphCone,
    SphericalCone,
    build_coned_space,
    cone_crossings,
    cone_entry_profile,
    extend_bicombing,
    parse_cone_spec,
    spherical_cone_distance,
    validate_cone_spec,
)
from .treespaces import (
    HNN,
    Amalgam,
    CombinedCombing,
    Prong,
    SpikeSpace,
    TreeOfSpaces,
    build_coalescence,
    build_pushout,
    build_spike,
    canonical_family,
    combine_bicombing,
    equivariant_combing_check,
    equivariant_family_check,
    glue_spaces,
    parse_tree_of_spaces,
    stabilizer_report,
    structural_report,
    subdivide_ball,
    transported_family,
)
from .certify import (
    CertReport,
    SamplePlan,
    ThetaTable,
    check_bounded,
    check_cc_full,
    check_consistency,
    check_forward_backward,
    check_gcc,
    check_quasigeodesic,
    check_thinness,
    cross_check_sufficiency,
    replay_witness,
)
from .configio import ScenarioConfig, config_from_dict, load_config
from .scenarios import describe, get_scenario, list_scenarios, run_scenario

__version__ = "0.1.0"

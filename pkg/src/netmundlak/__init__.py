"""Doubly robust treatment-effect estimation under within-group network
interference: group-level balancing statistics, graph-convolution nuisance
models, overlap trimming, and network HAC inference, plus a seeded
simulation laboratory and comparison baselines."""

from .balance import (
    BalancingStatistic,
    GroupData,
    GroupedPopulation,
    balancing_statistic,
    local_statistic,
    merge_population,
    node_features,
    standardize_features,
)
from .baselines import OlsFit, gnn_only_estimate, mundlak_ols
from .errors import (
    CalibrationError,
    ConfigError,
    DataError,
    DivergenceError,
    EmptyOverlapError,
    EstimationError,
    MissingLevelError,
)
from .estimator import (
    EffectEstimate,
    NuisanceEstimates,
    OverlapSet,
    effect_from_nuisances,
    fit_nuisances,
    gme_gnn_estimate,
    group_aggregate,
    overlap_flags,
    unit_dr,
)
from .exposure import (
    ExposureAssignment,
    any_treated_neighbor,
    assign_exposure,
    joint_four_level,
    neighbor_threshold,
    own_treatment,
)
from .gcn import (
    GcnConfig,
    GcnModel,
    NormalizedAdjacency,
    dump_model,
    fit_outcome,
    fit_propensity,
    forward,
    gradient_check,
    normalize_adjacency,
    train,
)
from .graphs import (
    Graph,
    GraphStats,
    bfs_distances,
    graph_stats,
    neighborhood,
    ws_generate,
)
from .hac import (
    BandwidthPlan,
    HacVariance,
    bandwidth,
    hac_variance,
    plan_bandwidths,
    standard_error,
)
from .simlab import (
    DgpParams,
    MethodResult,
    MetricsSummary,
    OracleTruth,
    ReplicationTruth,
    Scenario,
    SimulationResult,
    calibrate_gamma0,
    flat_propensities,
    format_summary_table,
    generate_population,
    generate_replication,
    oracle_nuisances,
    oracle_truth,
    run_scenario,
    solve_intercept,
    zero_outcomes,
)

__version__ = "0.1.0"

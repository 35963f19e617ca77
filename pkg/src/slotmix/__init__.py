"""Average-consensus mixing on random geometric topologies under SIR scheduling."""

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateVertexError,
    DisconnectedGraphError,
    InvalidArgument,
    NoPartnerError,
    SearchFailure,
    SizeLimitError,
    SlotmixError,
)
from .geometry import PointSet, Tiling, point_set_from_coords, sample_points, torus_distance
from .harness import (
    ExperimentConfig,
    ScalingRecord,
    SlopeFit,
    export,
    fit_slope,
    load_config,
    mixing_proxy,
    parse_config,
    rate_tradeoff,
    read_records,
    run_sweep,
    slot_mixing_time,
)
from .mac import (
    RadioConfig,
    TransmissionSchedule,
    greedy_schedule,
    guard_zone_lower_bound,
    lattice_schedule,
    min_theta_search,
    validate_schedule,
)
from .spectral import (
    WalkMatrix,
    conductance_bruteforce,
    conductance_halfspace,
    empirical_mixing_time,
    second_eigenvalue,
    spectral_gap,
)
from .topology import (
    TopologyGraph,
    build_cluster_graph,
    build_disk_graph,
    build_longrange_graph,
    critical_radius,
)

__version__ = "0.1.0"

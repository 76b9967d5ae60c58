"""Theta-graphs, TD-Delaunay triangulations and online local routing on them."""
from .errors import (
    ContractViolation,
    CorridorExhausted,
    DeadEnd,
    DegenerateInputError,
    InvariantViolation,
    LocalityError,
    ThetaRouteError,
)
from .geometry import (
    CanonicalTriangle,
    OrientedConeLine,
    Point,
    Side,
    bisector_projection,
    canonical_triangle,
    clockwise_angle,
    cone_index,
    contains,
    side_of_line,
)
from .graphs import (
    FaceList,
    ThetaGraph,
    brute_force_edges,
    build_theta_graph,
    certify_empty_triangle,
    extract_faces,
    union_is_theta6,
)
from .routing import (
    NeighborhoodView,
    RouteTrace,
    SourceMemory,
    bose_negative_step,
    constmem_negative_step,
    forward_step,
    make_view,
    memoryless_negative_step,
    route,
    side_step,
    theta_step,
)
from .oracle import certify_trace, corridor_boundary, shortest_path, spanning_ratio
from .poisson import (
    MomentEstimates,
    Window,
    forward_moments,
    predicted_average,
    predicted_ratio,
    sample_poisson,
)
from .experiment import ExperimentConfig, RatioStats, ratio_experiment

__version__ = "0.1.0"

"""Near-uniform edge sampling in the adjacency-list query model, with amortized preprocessing."""

__version__ = "0.1.0"

from .alias import AliasTable, build_alias, sample_alias
from .degree import (
    DegreeEstimate,
    ExactDegreeEstimator,
    SublinearDegreeEstimator,
    estimate_avg_degree_exact,
    estimate_avg_degree_sublinear,
)
from .distributions import EdgeDistribution, pointwise_deviation, tvd, uniform_distribution
from .exceptions import (
    EmptyGraphError,
    EstimatorBudgetExceeded,
    GraphFormatError,
    GraphValidationError,
    IterationCapExceeded,
    PreprocessingFailure,
    StateMismatchError,
    SubedgeError,
)
from .graph import Graph, gen_graph, load_graph, save_graph
from .oracle import QueryCounts, QueryOracle
from .sampler import (
    Fail,
    OrientedEdge,
    SamplerConfig,
    SamplerState,
    UniformEdgeSampler,
    exact_distribution,
    preprocess,
    sample_edge,
    sample_heavy,
    sample_light,
)

__all__ = [
    "AliasTable",
    "build_alias",
    "sample_alias",
    "DegreeEstimate",
    "ExactDegreeEstimator",
    "SublinearDegreeEstimator",
    "estimate_avg_degree_exact",
    "estimate_avg_degree_sublinear",
    "EdgeDistribution",
    "pointwise_deviation",
    "tvd",
    "uniform_distribution",
    "EmptyGraphError",
    "EstimatorBudgetExceeded",
    "GraphFormatError",
    "GraphValidationError",
    "IterationCapExceeded",
    "PreprocessingFailure",
    "StateMismatchError",
    "SubedgeError",
    "Graph",
    "gen_graph",
    "load_graph",
    "save_graph",
    "QueryCounts",
    "QueryOracle",
    "Fail",
    "OrientedEdge",
    "SamplerConfig",
    "SamplerState",
    "UniformEdgeSampler",
    "exact_distribution",
    "preprocess",
    "sample_edge",
    "sample_heavy",
    "sample_light",
]

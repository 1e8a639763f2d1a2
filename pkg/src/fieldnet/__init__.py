"""Optimal field designs with blocking structures and network interference."""

from .criterion import CriterionResult, as_criterion, evaluate_design, pseudo_inverse, relative_efficiency
from .layout import ConfigurationError, FactorLabels, FieldLayout, build_layout, centroid, rothamsted_layout, unit_factors
from .model import (
    MODEL_NAMES,
    Design,
    ModelMatrix,
    ModelSpec,
    build_model_matrix,
    information_matrix,
    nuisance_rank,
)
from .network import NetworkGraph, build_farmer_graph, build_king_graph, load_graph, save_graph, zero_graph
from .objective import ModelContext
from .optimizer import (
    InitializationError,
    OptimizerConfig,
    OptimizerResult,
    brute_force_optimum,
    exchange_pass,
    interchange_pass,
    optimize,
    random_design,
)

__version__ = "0.1.0"

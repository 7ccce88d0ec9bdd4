"""Hyperspectral unmixing with graph-regularized, sparseness-constrained NMF."""

from .core import (
    AbundanceMatrix,
    DegenerateInputError,
    EndmemberMatrix,
    HyperspectralScene,
    NumericalFailure,
    ParameterError,
    SumToOne,
    UnmixConfig,
    Variant,
    column_normalize,
    validate_scene,
)
from .graph import PixelGraph, graph_regularizer, knn_graph, laplacian
from .metrics import EvaluationReport, aad, evaluate, match_endmembers, sad
from .simdata import (
    GroundTruthMap,
    SimulatedScene,
    SimulationConfig,
    SpectralLibrary,
    add_noise,
    downsample,
    generate_label_map,
    rasterize,
    simulate,
    synthesize_library,
)
from .sparseness import (
    SMeasureParams,
    s_measure,
    s_measure_gradient,
    sparseness_cost,
    sparseness_cost_gradient,
)
from .unmixing import Objective, Termination, UnmixResult, init_factors, objective, solve, update_step

__version__ = "0.1.0"

"""Tensor-train cross-approximation hyperparameter search toolkit.

Layers, bottom up: statevector kernels (`quantum`), maximal-volume row
selection (`maxvol`), the two optimizers (`ttopt`, `gridsearch`) over a
shared grid vocabulary (`space`), benchmark functions (`objectives`), the
classifier testbed (`data`, `model`), and the experiment driver
(`harness`, `cli`).
"""

from .data import Dataset, load_csv, save_csv, synthetic_cars
from .gridsearch import GsConfig, grid_optimize
from .harness import (
    ExperimentConfig,
    ModelOptions,
    SuiteReport,
    compare,
    load_report_csv,
    run_suite,
)
from .maxvol import RowSelection, ScoreMatrix, maxvol, volume
from .model import ModelSpec, TrainConfig, build, make_accuracy_objective, train
from .objectives import BenchmarkFn, make_benchmark
from .quantum import QuantumLayerSpec, backend_name, forward, forward_batch, gradient
from .report import ObjectiveFailure, TrialReport
from .space import AxisSpec, GridPoint, SearchSpace
from .ttopt import TtConfig, tt_optimize

__version__ = "0.1.0"

__all__ = [
    "AxisSpec",
    "BenchmarkFn",
    "Dataset",
    "ExperimentConfig",
    "GridPoint",
    "GsConfig",
    "ModelOptions",
    "ModelSpec",
    "ObjectiveFailure",
    "QuantumLayerSpec",
    "RowSelection",
    "ScoreMatrix",
    "SearchSpace",
    "SuiteReport",
    "TrainConfig",
    "TrialReport",
    "TtConfig",
    "backend_name",
    "build",
    "compare",
    "forward",
    "forward_batch",
    "gradient",
    "grid_optimize",
    "load_csv",
    "load_report_csv",
    "make_accuracy_objective",
    "make_benchmark",
    "maxvol",
    "run_suite",
    "save_csv",
    "synthetic_cars",
    "train",
    "tt_optimize",
    "volume",
    "__version__",
]

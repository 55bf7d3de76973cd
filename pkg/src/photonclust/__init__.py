"""Biclustering with simulated photonic samplers.

Two sampling backends drive the same biclustering heuristics: a
boson-sampling route built on permanents of a dilated unitary, and a
Gaussian route built on hafnians and torontonians of a scaled adjacency
matrix.  Synthetic planted-block datasets and a reproducible experiment
harness round out the package.
"""

__version__ = "0.1.0"

from .biclustering import (
    AnnealSchedule,
    Bicluster,
    bs_bicluster_main,
    find_bicluster_sa,
    gbs_bicluster_main,
    get_rows,
    pad_rectangular,
    success_estimate,
)
from .boson_sampling import build_input, dilate, enumerate_distribution, sample
from .datasets import Dataset, GroundTruth, generate, load_csv, save_csv
from .errors import CapacityError, NumericalError
from .gbs import build_program, chain_rule_sample, threshold_distribution
from .harness import ExperimentConfig, analyze, load_config, run_experiment
from .matrix_functions import hafnian, permanent, torontonian

__all__ = [
    "AnnealSchedule",
    "Bicluster",
    "CapacityError",
    "Dataset",
    "ExperimentConfig",
    "GroundTruth",
    "NumericalError",
    "analyze",
    "bs_bicluster_main",
    "build_input",
    "build_program",
    "chain_rule_sample",
    "dilate",
    "enumerate_distribution",
    "find_bicluster_sa",
    "gbs_bicluster_main",
    "generate",
    "get_rows",
    "hafnian",
    "load_config",
    "load_csv",
    "pad_rectangular",
    "permanent",
    "run_experiment",
    "sample",
    "save_csv",
    "success_estimate",
    "threshold_distribution",
    "torontonian",
    "__version__",
]

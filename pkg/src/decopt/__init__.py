"""Decentralized stochastic first-order optimization with gradient tracking."""

from .mixing import MixingMatrix, lazy_laplacian_weights, metropolis_weights, spectral_gap
from .objectives import LogisticObjective, QuadraticObjective, heterogeneous_partition, two_gaussians
from .simulator import ExperimentConfig, Trace, compare_experiments, run_experiment
from .topology import Topology, random_geometric

__all__ = [
    "ExperimentConfig",
    "LogisticObjective",
    "MixingMatrix",
    "QuadraticObjective",
    "Topology",
    "Trace",
    "compare_experiments",
    "heterogeneous_partition",
    "lazy_laplacian_weights",
    "metropolis_weights",
    "random_geometric",
    "run_experiment",
    "spectral_gap",
    "two_gaussians",
]

"""Bayesian optimization with Gaussian-process surrogates.

Exact GP regression, six acquisition functions (EI, PoI, LCB, MES, HvPoI,
PoF), constrained multi-objective search, HMC hyperparameter
marginalization and maximin Latin hypercube initial designs.
"""

__version__ = "0.1.0"

from gpopt._backend import BACKEND
from gpopt.acquisition import AcquisitionSpec
from gpopt.bo import BOConfig, BOHistory, DataScaler, HMCConfig, Objective, bayesian_optimize, incumbent
from gpopt.design import min_distance, random_lhs, scale_design, tplhd
from gpopt.domain import ContinuousParameter, Domain
from gpopt.gp import GPModel, Kernel, fit, hmc_sample, optimize_hyperparameters
from gpopt.optimizer import OptimizerConfig, optimize_acquisition
from gpopt.pareto import ParetoFront, cell_decomposition, exclusive_hypervolume, hypervolume, pareto_front

__all__ = [
    "BACKEND",
    "AcquisitionSpec",
    "BOConfig",
    "BOHistory",
    "ContinuousParameter",
    "DataScaler",
    "Domain",
    "GPModel",
    "HMCConfig",
    "Kernel",
    "Objective",
    "OptimizerConfig",
    "ParetoFront",
    "bayesian_optimize",
    "cell_decomposition",
    "exclusive_hypervolume",
    "fit",
    "hmc_sample",
    "hypervolume",
    "incumbent",
    "min_distance",
    "optimize_acquisition",
    "optimize_hyperparameters",
    "pareto_front",
    "random_lhs",
    "scale_design",
    "tplhd",
]

"""Sparse Laplacian shrinkage: penalized least squares with a concave sparsity
penalty and a graph Laplacian quadratic that smooths correlated predictors."""

from .dataset import (RawDataset, StandardizedDataset, coefficients_to_original_scale,
                      load_csv, standardize, standardize_arrays)
from .errors import NumericalError, SlsError, ValidationError
from .graph import (AdjacencyMatrix, AdjacencyScheme, build_adjacency, clique_adjacency,
                    correlations, fisher_cutoff, partition_adjacency)
from .laplacian import Laplacian, augment, build_laplacian, is_unbiased, laplacian_quadratic
from .oracle import SupportSet, diagnose, oracle_estimator, target_and_bias, two_predictor
from .penalty import PenaltyConfig, penalty_derivative, penalty_value, univariate_minimize
from .solver import FitOptions, SlsFit, SlsHyperparams, SlsPath, fit, fit_path, kkt_check
from .tuning import CvResult, cv_select, default_grid

__version__ = "0.1.0"

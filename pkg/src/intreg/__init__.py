"""Interval regression: hinge/AFT losses, seven models and a 5-fold benchmark."""

from .losses import (AftLossSpec, CensoringKind, Distribution, HingeLossSpec, IntervalTarget, SQUARED_HINGE,
                     aft_grad_hess, aft_loss, hinge_loss, hinge_subgrad, mean_squared_hinge_error)
from .data import (Dataset, FoldAssignment, SynthSpec, generate_synthetic, load_csv, make_folds,
                   normalize_train_test, save_csv)
from .baselines import best_constant, candidate_set, train_constant, train_knn
from .linear import fit_linear_at_lambda, fit_linear_path_cv
from .tree import split_search, train_mmit
from .forest import compute_weights, train_mmif
from .mlp import MlpConfig, train_mlp
from .boosting import BoostConfig, train_gbm_aft, transform_targets_exp

__version__ = "0.1.0"

"""Regularised inversion of feed-forward networks whose activations are
proximal maps: Bregman data terms, TV and norm priors, primal-dual and
coordinate-descent solvers, a Landweber baseline, and the experiment
harness behind the ``invert`` command line tool."""

from ._conv import BACKEND as kernel_backend
from .bregman import (
    BregmanLoss,
    SubgradientViolation,
    alpha_schedule,
    burbea_rao,
    error_bound_rhs,
    symmetric_bregman,
)
from .data import NoiseSpec, add_noise, center_dataset, circle_phantom, psnr, synthetic_shapes
from .linops import Conv2d, ConvTranspose2d, DenseAffine, operator_norm_sq
from .network import Layer, Network
from .penalties import BoxIndicator, L1Penalty, NonNegIndicator, ZeroPenalty
from .regularizers import L1Norm, PenaltyReg, SquaredL2, TotalVariation
from .rng import Prng
from .solvers import (
    ConstructionError,
    DivergenceError,
    PdhgConfig,
    RateBoundError,
    RateRow,
    SolveReport,
    coordinate_descent_invert,
    landweber_invert,
    lifted_objective,
    make_rate_problem,
    pdhg_invert_perceptron,
    rate_experiment,
    sequential_invert,
)
from .training import TrainConfig, backprop_mse, train_conv_autoencoder, train_dense_autoencoder
from .tv import div_field, grad_image, project_dual_ball, tv_norm

__version__ = "0.1.0"

__all__ = [
    "BoxIndicator",
    "BregmanLoss",
    "Conv2d",
    "ConvTranspose2d",
    "ConstructionError",
    "DenseAffine",
    "DivergenceError",
    "L1Norm",
    "L1Penalty",
    "Layer",
    "Network",
    "NoiseSpec",
    "NonNegIndicator",
    "PdhgConfig",
    "PenaltyReg",
    "Prng",
    "RateBoundError",
    "RateRow",
    "SolveReport",
    "SquaredL2",
    "SubgradientViolation",
    "TotalVariation",
    "TrainConfig",
    "ZeroPenalty",
    "add_noise",
    "alpha_schedule",
    "backprop_mse",
    "burbea_rao",
    "center_dataset",
    "circle_phantom",
    "coordinate_descent_invert",
    "div_field",
    "error_bound_rhs",
    "grad_image",
    "kernel_backend",
    "landweber_invert",
    "lifted_objective",
    "make_rate_problem",
    "operator_norm_sq",
    "pdhg_invert_perceptron",
    "project_dual_ball",
    "psnr",
    "rate_experiment",
    "sequential_invert",
    "symmetric_bregman",
    "synthetic_shapes",
    "train_conv_autoencoder",
    "train_dense_autoencoder",
    "tv_norm",
]

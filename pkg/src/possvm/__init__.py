"""Probabilistic, possibilistic and SVM classifiers under one likelihood view.

The possibilistic trainer maximises the interclass margin directly; the SVM
reaches the same hyperplane through its dual.  Both work in input space or,
through a kernel, in feature space.
"""

from .core import (Dataset, KernelModel, KernelSpec, LinearModel, Sample, TrainingReport,
                   decision_value, gram_matrix, kernel_decision_value, kernel_eval)
from .errors import (DegenerateError, DivergedError, InvalidInputError, ModelFileError,
                     ParseError, PossvmError, UnsupportedOperationError)
from .oracle import brute_force_max_margin_2d, enumerate_1d, finite_diff_gradient
from .possibilistic import (PossTrainConfig, kernel_margin, margin, optimal_bias,
                            train_possibilistic_kernel, train_possibilistic_linear)
from .probabilistic import (MulticlassModel, ProbTrainConfig, class_posteriors,
                            cross_entropy_gradient, predict_class, train_probabilistic)
from .svm import SvmConfig, kkt_violation, svm_bias, train_svm, weight_from_alphas
from .uncertainty import (SoftminConfig, TNormSpec, cross_entropy_loss,
                          generalized_log_likelihood, possibilistic_objective, sigmoid,
                          soft_max, soft_min, soft_possibilistic_objective, softmax,
                          tnorm_reduce)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DegenerateError",
    "DivergedError",
    "InvalidInputError",
    "KernelModel",
    "KernelSpec",
    "LinearModel",
    "ModelFileError",
    "MulticlassModel",
    "ParseError",
    "PossTrainConfig",
    "PossvmError",
    "ProbTrainConfig",
    "Sample",
    "SoftminConfig",
    "SvmConfig",
    "TNormSpec",
    "TrainingReport",
    "UnsupportedOperationError",
    "brute_force_max_margin_2d",
    "class_posteriors",
    "cross_entropy_gradient",
    "cross_entropy_loss",
    "decision_value",
    "enumerate_1d",
    "finite_diff_gradient",
    "generalized_log_likelihood",
    "gram_matrix",
    "kernel_decision_value",
    "kernel_eval",
    "kernel_margin",
    "kkt_violation",
    "margin",
    "optimal_bias",
    "possibilistic_objective",
    "predict_class",
    "sigmoid",
    "soft_max",
    "soft_min",
    "soft_possibilistic_objective",
    "softmax",
    "svm_bias",
    "tnorm_reduce",
    "train_possibilistic_kernel",
    "train_possibilistic_linear",
    "train_probabilistic",
    "train_svm",
    "weight_from_alphas",
]

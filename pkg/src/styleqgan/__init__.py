"""Style-based quantum generative adversarial network on a small state-vector simulator."""
from ._core import BACKEND
from .data import Preprocessor, SampleSet, fit_preprocessor, load_csv, sample_gamma, sample_gaussian3d, save_csv
from .discriminator import AdadeltaState, DiscriminatorParams, adadelta_step, init_discriminator
from .generator import STANDARD, STYLE, CircuitLayout, QuantumGenerator, standard_layout
from .metrics import covariance_eigen_agreement, histogram_kl, kl_divergence
from .noise import NoiseModel
from .simulator import DensityMatrix, GateOp, StateVector
from .training import TrainingConfig, evaluate_checkpoint, seed_streams, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AdadeltaState",
    "CircuitLayout",
    "DensityMatrix",
    "DiscriminatorParams",
    "GateOp",
    "NoiseModel",
    "Preprocessor",
    "QuantumGenerator",
    "STANDARD",
    "STYLE",
    "SampleSet",
    "StateVector",
    "TrainingConfig",
    "adadelta_step",
    "covariance_eigen_agreement",
    "evaluate_checkpoint",
    "fit_preprocessor",
    "histogram_kl",
    "init_discriminator",
    "kl_divergence",
    "load_csv",
    "sample_gamma",
    "sample_gaussian3d",
    "save_csv",
    "seed_streams",
    "standard_layout",
    "train",
]

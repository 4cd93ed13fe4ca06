"""Minimal numpy neural-network engine and the value-distribution models."""

from .autodiff import Tensor, as_tensor, no_grad
from .checkpoint import CheckpointError, load_params, load_tensors, save_params, save_tensors
from .gradcheck import GradCheckReport, gradcheck
from .models import (
    Discriminator,
    DiscriminatorConfig,
    DuelingGenerator,
    Generator,
    GeneratorConfig,
    QNetwork,
    QNetworkConfig,
    gradient_penalty,
)
from .optim import DivergenceError, Optimizer, OptimizerConfig, OptimizerKind, optimizer_step
from .params import Activation, Init, MlpSpec, ParamSet, clone_params, copy_into

__all__ = [
    "Activation", "CheckpointError", "Discriminator", "DiscriminatorConfig", "DivergenceError",
    "DuelingGenerator", "GradCheckReport", "Generator", "GeneratorConfig", "Init", "MlpSpec",
    "Optimizer", "OptimizerConfig", "OptimizerKind", "ParamSet", "QNetwork", "QNetworkConfig",
    "Tensor", "clone_params", "copy_into", "gradcheck", "gradient_penalty", "load_params",
    "as_tensor", "load_tensors", "no_grad", "optimizer_step", "save_params", "save_tensors",
]

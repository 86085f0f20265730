"""Neural ODE processes for time-varying sample distributions."""

from ._snodep import (
    Dataset,
    DomainError,
    Model,
    NumericalError,
    Pathway,
    ShapeError,
    ValidationError,
    constant_mean_mse,
    estimate_flux,
    gaussian_mse,
    generate_synthetic,
    normal_kl,
    poisson_log_prob,
    poisson_mse,
)

__all__ = [
    "Dataset",
    "DomainError",
    "Model",
    "NumericalError",
    "Pathway",
    "ShapeError",
    "ValidationError",
    "constant_mean_mse",
    "estimate_flux",
    "gaussian_mse",
    "generate_synthetic",
    "normal_kl",
    "poisson_log_prob",
    "poisson_mse",
]

"""Non-blind image deconvolution under Poisson noise.

The forward model is ``y ~ Poisson(alpha * (h * x))`` with circular
convolution. Solvers take the normalized observation ``y / alpha``.
"""

from .core import (
    BlurKernel,
    QualityReport,
    mse,
    psnr,
    quality,
    read_image,
    read_kernel,
    ssim,
    write_image,
    write_kernel,
)
from .denoise import DenoiserSpec, denoise
from .errors import (
    BudgetError,
    ConfigError,
    DeconvError,
    DomainError,
    NumericalError,
    ParseError,
    ShapeError,
    SingularityError,
)
from .pipelines import SolverConfig, default_config, run_solver
from .solvers import FilterBank, HqsSchedule, LetConfig, solve_fio, solve_vstp, solve_wiener_let
from .spectral import precompute_kernel, wiener
from .synth import DegradationSpec, blur, degrade, make_gaussian_kernel, make_trajectory_kernel
from .transforms import VstConfig, anscombe, inverse_anscombe
from .tune import TuneSpec, heuristic_schedule, tune_schedule

__version__ = "0.1.0"

__all__ = [
    "BlurKernel", "BudgetError", "ConfigError", "DeconvError", "DegradationSpec", "DenoiserSpec",
    "DomainError", "FilterBank", "HqsSchedule", "LetConfig", "NumericalError", "ParseError",
    "QualityReport", "ShapeError", "SingularityError", "SolverConfig", "TuneSpec", "VstConfig",
    "anscombe", "blur", "default_config", "degrade", "denoise", "heuristic_schedule",
    "inverse_anscombe", "make_gaussian_kernel", "make_trajectory_kernel", "mse",
    "precompute_kernel", "psnr", "quality", "read_image", "read_kernel", "run_solver",
    "solve_fio", "solve_vstp", "solve_wiener_let", "ssim", "tune_schedule", "wiener",
    "write_image", "write_kernel",
]

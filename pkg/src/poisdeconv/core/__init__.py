from .image import BlurKernel, as_image, check_same_shape
from .io import read_image, read_kernel, write_image, write_kernel
from .metrics import QualityReport, gaussian_nll, mse, poisson_nll, psnr, quality, ssim

__all__ = [
    "BlurKernel",
    "QualityReport",
    "as_image",
    "check_same_shape",
    "gaussian_nll",
    "mse",
    "poisson_nll",
    "psnr",
    "quality",
    "read_image",
    "read_kernel",
    "ssim",
    "write_image",
    "write_kernel",
]

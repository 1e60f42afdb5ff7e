"""Image quality metrics and likelihood scores.

All metrics assume a dynamic range of 1 (images normalized to [0, 1]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from ..errors import DomainError, ShapeError
from .image import as_image, check_same_shape

PSNR_CAP_DB = 100.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    ssim: float
    mse: float

    def line(self) -> str:
        return f"psnr_db={self.psnr_db!r} ssim={self.ssim!r}"


def mse(reference, estimate) -> float:
    ref = as_image(reference, "reference")
    est = as_image(estimate, "estimate")
    check_same_shape(ref, est)
    return float(np.mean((ref - est) ** 2))


def psnr(reference, estimate) -> float:
    """Peak signal-to-noise ratio in dB for unit dynamic range.

    Identical images return ``PSNR_CAP_DB`` instead of infinity.
    """
    err = mse(reference, estimate)
    if err == 0.0:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(1.0 / err))


def _gaussian_window_1d() -> np.ndarray:
    r = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    w = np.exp(-(r ** 2) / (2.0 * SSIM_SIGMA ** 2))
    return w / w.sum()


def _local_mean(img: np.ndarray, w: np.ndarray) -> np.ndarray:
    # full-size filtering, then crop to the region where the window fits
    out = correlate1d(correlate1d(img, w, axis=0, mode="reflect"), w, axis=1, mode="reflect")
    pad = SSIM_WINDOW // 2
    return out[pad:-pad, pad:-pad]


def ssim(reference, estimate) -> float:
    """Mean structural similarity over all positions where the 11x11 window fits."""
    ref = as_image(reference, "reference")
    est = as_image(estimate, "estimate")
    check_same_shape(ref, est)
    if min(ref.shape) < SSIM_WINDOW:
        raise ShapeError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, got {ref.shape}")
    if np.array_equal(ref, est):
        return 1.0
    w = _gaussian_window_1d()
    mu1 = _local_mean(ref, w)
    mu2 = _local_mean(est, w)
    s11 = _local_mean(ref * ref, w) - mu1 * mu1
    s22 = _local_mean(est * est, w) - mu2 * mu2
    s12 = _local_mean(ref * est, w) - mu1 * mu2
    num = (2 * mu1 * mu2 + SSIM_C1) * (2 * s12 + SSIM_C2)
    den = (mu1 ** 2 + mu2 ** 2 + SSIM_C1) * (s11 + s22 + SSIM_C2)
    return float(np.mean(num / den))


def quality(reference, estimate) -> QualityReport:
    return QualityReport(psnr_db=psnr(reference, estimate), ssim=ssim(reference, estimate),
                         mse=mse(reference, estimate))


def poisson_nll(observation, intensity) -> float:
    """Negative Poisson log-likelihood, dropping the ``log(y!)`` constant.

    Returns ``sum(intensity - observation * log(intensity))``.
    """
    y = as_image(observation, "observation")
    lam = as_image(intensity, "intensity")
    check_same_shape(y, lam)
    if np.any(lam <= 0):
        raise DomainError("intensity must be strictly positive everywhere")
    if np.any(y < 0):
        raise DomainError("observation must be nonnegative")
    return float(np.sum(lam - y * np.log(lam)))


def gaussian_nll(observation, intensity) -> float:
    """Sum of squared residuals, the Gaussian negative log-likelihood up to scale."""
    y = as_image(observation, "observation")
    lam = as_image(intensity, "intensity")
    check_same_shape(y, lam)
    return float(np.sum((y - lam) ** 2))

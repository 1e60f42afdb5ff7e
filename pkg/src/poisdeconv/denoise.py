"""Classical denoisers used as plug-in refinement steps.

Every denoiser maps an image to an image of the same shape, and a strength of
zero returns the input unchanged (as a copy).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.ndimage import gaussian_filter

from .core.image import as_image
from .errors import ConfigError

DENOISER_KINDS = ("identity", "gaussian_smooth", "tv_chambolle", "haar_soft")
TV_STEP = 0.25
TV_ITERATIONS = 30


@dataclass(frozen=True)
class DenoiserSpec:
    """Which denoiser to run and how hard.

    ``strength`` is the TV weight for ``tv_chambolle``, the soft threshold for
    ``haar_soft`` and the Gaussian sigma (pixels) for ``gaussian_smooth``.
    """

    kind: str = "tv_chambolle"
    strength: float = 0.0
    inner_iterations: int = TV_ITERATIONS

    def __post_init__(self):
        if self.kind not in DENOISER_KINDS:
            raise ConfigError(f"unknown denoiser kind {self.kind!r}; expected one of {DENOISER_KINDS}")
        if not self.strength >= 0:
            raise ConfigError(f"denoiser strength must be >= 0, got {self.strength}")
        if self.inner_iterations < 1:
            raise ConfigError(f"inner_iterations must be positive, got {self.inner_iterations}")

    def with_strength(self, strength: float) -> "DenoiserSpec":
        return replace(self, strength=float(strength))


def _grad(u):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:-1, :] = u[1:, :] - u[:-1, :]
    gy[:, :-1] = u[:, 1:] - u[:, :-1]
    return gx, gy


def _div(px, py):
    # negative adjoint of _grad
    d = np.zeros_like(px)
    d[0, :] = px[0, :]
    d[1:-1, :] = px[1:-1, :] - px[:-2, :]
    d[-1, :] = -px[-2, :]
    d[:, 0] += py[:, 0]
    d[:, 1:-1] += py[:, 1:-1] - py[:, :-2]
    d[:, -1] += -py[:, -2]
    return d


def total_variation(u: np.ndarray) -> float:
    """Isotropic TV with forward differences and Neumann boundary."""
    gx, gy = _grad(u)
    return float(np.sum(np.sqrt(gx ** 2 + gy ** 2)))


def tv_objective(u: np.ndarray, f: np.ndarray, tau: float) -> float:
    return 0.5 * float(np.sum((u - f) ** 2)) + tau * total_variation(u)


def tv_chambolle(f, tau: float, iterations: int = TV_ITERATIONS, step: float = TV_STEP,
                 history: list | None = None) -> np.ndarray:
    """Approximate ``argmin_u 0.5*||u - f||^2 + tau*TV(u)`` by Chambolle's dual projection.

    When ``history`` is a list, the primal objective after each iteration is appended to it.
    """
    f = as_image(f, "f")
    if tau == 0:
        return f.copy()
    if f.shape[0] < 2 or f.shape[1] < 2:
        return f.copy()
    px = np.zeros_like(f)
    py = np.zeros_like(f)
    g = f / tau
    for _ in range(iterations):
        gx, gy = _grad(_div(px, py) - g)
        norm = 1.0 + step * np.sqrt(gx ** 2 + gy ** 2)
        px = (px + step * gx) / norm
        py = (py + step * gy) / norm
        if history is not None:
            history.append(tv_objective(f - tau * _div(px, py), f, tau))
    return f - tau * _div(px, py)


class HaarBands(NamedTuple):
    approx: np.ndarray
    horizontal: np.ndarray
    vertical: np.ndarray
    diagonal: np.ndarray
    shape: tuple  # shape of the image before any padding


def haar_transform(x) -> HaarBands:
    """One-level orthonormal 2-D Haar decomposition.

    Odd dimensions are padded by reflecting the last row/column; the padding is
    dropped again by :func:`haar_inverse`.
    """
    x = as_image(x, "x")
    h, w = x.shape
    if h % 2 or w % 2:
        x = np.pad(x, ((0, h % 2), (0, w % 2)), mode="symmetric")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    return HaarBands(
        approx=(a + b + c + d) / 2.0,
        horizontal=(a - b + c - d) / 2.0,
        vertical=(a + b - c - d) / 2.0,
        diagonal=(a - b - c + d) / 2.0,
        shape=(h, w),
    )


def haar_inverse(bands: HaarBands) -> np.ndarray:
    s, hz, vt, dg = bands.approx, bands.horizontal, bands.vertical, bands.diagonal
    out = np.empty((2 * s.shape[0], 2 * s.shape[1]))
    out[0::2, 0::2] = (s + hz + vt + dg) / 2.0
    out[0::2, 1::2] = (s - hz + vt - dg) / 2.0
    out[1::2, 0::2] = (s + hz - vt - dg) / 2.0
    out[1::2, 1::2] = (s - hz - vt + dg) / 2.0
    h, w = bands.shape
    return out[:h, :w]


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def haar_soft(x, tau: float) -> np.ndarray:
    bands = haar_transform(x)
    return haar_inverse(bands._replace(
        horizontal=soft_threshold(bands.horizontal, tau),
        vertical=soft_threshold(bands.vertical, tau),
        diagonal=soft_threshold(bands.diagonal, tau),
    ))


def denoise(x, spec: DenoiserSpec) -> np.ndarray:
    x = as_image(x, "x")
    if spec.strength == 0 or spec.kind == "identity":
        return x.copy()
    if spec.kind == "tv_chambolle":
        return tv_chambolle(x, spec.strength, spec.inner_iterations)
    if spec.kind == "haar_soft":
        return haar_soft(x, spec.strength)
    if spec.kind == "gaussian_smooth":
        return gaussian_filter(x, spec.strength, mode="wrap")
    raise ConfigError(f"unknown denoiser kind {spec.kind!r}")

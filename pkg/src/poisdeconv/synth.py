"""Blur kernels and Poisson-degraded observations at a prescribed photon level."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core.image import BlurKernel, as_image
from .errors import DomainError, ShapeError
from .spectral import apply_kernel, precompute_kernel

SIGMA_RANGE = (0.1, 5.0)
KERNEL_SIZE_RANGE = (9, 45)
TRAJECTORY_STEPS = 2000

# inversion sampling at or below this rate, transformed rejection above it
POISSON_SPLIT = 30.0

_UINT64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class DegradationSpec:
    """Kernel, photon level and seed that together define one synthetic observation."""

    kernel: BlurKernel
    ppp: float
    seed: int = 0

    def __post_init__(self):
        if not (self.ppp > 0 and math.isfinite(self.ppp)):
            raise DomainError(f"ppp must be positive and finite, got {self.ppp}")
        if not 0 <= int(self.seed) <= _UINT64_MAX:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary printable parts (order matters)."""
    text = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big")


def _check_odd_size(size):
    if size < 1 or size % 2 != 1:
        raise ShapeError(f"kernel size must be a positive odd integer, got {size}")


def make_gaussian_kernel(size: int, sigma_x: float, sigma_y: float, theta: float = 0.0) -> BlurKernel:
    """Point-sampled anisotropic Gaussian rotated counter-clockwise by ``theta`` radians."""
    _check_odd_size(size)
    lo, hi = SIGMA_RANGE
    for name, s in (("sigma_x", sigma_x), ("sigma_y", sigma_y)):
        if not lo <= s <= hi:
            raise DomainError(f"{name} must lie in [{lo}, {hi}], got {s}")
    r = np.arange(size) - size // 2
    yy, xx = np.meshgrid(r, r, indexing="ij")
    c, s = math.cos(theta), math.sin(theta)
    u = c * xx + s * yy
    v = -s * xx + c * yy
    g = np.exp(-0.5 * ((u / sigma_x) ** 2 + (v / sigma_y) ** 2))
    return BlurKernel.normalized(g)


def make_trajectory_kernel(size: int, steps: int = TRAJECTORY_STEPS, jitter: float = 1.0,
                           seed: int = 0) -> BlurKernel:
    """Motion-blur kernel from a random camera trajectory.

    The velocity performs a Gaussian random walk whose increments are scaled by
    ``jitter``; positions integrate the velocity. The path is centered on its
    mean position, shrunk if needed to fit inside the ``size x size`` support,
    and splatted onto the grid with bilinear weights.
    """
    _check_odd_size(size)
    if steps < 2:
        raise DomainError(f"steps must be >= 2, got {steps}")
    if jitter < 0:
        raise DomainError(f"jitter must be >= 0, got {jitter}")
    rng = np.random.default_rng(seed)
    # at jitter=1 the endpoint spread is comparable to the support; overflow is shrunk below
    scale = jitter * 0.75 * size * math.sqrt(3.0) / steps ** 1.5
    velocity = np.cumsum(rng.standard_normal((steps, 2)), axis=0) * scale
    pos = np.cumsum(velocity, axis=0)
    pos -= pos.mean(axis=0)
    half = (size - 1) / 2.0
    extent = np.max(np.abs(pos))
    if extent > half:
        pos *= half / extent
    rows = pos[:, 0] + half
    cols = pos[:, 1] + half
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    fr = rows - r0
    fc = cols - c0
    taps = np.zeros((size, size))
    for dr, dc, w in ((0, 0, (1 - fr) * (1 - fc)), (0, 1, (1 - fr) * fc),
                      (1, 0, fr * (1 - fc)), (1, 1, fr * fc)):
        rr = r0 + dr
        cc = c0 + dc
        keep = (rr >= 0) & (rr < size) & (cc >= 0) & (cc < size) & (w > 0)
        np.add.at(taps, (rr[keep], cc[keep]), w[keep])
    return BlurKernel.normalized(taps)


def blur(x, h: BlurKernel) -> np.ndarray:
    """Circular 2-D convolution of ``x`` with ``h``, computed in the Fourier domain."""
    x = as_image(x, "x")
    hk = precompute_kernel(h, *x.shape)
    return apply_kernel(x, hk)


def alpha_for_ppp(blurred, ppp: float) -> float:
    """Photon scale ``alpha`` such that ``mean(alpha * blurred) == ppp``."""
    blurred = as_image(blurred, "blurred")
    m = float(np.mean(blurred))
    if not m > 0:
        raise DomainError(f"blurred image must have positive mean, got {m}")
    if not ppp > 0:
        raise DomainError(f"ppp must be positive, got {ppp}")
    return ppp / m


def _poisson_inversion(lam: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # sequential CDF search; rates are small so the loop is short
    u = rng.random(lam.shape)
    k = np.zeros(lam.shape)
    p = np.exp(-lam)
    cdf = p.copy()
    active = u > cdf
    while np.any(active):
        idx = np.flatnonzero(active)
        k[idx] += 1.0
        p[idx] *= lam[idx] / k[idx]
        cdf[idx] += p[idx]
        active[idx] = (u[idx] > cdf[idx]) & (p[idx] > 0)
    return k


def _poisson_ptrs(lam: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Hormann's transformed rejection with squeeze (PTRS), valid for rates >= 10."""
    out = np.empty(lam.shape)
    pending = np.arange(lam.size)
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    while pending.size:
        n = pending.size
        U = rng.random(n) - 0.5
        V = rng.random(n)
        la, bb, aa = lam[pending], b[pending], a[pending]
        us = 0.5 - np.abs(U)
        k = np.floor((2.0 * aa / us + bb) * U + la + 0.43)
        quick = (us >= 0.07) & (V <= v_r[pending])
        reject = (k < 0) | ((us < 0.013) & (V > us))
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(V * inv_alpha[pending] / (aa / (us * us) + bb))
            rhs = -la + k * loglam[pending] - gammaln(k + 1.0)
        accept = quick | (~reject & (lhs <= rhs))
        out[pending[accept]] = k[accept]
        pending = pending[~accept]
    return out


def sample_poisson(intensity, seed: int) -> np.ndarray:
    """Independent per-pixel Poisson counts with the given rates, reproducible from ``seed``."""
    lam = as_image(intensity, "intensity")
    if np.any(lam < 0):
        raise DomainError("Poisson rates must be nonnegative")
    rng = np.random.default_rng(seed)
    flat = lam.ravel()
    out = np.zeros(flat.size)
    low = flat <= POISSON_SPLIT
    if np.any(low):
        out[low] = _poisson_inversion(flat[low], rng)
    if not np.all(low):
        out[~low] = _poisson_ptrs(flat[~low], rng)
    return out.reshape(lam.shape)


def degrade(x, spec: DegradationSpec):
    """Blur ``x``, scale to ``spec.ppp`` mean photons, and draw Poisson counts.

    Returns ``(counts, alpha)``; solvers take ``counts / alpha`` as input.
    """
    x = as_image(x, "x")
    if x.min() < 0 or x.max() > 1:
        raise DomainError("clean image must lie in [0, 1]")
    blurred = blur(x, spec.kernel)
    alpha = alpha_for_ppp(blurred, spec.ppp)
    # FFT rounding can leave tiny negatives where the blurred image is 0
    intensity = np.maximum(alpha * blurred, 0.0)
    return sample_poisson(intensity, spec.seed), alpha

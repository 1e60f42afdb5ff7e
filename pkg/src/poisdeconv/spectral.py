"""Fourier-domain deconvolution engine.

Every operator here assumes circular boundary conditions, so convolution by
a kernel is diagonalized by the 2-D DFT. A kernel's transfer function is
computed once per image shape (:func:`precompute_kernel`) and reused.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .core.image import BlurKernel, as_image, check_same_shape
from .errors import DomainError, ShapeError, SingularityError

# inverse transforms of real inputs through real kernels should be real
IMAG_RESIDUE_TOL = 1e-9

_CACHE_SIZE = 64
_cache: OrderedDict = OrderedDict()
_cache_lock = threading.Lock()


def fft2(x: np.ndarray) -> np.ndarray:
    return sfft.fft2(x)


def ifft2_real(X: np.ndarray, check=True) -> np.ndarray:
    """Inverse FFT followed by a real-part cast, asserting the imaginary residue is negligible."""
    out = sfft.ifft2(X)
    if check:
        scale = max(1.0, float(np.max(np.abs(out.real), initial=0.0)))
        resid = float(np.max(np.abs(out.imag), initial=0.0))
        if resid > IMAG_RESIDUE_TOL * scale:
            raise ArithmeticError(f"imaginary residue {resid:.3e} after inverse FFT; "
                                  "kernel centering is likely wrong")
    return np.ascontiguousarray(out.real)


def periodize(taps: np.ndarray, height: int, width: int) -> np.ndarray:
    """Embed a centered stencil in a ``height x width`` grid with its center at index (0, 0)."""
    taps = np.asarray(taps, dtype=np.float64)
    kh, kw = taps.shape
    if kh > height or kw > width:
        raise ShapeError(f"kernel {taps.shape} does not fit in image {(height, width)}")
    out = np.zeros((height, width))
    out[:kh, :kw] = taps
    return np.roll(out, (-(kh // 2), -(kw // 2)), axis=(0, 1))


def stencil_transfer(taps, height: int, width: int) -> np.ndarray:
    """DFT of an arbitrary (possibly even-sized, signed) stencil centered at the origin."""
    return fft2(periodize(taps, height, width))


@dataclass(frozen=True)
class SpectralKernel:
    """Transfer function ``F(h)`` of a blur kernel on a fixed image shape, plus ``|F(h)|^2``."""

    height: int
    width: int
    transfer: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return (self.height, self.width)

    def check(self, image: np.ndarray, name="image"):
        if image.shape != self.shape:
            raise ShapeError(f"{name} shape {image.shape} does not match kernel grid {self.shape}")


def precompute_kernel(h: BlurKernel, height: int, width: int) -> SpectralKernel:
    """Transfer function of ``h`` on a ``height x width`` periodic grid.

    Results are cached by (kernel taps, height, width); the returned arrays are read-only.
    """
    key = (h.taps.tobytes(), h.size, height, width)
    with _cache_lock:
        hit = _cache.get(key)
        if hit is not None:
            _cache.move_to_end(key)
            return hit
    transfer = stencil_transfer(h.taps, height, width)
    power = transfer.real ** 2 + transfer.imag ** 2
    transfer.setflags(write=False)
    power.setflags(write=False)
    hk = SpectralKernel(height, width, transfer, power)
    with _cache_lock:
        _cache[key] = hk
        while len(_cache) > _CACHE_SIZE:
            _cache.popitem(last=False)
    return hk


def apply_kernel(x: np.ndarray, hk: SpectralKernel) -> np.ndarray:
    """Circular convolution of ``x`` with the kernel behind ``hk``."""
    hk.check(x)
    return ifft2_real(fft2(x) * hk.transfer)


def wiener(y, hk: SpectralKernel, lam: float) -> np.ndarray:
    """Regularized inverse ``(H^T H + lam I)^{-1} H^T y``.

    ``lam = 0`` is allowed when the transfer function has no zeros.
    """
    y = as_image(y, "y")
    hk.check(y, "y")
    if lam < 0:
        raise DomainError(f"Wiener regularizer must be >= 0, got {lam}")
    den = hk.power + lam
    if np.any(den == 0):
        raise SingularityError("transfer function vanishes and lam = 0; use lam > 0")
    return ifft2_real(np.conj(hk.transfer) * fft2(y) / den)


def hqs_data_step(feat_prev, feat_obs, hk: SpectralKernel, mu: float, weighting="data") -> np.ndarray:
    """Closed-form feature update of the half-quadratic splitting scheme.

    With ``weighting="data"`` (default) ``mu`` multiplies the data-fit term and
    the result minimizes ``mu*||feat_obs - H z||^2 + ||feat_prev - z||^2``::

        z = IFFT[(F(feat_prev) + mu conj(F(H)) F(feat_obs)) / (1 + mu |F(H)|^2)]

    With ``weighting="penalty"``, ``mu`` multiplies the coupling term instead and
    ``z`` minimizes ``||feat_obs - H z||^2 + mu*||feat_prev - z||^2``.
    """
    fp = as_image(feat_prev, "feat_prev")
    fo = as_image(feat_obs, "feat_obs")
    check_same_shape(fp, fo, "feature maps")
    hk.check(fp, "feat_prev")
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu}")
    if mu == 0:
        return fp.copy() if weighting == "data" else _pure_inverse(fo, hk)
    if weighting == "data":
        num = fft2(fp) + mu * np.conj(hk.transfer) * fft2(fo)
        den = 1.0 + mu * hk.power
    elif weighting == "penalty":
        num = mu * fft2(fp) + np.conj(hk.transfer) * fft2(fo)
        den = mu + hk.power
    else:
        raise DomainError(f"unknown weighting {weighting!r}")
    return ifft2_real(num / den)


def _pure_inverse(y, hk):
    return wiener(y, hk, 0.0)


def hqs_data_objective(z, feat_prev, feat_obs, hk: SpectralKernel, mu: float, weighting="data") -> float:
    """Objective minimized by :func:`hqs_data_step` under the same weighting."""
    resid = feat_obs - apply_kernel(z, hk)
    data = float(np.sum(resid ** 2))
    prox = float(np.sum((feat_prev - z) ** 2))
    if weighting == "data":
        return mu * data + prox
    return data + mu * prox


def inversion_module(y, x_prev, hk: SpectralKernel, rho: float) -> np.ndarray:
    """``(H^T H + rho I)^{-1} (H^T y + rho x_prev)``: Wiener step anchored at a previous estimate."""
    y = as_image(y, "y")
    xp = as_image(x_prev, "x_prev")
    check_same_shape(y, xp)
    hk.check(y, "y")
    if not rho > 0:
        raise DomainError(f"rho must be > 0, got {rho}")
    num = np.conj(hk.transfer) * fft2(y) + rho * fft2(xp)
    return ifft2_real(num / (hk.power + rho))

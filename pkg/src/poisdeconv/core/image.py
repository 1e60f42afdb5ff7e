"""Image and kernel containers.

Images are plain 2-D ``float64`` numpy arrays (row-major, height x width).
Kernels get a small immutable wrapper because their invariants (odd size,
nonnegative taps, unit mass) are load-bearing for every Fourier-domain
operation downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ShapeError

KERNEL_SUM_TOL = 1e-12


def as_image(a, name="image") -> np.ndarray:
    """Validate ``a`` as an image grid and return it as a float64 array.

    No copy is made when ``a`` already is a finite 2-D float64 array.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what="images") -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what} differ in shape: {a.shape} vs {b.shape}")


@dataclass(frozen=True)
class BlurKernel:
    """Odd-sized, nonnegative, unit-mass convolution stencil.

    The center tap sits at index ``(size // 2, size // 2)``.
    """

    taps: np.ndarray = field(repr=False)

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float64)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1]:
            raise ShapeError(f"kernel must be square, got shape {taps.shape}")
        if taps.shape[0] % 2 != 1:
            raise ShapeError(f"kernel size must be odd, got {taps.shape[0]}")
        if not np.all(np.isfinite(taps)):
            raise DomainError("kernel taps must be finite")
        if np.any(taps < 0):
            raise DomainError("kernel taps must be nonnegative")
        total = taps.sum()
        if abs(total - 1.0) > KERNEL_SUM_TOL:
            raise DomainError(f"kernel taps must sum to 1, got {total!r}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    @classmethod
    def normalized(cls, taps) -> "BlurKernel":
        """Build a kernel from arbitrary nonnegative taps, rescaling to unit mass."""
        taps = np.asarray(taps, dtype=np.float64)
        total = taps.sum()
        if not total > 0:
            raise DomainError("kernel taps must have positive mass")
        return cls(taps / total)

    @classmethod
    def delta(cls, size=1) -> "BlurKernel":
        taps = np.zeros((size, size))
        taps[size // 2, size // 2] = 1.0
        return cls(taps)

    @property
    def size(self) -> int:
        return self.taps.shape[0]

    def __eq__(self, other):
        if not isinstance(other, BlurKernel):
            return NotImplemented
        return np.array_equal(self.taps, other.taps)

    def __hash__(self):
        return hash(self.taps.tobytes())

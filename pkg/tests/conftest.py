import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def dense_circulant(taps, height, width):
    """Explicit (HW x HW) matrix of circular convolution with a centered stencil."""
    taps = np.asarray(taps, dtype=float)
    kh, kw = taps.shape
    ch, cw = kh // 2, kw // 2
    n = height * width
    M = np.zeros((n, n))
    for i in range(height):
        for j in range(width):
            row = i * width + j
            for a in range(kh):
                for b in range(kw):
                    src = ((i - (a - ch)) % height) * width + (j - (b - cw)) % width
                    M[row, src] += taps[a, b]
    return M

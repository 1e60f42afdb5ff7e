"""Anscombe variance-stabilizing transform and its inverses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

INVERSE_KINDS = ("algebraic", "asymptotically_unbiased")


@dataclass(frozen=True)
class VstConfig:
    inverse_kind: str = "algebraic"

    def __post_init__(self):
        if self.inverse_kind not in INVERSE_KINDS:
            raise ConfigError(f"inverse_kind must be one of {INVERSE_KINDS}, got {self.inverse_kind!r}")


def anscombe(counts) -> np.ndarray:
    """Elementwise ``2 * sqrt(v + 3/8)``; maps Poisson data to roughly unit variance."""
    v = np.asarray(counts, dtype=np.float64)
    if np.any(v < 0):
        raise DomainError("Anscombe transform requires nonnegative input")
    return 2.0 * np.sqrt(v + 0.375)


def inverse_anscombe(stabilized, config: VstConfig = VstConfig()) -> np.ndarray:
    """Invert :func:`anscombe`, clamping the result at 0.

    The algebraic inverse ``(t/2)^2 - 3/8`` is exact; the asymptotically
    unbiased one ``(t/2)^2 - 1/8`` corrects the mean at moderate counts.
    """
    t = np.maximum(np.asarray(stabilized, dtype=np.float64), 0.0)
    offset = 0.375 if config.inverse_kind == "algebraic" else 0.125
    return np.maximum((t / 2.0) ** 2 - offset, 0.0)

"""Poisson deconvolution solvers built on the Fourier engine.

Three algorithms share the same inputs (the normalized observation
``y_norm = counts / alpha`` and the blur kernel):

* :func:`solve_wiener_let`: a bank of Wiener filters with different
  regularizers, each cleaned by Haar soft-thresholding, linearly combined.
* :func:`solve_vstp`: one Wiener estimate refined by repeated mixing with the
  previous estimate and denoising in the Anscombe domain.
* :func:`solve_fio`: half-quadratic splitting in the feature space of a
  linear filter bank, unrolled for a fixed number of iterations with a
  plug-in denoiser as the prior step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core.image import BlurKernel, as_image
from .denoise import DenoiserSpec, denoise, haar_soft, total_variation
from .errors import ConfigError, NumericalError, ShapeError
from .spectral import (
    SpectralKernel,
    fft2,
    hqs_data_step,
    ifft2_real,
    precompute_kernel,
    stencil_transfer,
    wiener,
)
from .transforms import VstConfig, anscombe, inverse_anscombe

AGGREGATE_EPS = 1e-8
FIO_ORDERS = ("joint", "per_feature")
WEIGHTINGS = ("data", "penalty")


@dataclass(frozen=True)
class FilterBank:
    """Linear convolution stencils ``F_i`` defining the feature space.

    Stencils may be even-sized and signed; the center of a stencil of size
    ``n`` along an axis is at index ``n // 2``.
    """

    stencils: tuple
    names: tuple = ()

    def __post_init__(self):
        stencils = tuple(np.array(s, dtype=np.float64, ndmin=2) for s in self.stencils)
        if not stencils:
            raise ConfigError("filter bank must contain at least one stencil")
        for s in stencils:
            if s.ndim != 2 or not np.all(np.isfinite(s)):
                raise ConfigError("stencils must be finite 2-D arrays")
            s.setflags(write=False)
        names = tuple(self.names) or tuple(f"f{i}" for i in range(len(stencils)))
        if len(names) != len(stencils):
            raise ConfigError("names and stencils differ in length")
        object.__setattr__(self, "stencils", stencils)
        object.__setattr__(self, "names", names)

    @property
    def count(self) -> int:
        return len(self.stencils)

    @property
    def includes_identity(self) -> bool:
        return any(s.shape == (1, 1) and s[0, 0] == 1.0 for s in self.stencils)

    def transfers(self, height: int, width: int) -> list:
        return [stencil_transfer(s, height, width) for s in self.stencils]

    @classmethod
    def identity(cls) -> "FilterBank":
        return cls(([[1.0]],), ("identity",))

    @classmethod
    def deriv3(cls) -> "FilterBank":
        """Identity plus forward differences along rows and columns."""
        return cls(([[1.0]], [[-1.0, 1.0]], [[-1.0], [1.0]]), ("identity", "dx", "dy"))

    @classmethod
    def named(cls, name: str) -> "FilterBank":
        banks = {"identity": cls.identity, "deriv3": cls.deriv3}
        if name not in banks:
            raise ConfigError(f"unknown filter bank {name!r}; expected one of {sorted(banks)}")
        return banks[name]()


@dataclass(frozen=True)
class HqsSchedule:
    """Per-iteration penalties ``mu`` (shared by all features) and the prior weight ``lam``.

    ``weighting`` selects which side of the data step ``mu`` multiplies; see
    :func:`poisdeconv.spectral.hqs_data_step`.
    """

    mu: tuple
    lam: float
    weighting: str = "data"

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        if not mu:
            raise ConfigError("schedule needs at least one iteration")
        if not all(m > 0 and math.isfinite(m) for m in mu):
            raise ConfigError(f"all penalties must be positive and finite, got {mu}")
        if not self.lam >= 0:
            raise ConfigError(f"prior weight must be >= 0, got {self.lam}")
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def K(self) -> int:
        return len(self.mu)


@dataclass(frozen=True)
class LetConfig:
    """Wiener regularizers, per-branch Haar thresholds and the combination mode."""

    lambdas: tuple
    thresholds: tuple
    weight_mode: str = "oracle"

    def __post_init__(self):
        lambdas = tuple(float(v) for v in self.lambdas)
        thresholds = tuple(float(v) for v in self.thresholds)
        if not lambdas:
            raise ConfigError("LET needs at least one branch")
        if len(thresholds) != len(lambdas):
            raise ConfigError("one threshold per Wiener branch is required")
        if any(v <= 0 for v in lambdas) or any(b <= a for a, b in zip(lambdas, lambdas[1:])):
            raise ConfigError(f"lambdas must be positive and strictly increasing, got {lambdas}")
        if any(t < 0 for t in thresholds):
            raise ConfigError("thresholds must be >= 0")
        if self.weight_mode not in ("oracle", "fixed"):
            raise ConfigError(f"weight_mode must be 'oracle' or 'fixed', got {self.weight_mode!r}")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "thresholds", thresholds)


def let_branches(y_norm, h: BlurKernel, cfg: LetConfig) -> list:
    y = as_image(y_norm, "y_norm")
    hk = precompute_kernel(h, *y.shape)
    return [haar_soft(wiener(y, hk, lam), tau) for lam, tau in zip(cfg.lambdas, cfg.thresholds)]


def let_weights(branches: Sequence[np.ndarray], oracle_x) -> np.ndarray:
    """Least-squares combination weights fitting the branches to ``oracle_x``."""
    target = as_image(oracle_x, "oracle_x")
    B = np.stack([b.ravel() for b in branches], axis=1)
    a, *_ = np.linalg.lstsq(B, target.ravel(), rcond=None)
    return a


def solve_wiener_let(y_norm, h: BlurKernel, cfg: LetConfig, oracle_x=None) -> np.ndarray:
    """Linear combination of thresholded Wiener estimates.

    In ``oracle`` mode the weights minimize the squared error against
    ``oracle_x``; in ``fixed`` mode every branch gets weight ``1/K``.
    """
    if cfg.weight_mode == "oracle" and oracle_x is None:
        raise ConfigError("oracle weight mode requires oracle_x")
    branches = let_branches(y_norm, h, cfg)
    if cfg.weight_mode == "oracle":
        a = let_weights(branches, oracle_x)
    else:
        a = np.full(len(branches), 1.0 / len(branches))
    return sum(w * b for w, b in zip(a, branches))


def vstp_weights(T: int) -> list:
    """Default mixing weights ``lambda_t = 1 - 1/(t+1)`` for ``t = 1..T``."""
    return [1.0 - 1.0 / (t + 1) for t in range(1, T + 1)]


def vst_denoise(x, alpha: float, denoiser: DenoiserSpec, use_vst=True,
                vst: VstConfig = VstConfig()) -> np.ndarray:
    """Denoise a normalized estimate at photon scale ``alpha``.

    With the VST the denoiser runs on ``anscombe(alpha * x)`` where the noise
    is roughly unit-variance. Without it, the denoiser runs on the counts
    ``alpha * x`` with its strength scaled by the local Anscombe slope at the
    mean count, ``sqrt(mean + 3/8)``, so both paths denoise equally hard.
    """
    counts = alpha * np.maximum(x, 0.0)
    if use_vst:
        return inverse_anscombe(denoise(anscombe(counts), denoiser), vst) / alpha
    scale = math.sqrt(float(np.mean(counts)) + 0.375)
    return denoise(counts, denoiser.with_strength(denoiser.strength * scale)) / alpha


def solve_vstp(y_norm, h: BlurKernel, alpha: float, denoiser: DenoiserSpec, wiener_lam: float,
               weights: Sequence[float] | None = None, iterations: int | None = None,
               use_vst: bool = True, vst: VstConfig = VstConfig()) -> np.ndarray:
    """Wiener estimate followed by ``T`` rounds of mixing and VST-domain denoising.

    Pass either explicit mixing ``weights`` (one per round, each in [0, 1]) or
    an ``iterations`` count for the default schedule.
    """
    y = as_image(y_norm, "y_norm")
    if weights is None:
        weights = vstp_weights(iterations or 0)
    elif iterations is not None and iterations != len(weights):
        raise ConfigError("iterations disagrees with the number of mixing weights")
    if any(not 0.0 <= w <= 1.0 for w in weights):
        raise ConfigError(f"mixing weights must lie in [0, 1], got {list(weights)}")
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    hk = precompute_kernel(h, *y.shape)
    x_wiener = wiener(y, hk, wiener_lam)
    x = x_wiener
    for w in weights:
        x_data = w * x + (1.0 - w) * x_wiener
        x = vst_denoise(x_data, alpha, denoiser, use_vst, vst)
    return x


def feature_aggregate(z_list: Sequence[np.ndarray], bank: FilterBank, eps: float = AGGREGATE_EPS,
                      transfers: list | None = None) -> np.ndarray:
    """Least-squares image from features: ``argmin_x sum_i ||F_i x - z_i||^2``.

    Solved with the Fourier-domain normal equations. The denominator is floored
    at ``eps`` so frequencies no filter passes do not blow up.
    """
    if len(z_list) != bank.count:
        raise ShapeError(f"expected {bank.count} feature maps, got {len(z_list)}")
    shape = np.shape(z_list[0])
    if any(np.shape(z) != shape for z in z_list):
        raise ShapeError("feature maps must share one shape")
    if transfers is None:
        transfers = bank.transfers(*shape)
    num = sum(np.conj(t) * fft2(z) for t, z in zip(transfers, z_list))
    den = np.maximum(sum(t.real ** 2 + t.imag ** 2 for t in transfers), eps)
    return ifft2_real(num / den)


def fio_objective(x, y_norm, hk: SpectralKernel, transfers, lam: float) -> float:
    """Feature-space least squares plus ``lam * TV(x)``, a surrogate for the HQS target."""
    X = fft2(x)
    Y = fft2(y_norm)
    n = x.size
    data = 0.0
    for t in transfers:
        r = t * (Y - hk.transfer * X)
        data += float(np.sum(r.real ** 2 + r.imag ** 2)) / n
    return data + lam * total_variation(x)


def solve_fio(y_norm, h: BlurKernel, bank: FilterBank, schedule: HqsSchedule, denoiser: DenoiserSpec,
              order: str = "joint", weighting: str | None = None, warm_start_lam: float | None = None,
              trace: list | None = None, iterates: list | None = None) -> np.ndarray:
    """Unrolled feature-space half-quadratic splitting.

    Each iteration solves the per-feature data step in closed form, recombines
    the features by least squares, and applies ``denoiser`` with strength
    ``denoiser.strength * lam / mu_k``. ``order="per_feature"`` denoises each
    feature before recombining instead.

    ``weighting`` overrides ``schedule.weighting`` when given.
    ``warm_start_lam`` starts from a Wiener estimate instead of ``y_norm``.
    ``trace`` collects ``(k, mu_k, objective)`` per iteration and ``iterates``
    collects ``x^k``.
    """
    if order not in FIO_ORDERS:
        raise ConfigError(f"order must be one of {FIO_ORDERS}, got {order!r}")
    weighting = schedule.weighting if weighting is None else weighting
    if weighting not in WEIGHTINGS:
        raise ConfigError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    y = as_image(y_norm, "y_norm")
    hk = precompute_kernel(h, *y.shape)
    transfers = bank.transfers(*y.shape)
    Y = fft2(y)
    feat_obs = [ifft2_real(t * Y) for t in transfers]
    x = y.copy() if warm_start_lam is None else wiener(y, hk, warm_start_lam)
    for k, mu in enumerate(schedule.mu, start=1):
        X = fft2(x)
        z = [hqs_data_step(ifft2_real(t * X), fo, hk, mu, weighting)
             for t, fo in zip(transfers, feat_obs)]
        strength = denoiser.strength * schedule.lam / mu
        spec = denoiser.with_strength(strength)
        if order == "joint":
            x = denoise(feature_aggregate(z, bank, transfers=transfers), spec)
        else:
            x = feature_aggregate([denoise(zi, spec) for zi in z], bank, transfers=transfers)
        if not np.all(np.isfinite(x)):
            raise NumericalError("non-finite estimate in FIO iteration", iteration=k)
        if trace is not None:
            trace.append((k, mu, fio_objective(x, y, hk, transfers, schedule.lam)))
        if iterates is not None:
            iterates.append(x.copy())
    return x

"""Named solver pipelines with typed ``key=value`` configurations.

A :class:`SolverConfig` pairs a solver id with a flat parameter mapping. It is
what plan files, tuned-config files and the CLI all produce, and what
:func:`run_solver` consumes. Every solver sees the normalized observation
``y_norm = counts / alpha``; ``alpha`` and the clean image are passed along
for the solvers that need them (VSTP and oracle-weighted LET).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .core.image import BlurKernel, as_image
from .denoise import DENOISER_KINDS, DenoiserSpec, denoise
from .errors import ConfigError
from .kvconfig import format_kv, format_value, to_bool, to_float_list
from .solvers import (
    FIO_ORDERS,
    WEIGHTINGS,
    FilterBank,
    HqsSchedule,
    LetConfig,
    solve_fio,
    solve_vstp,
    solve_wiener_let,
)
from .spectral import precompute_kernel, wiener
from .transforms import INVERSE_KINDS, VstConfig
from .tune import heuristic_schedule

KERNEL_CLASSES = {"small": 9, "medium": 27, "large": 45}
SOLVER_IDS = ("identity", "wiener", "wiener_tv", "tv", "let", "vstp", "fio")


def kernel_class_of(size: int) -> str:
    """Nearest protocol class for a kernel of the given size."""
    return min(KERNEL_CLASSES, key=lambda c: abs(KERNEL_CLASSES[c] - size))


def _choice(options):
    def parse(text):
        if text not in options:
            raise ConfigError(f"expected one of {tuple(options)}, got {text!r}")
        return text
    return parse


def _positive_int(text):
    try:
        v = int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc
    if v < 0:
        raise ConfigError(f"expected a nonnegative integer, got {v}")
    return v


def _float(text):
    try:
        v = float(text)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc
    if not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {text!r}")
    return v


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else _float(text)


def _optional_floats(text):
    return None if text.strip().lower() in ("", "none") else to_float_list(text)


_DENOISER_KEYS = {
    "denoiser.kind": _choice(DENOISER_KINDS),
    "denoiser.strength": _float,
    "denoiser.iters": _positive_int,
}

PARAMETERS: dict[str, dict[str, Callable[[str], object]]] = {
    "identity": {},
    "wiener": {"wiener.lambda": _float},
    "wiener_tv": {"wiener.lambda": _float, **_DENOISER_KEYS},
    "tv": dict(_DENOISER_KEYS),
    "let": {
        "let.lambdas": to_float_list,
        "let.thresholds": to_float_list,
        "let.weights": _choice(("oracle", "fixed")),
    },
    "vstp": {
        "iters": _positive_int,
        "wiener.lambda": _float,
        "mix": _optional_floats,
        "vst": to_bool,
        "vst.inverse": _choice(INVERSE_KINDS),
        **_DENOISER_KEYS,
    },
    "fio": {
        "iters": _positive_int,
        "mu0": _float,
        "mu_ratio": _float,
        "mu": _optional_floats,
        "lambda": _float,
        "bank": _choice(("identity", "deriv3")),
        "order": _choice(FIO_ORDERS),
        "weighting": _choice(WEIGHTINGS),
        "warm_start": _optional_float,
        **_DENOISER_KEYS,
    },
}


def _plain(value):
    # numpy scalars would serialize as e.g. "np.float64(0.1)"
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(_plain(v) for v in value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


@dataclass(frozen=True)
class SolverConfig:
    """A solver id and its complete, typed parameter set."""

    solver_id: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.solver_id not in PARAMETERS:
            raise ConfigError(f"unknown solver {self.solver_id!r}; expected one of {SOLVER_IDS}")
        unknown = set(self.params) - set(PARAMETERS[self.solver_id])
        if unknown:
            raise ConfigError(f"unknown parameters for {self.solver_id}: {sorted(unknown)}")
        plain = {k: _plain(v) for k, v in sorted(self.params.items())}
        object.__setattr__(self, "params", plain)

    def __getitem__(self, key):
        return self.params[key]

    def with_params(self, params: Mapping[str, object]) -> "SolverConfig":
        return SolverConfig(self.solver_id, {**self.params, **params})

    def with_text(self, overrides: Mapping[str, str]) -> "SolverConfig":
        """Copy with values parsed from strings, as read from files or flags."""
        schema = PARAMETERS[self.solver_id]
        parsed = {}
        for key, text in overrides.items():
            if key not in schema:
                raise ConfigError(f"unknown parameter {key!r} for solver {self.solver_id}")
            parsed[key] = schema[key](text)
        return self.with_params(parsed)

    def items(self) -> dict[str, object]:
        """All settings, including the solver id, in serialization order."""
        return {"solver": self.solver_id, **self.params}

    def key(self) -> str:
        return " ".join(f"{k}={format_value(v)}" for k, v in self.params.items())


def config_to_text(cfg: SolverConfig) -> str:
    return format_kv(cfg.items())


def config_from_pairs(pairs: Mapping[str, str], ppp: float | None = None,
                      kernel_size: int | None = None) -> SolverConfig:
    """Rebuild a config from ``solver = id`` plus parameter lines.

    Missing parameters are filled from :func:`default_config` when ``ppp``
    and ``kernel_size`` are given; otherwise every parameter must be present.
    """
    pairs = dict(pairs)
    if "solver" not in pairs:
        raise ConfigError("config has no 'solver' entry")
    sid = pairs.pop("solver")
    if sid not in PARAMETERS:
        raise ConfigError(f"unknown solver {sid!r}; expected one of {SOLVER_IDS}")
    if ppp is not None and kernel_size is not None:
        return default_config(sid, ppp, kernel_size).with_text(pairs)
    missing = set(PARAMETERS[sid]) - set(pairs)
    if missing:
        raise ConfigError(f"config for {sid} is missing {sorted(missing)}")
    return SolverConfig(sid).with_text(pairs)


def default_config(solver_id: str, ppp: float, kernel_size: int) -> SolverConfig:
    """Protocol defaults for one (photon level, kernel size) cell."""
    noise = math.sqrt(10.0 / ppp)
    if solver_id == "identity":
        params = {}
    elif solver_id == "wiener":
        params = {"wiener.lambda": 0.03}
    elif solver_id == "wiener_tv":
        params = {"wiener.lambda": 0.02, "denoiser.kind": "tv_chambolle",
                  "denoiser.strength": 0.5 * noise, "denoiser.iters": 30}
    elif solver_id == "tv":
        params = {"denoiser.kind": "tv_chambolle", "denoiser.strength": 0.25 * noise,
                  "denoiser.iters": 30}
    elif solver_id == "let":
        base = 1.0 / math.sqrt(ppp)
        params = {"let.lambdas": (0.01, 0.03, 0.1),
                  "let.thresholds": (base, 0.5 * base, 0.25 * base),
                  "let.weights": "oracle"}
    elif solver_id == "vstp":
        params = {"iters": 5, "wiener.lambda": 0.03, "mix": None, "vst": True,
                  "vst.inverse": "asymptotically_unbiased", "denoiser.kind": "tv_chambolle",
                  "denoiser.strength": 1.0, "denoiser.iters": 30}
    elif solver_id == "fio":
        sched = heuristic_schedule(8, ppp, kernel_size)
        params = {"iters": sched.K, "mu0": sched.mu[0], "mu_ratio": 2.0, "mu": None,
                  "lambda": sched.lam, "bank": "deriv3", "order": "joint",
                  "weighting": sched.weighting, "warm_start": None,
                  "denoiser.kind": "tv_chambolle", "denoiser.strength": 1.0, "denoiser.iters": 30}
    else:
        raise ConfigError(f"unknown solver {solver_id!r}; expected one of {SOLVER_IDS}")
    return SolverConfig(solver_id, params)


def denoiser_of(cfg: SolverConfig) -> DenoiserSpec:
    return DenoiserSpec(cfg["denoiser.kind"], cfg["denoiser.strength"], cfg["denoiser.iters"])


def schedule_of(cfg: SolverConfig) -> HqsSchedule:
    """The FIO schedule: explicit ``mu`` if given, else ``mu0 * mu_ratio**k``."""
    mu = cfg["mu"]
    if mu is None:
        mu = [cfg["mu0"] * cfg["mu_ratio"] ** k for k in range(cfg["iters"])]
    elif len(mu) != cfg["iters"]:
        raise ConfigError(f"mu lists {len(mu)} values but iters = {cfg['iters']}")
    return HqsSchedule(tuple(mu), cfg["lambda"], cfg["weighting"])


def run_solver(cfg: SolverConfig, y_norm, h: BlurKernel, alpha: float,
               oracle_x=None) -> tuple[np.ndarray, int]:
    """Run a configured solver; returns the estimate and its iteration count."""
    y = as_image(y_norm, "y_norm")
    sid = cfg.solver_id
    if sid == "identity":
        return y.copy(), 0
    if sid == "tv":
        return denoise(y, denoiser_of(cfg)), 0
    if sid in ("wiener", "wiener_tv"):
        x = wiener(y, precompute_kernel(h, *y.shape), cfg["wiener.lambda"])
        return (x if sid == "wiener" else denoise(x, denoiser_of(cfg))), 0
    if sid == "let":
        let = LetConfig(cfg["let.lambdas"], cfg["let.thresholds"], cfg["let.weights"])
        return solve_wiener_let(y, h, let, oracle_x), 0
    if sid == "vstp":
        weights = cfg["mix"]
        x = solve_vstp(y, h, alpha, denoiser_of(cfg), cfg["wiener.lambda"], weights=weights,
                       iterations=cfg["iters"], use_vst=cfg["vst"], vst=VstConfig(cfg["vst.inverse"]))
        return x, (len(weights) if weights is not None else cfg["iters"])
    sched = schedule_of(cfg)
    x = solve_fio(y, h, FilterBank.named(cfg["bank"]), sched, denoiser_of(cfg),
                  order=cfg["order"], warm_start_lam=cfg["warm_start"])
    return x, sched.K

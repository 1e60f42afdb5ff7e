"""Validation sets, tuning-spec files and the FIO schedule search used by the harness.

Tuning-spec files are ``key = value`` lines::

    solver = fio
    objective = psnr            # or l1
    budget = 60
    seed = 0
    ppp = 30
    kernel_class = medium
    kernels = 2                 # kernels per validation image
    images = s0_shapes, n1_coins   # default: the tuning half of the suite
    grid.mu0 = 0.015, 0.03, 0.06
    grid.lambda = logspace(-2, -1, 5)
    base.iters = 8              # fixed overrides of the solver defaults

Validation kernels and observations are derived from ``(seed, "tune")`` so
they never coincide with the kernels of a bench run using the same seed.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from ..errors import ConfigError
from ..kvconfig import format_value, kv_dict, read_kv, to_float_list
from ..pipelines import KERNEL_CLASSES, PARAMETERS, default_config
from ..synth import DegradationSpec, derive_seed
from ..tune import TuneSpec, ValidationCase, tune_schedule
from .runner import load_images, observation_seed, plan_kernel
from .suite import SUITE_IDS, resolve_images, suite_paths

# Held-out split for the tuning ablation: tune on one half, score on the other.
TUNE_IDS = SUITE_IDS[0::2]
HOLDOUT_IDS = SUITE_IDS[1::2]
TUNE_BUDGET = 60
TUNE_FACTORS = (0.5, 0.7071067811865476, 1.0, 1.4142135623730951, 2.0)


def tune_validation(seed: int, ppp: float, kernel_class: str, kernels: int = 2,
                    images=None) -> list[ValidationCase]:
    """Validation cases (default: the tuning half of the suite) with their own kernels."""
    tseed = derive_seed(seed, "tune")
    loaded, skipped = load_images(suite_paths(TUNE_IDS) if images is None else images)
    if skipped:
        raise ConfigError("unreadable validation images: " + ", ".join(str(s.path) for s in skipped))
    return [ValidationCase(img, DegradationSpec(plan_kernel(tseed, kernel_class, k), ppp,
                                                observation_seed(tseed, image_id, kernel_class, k, ppp)))
            for image_id, img in loaded for k in range(kernels)]


def fio_grid(base) -> dict:
    """Log-spaced factors around the heuristic ``mu0`` and ``lambda`` plus three ratios."""
    return {
        "mu0": tuple(base["mu0"] * f for f in TUNE_FACTORS),
        "lambda": tuple(base["lambda"] * f for f in TUNE_FACTORS),
        "mu_ratio": (1.5, 2.0, 2.5),
    }


def tune_fio(seed: int, ppp: float, kernel_class: str, budget: int = TUNE_BUDGET, workers: int = 1):
    """Coordinate-descent tuning of the FIO schedule around the heuristic one."""
    base = default_config("fio", ppp, KERNEL_CLASSES[kernel_class])
    spec = TuneSpec("psnr", fio_grid(base), budget, tune_validation(seed, ppp, kernel_class),
                    base=base, seed=seed, workers=workers)
    return tune_schedule("fio", spec)


def load_tune_spec(path) -> tuple[str, TuneSpec]:
    """Read a tuning-spec file; returns ``(solver_id, spec)``."""
    d = kv_dict(read_kv(path))
    known = {"solver", "objective", "budget", "seed", "ppp", "kernel_class", "kernels",
             "images", "workers"}
    unknown = [k for k in d if k not in known and not k.startswith(("grid.", "base."))]
    if unknown:
        raise ConfigError(f"unknown tuning-spec keys {unknown}")
    sid = d.get("solver", "fio")
    if sid not in PARAMETERS:
        raise ConfigError(f"unknown solver {sid!r}")
    try:
        ppp = float(d.get("ppp", "30"))
        kclass = d.get("kernel_class", "medium")
        if kclass not in KERNEL_CLASSES:
            raise ConfigError(f"unknown kernel class {kclass!r}")
        seed = int(d.get("seed", "0"))
        images = resolve_images(d["images"], Path(path).parent) if "images" in d else None
        validation = tune_validation(seed, ppp, kclass, int(d.get("kernels", "2")), images)
        base = default_config(sid, ppp, KERNEL_CLASSES[kclass]).with_text(
            {k[len("base."):]: v for k, v in d.items() if k.startswith("base.")})
        grid = {k[len("grid."):]: to_float_list(v) for k, v in d.items() if k.startswith("grid.")}
        if not grid and sid == "fio":
            grid = fio_grid(base)
        spec = TuneSpec(d.get("objective", "psnr"), grid, int(d.get("budget", str(TUNE_BUDGET))),
                        validation, base=base, seed=seed, workers=int(d.get("workers", "1")))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed tuning-spec value: {exc}") from exc
    return sid, spec


def trace_to_csv(trace, grid_keys) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", *grid_keys, "objective"])
    for e in trace:
        w.writerow([e.index, *(format_value(e.config[k]) for k in grid_keys), repr(e.objective)])
    return buf.getvalue()


def run_tune_file(path):
    sid, spec = load_tune_spec(path)
    best, trace = tune_schedule(sid, spec)
    return sid, spec, best, trace

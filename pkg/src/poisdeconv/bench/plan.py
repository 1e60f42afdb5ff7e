"""Experiment plans: which images, kernels, photon levels and solvers to run.

Plan files are ``key = value`` lines::

    images = suite              # or comma-separated paths, directories, suite ids
    kernel_classes = medium     # any of small, medium, large
    ppp = 10, 30, 50
    seed = 0
    kernels_per_class = 3
    workers = 4
    solver.fio = iters=8 bank=deriv3
    solver.fio_k1 = solver=fio iters=1
    solver.vstp =

A solver line's label is its id unless ``solver=<id>`` is given. Remaining
tokens override the solver's protocol defaults for each (ppp, kernel) cell.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..errors import ConfigError
from ..kvconfig import kv_dict, parse_inline, read_kv, to_bool
from ..pipelines import KERNEL_CLASSES, PARAMETERS, SolverConfig, default_config
from .suite import resolve_images

OUTPUT_ENV = "POISDECONV_OUTPUT_DIR"
DEFAULT_OUTPUT = "results"


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


@dataclass(frozen=True)
class SolverEntry:
    """A labelled solver with string overrides of its default parameters."""

    label: str
    solver_id: str
    overrides: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.solver_id not in PARAMETERS:
            raise ConfigError(f"unknown solver {self.solver_id!r} for entry {self.label!r}")
        if not self.label or any(c in self.label for c in ",/\\ "):
            raise ConfigError(f"invalid solver label {self.label!r}")
        object.__setattr__(self, "overrides", dict(self.overrides))
        # fail early on unknown keys or malformed values
        default_config(self.solver_id, 10.0, 27).with_text(self.overrides)

    def resolve(self, ppp: float, kernel_size: int) -> SolverConfig:
        return default_config(self.solver_id, ppp, kernel_size).with_text(self.overrides)

    @classmethod
    def parse(cls, label: str, text: str) -> "SolverEntry":
        tokens = parse_inline(text.split())
        sid = tokens.pop("solver", label)
        return cls(label, sid, tokens)


@dataclass(frozen=True)
class ExperimentPlan:
    images: tuple
    kernel_classes: tuple
    ppp_levels: tuple
    solvers: tuple
    seed: int = 0
    output_dir: Path = field(default_factory=default_output_dir)
    kernels_per_class: int = 3
    workers: int = 1
    timing: bool = False
    save_images: bool = True

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(Path(p) for p in self.images))
        object.__setattr__(self, "kernel_classes", tuple(self.kernel_classes))
        object.__setattr__(self, "ppp_levels", tuple(float(p) for p in self.ppp_levels))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if not self.images:
            raise ConfigError("plan lists no images")
        if not self.kernel_classes:
            raise ConfigError("plan lists no kernel classes")
        bad = [c for c in self.kernel_classes if c not in KERNEL_CLASSES]
        if bad:
            raise ConfigError(f"unknown kernel classes {bad}; expected {sorted(KERNEL_CLASSES)}")
        if not self.ppp_levels or any(not p > 0 for p in self.ppp_levels):
            raise ConfigError("plan needs at least one positive ppp level")
        if not self.solvers:
            raise ConfigError("plan lists no solvers")
        labels = [s.label for s in self.solvers]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate solver labels in {labels}")
        if self.kernels_per_class < 1 or self.workers < 1:
            raise ConfigError("kernels_per_class and workers must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_pairs(cls, pairs, output_dir=None, base_dir=None) -> "ExperimentPlan":
        d = kv_dict(pairs)
        solvers = [SolverEntry.parse(k[len("solver."):], v)
                   for k, v in d.items() if k.startswith("solver.")]
        known = {"images", "kernel_classes", "ppp", "seed", "output_dir",
                 "kernels_per_class", "workers", "timing", "save_images"}
        unknown = [k for k in d if not k.startswith("solver.") and k not in known]
        if unknown:
            raise ConfigError(f"unknown plan keys {unknown}")
        try:
            kwargs = dict(
                images=resolve_images(d.get("images", "suite"), base_dir),
                kernel_classes=[c.strip() for c in d.get("kernel_classes", "medium").split(",") if c.strip()],
                ppp_levels=[float(p) for p in d.get("ppp", "10,30,50").split(",") if p.strip()],
                solvers=solvers,
                seed=int(d.get("seed", "0")),
                kernels_per_class=int(d.get("kernels_per_class", "3")),
                workers=int(d.get("workers", "1")),
                timing=to_bool(d.get("timing", "false")),
                save_images=to_bool(d.get("save_images", "true")),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed plan value: {exc}") from exc
        out = output_dir if output_dir is not None else d.get("output_dir")
        if out is not None:
            kwargs["output_dir"] = Path(out)
        return cls(**kwargs)

    @classmethod
    def load(cls, path, output_dir=None) -> "ExperimentPlan":
        return cls.from_pairs(read_kv(path), output_dir, Path(path).parent)

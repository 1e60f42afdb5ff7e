"""Plan execution: degrade, solve, score, persist.

Seeds are derived, never drawn: the blur kernels of a class come from
``(base seed, class, index)`` and each observation from
``(base seed, image, class, kernel index, ppp)``. The solver is deliberately
not part of the observation seed, so every solver in a plan restores the same
noisy image and adding a solver leaves existing rows unchanged.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..core.io import read_image, write_image
from ..core.metrics import psnr, ssim
from ..errors import DeconvError
from ..pipelines import KERNEL_CLASSES, run_solver
from ..synth import DegradationSpec, degrade, derive_seed, make_trajectory_kernel
from .plan import ExperimentPlan, SolverEntry

CSV_FIELDS = ("image_id", "kernel_class", "kernel_index", "ppp", "solver_id",
              "psnr_db", "ssim", "wall_time_ms", "iterations")
RESULTS_NAME = "results.csv"


class ResultRow(NamedTuple):
    image_id: str
    kernel_class: str
    kernel_index: int
    ppp: float
    solver_id: str
    psnr_db: float
    ssim: float
    wall_time_ms: float | None
    iterations: int

    def sort_key(self):
        return (self.image_id, self.kernel_class, self.kernel_index, self.ppp, self.solver_id)

    def csv_fields(self) -> list[str]:
        return [self.image_id, self.kernel_class, str(self.kernel_index), repr(self.ppp),
                self.solver_id, repr(self.psnr_db), repr(self.ssim),
                "" if self.wall_time_ms is None else f"{self.wall_time_ms:.3f}",
                str(self.iterations)]


@dataclass(frozen=True)
class Skipped:
    path: Path
    reason: str


@lru_cache(maxsize=256)
def plan_kernel(seed: int, kernel_class: str, index: int):
    """The ``index``-th trajectory kernel of a class for a base seed."""
    size = KERNEL_CLASSES[kernel_class]
    return make_trajectory_kernel(size, seed=derive_seed(seed, "kernel", kernel_class, index))


def observation_seed(seed: int, image_id: str, kernel_class: str, index: int, ppp: float) -> int:
    return derive_seed(seed, "observe", image_id, kernel_class, index, repr(float(ppp)))


def restored_name(image_id, kernel_class, index, ppp, label) -> str:
    return f"{image_id}__{kernel_class}{index}__ppp{float(ppp):g}__{label}.pfm"


def _run_cell(args):
    """One (image, kernel, ppp) cell: degrade once, run every solver."""
    (image_id, clean, kernel_class, index, ppp, solvers, seed, out_dir, timing, save) = args
    kernel = plan_kernel(seed, kernel_class, index)
    counts, alpha = degrade(clean, DegradationSpec(kernel, ppp, observation_seed(seed, image_id, kernel_class, index, ppp)))
    y_norm = counts / alpha
    rows = []
    for entry in solvers:
        cfg = entry.resolve(ppp, kernel.size)
        start = time.perf_counter()
        x, iterations = run_solver(cfg, y_norm, kernel, alpha, oracle_x=clean)
        elapsed = (time.perf_counter() - start) * 1e3
        # score exactly what gets written, so saved files re-score bit-for-bit
        x = x.astype(np.float32).astype(np.float64)
        if save:
            write_image(Path(out_dir) / "restored" / restored_name(image_id, kernel_class, index, ppp, entry.label), x)
        rows.append(ResultRow(image_id, kernel_class, index, float(ppp), entry.label,
                              psnr(clean, x), ssim(clean, x), elapsed if timing else None, iterations))
    return rows


def load_images(paths) -> tuple[list[tuple[str, np.ndarray]], list[Skipped]]:
    images, skipped = [], []
    seen = set()
    for p in paths:
        p = Path(p)
        try:
            img = read_image(p)
            if img.min() < 0 or img.max() > 1:
                raise DeconvError("intensities must lie in [0, 1]")
        except (OSError, DeconvError) as exc:
            skipped.append(Skipped(p, str(exc)))
            continue
        if p.stem in seen:
            skipped.append(Skipped(p, f"duplicate image id {p.stem!r}"))
            continue
        seen.add(p.stem)
        images.append((p.stem, img))
    return images, skipped


def run_plan(plan: ExperimentPlan, skipped: list | None = None) -> list[ResultRow]:
    """Execute every (image, kernel, ppp, solver) run of ``plan``.

    Rows are sorted by key and written to ``results.csv`` in the output
    directory, with one restored PFM per row under ``restored/``. Unreadable
    images are appended to ``skipped`` (when given) and left out.
    """
    images, bad = load_images(plan.images)
    if skipped is not None:
        skipped.extend(bad)
    out_dir = plan.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    if plan.save_images:
        (out_dir / "restored").mkdir(exist_ok=True)
    cells = [
        (image_id, clean, kc, k, ppp, plan.solvers, plan.seed, str(out_dir), plan.timing, plan.save_images)
        for image_id, clean in images
        for kc in plan.kernel_classes
        for k in range(plan.kernels_per_class)
        for ppp in plan.ppp_levels
    ]
    if plan.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            chunks = list(pool.map(_run_cell, cells))
    else:
        chunks = [_run_cell(c) for c in cells]
    rows = sorted((r for chunk in chunks for r in chunk), key=ResultRow.sort_key)
    write_csv(out_dir / RESULTS_NAME, rows)
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def write_csv(path, rows) -> None:
    Path(path).write_text(rows_to_csv(rows), encoding="utf-8")


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise DeconvError(f"{path}: unexpected CSV header {reader.fieldnames}")
        return [ResultRow(r["image_id"], r["kernel_class"], int(r["kernel_index"]), float(r["ppp"]),
                          r["solver_id"], float(r["psnr_db"]), float(r["ssim"]),
                          float(r["wall_time_ms"]) if r["wall_time_ms"] else None, int(r["iterations"]))
                for r in reader]


def mean_psnr(rows, solver_id=None, ppp=None) -> float:
    vals = [r.psnr_db for r in rows
            if (solver_id is None or r.solver_id == solver_id) and (ppp is None or r.ppp == ppp)]
    if not vals:
        raise DeconvError(f"no rows for solver={solver_id} ppp={ppp}")
    return float(np.mean(vals))


__all__ = ["CSV_FIELDS", "ResultRow", "Skipped", "SolverEntry", "mean_psnr", "observation_seed",
           "plan_kernel", "read_csv", "restored_name", "rows_to_csv", "run_plan", "write_csv"]

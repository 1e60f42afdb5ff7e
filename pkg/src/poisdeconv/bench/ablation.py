"""Paired-configuration ablations on the standard suite.

Each ablation runs a baseline arm and a treatment arm (plus optional extra
arms) through :func:`run_plan` on the same observations, then reports the
mean-PSNR difference ``treatment - baseline`` with a verdict:
``improved`` / ``degraded`` beyond :data:`VERDICT_TOLERANCE_DB`, else
``no effect``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..kvconfig import format_value
from .plan import ExperimentPlan, SolverEntry, default_output_dir
from .runner import mean_psnr, run_plan
from .suite import suite_paths
from .tuning import HOLDOUT_IDS, tune_fio

VERDICT_TOLERANCE_DB = 0.05
ABLATIONS = ("iterations", "feature_space", "vst", "tuned_params", "wiener_presence")


def verdict(delta: float, tol: float = VERDICT_TOLERANCE_DB) -> str:
    if delta > tol:
        return "improved"
    if delta < -tol:
        return "degraded"
    return "no effect"


@dataclass
class AblationReport:
    name: str
    baseline: str
    treatment: str
    means: dict
    delta: float
    verdict: str
    rows: list = field(repr=False, default_factory=list)
    notes: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [f"ablation={self.name}"]
        out += [f"mean_psnr[{label}]={value!r}" for label, value in self.means.items()]
        out.append(f"delta_db={self.delta!r} ({self.treatment} - {self.baseline})")
        out += [f"{k}={format_value(v) if not isinstance(v, str) else v}" for k, v in self.notes.items()]
        out.append(f"verdict={self.verdict}")
        return out


def _plan(name, entries, ppp_levels, images, kernel_class, kernels, seed, output_dir, workers):
    return ExperimentPlan(
        images=images, kernel_classes=(kernel_class,), ppp_levels=ppp_levels, solvers=tuple(entries),
        seed=seed, output_dir=Path(output_dir) / f"ablation_{name}", kernels_per_class=kernels,
        workers=workers, save_images=False,
    )


def _finish(name, rows, baseline, treatment, labels, plan, notes=None) -> AblationReport:
    means = {label: mean_psnr(rows, label) for label in labels}
    delta = means[treatment] - means[baseline]
    report = AblationReport(name, baseline, treatment, means, delta, verdict(delta), rows, notes or {})
    (plan.output_dir / "report.txt").write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
    return report


def run_ablation(name: str, images=None, kernels_per_class: int = 3, seed: int = 0,
                 output_dir=None, workers: int = 1) -> AblationReport:
    """Run one named ablation and write its CSV and report under ``output_dir``."""
    if name not in ABLATIONS:
        raise ConfigError(f"unknown ablation {name!r}; expected one of {ABLATIONS}")
    output_dir = default_output_dir() if output_dir is None else Path(output_dir)
    suite = list(images) if images is not None else suite_paths()
    common = dict(kernel_class="medium", kernels=kernels_per_class, seed=seed,
                  output_dir=output_dir, workers=workers)

    if name == "iterations":
        entries = [SolverEntry(f"fio_k{K}", "fio", {"iters": str(K)}) for K in (1, 2, 4, 8)]
        plan = _plan(name, entries, (30.0,), suite, **common)
        rows = run_plan(plan)
        means = [mean_psnr(rows, e.label) for e in entries]
        steps = np.diff(means)
        notes = {"non_decreasing": str(bool(np.all(steps >= 0))).lower(),
                 "increments_db": tuple(float(s) for s in steps)}
        return _finish(name, rows, "fio_k1", "fio_k8", [e.label for e in entries], plan, notes)

    if name == "feature_space":
        entries = [SolverEntry("fio_identity", "fio", {"bank": "identity"}),
                   SolverEntry("fio_deriv3", "fio", {"bank": "deriv3"}),
                   SolverEntry("fio_deriv3_per_feature", "fio", {"bank": "deriv3", "order": "per_feature"})]
        plan = _plan(name, entries, (10.0,), suite, **common)
        rows = run_plan(plan)
        report = _finish(name, rows, "fio_identity", "fio_deriv3", [e.label for e in entries], plan)
        diffs = _paired(rows, "fio_deriv3", "fio_identity")
        report.notes["max_abs_paired_diff_db"] = float(np.max(np.abs(diffs)))
        report.notes["per_feature_delta_db"] = report.means["fio_deriv3_per_feature"] - report.means["fio_identity"]
        (plan.output_dir / "report.txt").write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
        return report

    if name == "vst":
        entries = [SolverEntry("vstp_plain", "vstp", {"vst": "false"}),
                   SolverEntry("vstp_vst", "vstp", {"vst": "true"})]
        plan = _plan(name, entries, (10.0, 30.0, 50.0), suite, **common)
        rows = run_plan(plan)
        notes = {f"delta_db_ppp{p:g}": mean_psnr(rows, "vstp_vst", p) - mean_psnr(rows, "vstp_plain", p)
                 for p in plan.ppp_levels}
        return _finish(name, rows, "vstp_plain", "vstp_vst", [e.label for e in entries], plan, notes)

    if name == "wiener_presence":
        entries = [SolverEntry("tv_only", "tv"), SolverEntry("wiener_tv", "wiener_tv")]
        plan = _plan(name, entries, (10.0,), suite, **common)
        rows = run_plan(plan)
        return _finish(name, rows, "tv_only", "wiener_tv", [e.label for e in entries], plan)

    # tuned_params: tune on half the suite, compare on the other half
    ppp = 30.0
    best, trace = tune_fio(seed, ppp, "medium", workers=workers)
    tuned = {k: format_value(best[k]) for k in ("mu0", "lambda", "mu_ratio")}
    entries = [SolverEntry("fio_heuristic", "fio"), SolverEntry("fio_tuned", "fio", tuned)]
    holdout = suite_paths(HOLDOUT_IDS) if images is None else suite
    plan = _plan(name, entries, (ppp,), holdout, **common)
    rows = run_plan(plan)
    argmax = max(trace, key=lambda e: e.objective)
    notes = {"evaluations": str(len(trace)),
             "best_is_trace_argmax": str(argmax.config == best).lower(),
             **{f"tuned_{k}": v for k, v in tuned.items()}}
    return _finish(name, rows, "fio_heuristic", "fio_tuned", [e.label for e in entries], plan, notes)


def _paired(rows, a: str, b: str) -> np.ndarray:
    key = lambda r: (r.image_id, r.kernel_class, r.kernel_index, r.ppp)
    ra = {key(r): r.psnr_db for r in rows if r.solver_id == a}
    rb = {key(r): r.psnr_db for r in rows if r.solver_id == b}
    return np.array([ra[k] - rb[k] for k in sorted(ra)])

"""Command-line entry point: ``poisdeconv <subcommand> ...``.

Exit status is 0 on success, 2 for usage errors (argparse's convention) and
1 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..core.io import read_image, read_kernel, write_image, write_kernel
from ..core.metrics import quality
from ..errors import ConfigError, DeconvError
from ..kvconfig import format_kv, kv_dict, parse_inline, read_kv
from ..pipelines import (
    KERNEL_CLASSES,
    SOLVER_IDS,
    config_to_text,
    default_config,
    run_solver,
)
from ..synth import DegradationSpec, degrade, make_gaussian_kernel, make_trajectory_kernel
from .ablation import ABLATIONS, run_ablation
from .plan import OUTPUT_ENV, ExperimentPlan, default_output_dir
from .runner import RESULTS_NAME, mean_psnr, run_plan
from .tuning import run_tune_file, trace_to_csv


class UsageError(Exception):
    """Flag values that parse but do not make sense together."""


def sidecar_path(counts_path) -> Path:
    p = Path(counts_path)
    return p.with_name(p.name + ".txt")


def _kernel_from_args(args):
    if args.kernel:
        return read_kernel(args.kernel)
    if args.gaussian:
        try:
            sx, sy, theta = (float(v) for v in args.gaussian.split(","))
        except ValueError:
            raise UsageError("--gaussian expects SX,SY,THETA") from None
        return make_gaussian_kernel(args.size or 9, sx, sy, theta)
    size = args.size or KERNEL_CLASSES[args.kernel_class]
    return make_trajectory_kernel(size, seed=args.kernel_seed)


def cmd_simulate(args) -> int:
    clean = read_image(args.clean)
    kernel = _kernel_from_args(args)
    counts, alpha = degrade(clean, DegradationSpec(kernel, args.ppp, args.seed))
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_image(out, counts)
    kpath = out.with_name(out.stem + "_kernel.txt")
    write_kernel(kpath, kernel)
    meta = {"alpha": alpha, "ppp": float(args.ppp), "seed": args.seed, "kernel": kpath.name}
    sidecar_path(out).write_text(format_kv(meta), encoding="utf-8")
    print(f"wrote {out} (alpha={alpha!r})")
    return 0


def _build_config(args, ppp, kernel_size):
    cfg = default_config(args.solver, ppp, kernel_size)
    if args.config:
        pairs = kv_dict(read_kv(args.config))
        file_solver = pairs.pop("solver", args.solver)
        if file_solver != args.solver:
            raise UsageError(f"config file is for solver {file_solver!r}, not {args.solver!r}")
        cfg = cfg.with_text(pairs)
    overrides = parse_inline(args.set or [])
    if args.iters is not None:
        overrides["iters"] = str(args.iters)
    if args.mu is not None:
        if args.solver != "fio":
            raise UsageError("--mu applies to --solver fio only")
        overrides["mu"] = args.mu
        overrides.setdefault("iters", str(len([v for v in args.mu.split(",") if v.strip()])))
    if args.lam is not None:
        key = {"fio": "lambda", "vstp": "wiener.lambda", "wiener": "wiener.lambda",
               "wiener_tv": "wiener.lambda", "let": "let.lambdas"}.get(args.solver)
        if key is None:
            raise UsageError(f"--lambda does not apply to --solver {args.solver}")
        overrides[key] = args.lam
    if args.bank is not None:
        if args.solver != "fio":
            raise UsageError("--bank applies to --solver fio only")
        overrides["bank"] = args.bank
    return cfg.with_text(overrides)


def cmd_deconv(args) -> int:
    counts = read_image(args.counts)
    kernel = read_kernel(args.kernel) if args.kernel else None
    alpha = args.alpha
    side = sidecar_path(args.counts)
    if (alpha is None or kernel is None) and side.exists():
        meta = kv_dict(read_kv(side))
        if alpha is None and "alpha" in meta:
            alpha = float(meta["alpha"])
        if kernel is None and "kernel" in meta:
            kernel = read_kernel(side.parent / meta["kernel"])
    if alpha is None or kernel is None:
        raise UsageError("need --alpha and --kernel (or a simulate sidecar next to the counts)")
    if not alpha > 0:
        raise UsageError("--alpha must be positive")
    ppp = float(np.mean(counts)) or 1.0
    try:
        cfg = _build_config(args, ppp, kernel.size)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    reference = read_image(args.reference) if args.reference else None
    if cfg.solver_id == "let" and cfg["let.weights"] == "oracle" and reference is None:
        raise UsageError("LET with oracle weights needs --reference")
    x, _ = run_solver(cfg, counts / alpha, kernel, alpha, oracle_x=reference)
    x = x.astype(np.float32).astype(np.float64)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_image(out, x)
    if args.save_config:
        Path(args.save_config).write_text(config_to_text(cfg), encoding="utf-8")
    if reference is not None:
        print(quality(reference, x).line())
    else:
        print(f"wrote {out}")
    return 0


def cmd_bench(args) -> int:
    plan = ExperimentPlan.load(args.plan, output_dir=args.output_dir)
    if args.workers is not None or args.timing:
        plan = replace(plan, workers=args.workers or plan.workers, timing=args.timing or plan.timing)
    skipped = []
    rows = run_plan(plan, skipped)
    print(f"wrote {plan.output_dir / RESULTS_NAME} ({len(rows)} rows)")
    for label in sorted({r.solver_id for r in rows}):
        for ppp in sorted({r.ppp for r in rows}):
            print(f"{label} ppp={ppp:g} mean_psnr_db={mean_psnr(rows, label, ppp):.4f}")
    for s in skipped:
        print(f"skipped {s.path}: {s.reason}", file=sys.stderr)
    if skipped:
        print(f"{len(skipped)} input(s) skipped", file=sys.stderr)
        return 1
    return 0


def cmd_tune(args) -> int:
    sid, spec, best, trace = run_tune_file(args.spec)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(config_to_text(best), encoding="utf-8")
    out.with_name(out.name + ".trace.csv").write_text(trace_to_csv(trace, list(spec.grid)), encoding="utf-8")
    objective = next(e.objective for e in trace if e.config == best)
    print(f"wrote {out} ({len(trace)} evaluations, best {spec.objective}={objective!r})")
    return 0


def cmd_metrics(args) -> int:
    print(quality(read_image(args.reference), read_image(args.estimate)).line())
    return 0


def cmd_ablate(args) -> int:
    report = run_ablation(args.name, kernels_per_class=args.kernels, seed=args.seed,
                          output_dir=args.output_dir, workers=args.workers)
    print("\n".join(report.lines()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poisdeconv",
                                     description="Poisson image deconvolution toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="blur a clean image and draw Poisson counts")
    p.add_argument("clean")
    p.add_argument("-o", "--output", required=True, help="counts PFM; a .txt sidecar holds alpha")
    p.add_argument("--ppp", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--kernel", help="kernel text file")
    g.add_argument("--gaussian", metavar="SX,SY,THETA")
    p.add_argument("--kernel-class", choices=sorted(KERNEL_CLASSES), default="medium")
    p.add_argument("--kernel-seed", type=int, default=0)
    p.add_argument("--size", type=int, help="kernel size (overrides --kernel-class)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("deconv", help="restore an image from Poisson counts")
    p.add_argument("counts")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--kernel")
    p.add_argument("--alpha", type=float)
    p.add_argument("--solver", choices=SOLVER_IDS, default="fio")
    p.add_argument("--config", help="key=value solver config file")
    p.add_argument("--iters", type=int)
    p.add_argument("--mu", help="comma-separated per-iteration penalties")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--bank", choices=("identity", "deriv3"))
    p.add_argument("--set", nargs="*", metavar="KEY=VALUE", help="other solver parameters")
    p.add_argument("--reference", help="clean image; prints quality of the result")
    p.add_argument("--save-config", help="write the resolved solver config here")
    p.set_defaults(func=cmd_deconv)

    p = sub.add_parser("bench", help="run an experiment plan and write a CSV")
    p.add_argument("plan")
    p.add_argument("--output-dir", help=f"defaults to the plan's output_dir, ${OUTPUT_ENV}, or ./results")
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="fill the wall_time_ms column")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("tune", help="search solver parameters on a validation set")
    p.add_argument("spec")
    p.add_argument("-o", "--output", required=True, help="tuned config file")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("metrics", help="PSNR and SSIM of an estimate against a reference")
    p.add_argument("reference")
    p.add_argument("estimate")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("ablate", help="run one of the paired ablations")
    p.add_argument("name", choices=ABLATIONS)
    p.add_argument("--output-dir", type=Path, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernels", type=int, default=3, help="kernels per class")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "output_dir", None) is None and args.command == "ablate":
        args.output_dir = default_output_dir()
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except (DeconvError, OSError) as exc:
        print(f"poisdeconv: error: {exc}", file=sys.stderr)
        return 1
    return 0  # unreachable


if __name__ == "__main__":
    sys.exit(main())

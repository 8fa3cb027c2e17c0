"""Command-line front end: degrade images, restore them, compute metrics,
and run parameter sweeps.

Setting precedence for solver parameters: built-in per-task defaults, then
the optional config file (flat ``key = value`` lines, ``#`` comments), then
command-line flags.
"""

import argparse
import csv
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import metrics, operators, pgm, solver


def load_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _read_image(path):
    if path.endswith(".gsrf"):
        return pgm.load_gsrf(path)
    return pgm.load_pgm(path)


def _write_image(img, path):
    if path.endswith(".gsrf"):
        pgm.save_gsrf(img, path)
    else:
        pgm.save_pgm(img, path)


class _Outputs:
    """Tracks written files so a failing command leaves no partial output."""

    def __init__(self):
        self.paths = []

    def image(self, img, path):
        _write_image(img, path)
        self.paths.append(path)

    def file(self, writer, path):
        writer(path)
        self.paths.append(path)

    def discard(self):
        for p in self.paths:
            try:
                os.remove(p)
            except OSError:
                pass


def _setting(args, config, name, default, cast):
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    if name in config:
        return cast(config[name])
    return default


def _threads(args, config):
    raw = _setting(args, config, "threads", None, int)
    if raw is None:
        raw = int(os.environ.get("GSR_THREADS", "1"))
    if raw < 1:
        raise ValueError("threads must be >= 1")
    # Computation is sequential; the flag exists for interface compatibility
    # and output is identical for any value.
    return raw


def _solver_config(args, config):
    kernel_kind = None
    if args.task == "deblur":
        spec = _setting(args, config, "kernel", None, str)
        if spec and os.path.exists(spec):
            k = operators.load_kernel(spec).kernel
            kernel_kind = "uniform" if np.all(k == k.flat[0]) else "gaussian"
        else:
            kernel_kind = "uniform" if spec and spec.startswith("uniform") else "gaussian"
    cfg = solver.default_config(args.task, kernel_kind)
    overrides = {}
    lam = _setting(args, config, "lam", None, float)
    if lam is not None:
        overrides["lam"] = lam
    mu = _setting(args, config, "mu", None, float)
    if mu is not None:
        overrides["mu"] = mu
    iters = _setting(args, config, "iters", None, int)
    if iters is not None:
        overrides["max_iters"] = iters
    thresholding = _setting(args, config, "thresholding", None, str)
    if thresholding is not None:
        overrides["thresholding"] = thresholding
    match_interval = _setting(args, config, "match_interval", None, int)
    if match_interval is not None:
        overrides["match_interval"] = match_interval
    inner = _setting(args, config, "inner_iters", None, int)
    if inner is not None:
        overrides["inner_iters"] = inner
    warm = _setting(args, config, "warm_start", None, int)
    if warm is not None:
        overrides["warm_start_iters"] = warm
    c = _setting(args, config, "c", None, int)
    if c is not None:
        overrides["grouping"] = replace(cfg.grouping, c=c)
    return replace(cfg, **overrides) if overrides else cfg


def _derived(path, suffix):
    stem = path
    for ext in (".pgm", ".gsrf"):
        if stem.endswith(ext):
            stem = stem[: -len(ext)]
    return stem + suffix


def cmd_degrade(args, config, out):
    x = _read_image(args.input)
    sigma = _setting(args, config, "sigma", 0.0, float)
    seed = _setting(args, config, "seed", 0, int)
    if args.task == "inpaint":
        stencil = _setting(args, config, "stencil", None, str)
        if stencil is not None:
            op = operators.load_mask(stencil)
        else:
            fraction = _setting(args, config, "fraction", None, float)
            if fraction is None:
                raise ValueError("inpaint degrade needs --fraction or --stencil")
            op = operators.make_random_mask(fraction, seed, x.shape)
        noisy = metrics.add_gaussian_noise(x, sigma, seed + 1) if sigma > 0 else x
        out.image(op.apply(noisy), args.out)
        out.file(lambda p: operators.save_mask(op, p), args.mask_out or _derived(args.out, ".mask.pgm"))
    elif args.task == "deblur":
        spec = _setting(args, config, "kernel", None, str)
        if spec is None:
            raise ValueError("deblur degrade needs --kernel")
        op = operators.parse_kernel_spec(spec)
        y = metrics.add_gaussian_noise(op.apply(x), sigma, seed + 1)
        out.image(y, args.out)
        out.file(lambda p: operators.save_kernel(op, p), args.kernel_out or _derived(args.out, ".kernel.txt"))
    elif args.task == "cs":
        ratio = _setting(args, config, "ratio", None, float)
        if ratio is None:
            raise ValueError("cs degrade needs --ratio")
        if args.pad:
            x = _pad_to_blocks(x, 32)
        op = operators.make_block_cs(ratio, seed, x.shape)
        out.file(lambda p: operators.save_measurements(op.apply(x), p), args.out)
    else:
        raise ValueError(f"unknown task {args.task!r}")


def _pad_to_blocks(img, bs):
    """Symmetric-replication padding up to the next block multiple."""
    h, w = img.shape
    ph = (-h) % bs
    pw = (-w) % bs
    if ph == 0 and pw == 0:
        return img
    return np.pad(img, ((0, ph), (0, pw)), mode="symmetric")


def _build_restore_operator(args, config, y_path):
    if args.task == "inpaint":
        mask_path = _setting(args, config, "mask", None, str)
        if mask_path is None:
            raise ValueError("inpaint restore needs --mask")
        return operators.load_mask(mask_path), _read_image(y_path)
    if args.task == "deblur":
        spec = _setting(args, config, "kernel", None, str)
        if spec is None:
            raise ValueError("deblur restore needs --kernel (file or spec)")
        op = operators.load_kernel(spec) if os.path.exists(spec) else operators.parse_kernel_spec(spec)
        return op, _read_image(y_path)
    if args.task == "cs":
        meas = operators.load_measurements(y_path)
        return operators.operator_from_measurements(meas), meas
    raise ValueError(f"unknown task {args.task!r}")


def cmd_restore(args, config, out):
    _threads(args, config)
    op, y = _build_restore_operator(args, config, args.input)
    cfg = _solver_config(args, config)
    gt_path = _setting(args, config, "ground_truth", None, str)
    gt = _read_image(gt_path) if gt_path else None

    start = time.perf_counter()
    x_hat, trace = solver.restore(y, op, cfg, ground_truth=gt)
    elapsed = time.perf_counter() - start

    out.image(x_hat, args.out)
    if args.trace:
        out.file(lambda p: solver.write_trace(trace, p), args.trace)

    psnr_db = metrics.psnr(gt, x_hat) if gt is not None else math.nan
    if gt is not None and args.task != "cs":
        isnr_db = metrics.isnr(gt, y, x_hat)
    else:
        isnr_db = math.nan
    print(f"{args.task}, {psnr_db:.4f}, {isnr_db:.4f}, {len(trace)}, {elapsed:.2f}")


def cmd_metric(args, config, out):
    ref = _read_image(args.ref)
    test = _read_image(args.test)
    print(f"psnr_db={metrics.psnr(ref, test):.4f}")
    if args.degraded:
        degraded = _read_image(args.degraded)
        print(f"isnr_db={metrics.isnr(ref, degraded, test):.4f}")


def cmd_sweep(args, config, out):
    if args.param not in ("lambda", "c"):
        raise ValueError("sweep parameter must be 'lambda' or 'c'")
    values = [float(v) if args.param == "lambda" else int(v) for v in args.values.split(",") if v != ""]
    op, y = _build_restore_operator(args, config, args.input)
    cfg = _solver_config(args, config)
    gt_path = _setting(args, config, "ground_truth", None, str)
    if gt_path is None:
        raise ValueError("sweep needs --ground-truth")
    gt = _read_image(gt_path)

    rows = []
    for v in values:
        run_cfg = replace(cfg, lam=v) if args.param == "lambda" else replace(cfg, grouping=replace(cfg.grouping, c=v))
        x_hat, _ = solver.restore(y, op, run_cfg, ground_truth=gt)
        psnr_db = metrics.psnr(gt, x_hat)
        isnr_db = metrics.isnr(gt, y, x_hat) if args.task != "cs" else math.nan
        rows.append((args.param, v, psnr_db, isnr_db))

    def write_csv(path):
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["param", "value", "psnr_db", "isnr_db"])
            for name, v, p, i in rows:
                w.writerow([name, v, f"{p:.4f}", f"{i:.4f}"])

    out.file(write_csv, args.out)


def _add_common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--task", required=True, choices=["inpaint", "deblur", "cs"])
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)


def _add_operator_flags(p):
    p.add_argument("--fraction", type=float, help="inpaint: kept-pixel fraction")
    p.add_argument("--stencil", help="inpaint: stencil mask PGM (>=128 keeps)")
    p.add_argument("--kernel", help="deblur: kernel spec or kernel file")
    p.add_argument("--sigma", type=float, help="noise standard deviation")
    p.add_argument("--ratio", type=float, help="cs: measurement rate")


def _add_solver_flags(p):
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--thresholding", choices=["hard", "soft"])
    p.add_argument("--match-interval", dest="match_interval", type=int)
    p.add_argument("--inner-iters", dest="inner_iters", type=int)
    p.add_argument("--warm-start", dest="warm_start", type=int,
                   help="hard mode: soft-threshold the first N iterations")
    p.add_argument("--c", type=int, help="matched patches per group")


def build_parser():
    parser = argparse.ArgumentParser(prog="gsr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="simulate a degraded observation")
    _add_common(p)
    _add_operator_flags(p)
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--mask-out")
    p.add_argument("--kernel-out")
    p.add_argument("--pad", action="store_true", help="cs: pad to a block multiple by symmetric replication")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("restore", help="restore a degraded observation")
    _add_common(p)
    _add_operator_flags(p)
    _add_solver_flags(p)
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--mask", help="inpaint: mask PGM from degrade")
    p.add_argument("--ground-truth", dest="ground_truth")
    p.add_argument("--trace", help="write per-iteration CSV trace here")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("metric", help="PSNR (and ISNR) between images")
    p.add_argument("ref")
    p.add_argument("test")
    p.add_argument("--degraded")
    p.set_defaults(func=cmd_metric, task=None)

    p = sub.add_parser("sweep", help="restore across a parameter grid")
    _add_common(p)
    _add_operator_flags(p)
    _add_solver_flags(p)
    p.add_argument("input")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", required=True)
    p.add_argument("--mask")
    p.add_argument("--ground-truth", dest="ground_truth")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = load_config_file(args.config) if getattr(args, "config", None) else {}
    out = _Outputs()
    try:
        args.func(args, config, out)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        out.discard()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: decompose, segment, eval, noise, phantom, compare.

Every subcommand that writes files also writes a ``manifest.txt`` of
``key=value`` lines (parameters, input/output SHA-256 hashes, wall time,
library version).  ``replay`` re-executes the command line stored in a
manifest, optionally into a different output directory.

Data (CSV rows) goes to stdout; diagnostics go to stderr.
"""
import argparse
import concurrent.futures
import csv
import hashlib
import itertools
import logging
import math
import os
import shlex
import sys
import time
import warnings
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .baselines import build_lambda_map, segment_cen, segment_spareg
from .decomposition import DEFAULT_L1, DEFAULT_L2, DEFAULT_SIGMA, decompose
from .io import (ImageFormatError, display_normalize, load_grid, load_image, load_labels,
                 save_grid, save_image, save_labels)
from .metrics import (DegenerateSegmentationError, bde, contrast_metrics, gce, rand_index,
                      snr_db, voi)
from .noise import SNR_CONVENTION, NoiseCalibrationError, NoiseSpec, add_poisson, apply_noise
from .phantoms import KINDS as PHANTOM_KINDS
from .phantoms import PhantomSpec, make_phantom
from .solver import SolverParams, run_admm

log = logging.getLogger("ctetris")

LAMBDA_GRID = (0.1, 1.0, 10.0)
MU_GRID = (0.01, 0.1, 1.0)
NOISY_TOL = 1e-8
EVAL_COLUMNS = ("image", "model", "RI", "GCE", "VI", "BDE")
MODELS = ("ctetris", "cen", "spareg")


class CommandError(Exception):
    """A runtime failure reported on stderr with exit status 1."""


# ---------------------------------------------------------------- helpers

def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Manifest:
    """Ordered ``key=value`` record of one run."""

    def __init__(self, command, argv):
        self.lines = [("command", command), ("argv", shlex.join(argv)),
                      ("version", __version__), ("backend", BACKEND)]
        self._start = time.perf_counter()

    def add(self, key, value):
        self.lines.append((key, _fmt(value)))

    def add_params(self, prefix, mapping):
        for key, value in mapping.items():
            if isinstance(value, dict):
                self.add_params(f"{prefix}.{key}", value)
            else:
                self.add(f"{prefix}.{key}", value)

    def add_file(self, role, path):
        path = Path(path)
        self.add(f"{role}.path", str(path))
        self.add(f"{role}.sha256", sha256_file(path))

    def write(self, path):
        self.add("wall_time_s", round(time.perf_counter() - self._start, 6))
        with open(path, "w") as fh:
            for key, value in self.lines:
                fh.write(f"{key}={value}\n")


def read_manifest(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or "=" not in line:
                continue
            key, value = line.split("=", 1)
            out[key] = value
    return out


def write_any_image(img, path):
    """Save to ``.f64`` at full precision, otherwise as 8-bit PGM/PNG."""
    if str(path).lower().endswith(".f64"):
        save_grid(img, path)
    else:
        save_image(img, path)


def _out_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _positive(kind=float):
    def check(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return check


def _nonneg(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def _unit_open(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return value


def _threads():
    env = os.environ.get("CTETRIS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer CTETRIS_THREADS=%r", env)
    return os.cpu_count() or 1


def eval_row(pred, gt, image="", model=""):
    """Return the CSV row (as strings) comparing two label maps."""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise CommandError(f"shape mismatch: prediction {pred.shape} vs ground truth {gt.shape}")
    try:
        bde_value = repr(bde(pred, gt))
    except DegenerateSegmentationError as exc:
        log.warning("BDE undefined (%s); reported as NA", exc)
        bde_value = "NA"
    return [image, model, repr(rand_index(pred, gt)), repr(gce(pred, gt)),
            repr(voi(pred, gt)), bde_value]


# ---------------------------------------------------------------- decompose

def cmd_decompose(args, argv):
    img = load_image(args.input)
    out = _out_dir(args.out_dir)
    dec = decompose(img, sigma=args.sigma, l1=args.l1, l2=args.l2, iterations=args.iterations)
    man = Manifest("decompose", argv)
    man.add_params("param", {"sigma": args.sigma, "l1": args.l1, "l2": args.l2,
                             "iterations": args.iterations})
    man.add_file("input", args.input)
    files = {
        "cartoon": (out / "cartoon.pgm", lambda p: save_image(dec.cartoon, p)),
        "cartoon_grid": (out / "cartoon.f64", lambda p: save_grid(dec.cartoon, p)),
        "texture": (out / "texture.pgm", lambda p: save_image(display_normalize(dec.texture), p)),
        "texture_grid": (out / "texture.f64", lambda p: save_grid(dec.texture, p)),
        "rho": (out / "rho.pgm", lambda p: save_image(dec.rho, p)),
    }
    for role, (path, writer) in files.items():
        writer(path)
        man.add_file(f"output.{role}", path)
    for k, norm in enumerate(dec.step_texture_norms, 1):
        man.add(f"texture_norm.{k}", norm)
        log.info("step %d: texture l2 norm %.6g", k, norm)
    man.write(out / "manifest.txt")
    return 0


# ---------------------------------------------------------------- segment

def _solver_params(args):
    tol = args.tol
    if tol is None:
        tol = NOISY_TOL if args.noisy_preset else SolverParams.tol
    return SolverParams(lam=args.lam, mu=args.mu, rho=args.rho, tol=tol, maxit=args.maxit,
                        alpha=args.alpha, gs_sweeps=args.gs_sweeps)


def _segment_inputs(args):
    """Return ``(image, cartoon, texture)``; the latter two only for ctetris."""
    img = load_image(args.input) if args.input else None
    if args.model != "ctetris":
        if img is None:
            raise CommandError(f"model {args.model} needs an input image")
        return img, None, None
    if args.cartoon or args.texture:
        if not (args.cartoon and args.texture):
            raise CommandError("--cartoon and --texture must be given together")
        cartoon = load_image(args.cartoon)
        texture = load_grid(args.texture)
        if cartoon.shape != texture.shape:
            raise CommandError(f"shape mismatch: cartoon {cartoon.shape} vs texture {texture.shape}")
        return img, cartoon, texture
    if img is None:
        raise CommandError("ctetris needs an input image or --cartoon/--texture")
    dec = decompose(img, sigma=args.sigma, l1=args.l1, l2=args.l2)
    return img, dec.cartoon, dec.texture


def _evolution_writer(directory):
    directory = _out_dir(directory)

    def callback(state, rec):
        k = rec.iter
        save_image(state.u, directory / f"u_{k:03d}.pgm")
        if state.v is not None:
            # evolving cartoon u + v is pinned to the input cartoon; the
            # evolving texture is v itself
            save_grid(state.v, directory / f"v_{k:03d}.f64")
            save_image(display_normalize(state.v), directory / f"v_{k:03d}.pgm")
    return callback


def run_model(model, img, cartoon, texture, params, lambda_min, lambda_max, callback=None):
    """Dispatch one segmentation run; returns ``SegmentationResult``."""
    if model == "ctetris":
        return run_admm(cartoon, texture, params, callback=callback, model="ctetris")
    if model == "cen":
        return segment_cen(img, params, callback=callback)
    lmap = build_lambda_map(img, lambda_min=lambda_min, lambda_max=lambda_max)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return segment_spareg(img, lmap, params, callback=callback)


def _write_segmentation(result, out, man, prefix="output"):
    paths = {"mask": out / "mask.pgm", "u": out / "u.f64", "trace": out / "trace.csv"}
    save_labels(result.mask, paths["mask"])
    save_grid(result.u, paths["u"])
    result.write_trace_csv(paths["trace"])
    if result.v is not None:
        paths["v"] = out / "v.f64"
        save_grid(result.v, paths["v"])
    for role, path in paths.items():
        man.add_file(f"{prefix}.{role}", path)


def _grid_job(job):
    return run_model(*job[:7])


def cmd_segment(args, argv):
    if args.model == "spareg" and not args.lambda_min < args.lambda_max:
        raise CommandError("--lambda-min must be smaller than --lambda-max")
    img, cartoon, texture = _segment_inputs(args)
    params = _solver_params(args)
    gt = load_labels(args.gt) if args.gt else None
    out = _out_dir(args.out_dir)
    man = Manifest("segment", argv)
    man.add("model", args.model)
    man.add("seed_free", "true")
    man.add_params("param", {k: v for k, v in asdict(params).items()})
    man.add_params("param", {"sigma": args.sigma, "l1": args.l1, "l2": args.l2})
    if args.model == "spareg":
        man.add_params("param", {"lambda_min": args.lambda_min, "lambda_max": args.lambda_max})
    for role in ("input", "cartoon", "texture", "gt"):
        path = getattr(args, role)
        if path:
            man.add_file(f"{role}", path)

    if args.grid:
        mus = MU_GRID if args.model == "ctetris" else (params.mu,)
        combos = list(itertools.product(LAMBDA_GRID, mus))
        jobs = [(args.model, img, cartoon, texture, replace(params, lam=lam, mu=mu),
                 args.lambda_min, args.lambda_max, out / f"lam{lam:g}_mu{mu:g}")
                for lam, mu in combos]
        workers = min(_threads(), len(jobs))
        log.info("grid sweep: %d runs on %d workers", len(jobs), workers)
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_grid_job, jobs))
        else:
            results = [_grid_job(j) for j in jobs]
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(("lambda", "mu", "iterations") + (EVAL_COLUMNS[2:] if gt is not None else ()))
        for (lam, mu), job, res in zip(combos, jobs, results):
            sub = _out_dir(job[-1])
            _write_segmentation(res, sub, man, prefix=f"output.lam{lam:g}_mu{mu:g}")
            row = [repr(lam), repr(mu), str(res.iterations)]
            if gt is not None:
                row += eval_row(res.mask, gt)[2:]
            writer.writerow(row)
        man.write(out / "manifest.txt")
        return 0

    callback = _evolution_writer(args.dump_evolution) if args.dump_evolution else None
    result = run_model(args.model, img, cartoon, texture, params, args.lambda_min,
                       args.lambda_max, callback)
    if args.model == "ctetris":
        save_grid(cartoon, out / "cartoon.f64")
        save_grid(texture, out / "texture.f64")
        man.add_file("output.cartoon", out / "cartoon.f64")
        man.add_file("output.texture", out / "texture.f64")
    _write_segmentation(result, out, man)
    man.add("iterations", result.iterations)
    man.add("c_in", result.c_in)
    man.add("c_out", result.c_out)
    log.info("%s: %d iterations, c_in=%.6g, c_out=%.6g", args.model, result.iterations,
             result.c_in, result.c_out)
    if gt is not None:
        row = eval_row(result.mask, gt, image=args.input or args.cartoon, model=args.model)
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(EVAL_COLUMNS)
        writer.writerow(row)
    man.write(out / "manifest.txt")
    return 0


# ---------------------------------------------------------------- eval

def cmd_eval(args, argv):
    writer_fh = sys.stdout
    if args.contrast:
        img = load_image(args.contrast)
        try:
            m1, m2 = contrast_metrics(img, classic=args.michelson_classic)
        except ValueError as exc:
            raise CommandError(str(exc)) from None
        rows = [("image", "M1", "M2"), (args.image or args.contrast, repr(m1), repr(m2))]
    else:
        if not (args.pred and args.gt):
            raise CommandError("eval needs PRED and GT label maps (or --contrast IMAGE)")
        pred = load_labels(args.pred)
        gt = load_labels(args.gt)
        row = eval_row(pred, gt, image=args.image or args.pred, model=args.model)
        rows = [EVAL_COLUMNS, row]
    if args.append:
        exists = os.path.exists(args.append) and os.path.getsize(args.append) > 0
        with open(args.append, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerows(rows[1:] if exists else rows)
    w = csv.writer(writer_fh, lineterminator="\n")
    w.writerows(rows)
    return 0


# ---------------------------------------------------------------- noise

def cmd_noise(args, argv):
    img = load_image(args.input)
    if args.kind == "salt_pepper":
        if args.fraction is None or args.snr is not None:
            raise CommandError("salt_pepper needs --fraction (and no --snr)")
        spec = NoiseSpec(kind=args.kind, fraction=args.fraction, seed=args.seed)
    else:
        if args.snr is None or args.fraction is not None:
            raise CommandError(f"{args.kind} needs --snr (and no --fraction)")
        spec = NoiseSpec(kind=args.kind, target_snr_db=args.snr, seed=args.seed)
    man = Manifest("noise", argv)
    man.add_params("noise", asdict(spec))
    man.add("snr_convention", SNR_CONVENTION)
    man.add_file("input", args.input)
    try:
        if spec.kind == "poisson":
            noisy, peak = add_poisson(img, spec.target_snr_db, spec.seed)
            man.add("poisson_peak", peak)
        else:
            noisy = apply_noise(img, spec)
    except NoiseCalibrationError as exc:
        raise CommandError(str(exc)) from None
    write_any_image(noisy, args.out)
    man.add_file("output.image", args.out)
    changed = int(np.count_nonzero(noisy != img))
    man.add("changed_pixels", changed)
    try:
        measured = snr_db(img, noisy)
    except ValueError:
        measured = math.inf
    man.add("measured_snr_db", measured)
    log.info("measured SNR %.3f dB, %d pixels changed", measured, changed)
    man.write(args.manifest or Path(args.out).with_suffix(".manifest.txt"))
    return 0


# ---------------------------------------------------------------- phantom

def cmd_phantom(args, argv):
    try:
        spec = PhantomSpec(kind=args.kind, size=args.size, fg_level=args.fg, bg_level=args.bg,
                           texture_amp=args.amp, texture_period=args.period)
    except ValueError as exc:
        raise CommandError(str(exc)) from None
    img, gt = make_phantom(spec)
    write_any_image(img, args.out)
    man = Manifest("phantom", argv)
    man.add_params("phantom", asdict(spec))
    man.add_file("output.image", args.out)
    if args.gt:
        save_labels(gt, args.gt)
        man.add_file("output.gt", args.gt)
    man.write(args.manifest or Path(args.out).with_suffix(".manifest.txt"))
    return 0


# ---------------------------------------------------------------- compare

def cmd_compare(args, argv):
    if not args.lambda_min < args.lambda_max:
        raise CommandError("--lambda-min must be smaller than --lambda-max")
    img = load_image(args.input)
    gt = load_labels(args.gt)
    params = _solver_params(args)
    dec = decompose(img, sigma=args.sigma, l1=args.l1, l2=args.l2)
    out = _out_dir(args.out_dir)
    man = Manifest("compare", argv)
    man.add_params("param", asdict(params))
    man.add_params("param", {"sigma": args.sigma, "l1": args.l1, "l2": args.l2,
                             "lambda_min": args.lambda_min, "lambda_max": args.lambda_max})
    man.add_file("input", args.input)
    man.add_file("gt", args.gt)
    rows = [EVAL_COLUMNS]
    for model in MODELS:
        res = run_model(model, img, dec.cartoon, dec.texture, params, args.lambda_min,
                        args.lambda_max)
        sub = _out_dir(out / model)
        _write_segmentation(res, sub, man, prefix=f"output.{model}")
        man.add(f"iterations.{model}", res.iterations)
        rows.append(eval_row(res.mask, gt, image=args.input, model=model))
    csv_path = out / "compare.csv"
    with open(csv_path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    man.add_file("output.csv", csv_path)
    csv.writer(sys.stdout, lineterminator="\n").writerows(rows)
    man.write(out / "manifest.txt")
    return 0


# ---------------------------------------------------------------- replay

def cmd_replay(args, argv):
    recorded = read_manifest(args.manifest)
    if "argv" not in recorded:
        raise CommandError(f"{args.manifest}: no recorded command line")
    old = shlex.split(recorded["argv"])
    if args.out_dir:
        if "--out-dir" not in old:
            raise CommandError("recorded command has no --out-dir to redirect")
        old = old + ["--out-dir", args.out_dir]
    return main(old)


# ---------------------------------------------------------------- parser

def _add_decomp_flags(p):
    p.add_argument("--sigma", type=_positive(), default=DEFAULT_SIGMA,
                   help="Gaussian low-pass std (default %(default)s)")
    p.add_argument("--l1", type=float, default=DEFAULT_L1, help="ramp lower threshold")
    p.add_argument("--l2", type=float, default=DEFAULT_L2, help="ramp upper threshold")


def _add_solver_flags(p):
    d = SolverParams()
    p.add_argument("--lambda", dest="lam", type=_positive(), default=d.lam,
                   help="region-term weight (default %(default)s)")
    p.add_argument("--mu", type=_positive(), default=d.mu, help="KL weight (ctetris)")
    p.add_argument("--lambda-min", type=_positive(), default=0.1, help="spareg map minimum")
    p.add_argument("--lambda-max", type=_positive(), default=10.0, help="spareg map maximum")
    p.add_argument("--rho", type=_positive(), default=d.rho, help="ADMM penalty")
    p.add_argument("--tol", type=_nonneg, default=None,
                   help=f"stagnation tolerance (default {d.tol}, {NOISY_TOL} with --noisy-preset)")
    p.add_argument("--noisy-preset", action="store_true", help=f"use tol={NOISY_TOL}")
    p.add_argument("--maxit", type=_positive(int), default=d.maxit)
    p.add_argument("--alpha", type=_unit_open, default=d.alpha, help="mask threshold on u")
    p.add_argument("--gs-sweeps", type=_positive(int), default=d.gs_sweeps,
                   help="Gauss-Seidel sweeps per iteration")
    _add_decomp_flags(p)


def build_parser():
    parser = argparse.ArgumentParser(prog="ctetris", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="cartoon-texture decomposition")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--iterations", type=_positive(int), default=1)
    _add_decomp_flags(p)

    p = sub.add_parser("segment", help="two-region segmentation")
    p.add_argument("input", nargs="?", help="image (optional for ctetris with --cartoon/--texture)")
    p.add_argument("--model", choices=MODELS, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--cartoon", help="precomputed cartoon (image or .f64)")
    p.add_argument("--texture", help="precomputed signed texture (.f64)")
    p.add_argument("--gt", help="ground-truth label map; prints an eval row")
    p.add_argument("--dump-evolution", metavar="DIR", help="write per-iteration u / v frames")
    p.add_argument("--grid", action="store_true",
                   help="sweep lambda in {0.1,1,10} (x mu in {0.01,0.1,1} for ctetris)")
    p.add_argument("--seed-free", action="store_true",
                   help="accepted for compatibility; segmentation never draws random numbers")
    _add_solver_flags(p)

    p = sub.add_parser("eval", help="compare label maps or report contrast")
    p.add_argument("pred", nargs="?")
    p.add_argument("gt", nargs="?")
    p.add_argument("--image", default="", help="image name for the CSV row")
    p.add_argument("--model", default="", help="model name for the CSV row")
    p.add_argument("--append", metavar="CSV", help="also append rows to this file")
    p.add_argument("--contrast", metavar="IMAGE", help="report contrast metrics of IMAGE")
    p.add_argument("--michelson-classic", action="store_true",
                   help="(max-min)/(max+min) instead of (max-mean)/(max+mean)")

    p = sub.add_parser("noise", help="synthesize noise")
    p.add_argument("input")
    p.add_argument("--kind", choices=("gaussian", "poisson", "salt_pepper"), required=True)
    p.add_argument("--snr", type=float, help="target SNR in dB (gaussian, poisson)")
    p.add_argument("--fraction", type=_unit_open, help="corrupted fraction (salt_pepper)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("phantom", help="write a synthetic phantom and its ground truth")
    p.add_argument("--kind", choices=PHANTOM_KINDS, required=True)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--fg", type=float, default=0.9)
    p.add_argument("--bg", type=float, default=0.1)
    p.add_argument("--amp", type=float, default=0.3)
    p.add_argument("--period", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--gt")
    p.add_argument("--manifest")

    p = sub.add_parser("compare", help="run ctetris, cen and spareg; combined CSV")
    p.add_argument("input")
    p.add_argument("--gt", required=True)
    p.add_argument("--out-dir", required=True)
    _add_solver_flags(p)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir")
    return parser


COMMANDS = {
    "decompose": cmd_decompose,
    "segment": cmd_segment,
    "eval": cmd_eval,
    "noise": cmd_noise,
    "phantom": cmd_phantom,
    "compare": cmd_compare,
    "replay": cmd_replay,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("ctetris: %(levelname)s: %(message)s"))
        log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args, argv)
    except (CommandError, ImageFormatError, OSError, ValueError) as exc:
        print(f"ctetris {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Usage examples::

    maelens gen-data --model ising --d 32 --J 2 --n 5000 --seed 0 --out ising.csv
    maelens solve --ising 32,2 --m 0.5 --p 8 --k 6 --kind mae --out-prefix out/ising_
    maelens validate --ising 16,1 --m 0.5 --p 4 --k 4 --trials 100000 --seed 0
    maelens analyze boundary --encoder-file out/ising_A.csv --ring 32,8
    maelens analyze spectrum --D 64 --p 8 --starts 0,16,32,48 --out-prefix out/grating_

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 statistical
validation failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import boundary_emphasis, entropy_histogram, kernel_profile
from .correlation import (
    DataMatrix,
    IsingSpec,
    empirical_correlation,
    gaussian_from_cov,
    ising_correlation,
    ising_gibbs_sample,
)
from .errors import MaelensError
from .gabor import TASK_COLUMNS, gabor_sweep
from .io import RunManifest, read_matrix, write_json, write_matrix, write_table
from .layout import Grid2D, Ring1D
from .masking import mc_loss
from .solutions import ae_optimum, dae_optimum, mae_optimum, marginal_loss
from .spectrum import mask_spectrum

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_STATS = 0, 1, 2, 3
Z_LIMIT = 3.0


class UsageError(Exception):
    pass


def _ints(text, n=None, name="value"):
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated integers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{name}: expected {n} integers, got {text!r}")
    return vals


def _floats(text, name="value"):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _ising_arg(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--ising expects d,J, got {text!r}")
    try:
        return IsingSpec(int(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise UsageError(f"--ising: {exc}") from None


def _layout(args, d):
    if getattr(args, "grid", None):
        h, w, c = _ints(args.grid, 3, "--grid")
        lay = Grid2D(h, w, c, args.p)
    else:
        lay = Ring1D(d, args.p)
    if lay.dim != d:
        raise UsageError(f"layout has {lay.dim} dims but sigma is {d}x{d}")
    return lay


def _layout_flag(args):
    if bool(args.ring) == bool(args.grid):
        raise UsageError("give exactly one of --ring d,p or --grid H,W,C,p")
    if args.ring:
        return Ring1D(*_ints(args.ring, 2, "--ring"))
    return Grid2D(*_ints(args.grid, 4, "--grid"))


def _sigma_source(args):
    if bool(args.sigma_file) == bool(args.ising):
        raise UsageError("give exactly one of --sigma-file or --ising d,J")
    if args.ising:
        spec = _ising_arg(args.ising)
        return ising_correlation(spec), {"ising": {"d": spec.d, "J": spec.J}}, spec
    return read_matrix(args.sigma_file), {"sigma_file": args.sigma_file}, None


def _prefix(p):
    path = Path(p)
    if p.endswith(os.sep) or p.endswith("/"):
        path.mkdir(parents=True, exist_ok=True)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
    return p


def cmd_gen_data(args):
    if args.model == "ising":
        if args.d is None or args.J is None or args.cov_file:
            raise UsageError("--model ising needs --d and --J (and no --cov-file)")
        X = ising_gibbs_sample(IsingSpec(args.d, args.J), args.n, args.seed, args.burn_in, args.thin,
                               threads=args.threads)
        params = {"model": "ising", "d": args.d, "J": args.J, "n": args.n,
                  "burn_in": args.burn_in, "thin": args.thin}
    else:
        if not args.cov_file or args.J is not None:
            raise UsageError("--model gaussian needs --cov-file (and no --J)")
        cov = read_matrix(args.cov_file)
        if args.d is not None and args.d != cov.shape[0]:
            raise UsageError(f"--d {args.d} disagrees with the {cov.shape[0]}x{cov.shape[0]} covariance")
        X = gaussian_from_cov(cov, args.n, args.seed, threads=args.threads)
        params = {"model": "gaussian", "cov_file": args.cov_file, "d": cov.shape[0], "n": args.n}
    man = RunManifest("gen-data", params, {"seed": args.seed})
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_matrix(man.add(args.out), X.values)
    man.write(args.out + ".manifest.json")
    print(f"wrote {X.n} x {X.d} samples to {args.out}")
    return EXIT_OK


def _solve(args, S, layout):
    if args.kind == "ae":
        if args.m != 0:
            raise UsageError("--kind ae implies --m 0")
        return ae_optimum(S, args.k, layout)
    if args.kind == "dae":
        if args.n is None:
            raise UsageError("--kind dae needs --n (sample count behind sigma)")
        return dae_optimum(S, args.noise_var, args.n, args.k, layout)
    return mae_optimum(S, args.m, layout, args.k)


def cmd_solve(args):
    S, source, _ = _sigma_source(args)
    layout = _layout(args, S.shape[0])
    if not 0 <= args.m <= 1:
        raise UsageError("--m must be in [0, 1]")
    if not 1 <= args.k <= S.shape[0]:
        raise UsageError(f"--k must be in [1, {S.shape[0]}]")
    sol = _solve(args, S, layout)
    prefix = _prefix(args.out_prefix)
    params = {"m": args.m, "p": args.p, "k": args.k, "layout": layout.to_dict(), **source}
    if args.kind == "dae":
        params.update(noise_var=args.noise_var, n=args.n)
    man = RunManifest("solve", {"kind": args.kind, **params})
    write_matrix(man.add(prefix + "A.csv"), sol.model.A)
    write_matrix(man.add(prefix + "B.csv"), sol.model.B)
    write_json(man.add(prefix + "solution.json"), {
        "loss": sol.loss,
        "eigenvalues": sol.eigvalues.tolist(),
        "parameters": params,
    })
    man.write(prefix + "manifest.json")
    print(f"loss {sol.loss:.12g}")
    return EXIT_OK


def cmd_validate(args):
    if args.trials < 2:
        print("warning: at least 2 trials are needed for a standard error; refusing the z-test",
              file=sys.stderr)
        return EXIT_USAGE
    S, source, spec = _sigma_source(args)
    if spec is not None:
        X = ising_gibbs_sample(spec, args.n, args.seed, threads=args.threads)
    else:
        X = gaussian_from_cov(S, args.n, args.seed, threads=args.threads)
    layout = _layout(args, X.d)
    Shat = empirical_correlation(X)
    sol = mae_optimum(Shat, args.m, layout, args.k)
    closed = marginal_loss(Shat, sol.model)
    mean, stderr = mc_loss(X, sol.model, args.trials, args.seed, threads=args.threads)
    if stderr > 0:
        z = (mean - closed) / stderr
    else:
        # m = 0 or m = 1: every trial is identical, so the estimate is exact up to rounding
        z = 0.0 if abs(mean - closed) <= 1e-9 * max(1.0, abs(closed)) else math.inf
    print(f"mc_mean {mean:.12g}")
    print(f"mc_stderr {stderr:.6g}")
    print(f"closed_form {closed:.12g}")
    print(f"z {z:.4f}")
    if args.out_prefix:
        prefix = _prefix(args.out_prefix)
        man = RunManifest("validate", {"m": args.m, "p": args.p, "k": args.k, "n": args.n,
                                       "trials": args.trials, **source}, {"seed": args.seed})
        write_json(man.add(prefix + "validate.json"), {
            "mc_mean": mean, "mc_stderr": stderr, "closed_form": closed,
            "z": z if math.isfinite(z) else "inf", "passed": abs(z) <= Z_LIMIT,
        })
        man.write(prefix + "manifest.json")
    return EXIT_OK if abs(z) <= Z_LIMIT else EXIT_STATS


def cmd_analyze_kernel(args):
    J = read_matrix(args.matrix_file)
    layout = _layout_flag(args)
    prof = kernel_profile(J, layout)
    prefix = _prefix(args.out_prefix)
    man = RunManifest("analyze kernel", {"matrix_file": args.matrix_file, "layout": layout.to_dict()})
    write_table(man.add(prefix + "profile.csv"), ["distance", "mean_abs"],
                zip(prof.distances.tolist(), prof.mean_abs.tolist()))
    write_json(man.add(prefix + "profile.json"), prof.to_dict())
    man.write(prefix + "manifest.json")
    print(f"decay {prof.fit_decay:.6g} amplitude {prof.fit_amplitude:.6g} r2 {prof.fit_r2:.4f}"
          + (" concentrated-at-0" if prof.concentrated else ""))
    return EXIT_OK


def cmd_analyze_entropy(args):
    J = read_matrix(args.matrix_file)
    hist = entropy_histogram(J, args.bins)
    prefix = _prefix(args.out_prefix)
    man = RunManifest("analyze entropy", {"matrix_file": args.matrix_file, "bins": args.bins})
    write_table(man.add(prefix + "entropy_hist.csv"), ["bin_lo", "bin_hi", "count"],
                zip(hist.bin_edges[:-1].tolist(), hist.bin_edges[1:].tolist(), hist.counts.tolist()))
    write_json(man.add(prefix + "entropy.json"), hist.to_dict())
    man.write(prefix + "manifest.json")
    print(f"mean entropy {hist.entropies.mean():.6g} (max {math.log(J.shape[0]):.6g})")
    return EXIT_OK


def cmd_analyze_boundary(args):
    A = read_matrix(args.encoder_file)
    layout = Ring1D(*_ints(args.ring, 2, "--ring"))
    res = boundary_emphasis(A, layout, args.width)
    print(f"boundary emphasis {res.ratio:.6g}" + (" (capped)" if res.capped else ""))
    if args.out_prefix:
        prefix = _prefix(args.out_prefix)
        man = RunManifest("analyze boundary", {"encoder_file": args.encoder_file,
                                               "layout": layout.to_dict(), "width": args.width})
        write_json(man.add(prefix + "boundary.json"), {"ratio": res.ratio, "capped": bool(res.capped)})
        man.write(prefix + "manifest.json")
    return EXIT_OK


def cmd_analyze_spectrum(args):
    starts = _ints(args.starts, name="--starts")
    tab = mask_spectrum(starts, args.p, args.D)
    nonzero = [int(k) for k, v in zip(tab.k_index, tab.magnitude) if v > 1e-9]
    print("nonzero k: " + ",".join(map(str, nonzero)))
    if tab.overlap:
        print("warning: pulses overlap", file=sys.stderr)
    if args.out_prefix:
        prefix = _prefix(args.out_prefix)
        man = RunManifest("analyze spectrum", {"D": args.D, "p": args.p, "starts": starts})
        write_table(man.add(prefix + "spectrum.csv"), ["k", "magnitude"], tab.rows())
        man.write(prefix + "manifest.json")
    return EXIT_OK


def cmd_analyze_gabor(args):
    h, w, c = _ints(args.grid, 3, "--grid")
    lay = Grid2D(h, w, c, 1)
    X = DataMatrix(read_matrix(args.data_file), lay)
    res = gabor_sweep(X, _floats(args.sigmas, "--sigmas"), _floats(args.fs, "--fs"),
                      _floats(args.ms, "--ms"), args.p, args.k, args.ridge,
                      _ints(args.seeds, name="--seeds"))
    prefix = _prefix(args.out_prefix)
    man = RunManifest("analyze gabor", {"data_file": args.data_file, "grid": [h, w, c], "p": args.p,
                                        "k": args.k, "ridge": args.ridge, "sigmas": args.sigmas,
                                        "fs": args.fs, "ms": args.ms}, {"split_seeds": args.seeds})
    write_table(man.add(prefix + "task.csv"), TASK_COLUMNS,
                ([float(r[c]) for c in TASK_COLUMNS] for r in res.rows))
    man.write(prefix + "manifest.json")
    for r in res.rows:
        print(f"m={r['m']:g} sigma={r['sigma']:g} f={r['f']:g} test_mse={r['test_mse']:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    env_threads = os.environ.get("MAELENS_THREADS")
    ap = argparse.ArgumentParser(prog="maelens", description=__doc__.split("\n\n")[0])
    ap.add_argument("--threads", type=int, default=int(env_threads) if env_threads else 1,
                    help="worker cap (default: $MAELENS_THREADS or 1); results do not depend on it")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="sample a data matrix")
    g.add_argument("--model", choices=["ising", "gaussian"], required=True)
    g.add_argument("--d", type=int)
    g.add_argument("--J", type=float)
    g.add_argument("--cov-file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--burn-in", type=int, default=100)
    g.add_argument("--thin", type=int, default=10)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_data)

    def sigma_flags(p):
        p.add_argument("--sigma-file")
        p.add_argument("--ising", metavar="d,J")
        p.add_argument("--m", type=float, default=0.0)
        p.add_argument("--p", type=int, default=1)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--grid", metavar="H,W,C", help="treat sigma as a flattened H x W x C image grid")

    s = sub.add_parser("solve", help="closed-form optimum")
    sigma_flags(s)
    s.add_argument("--kind", choices=["mae", "ae", "dae"], default="mae")
    s.add_argument("--noise-var", type=float, default=0.0)
    s.add_argument("--n", type=int)
    s.add_argument("--out-prefix", required=True)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="Monte-Carlo check of the closed-form masked loss")
    sigma_flags(v)
    v.add_argument("--trials", type=int, default=100_000)
    v.add_argument("--n", type=int, default=200, help="samples drawn from the sigma source")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out-prefix")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="kernel, entropy, boundary, spectrum and gabor analyses")
    asub = a.add_subparsers(dest="analysis", required=True)

    k = asub.add_parser("kernel")
    k.add_argument("--matrix-file", required=True)
    k.add_argument("--ring", metavar="d,p")
    k.add_argument("--grid", metavar="H,W,C,p")
    k.add_argument("--out-prefix", required=True)
    k.set_defaults(func=cmd_analyze_kernel)

    e = asub.add_parser("entropy")
    e.add_argument("--matrix-file", required=True)
    e.add_argument("--bins", type=int, default=20)
    e.add_argument("--out-prefix", required=True)
    e.set_defaults(func=cmd_analyze_entropy)

    b = asub.add_parser("boundary")
    b.add_argument("--encoder-file", required=True)
    b.add_argument("--ring", metavar="d,p", required=True)
    b.add_argument("--width", type=int, default=1)
    b.add_argument("--out-prefix")
    b.set_defaults(func=cmd_analyze_boundary)

    sp = asub.add_parser("spectrum")
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--starts", required=True)
    sp.add_argument("--out-prefix")
    sp.set_defaults(func=cmd_analyze_spectrum)

    gb = asub.add_parser("gabor")
    gb.add_argument("--data-file", required=True)
    gb.add_argument("--grid", metavar="H,W,C", required=True)
    gb.add_argument("--p", type=int, default=2)
    gb.add_argument("--k", type=int, required=True)
    gb.add_argument("--ms", default="0.1,0.5,0.9")
    gb.add_argument("--sigmas", default="1,2,4,6")
    gb.add_argument("--fs", default="0.03,0.06,0.1")
    gb.add_argument("--ridge", type=float, default=1e-3)
    gb.add_argument("--seeds", default="0")
    gb.add_argument("--out-prefix", required=True)
    gb.set_defaults(func=cmd_analyze_gabor)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"maelens: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MaelensError, ValueError, OSError, NotImplementedError) as exc:
        print(f"maelens: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())

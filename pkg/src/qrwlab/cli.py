"""
Command-line driver.

    qrwlab evolve   --fixture hadamard-j1 --T 400 --out runs/had1
    qrwlab spectral --fixture ucoin-j2 --grid 256 --bins 40 --out runs/u2
    qrwlab haar     --jumps j1 --coins 1000 --grid 64 --bins 20 --seed 7
    qrwlab localize --fixture hadamard-j1
    qrwlab render   runs/had1.csv --out had1.pgm --log-scale

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import __version__
from .core import JUMP_MAPS, SpecError, WalkSpec, fixture, load_walk_spec
from .evolve import (
    WindowOverflow,
    evolve,
    iter_evolve_operator,
    operator_probabilities,
    probabilities,
)
from .fourier import AliasingError, amplitudes_via_dft, dump_symbol_powers, min_grid, operator_via_dft
from .haar import RngSeed, averaged_empirical_measure, averaged_limit_measure, simplex_pushforward_oracle
from .heatmap import read_field_csv, write_pgm
from .histogram import read_histogram_csv, tv_distance
from .localize import certify, detect_atoms, strong_localization_probe
from .spectral import DegenerateSpectrum, histogram, limit_measure

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def parse_state(text: str, c: int) -> np.ndarray:
    """
    ``--state`` value: c complex numbers as "re,im" pairs separated by
    semicolons or whitespace, e.g. "1,0; 0,0".  Normalized to unit length.
    """
    parts = [p for p in text.replace(";", " ").split() if p]
    try:
        pairs = [tuple(float(x) for x in p.split(",")) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"bad --state value {text!r}") from exc
    if len(pairs) != c or any(len(p) != 2 for p in pairs):
        raise ConfigError(f"--state needs {c} 're,im' pairs, got {text!r}")
    u = np.array([complex(a, b) for a, b in pairs])
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ConfigError("--state must be nonzero")
    return u / norm


def _add_source(p: argparse.ArgumentParser, jumps: bool = False) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fixture", help="named example walk, e.g. hadamard-j1, ucoin-j3, shift-d2")
    g.add_argument("--spec", help="walk-spec JSON file")
    if jumps:
        g.add_argument("--jumps", choices=sorted(JUMP_MAPS), help="jump map only (c=4, d=2)")
    p.add_argument("--allow-degenerate", action="store_true",
                   help="accept spec files whose jumps do not affinely span R^d")


def _add_render(p: argparse.ArgumentParser) -> None:
    p.add_argument("--log-scale", action="store_true", help="log(1 + v/eps) gray mapping")
    p.add_argument("--gamma", type=_positive_float, default=0.5, help="gray = (v/vmax)^gamma (default 0.5)")
    p.add_argument("--no-image", action="store_true", help="skip the PGM heatmap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrwlab", description="Coined quantum walks on Z^d.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="evolve S^T from the origin and write the probability field")
    _add_source(p)
    p.add_argument("--T", type=_nonneg_int, default=400)
    p.add_argument("--state", help="initial chirality state; default averages over basis states")
    p.add_argument("--method", choices=("direct", "dft"), default="direct")
    p.add_argument("--grid", type=_positive_int, help="DFT grid per axis (method dft)")
    p.add_argument("--per-chirality", action="store_true", help="add p_chi_v columns")
    p.add_argument("--threshold", type=float, default=0.0, help="omit sites with p below this")
    p.add_argument("--dump-symbol", metavar="PATH", help="write the raw M(xi)^T grid (binary)")
    p.add_argument("--out", default="evolve", help="output prefix (PREFIX.csv, PREFIX.pgm)")
    _add_render(p)

    p = sub.add_parser("spectral", help="Gauss-map limit measure from the spectral surface")
    _add_source(p)
    p.add_argument("--grid", type=_positive_int, default=256)
    p.add_argument("--bins", type=_positive_int, default=40)
    p.add_argument("--state", help="weight branches by |<v,u>|^2; default trace-averaged")
    p.add_argument("--tol", type=_positive_float, default=1e-8, help="eigenphase gap below which a fiber is skipped")
    p.add_argument("--out", default="spectral")
    _add_render(p)

    p = sub.add_parser("haar", help="Haar-averaged limit measure vs the uniform-simplex pushforward")
    _add_source(p, jumps=True)
    p.add_argument("--pipeline", choices=("spectral", "empirical"), default="spectral")
    p.add_argument("--coins", type=_positive_int, default=1000)
    p.add_argument("--grid", type=_positive_int, default=64)
    p.add_argument("--T", type=_positive_int, default=40, help="steps for the empirical pipeline")
    p.add_argument("--bins", type=_positive_int, default=20)
    p.add_argument("--samples", type=_positive_int, default=10**6, help="simplex oracle samples")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker threads (results do not depend on it)")
    p.add_argument("--special", action="store_true", help="sample SU(c) instead of U(c)")
    p.add_argument("--out", default="haar")
    _add_render(p)

    p = sub.add_parser("localize", help="detect and certify localization atoms")
    _add_source(p)
    p.add_argument("--grid", type=_positive_int, default=256)
    p.add_argument("--radius", type=_positive_float, default=1e-6)
    p.add_argument("--threshold", type=_positive_float, default=0.01, help="minimum atom mass")
    p.add_argument("--tol", type=_positive_float, default=1e-6, help="rational speed tolerance")
    p.add_argument("--samples", type=_positive_int, default=1000, help="fibers for the torus check")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--probe", type=_positive_int, nargs="*", metavar="T",
                   help="also probe p_T at the moving sites for these T")
    p.add_argument("--state", help="initial state for --probe; default averages over basis states")
    p.add_argument("--out", default="localize")

    p = sub.add_parser("render", help="PGM heatmap of a probability-field or histogram CSV")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--log-scale", action="store_true")
    p.add_argument("--gamma", type=_positive_float, default=0.5)
    return parser


def manifest(args: argparse.Namespace) -> str:
    items = sorted((k, v) for k, v in vars(args).items() if k not in ("verbose", "jobs"))
    return "qrwlab " + " ".join(f"{k}={v}" for k, v in items)


def _load_spec(args) -> WalkSpec:
    if args.fixture:
        return fixture(args.fixture)
    return load_walk_spec(args.spec, require_span=not args.allow_degenerate)


def _prepare_out(prefix: str) -> None:
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)


def cmd_evolve(args) -> int:
    spec = _load_spec(args)
    info = manifest(args)
    _prepare_out(args.out)
    if args.dump_symbol:
        dump_symbol_powers(args.dump_symbol, spec, args.T, args.grid or min_grid(spec, args.T))
    if args.state:
        u = parse_state(args.state, spec.c)
        if args.method == "dft":
            state = amplitudes_via_dft(spec, u, args.T, args.grid)
        else:
            state = evolve(spec, u, args.T)
        pf = probabilities(state, args.per_chirality)
    else:
        if args.method == "dft":
            window, A = operator_via_dft(spec, args.T, args.grid)
        else:
            _, window, A = next(iter_evolve_operator(spec, [args.T]))
        pf = operator_probabilities(spec, window, A, args.T, args.per_chirality)
    pf.to_csv(args.out + ".csv", args.threshold, comments=[info])
    if not args.no_image:
        write_pgm(args.out + ".pgm", pf.total, args.gamma, args.log_scale, comments=[info])
    print(f"T={args.T} total probability {pf.total.sum():.15f} -> {args.out}.csv")
    return 0


def cmd_spectral(args) -> int:
    spec = _load_spec(args)
    info = manifest(args)
    _prepare_out(args.out)
    if args.state:
        m = limit_measure(spec, args.grid, "state", parse_state(args.state, spec.c), gap_tol=args.tol)
    else:
        m = limit_measure(spec, args.grid, "trace", gap_tol=args.tol)
    h = histogram(m, args.bins)
    m.to_csv(args.out + "_measure.csv", comments=[info])
    h.to_csv(args.out + "_hist.csv", comments=[m.provenance, info])
    if not args.no_image:
        write_pgm(args.out + ".pgm", h.masses, args.gamma, args.log_scale, comments=[info])
    peak = np.unravel_index(np.argmax(h.masses), h.bins)
    print(f"{m.provenance} points={len(m.points)} heaviest bin {tuple(int(i) for i in peak)} "
          f"mass {h.masses[peak]:.6f}")
    return 0


def cmd_haar(args) -> int:
    if args.jumps:
        jumps = np.array(JUMP_MAPS[args.jumps])
    else:
        jumps = _load_spec(args).jumps
    c, d = jumps.shape
    info = manifest(args)
    _prepare_out(args.out)
    seed = RngSeed(args.seed)
    if args.pipeline == "spectral":
        avg = averaged_limit_measure(d, c, jumps, args.coins, args.grid, seed, args.bins,
                                     n_jobs=args.jobs, special=args.special)
        run = f"seed={args.seed} n_coins={args.coins} grid={args.grid} T=inf"
    else:
        avg = averaged_empirical_measure(d, c, jumps, args.coins, args.T, seed, args.bins,
                                         n_jobs=args.jobs, special=args.special)
        run = f"seed={args.seed} n_coins={args.coins} grid=none T={args.T}"
    # oracle gets its own stream family so it never reuses coin draws
    oracle = simplex_pushforward_oracle(jumps, args.samples, RngSeed(args.seed ^ 0x5EED), args.bins)
    tv = tv_distance(avg, oracle)
    avg.to_csv(args.out + "_averaged.csv", comments=[run, info])
    oracle.to_csv(args.out + "_oracle.csv", comments=[f"seed={args.seed} samples={args.samples}", info])
    with open(args.out + "_tv.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {run}\n# {info}\ntv={tv!r}\n")
    if not args.no_image:
        write_pgm(args.out + ".pgm", avg.masses, args.gamma, args.log_scale, comments=[run, info])
    print(f"TV(averaged, simplex oracle) = {tv:.6f}")
    return 0


def cmd_localize(args) -> int:
    spec = _load_spec(args)
    info = manifest(args)
    _prepare_out(args.out)
    m = limit_measure(spec, args.grid, "trace")
    report = certify(detect_atoms(m, args.radius, args.threshold), spec, args.tol,
                     args.samples, rng=np.random.default_rng(args.seed))
    report.to_csv(args.out + "_atoms.csv", comments=[m.provenance, info])
    print(report.summary())
    if args.probe and report.atoms:
        u = parse_state(args.state, spec.c) if args.state else None
        speeds = [a.speed if a.certificate is None else [float(q) for q in a.certificate.exact_speed]
                  for a in report.atoms]
        rows = strong_localization_probe(spec, speeds, args.probe, u)
        with open(args.out + "_probe.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {info}\n")
            fh.write(",".join([f"s_{a + 1}" for a in range(spec.d)] + ["T"]
                              + [f"k_{a + 1}" for a in range(spec.d)] + ["p_max_chirality", "p_site"]) + "\n")
            for r in rows:
                fh.write(",".join([repr(x) for x in r.speed] + [str(r.T)] + [str(k) for k in r.site]
                                  + [repr(r.max_chirality), repr(r.site_total)]) + "\n")
                print(f"  T={r.T:4d} site {r.site}: p_site={r.site_total:.6f} max_v={r.max_chirality:.6f}")
    return 0


def cmd_render(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        text = fh.read()
    if "\nbin_1" in text or text.startswith("bin_1"):
        values = read_histogram_csv(args.input).masses
    else:
        values = read_field_csv(args.input)
    write_pgm(args.out, values, args.gamma, args.log_scale, comments=[manifest(args)])
    return 0


COMMANDS = {
    "evolve": cmd_evolve,
    "spectral": cmd_spectral,
    "haar": cmd_haar,
    "localize": cmd_localize,
    "render": cmd_render,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SpecError, ConfigError, AliasingError, OSError) as exc:
        print(f"qrwlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateSpectrum, WindowOverflow, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"qrwlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"qrwlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

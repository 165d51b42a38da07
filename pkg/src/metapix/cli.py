"""Command line front end for the design pipeline.

Stages are exposed as subcommands sharing one JSON config file (flags beat
config fields, config fields beat built-in defaults).  Every file artifact
gets a JSON manifest sidecar recording the tool version, the exact
parameters, and SHA-256 hashes of all inputs and of the artifact itself, so
a run can be reproduced from the manifest alone.  Artifacts are never
silently replaced; pass --force to overwrite.  All frequencies are plain Hz
(scientific notation is fine).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, arraysim, dataset, inverse, oracle, surrogate
from .config import RunConfig, config_to_dict, load_config
from .inverse import NoSolutionError, TargetSpec
from .netcalc import NoContrastError, SingularityError, gamma1_reduced, reflection_of_load, switch_impedance
from .pattern import expand_genome, genome_from_u64, pack_genome, render_pbm, unpack_genome


class CliError(Exception):
    """User-facing failure: printed as one line, exit status 1."""


# ---------------------------------------------------------------------------
# flag parsing helpers
# ---------------------------------------------------------------------------


def _parse_freq(text: str) -> float:
    try:
        f = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad frequency {text!r}: expected Hz")
    if f <= 0:
        raise argparse.ArgumentTypeError(f"frequency must be positive, got {text}")
    return f


def _parse_band(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"bad band {text!r}: expected f_lo:f_hi in Hz")
    lo, hi = (_parse_freq(p) for p in parts)
    if hi < lo:
        raise argparse.ArgumentTypeError(f"band {text!r} is reversed")
    return lo, hi


def _parse_anchor(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"bad anchor {text!r}: expected f:re:im (Hz and target reflection)"
        )
    try:
        f, re, im = float(parts[0]), float(parts[1]), float(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad anchor {text!r}: non-numeric field")
    return f, re, im


def _parse_steer(text: str) -> arraysim.SteerTarget:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"bad steer {text!r}: expected theta:phi degrees")
    try:
        return arraysim.SteerTarget(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _parse_genome(text: str) -> np.ndarray:
    try:
        return unpack_genome(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# ---------------------------------------------------------------------------
# artifact plumbing
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise CliError(f"missing {what}: {path}")
    return path


def _check_fresh(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise CliError(f"refusing to overwrite existing artifact: {path} (use --force)")


def _write_text(path: Path, text: str, force: bool) -> None:
    _check_fresh(path, force)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_manifest(artifact: Path, command: str, params: dict, inputs: dict[str, Path],
                    force: bool) -> None:
    manifest = {
        "artifact": artifact.name,
        "sha256": _sha256(artifact),
        "command": command,
        "params": params,
        "inputs": {name: _sha256(p) for name, p in inputs.items()},
        "version": __version__,
    }
    side = artifact.with_name(artifact.name + ".manifest.json")
    if side.exists() and not force:
        raise CliError(f"refusing to overwrite existing artifact: {side} (use --force)")
    tmp = side.with_name(side.name + f".tmp.{os.getpid()}")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, side)


def _outdir(args, cfg: RunConfig) -> Path:
    out = Path(args.outdir if args.outdir else cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_target(args, cfg: RunConfig) -> int:
    if args.freq is not None:
        lo = hi = args.freq
    else:
        lo, hi = args.band
    try:
        spec = inverse.build_target(lo, hi, switch=cfg.switch, anchors=tuple(args.anchor))
    except (NoSolutionError, SingularityError, NoContrastError, ValueError) as exc:
        raise CliError(str(exc))
    for k in range(len(spec.freqs)):
        if spec.weight[k] == 0.0:
            continue
        kind = "band" if lo <= spec.freqs[k] <= hi else "anchor"
        print(f"{spec.freqs[k]:.4e} Hz  re {spec.re[k]:+.6f}  im {spec.im[k]:+.6f}  [{kind}]")
    if args.out:
        out = Path(args.out)
        _write_text(out, json.dumps(spec.to_json(), indent=2) + "\n", args.force)
        _write_manifest(out, "target",
                        {"band": [lo, hi], "anchors": [list(a) for a in args.anchor]},
                        {}, args.force)
        print(f"wrote {out}")
    return 0


def cmd_gen(args, cfg: RunConfig) -> int:
    out = Path(args.out) if args.out else _outdir(args, cfg) / "dataset.bin"
    _check_fresh(out, args.force)
    n = args.n if args.n is not None else cfg.dataset_n
    seed = args.seed if args.seed is not None else cfg.dataset_seed
    records = dataset.generate(n, seed, cfg.constants, cfg.geometry, jobs=args.jobs)
    out.parent.mkdir(parents=True, exist_ok=True)
    dataset.save(out, records, seed, cfg.constants, cfg.geometry)
    _write_manifest(out, "gen",
                    {"n": n, "seed": seed,
                     "fingerprint": oracle.fingerprint(cfg.constants, cfg.geometry),
                     "dataset_version": dataset.DATASET_VERSION},
                    {}, args.force)
    print(f"wrote {out} ({n} records, seed {seed})")
    return 0


def cmd_stats(args, cfg: RunConfig) -> int:
    path = _require(Path(args.data), "dataset artifact")
    header, records = dataset.load(path, cfg.constants, cfg.geometry,
                                   check_fingerprint=not args.no_fingerprint_check)
    stats = dataset.summarize(records)
    text = json.dumps(stats, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        _write_text(out, text, args.force)
        _write_manifest(out, "stats", {"n": header.n, "seed": header.seed},
                        {"dataset": path}, args.force)
        print(f"wrote {out}")
    else:
        print(text, end="")
    return 0


def cmd_train(args, cfg: RunConfig) -> int:
    data_path = Path(args.data) if args.data else _outdir(args, cfg) / "dataset.bin"
    _require(data_path, "dataset artifact (run `gen` first)")
    ckpt = Path(args.out) if args.out else _outdir(args, cfg) / "surrogate.ckpt"
    hist_path = Path(args.history) if args.history else _outdir(args, cfg) / "train_history.csv"
    _check_fresh(ckpt, args.force)
    _check_fresh(hist_path, args.force)

    _, records = dataset.load(data_path, cfg.constants, cfg.geometry)
    train_recs, val_recs = dataset.split(records)
    xt, yt = surrogate.records_to_xy(train_recs)
    xv, yv = surrogate.records_to_xy(val_recs)

    ts = cfg.train
    epochs = args.epochs if args.epochs is not None else ts.max_epochs
    mlp = surrogate.init_mlp(ts.seed, ts.hidden)
    log = (lambda msg: print(msg)) if args.verbose else None
    result = surrogate.train(
        mlp, xt, yt, xv, yv, seed=ts.seed, batch_size=ts.batch_size, lr0=ts.lr0,
        max_epochs=epochs, patience=ts.patience, min_delta=ts.min_delta,
        lr_drops=ts.lr_drops, log=log,
    )
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    surrogate.save_checkpoint(ckpt, mlp, meta={
        "best_val_mae": result.best_val_mae, "best_epoch": result.best_epoch,
        "epochs_run": result.epochs_run, "stop_reason": result.stop_reason,
        "seed": ts.seed,
    })
    surrogate.save_history(hist_path, result.history)
    params = {"hidden": list(ts.hidden), "batch_size": ts.batch_size, "lr0": ts.lr0,
              "max_epochs": epochs, "patience": ts.patience, "min_delta": ts.min_delta,
              "lr_drops": ts.lr_drops, "seed": ts.seed}
    _write_manifest(ckpt, "train", params, {"dataset": data_path}, args.force)
    _write_manifest(hist_path, "train", params, {"dataset": data_path}, args.force)
    print(f"best val MAE {result.best_val_mae:.6f} at epoch {result.best_epoch} "
          f"({result.epochs_run} epochs, {result.stop_reason})")
    print(f"wrote {ckpt}")
    return 0


def _load_target(path: Path) -> TargetSpec:
    _require(path, "target artifact (run `target --out` first)")
    try:
        return TargetSpec.from_json(json.loads(path.read_text()))
    except (ValueError, KeyError) as exc:
        raise CliError(f"bad target file {path}: {exc}")


def cmd_design(args, cfg: RunConfig) -> int:
    target = _load_target(Path(args.target))
    out = Path(args.out) if args.out else _outdir(args, cfg) / "design.json"
    _check_fresh(out, args.force)

    inputs: dict[str, Path] = {"target": Path(args.target)}
    if args.evaluator == "oracle":
        evaluator = inverse.oracle_evaluator(cfg.constants, cfg.geometry)
    else:
        ckpt = Path(args.ckpt) if args.ckpt else _outdir(args, cfg) / "surrogate.ckpt"
        _require(ckpt, "surrogate checkpoint (run `train` or pass --evaluator oracle)")
        mlp, _ = surrogate.load_checkpoint(ckpt)
        evaluator = inverse.surrogate_evaluator(mlp)
        inputs["checkpoint"] = ckpt

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.population is not None:
        overrides["population"] = args.population
    if args.generations is not None:
        overrides["generations"] = args.generations
    ga = dataclasses.replace(cfg.ga, **overrides) if overrides else cfg.ga
    result = inverse.ga_run(ga, evaluator, target)

    predicted = evaluator(result.best_bits[None, :])[0]
    doc = {
        "genome": pack_genome(genome_from_u64(result.best_word)),
        "fitness": result.best_fitness,
        "evaluator": args.evaluator,
        "ga": {"population": ga.population, "generations": ga.generations,
               "tournament": ga.tournament, "crossover_p": ga.crossover_p,
               "mutation_p": ga.mutation_p, "elitism": ga.elitism, "seed": ga.seed},
        "predicted_re": [float(v) for v in predicted.real],
        "predicted_im": [float(v) for v in predicted.imag],
        "history_best": [float(v) for v in result.history_best],
        "history_median": [float(v) for v in result.history_median],
    }
    _write_text(out, json.dumps(doc, indent=2) + "\n", args.force)
    _write_manifest(out, "design", doc["ga"] | {"evaluator": args.evaluator}, inputs, args.force)
    print(f"best genome {doc['genome']}  fitness {result.best_fitness:.4f}")
    print(f"wrote {out}")
    return 0


def cmd_validate(args, cfg: RunConfig) -> int:
    design_path = _require(Path(args.design), "design artifact (run `design` first)")
    try:
        doc = json.loads(design_path.read_text())
        genome = unpack_genome(doc["genome"])
        predicted = np.array(doc["predicted_re"]) + 1j * np.array(doc["predicted_im"])
        hist_b = np.array(doc["history_best"])
        hist_m = np.array(doc["history_median"])
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CliError(f"bad design file {design_path}: {exc}")
    target = _load_target(Path(args.target))

    report = inverse.validate_design(
        genome.reshape(-1), cfg.switch, cfg.constants, cfg.geometry,
        predicted=predicted, history_best=hist_b, history_median=hist_m,
    )
    out_csv = Path(args.out) if args.out else _outdir(args, cfg) / "validation.csv"
    _write_text(out_csv, inverse.report_csv(report, target), args.force)
    _write_manifest(out_csv, "validate", {"genome": doc["genome"]},
                    {"design": design_path, "target": Path(args.target)}, args.force)
    pbm = Path(args.pbm) if args.pbm else _outdir(args, cfg) / "genome.pbm"
    _write_text(pbm, render_pbm(expand_genome(genome)), args.force)
    _write_manifest(pbm, "validate", {"genome": doc["genome"]},
                    {"design": design_path}, args.force)
    print(inverse.report_summary(report))
    print(f"wrote {out_csv}")
    return 0


def _design_gamma_spectra(doc: dict, cfg: RunConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Oracle reflection spectra of both switch states for a designed genome."""
    genome = unpack_genome(doc["genome"])
    freqs = oracle.freq_grid()
    grid = expand_genome(genome)
    s22 = oracle.response_batch(grid[None, :, :], cfg.constants, cfg.geometry, freqs)[0]
    g0 = np.empty(len(freqs), dtype=complex)
    g1 = np.empty(len(freqs), dtype=complex)
    for k, f in enumerate(freqs):
        a = abs(s22[k])
        theta = float(np.angle(s22[k]))
        gl0 = reflection_of_load(switch_impedance(cfg.switch, 0, f))
        gl1 = reflection_of_load(switch_impedance(cfg.switch, 1, f))
        g0[k] = gamma1_reduced(a, theta, gl0)
        g1[k] = gamma1_reduced(a, theta, gl1)
    return freqs, g0, g1


def cmd_array(args, cfg: RunConfig) -> int:
    acfg = cfg.array
    steer = args.steer
    f = args.freq if args.freq is not None else cfg.geometry.f0
    outdir = _outdir(args, cfg)

    if args.design:
        design_path = _require(Path(args.design), "design artifact")
        try:
            doc = json.loads(design_path.read_text())
        except json.JSONDecodeError as exc:
            raise CliError(f"bad design file {design_path}: {exc}")
        freqs, g0_spec, g1_spec = _design_gamma_spectra(doc, cfg)
        k = int(np.argmin(np.abs(freqs - f)))
        gamma0, gamma1 = complex(g0_spec[k]), complex(g1_spec[k])
        inputs = {"design": design_path}
    else:
        gamma0, gamma1 = 1.0 + 0.0j, -1.0 + 0.0j
        inputs = {}

    codes = arraysim.quantize_1bit(arraysim.ideal_phase(acfg, steer, f, args.ref_phase))
    cut = arraysim.default_cut(args.step)
    params = {"steer": [steer.theta_deg, steer.phi_deg], "freq": f,
              "ref_phase": args.ref_phase, "step": args.step,
              "gamma0": [gamma0.real, gamma0.imag], "gamma1": [gamma1.real, gamma1.imag]}

    for phi in (0.0, 90.0):
        p = arraysim.far_field(acfg, codes, gamma0, gamma1, f, cut, phi)
        lines = ["theta_deg,power_db"]
        lines += [f"{cut[i]:.2f},{p[i]:.6f}" for i in range(len(cut))]
        path = outdir / f"pattern_phi{int(phi)}.csv"
        _write_text(path, "\n".join(lines) + "\n", args.force)
        _write_manifest(path, "array", params | {"cut_phi": phi}, inputs, args.force)
        peak = cut[int(np.argmax(p))]
        print(f"phi={int(phi)} cut: peak at {peak:.2f} deg -> {path}")

    codes_path = outdir / "codes.pbm"
    _write_text(codes_path, render_pbm(codes), args.force)
    _write_manifest(codes_path, "array", params, inputs, args.force)

    if args.sweep:
        if not args.design:
            raise CliError("--sweep needs --design for the element reflection spectra")
        sweep = arraysim.spectral_power_sweep(acfg, freqs, g0_spec, g1_spec, steer,
                                              f0=cfg.geometry.f0, ref_phase=args.ref_phase)
        lines = ["freq_hz,power_db"]
        lines += [f"{sweep.freqs[i]:.6e},{sweep.power_db[i]:.6f}" for i in range(len(sweep.freqs))]
        path = outdir / "sweep.csv"
        _write_text(path, "\n".join(lines) + "\n", args.force)
        _write_manifest(path, "array", params, inputs, args.force)
        if sweep.band is None:
            print(f"no 3-dB band around {cfg.geometry.f0:.3e} Hz -> {path}")
        else:
            print(f"3-dB band {sweep.band[0]:.3e}..{sweep.band[1]:.3e} Hz "
                  f"({sweep.bandwidth_pct:.1f}%) -> {path}")

    if args.hemisphere:
        thetas = np.arange(0.0, 90.0 + 1e-9, 1.0)
        phis = np.arange(0.0, 360.0, 1.0)
        gam = arraysim.gammas_from_codes(codes, gamma0, gamma1)
        rows = np.empty((len(phis), len(thetas)))
        for i, phi in enumerate(phis):
            e = arraysim.far_field_gammas(acfg, gam, f, thetas, float(phi))
            rows[i] = np.abs(e) ** 2
        rows /= rows.max()
        db = 10.0 * np.log10(np.maximum(rows, 1e-10))
        path = outdir / "hemisphere.pgm"
        _write_text(path, arraysim.render_pgm(db), args.force)
        _write_manifest(path, "array", params, inputs, args.force)
        print(f"wrote {path}")
    return 0


def cmd_config(args, cfg: RunConfig) -> int:
    print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON config file (flags override its fields)")
    shared.add_argument("--outdir", help="output directory (default from config)")
    shared.add_argument("--force", action="store_true",
                        help="allow overwriting existing artifacts")

    parser = argparse.ArgumentParser(
        prog="metapix",
        description="1-bit pixelated meta-atom design pipeline",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("target", parents=[shared],
                       help="solve the required element reflection over a band")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--band", type=_parse_band, help="f_lo:f_hi in Hz")
    g.add_argument("--freq", type=_parse_freq, help="single frequency in Hz")
    p.add_argument("--anchor", type=_parse_anchor, action="append", default=[],
                   metavar="F:RE:IM", help="out-of-band anchor row (repeatable)")
    p.add_argument("--out", help="write the target spec JSON here")
    p.set_defaults(func=cmd_target)

    p = sub.add_parser("gen", parents=[shared], help="generate the oracle dataset")
    p.add_argument("--n", type=int, help="number of records")
    p.add_argument("--seed", type=int, help="dataset seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="dataset path (default <outdir>/dataset.bin)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", parents=[shared], help="summarize a dataset")
    p.add_argument("--data", required=True, help="dataset path")
    p.add_argument("--no-fingerprint-check", action="store_true",
                   help="accept a dataset built with different constants")
    p.add_argument("--out", help="write the summary JSON here instead of stdout")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", parents=[shared], help="train the surrogate")
    p.add_argument("--data", help="dataset path (default <outdir>/dataset.bin)")
    p.add_argument("--epochs", type=int, help="override the epoch budget")
    p.add_argument("--out", help="checkpoint path (default <outdir>/surrogate.ckpt)")
    p.add_argument("--history", help="history CSV path (default <outdir>/train_history.csv)")
    p.add_argument("--verbose", action="store_true", help="log per-epoch progress")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("design", parents=[shared], help="run the genetic search")
    p.add_argument("--target", required=True, help="target spec JSON from `target --out`")
    p.add_argument("--evaluator", choices=("surrogate", "oracle"), default="surrogate")
    p.add_argument("--ckpt", help="surrogate checkpoint (default <outdir>/surrogate.ckpt)")
    p.add_argument("--seed", type=int, help="override the GA seed")
    p.add_argument("--population", type=int, help="override the population size")
    p.add_argument("--generations", type=int, help="override the generation count")
    p.add_argument("--out", help="design JSON path (default <outdir>/design.json)")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("validate", parents=[shared],
                       help="check a design against the circuit oracle")
    p.add_argument("--design", required=True, help="design JSON from `design`")
    p.add_argument("--target", required=True, help="target spec JSON")
    p.add_argument("--out", help="report CSV path (default <outdir>/validation.csv)")
    p.add_argument("--pbm", help="genome image path (default <outdir>/genome.pbm)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("array", parents=[shared], help="reflectarray pattern and sweep")
    p.add_argument("--steer", type=_parse_steer, default=arraysim.SteerTarget(0.0, 0.0),
                   metavar="THETA:PHI", help="beam direction in degrees (default 0:0)")
    p.add_argument("--freq", type=_parse_freq, help="pattern frequency in Hz (default 5.8e9)")
    p.add_argument("--ref-phase", type=float, default=0.0, help="reference phase in radians")
    p.add_argument("--step", type=float, default=0.25, help="cut resolution in degrees")
    p.add_argument("--design", help="take element states from this design JSON")
    p.add_argument("--sweep", action="store_true",
                   help="also write the frequency sweep CSV (needs --design)")
    p.add_argument("--hemisphere", action="store_true",
                   help="also write a 1-degree hemisphere PGM heatmap")
    p.set_defaults(func=cmd_array)

    p = sub.add_parser("config", parents=[shared], help="print the effective config")
    p.set_defaults(func=cmd_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

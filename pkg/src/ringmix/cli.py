"""Experiment runner: landscape, optimize, mix, and evaluate subcommands.

Every subcommand is driven by a flat key=value config file (see
``ringmix.config``) and writes byte-deterministic CSV/JSON outputs plus SVG
figures into the output directory. Exit codes: 0 ok, 2 configuration
problem, 3 data problem, 4 partial results (missing estimate files, or every
optimizer run diverged).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import reports
from .audioio import read_wav, write_wav
from .config import ExperimentConfig, load_config
from .errors import (
    AudioFormatError,
    ConfigError,
    DegenerateRingError,
    DegenerateSignalError,
    DimensionError,
    InsufficientDataError,
    PairingError,
    SampleRangeError,
    UndefinedScaleError,
)
from .landscape import NoiseProfile, combined_label, scan
from .losses import align_estimates, occupancy, si_sdr
from .mixing import (
    ConventionalBatch,
    RingBatch,
    batch_from_manifest,
    build_conventional_batch,
    build_ring_batch,
    manifest_dict,
    sample_batch_from_corpus,
)
from .signal_core import energy
from .synthgen import make_noisy_source, normalize_source, rng_for, source_from_waveform
from .toysep import estimates_for_lambdas, optimize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PARTIAL = 4

_CLI_SEED_DOMAIN = 0x434C4931


def _mix_name(j: int) -> str:
    return f"mix_{j + 1:03d}.wav"


def _estimate_name(j: int, slot: int) -> str:
    return f"est_{j + 1:03d}_{slot}.wav"


def _ref_name(kind: str, k: int) -> str:
    return f"ref_{kind}_{k + 1:03d}.wav"


def _derive_source_seeds(seed: int, count: int) -> np.ndarray:
    """(count, 2) array of (speech, noise) seeds, deterministic in ``seed``."""
    master = rng_for(seed, _CLI_SEED_DOMAIN)
    return master.integers(0, 2**63, size=(count, 2), dtype=np.uint64)


def _build_synthetic_sources(config: ExperimentConfig, count: int) -> list:
    seeds = _derive_source_seeds(config.seed, count)
    sources = []
    for i in range(count):
        src = make_noisy_source(
            int(seeds[i, 0]),
            int(seeds[i, 1]),
            config.snr_for_source(i, count),
            config.segment_length,
            config.sample_rate,
        )
        if config.normalize_sources:
            src = normalize_source(src, 1.0)
        sources.append(src)
    return sources


def _build_batch(config: ExperimentConfig) -> RingBatch | ConventionalBatch:
    count = config.batch_k if config.mode == "ring" else 2 * config.batch_k
    if config.corpus is None:
        sources = _build_synthetic_sources(config, count)
        if config.mode == "ring":
            return build_ring_batch(sources)
        return build_conventional_batch(sources)
    corpus_dir = Path(config.corpus)
    paths = sorted(corpus_dir.glob("*.wav"))
    corpus = []
    for path in paths:
        audio = read_wav(path)
        if audio.waveform.sample_rate != config.sample_rate:
            raise DimensionError(
                f"{path}: {audio.waveform.sample_rate} Hz, config wants {config.sample_rate} Hz"
            )
        corpus.append(source_from_waveform(audio.waveform, label=str(path)))
    return sample_batch_from_corpus(
        corpus, config.batch_k, config.seed, config.mode, config.segment_length
    )


# ---------------------------------------------------------------------------
# landscape


def cmd_landscape(config: ExperimentConfig, out_dir: Path) -> int:
    profile = NoiseProfile(*config.profile)
    mc = None
    if config.mc_trials > 0:
        seeds = _derive_source_seeds(config.seed, 2)
        mc = {
            "speech_seed": int(seeds[0, 0]),
            "noise_seeds": (int(seeds[1, 0]), int(seeds[1, 1])),
            "snr_db": config.snr_db[0],
            "n_trials": config.mc_trials,
            "length": config.segment_length,
            "sample_rate": config.sample_rate,
        }
    ls = scan(profile, alphas=config.alpha, grid_points=config.grid_points, mc=mc)

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "landscape.csv"
    svg_path = out_dir / "landscape.svg"
    reports.write_landscape_csv(csv_path, ls)
    reports.plot_landscape(svg_path, ls)

    def fmt_minima(values) -> str:
        return ", ".join(f"{v:.4f}" for v in values)

    print(f"profile: e1={profile.e1:.9g} e2={profile.e2:.9g}")
    print(f"pair loss minima: {fmt_minima(ls.minima['pair'])}")
    print(f"scer minima: {fmt_minima(ls.minima['scer'])}")
    for alpha in sorted(ls.combined_db):
        label = combined_label(alpha)
        print(f"combined (alpha={alpha:g}) minima: {fmt_minima(ls.minima[label])}")
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize


def _estimate_rows(batch, estimates, clean_refs=None) -> list[list]:
    """Per-(source, host mixture) metric rows shared by optimize and evaluate."""
    rows = []
    for k in range(len(batch.sources)):
        source = batch.sources[k]
        clean = clean_refs[k] if clean_refs is not None else source.clean
        for j in batch.source_mixtures[k]:
            est = estimates[(k, j)]
            a, b = batch.mixture_sources[j]
            other = b if k == a else a
            row = [
                k,
                j,
                si_sdr(est, clean),
                si_sdr(est, source.noisy),
                occupancy(est, clean, batch.sources[other].clean),
            ]
            for interferer in (batch.sources[other].noise, source.noise):
                if energy(interferer) > 0.0:
                    row.append(occupancy(est, clean, interferer))
                else:
                    row.append(None)
            rows.append(row)
    return rows


def _aggregate_row(rows: list[list]) -> list:
    agg: list = ["mean", ""]
    for col in range(2, len(reports.METRICS_HEADER)):
        values = [row[col] for row in rows if row[col] is not None]
        agg.append(float(np.mean(values)) if values else None)
    return agg


def cmd_optimize(config: ExperimentConfig, out_dir: Path) -> int:
    batch = _build_batch(config)
    if not isinstance(batch, RingBatch):
        raise ConfigError("mode: optimize needs ring batches (mode = ring)")
    out_dir.mkdir(parents=True, exist_ok=True)

    records = {}
    sweep_rows = []
    for alpha in config.alpha:
        record = optimize(
            batch,
            alpha=alpha,
            steps=config.steps,
            step_size=config.step_size,
            init_lambda=config.init_lambda,
            tied=config.tied,
            seed=config.seed,
        )
        records[alpha] = record
        reports.write_trajectory_csv(out_dir / f"trajectory_alpha_{alpha:g}.csv", record)

        lam = record.final_lambdas
        lam_grid = (
            np.full((batch.k, 2), lam[0]) if record.tied else lam.reshape(batch.k, 2)
        )
        estimates = estimates_for_lambdas(batch, lam_grid)
        rows = _estimate_rows(batch, estimates)
        occ_self = [r[6] for r in rows if r[6] is not None]
        occ_other = [r[5] for r in rows if r[5] is not None]
        sweep_rows.append(
            [
                float(alpha),
                record.final_mean_lambda,
                float(np.mean(occ_self)) if occ_self else None,
                float(np.mean(occ_other)) if occ_other else None,
                float(np.mean([r[2] for r in rows])),
                record.converged,
                record.diverged,
                record.steps_run,
            ]
        )
        status = "DIVERGED" if record.diverged else ("converged" if record.converged else "budget exhausted")
        print(
            f"alpha={alpha:g}: {status} after {record.steps_run} steps, "
            f"final mean lambda {record.final_mean_lambda:.4f}"
        )

    reports.write_sweep_csv(out_dir / "sweep_summary.csv", sweep_rows)
    reports.write_json(
        out_dir / "sweep_summary.json",
        {
            "config": config.to_dict(),
            "rows": [
                dict(zip([h.split(" ")[0] for h in reports.SWEEP_HEADER], row))
                for row in sweep_rows
            ],
        },
    )
    reports.plot_trajectories(out_dir / "trajectories.svg", records)
    print(f"wrote {out_dir / 'sweep_summary.csv'}")

    if all(rec.diverged for rec in records.values()):
        print("error: every optimization run diverged", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# mix


def cmd_mix(config: ExperimentConfig, out_dir: Path) -> int:
    batch = _build_batch(config)
    out_dir.mkdir(parents=True, exist_ok=True)

    mixture_files = []
    for j, mixture in enumerate(batch.mixtures):
        name = _mix_name(j)
        write_wav(out_dir / name, mixture, config.encoding)
        mixture_files.append(name)

    manifest = manifest_dict(
        batch,
        seed=config.seed,
        segment_length=config.segment_length,
        normalize_energy=(1.0 if config.normalize_sources and config.corpus is None else None),
    )
    manifest["encoding"] = config.encoding
    manifest["mixture_files"] = mixture_files

    if config.write_references:
        refs_dir = out_dir / "refs"
        refs_dir.mkdir(exist_ok=True)
        reference_files = []
        for k, source in enumerate(batch.sources):
            clean_name = _ref_name("clean", k)
            noisy_name = _ref_name("noisy", k)
            write_wav(refs_dir / clean_name, source.clean, config.encoding)
            write_wav(refs_dir / noisy_name, source.noisy, config.encoding)
            reference_files.append({"clean": clean_name, "noisy": noisy_name})
        manifest["reference_files"] = reference_files

    manifest_path = out_dir / "manifest.json"
    reports.write_json(manifest_path, manifest)
    print(f"wrote {len(mixture_files)} mixtures and {manifest_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(
    manifest_path: Path,
    estimates_dir: Path,
    references_dir: Path | None,
    out_dir: Path,
) -> int:
    manifest = json.loads(Path(manifest_path).read_text())
    batch = batch_from_manifest(manifest, read_waveform=lambda p: read_wav(p).waveform)

    missing = []
    mixture_outputs = []
    for j in range(len(batch.mixtures)):
        pair = []
        for slot in (0, 1):
            path = estimates_dir / _estimate_name(j, slot)
            if not path.exists():
                missing.append(path)
            else:
                pair.append(read_wav(path).waveform)
        if len(pair) == 2:
            mixture_outputs.append((pair[0], pair[1]))

    clean_refs = None
    if references_dir is not None:
        clean_refs = []
        for k in range(len(batch.sources)):
            path = references_dir / _ref_name("clean", k)
            if not path.exists():
                missing.append(path)
            else:
                clean_refs.append(read_wav(path).waveform)

    if missing:
        for path in missing:
            print(f"missing: {path}", file=sys.stderr)
        return EXIT_PARTIAL

    if isinstance(batch, RingBatch):
        estimates = align_estimates(batch, mixture_outputs, target="noisy")
    else:
        # Disjoint pairing: resolve each mixture independently as well.
        from .losses import resolve_permutation

        estimates = {}
        for j, outputs in enumerate(mixture_outputs):
            a, b = batch.mixture_sources[j]
            perm = resolve_permutation(
                outputs, (batch.sources[a].noisy, batch.sources[b].noisy)
            )
            for est_idx, tgt_idx in enumerate(perm):
                estimates[((a, b)[tgt_idx], j)] = outputs[est_idx]

    rows = _estimate_rows(batch, estimates, clean_refs)
    aggregate = _aggregate_row(rows)

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    reports.write_metrics_csv(csv_path, rows, aggregate)
    reports.plot_metrics(out_dir / "metrics.svg", rows)

    def show(value) -> str:
        return "n/a" if value is None else f"{value:.4f}"

    print(
        "means: si_sdr_clean="
        + show(aggregate[2])
        + " dB, si_sdr_noisy="
        + show(aggregate[3])
        + " dB, occ_s_other="
        + show(aggregate[4])
        + ", occ_n_other="
        + show(aggregate[5])
        + ", occ_n_self="
        + show(aggregate[6])
    )
    print(f"wrote {csv_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# wiring


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the config output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringmix",
        description="Ring-mixing separation loss experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_landscape = sub.add_parser("landscape", help="analytic and Monte Carlo lambda landscapes")
    _add_config_args(p_landscape)
    p_optimize = sub.add_parser("optimize", help="toy gradient-descent runs over alpha sweep")
    _add_config_args(p_optimize)
    p_mix = sub.add_parser("mix", help="build a batch, write mixture WAVs and a manifest")
    _add_config_args(p_mix)

    p_eval = sub.add_parser("evaluate", help="score estimate WAVs against a batch manifest")
    p_eval.add_argument("--manifest", required=True, help="manifest JSON written by mix")
    p_eval.add_argument("--estimates", required=True, help="directory of est_XXX_{0,1}.wav files")
    p_eval.add_argument(
        "--references",
        default=None,
        help="optional directory of ref_clean_XXX.wav files overriding manifest references",
    )
    p_eval.add_argument("--out", default="out", help="output directory for metrics")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "evaluate":
            return cmd_evaluate(
                Path(args.manifest),
                Path(args.estimates),
                None if args.references is None else Path(args.references),
                Path(args.out),
            )
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.out is not None:
            config.out = args.out
        out_dir = Path(config.out)
        handler = {
            "landscape": cmd_landscape,
            "optimize": cmd_optimize,
            "mix": cmd_mix,
        }[args.command]
        return handler(config, out_dir)
    except (ConfigError, DegenerateRingError, PairingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        InsufficientDataError,
        AudioFormatError,
        DimensionError,
        SampleRangeError,
        DegenerateSignalError,
        UndefinedScaleError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

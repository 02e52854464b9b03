"""Batch construction: ring mixing and conventional pairing, with provenance.

Ring mixing turns K noisy sources into K mixtures, mixture j being the sum of
noisy sources j and j+1 with wraparound, so every source appears in exactly
two mixtures. Conventional batches pair 2K sources into K disjoint mixtures.
Mixtures are always built from the noisy waveforms, never the clean ones, and
no per-mixture gain is applied.

Pairing tables are kept in both directions (mixture -> its two sources,
source -> its two host mixtures) and exported into JSON manifests alongside
seeds and SNRs so a batch can be reconstructed elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateRingError,
    DimensionError,
    InsufficientDataError,
    PairingError,
)
from .signal_core import Waveform
from .synthgen import (
    PRNG_ALGORITHM,
    NoisySource,
    crop_source,
    make_noisy_source,
    normalize_source,
    rng_for,
)

_SAMPLER_DOMAIN = 0x42415443

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class RingBatch:
    """K sources and the K ring mixtures built from them.

    ``mixture_sources[j]`` is the ordered source pair of mixture j and
    ``source_mixtures[k]`` the ordered pair (previous, current) of host
    mixtures of source k; both use 0-based indices.
    """

    sources: tuple[NoisySource, ...]
    mixtures: tuple[Waveform, ...]
    mixture_sources: tuple[tuple[int, int], ...]
    source_mixtures: tuple[tuple[int, int], ...]

    @property
    def k(self) -> int:
        return len(self.sources)

    @property
    def kind(self) -> str:
        return "ring"


@dataclass(frozen=True)
class ConventionalBatch:
    """2K sources paired off into K disjoint mixtures."""

    sources: tuple[NoisySource, ...]
    mixtures: tuple[Waveform, ...]
    mixture_sources: tuple[tuple[int, int], ...]
    source_mixtures: tuple[tuple[int], ...]

    @property
    def k(self) -> int:
        return len(self.mixtures)

    @property
    def kind(self) -> str:
        return "conventional"


def _check_shapes(sources: Sequence[NoisySource]) -> None:
    first = sources[0]
    for idx, src in enumerate(sources):
        if len(src) != len(first) or src.sample_rate != first.sample_rate:
            raise DimensionError(
                f"source {idx} has shape ({len(src)}, {src.sample_rate} Hz), "
                f"expected ({len(first)}, {first.sample_rate} Hz)"
            )


def build_ring_batch(sources: Sequence[NoisySource]) -> RingBatch:
    """Ring-mix K >= 3 equally shaped sources into K mixtures."""
    k = len(sources)
    if k < 3:
        raise DegenerateRingError(
            f"ring mixing needs at least 3 sources, got {k}; with 2 the ring "
            "would repeat the same mixture twice"
        )
    _check_shapes(sources)
    mixtures = []
    mixture_sources = []
    for j in range(k):
        a, b = j, (j + 1) % k
        mixtures.append(sources[a].noisy + sources[b].noisy)
        mixture_sources.append((a, b))
    source_mixtures = tuple(((idx - 1) % k, idx) for idx in range(k))
    return RingBatch(
        sources=tuple(sources),
        mixtures=tuple(mixtures),
        mixture_sources=tuple(mixture_sources),
        source_mixtures=source_mixtures,
    )


def build_conventional_batch(sources: Sequence[NoisySource]) -> ConventionalBatch:
    """Pair 2K sources into K disjoint mixtures."""
    n = len(sources)
    if n < 2 or n % 2 != 0:
        raise PairingError(f"conventional pairing needs an even source count >= 2, got {n}")
    _check_shapes(sources)
    mixtures = []
    mixture_sources = []
    for j in range(n // 2):
        a, b = 2 * j, 2 * j + 1
        mixtures.append(sources[a].noisy + sources[b].noisy)
        mixture_sources.append((a, b))
    source_mixtures = tuple((idx // 2,) for idx in range(n))
    return ConventionalBatch(
        sources=tuple(sources),
        mixtures=tuple(mixtures),
        mixture_sources=tuple(mixture_sources),
        source_mixtures=source_mixtures,
    )


def sample_batch_from_corpus(
    corpus: Sequence[NoisySource],
    k: int,
    seed: int,
    mode: str = "ring",
    segment_length: int | None = None,
) -> RingBatch | ConventionalBatch:
    """Sample distinct corpus items, crop them to a common length, and mix.

    ``k`` is the number of mixtures; ring mode consumes k sources and
    conventional mode 2k. Cropping starts at a seeded random offset per
    source. Deterministic in ``seed``.
    """
    if mode not in ("ring", "conventional"):
        raise ValueError(f"mode must be 'ring' or 'conventional', got {mode!r}")
    needed = k if mode == "ring" else 2 * k
    if len(corpus) < needed:
        raise InsufficientDataError(
            f"corpus has {len(corpus)} sources but {mode} mode with k={k} needs {needed}"
        )
    rng = rng_for(seed, _SAMPLER_DOMAIN)
    chosen = rng.choice(len(corpus), size=needed, replace=False)
    picked = []
    for idx in chosen:
        src = corpus[int(idx)]
        length = len(src) if segment_length is None else int(segment_length)
        if len(src) < length:
            raise InsufficientDataError(
                f"corpus source {int(idx)} has {len(src)} samples, "
                f"shorter than the requested segment of {length}"
            )
        offset = int(rng.integers(0, len(src) - length + 1))
        picked.append(crop_source(src, offset, length))
    if mode == "ring":
        return build_ring_batch(picked)
    return build_conventional_batch(picked)


def ring_cycle_length(batch: RingBatch) -> int:
    """Length of the cycle traced by walking source -> other mixture -> other source.

    Equals K exactly when the incidence structure is a single ring.
    """
    start = 0
    mixture = batch.source_mixtures[start][1]
    source = start
    steps = 0
    while True:
        a, b = batch.mixture_sources[mixture]
        source = b if source == a else a
        prev_m, curr_m = batch.source_mixtures[source]
        mixture = curr_m if mixture == prev_m else prev_m
        steps += 1
        if source == start:
            return steps
        if steps > batch.k:
            return steps


def manifest_dict(
    batch: RingBatch | ConventionalBatch,
    *,
    seed: int,
    segment_length: int,
    normalize_energy: float | None = None,
) -> dict:
    """JSON-ready description from which the batch can be rebuilt."""
    sources = []
    for idx, src in enumerate(batch.sources):
        entry: dict = {"index": idx, "snr_db": src.snr_db}
        if src.speech_seed is not None:
            if src.label is not None:
                raise ValueError(
                    f"source {idx} is a cropped synthetic source; manifests cover "
                    "synthetic sources built at segment length or file-backed ones"
                )
            entry["speech_seed"] = src.speech_seed
            entry["noise_seed"] = src.noise_seed
        else:
            path, _, offset = (src.label or "").rpartition("@")
            if not path:
                raise ValueError(f"file-backed source {idx} lacks a path label")
            entry["path"] = path
            entry["offset"] = int(offset)
        sources.append(entry)
    return {
        "manifest_version": MANIFEST_VERSION,
        "kind": batch.kind,
        "prng": PRNG_ALGORITHM,
        "seed": int(seed),
        "k": batch.k,
        "sample_rate": batch.sources[0].sample_rate,
        "segment_length": int(segment_length),
        "normalize_energy": normalize_energy,
        "sources": sources,
        "pairing": {
            "mixture_sources": [list(p) for p in batch.mixture_sources],
            "source_mixtures": [list(p) for p in batch.source_mixtures],
        },
    }


def batch_from_manifest(
    manifest: dict,
    read_waveform: Callable[[str], Waveform] | None = None,
) -> RingBatch | ConventionalBatch:
    """Rebuild the exact batch a manifest describes.

    Synthetic entries regenerate from their seeds; corpus entries need a
    ``read_waveform`` callback to load and re-crop the referenced files.
    """
    rate = int(manifest["sample_rate"])
    length = int(manifest["segment_length"])
    normalize = manifest.get("normalize_energy")
    sources = []
    for entry in manifest["sources"]:
        if "path" in entry:
            if read_waveform is None:
                raise InsufficientDataError(
                    f"manifest source {entry['index']} references a file but no reader was given"
                )
            from .synthgen import source_from_waveform

            wav = read_waveform(entry["path"])
            src = source_from_waveform(wav, label=entry["path"])
            src = crop_source(src, int(entry["offset"]), length)
        else:
            src = make_noisy_source(
                int(entry["speech_seed"]),
                int(entry["noise_seed"]),
                entry["snr_db"],
                length,
                rate,
            )
            if normalize is not None:
                src = normalize_source(src, float(normalize))
        sources.append(src)
    if manifest["kind"] == "ring":
        batch = build_ring_batch(sources)
    elif manifest["kind"] == "conventional":
        batch = build_conventional_batch(sources)
    else:
        raise ValueError(f"unknown batch kind {manifest['kind']!r}")
    expected = [list(p) for p in batch.mixture_sources]
    if expected != manifest["pairing"]["mixture_sources"]:
        raise ValueError("manifest pairing table does not match the rebuilt batch")
    return batch


def mixture_decomposition_exact(batch: RingBatch | ConventionalBatch) -> bool:
    """True when every mixture equals the sum of its paired noisy sources."""
    for j, (a, b) in enumerate(batch.mixture_sources):
        resum = batch.sources[a].noisy + batch.sources[b].noisy
        if not np.array_equal(batch.mixtures[j].samples, resum.samples):
            return False
    return True

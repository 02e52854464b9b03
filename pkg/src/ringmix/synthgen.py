"""Deterministic pseudo-speech and noise generators, and noisy-source assembly.

All randomness flows through numpy's counter-based Philox4x64 generator keyed
by ``(seed, domain)``, so equal seed values used in different roles (speech
vs noise) still yield independent streams. Everything in this module is a
pure function of its seeds and parameters; manifests record the algorithm id
``philox4x64`` so runs can be reproduced from seeds alone.

The pseudo-speech is a harmonic stack with slow amplitude modulation and a
touch of vibrato. That gives it enough spectral structure to be separable
from white noise in principle, while two white noises remain mutually
indistinguishable, which is the asymmetry the rest of the package studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError, DimensionError
from .signal_core import (
    DEFAULT_SAMPLE_RATE,
    Waveform,
    energy,
    measured_snr_db,
    scale_to_snr,
)

PRNG_ALGORITHM = "philox4x64"
MAX_SEED = 2**64 - 1

# Domain tags keep streams independent even when seed values collide.
_SPEECH_DOMAIN = 0x53504543
_NOISE_DOMAIN = 0x4E4F4953

_F0_RANGE_HZ = (80.0, 300.0)
_HARMONIC_RANGE = (3, 8)
_AM_RATE_HZ = (0.5, 4.0)
_AM_DEPTH = (0.2, 0.5)
_VIBRATO_RATE_HZ = (4.0, 7.0)
_VIBRATO_DEPTH = (0.002, 0.008)

# Tolerance on the constructed SNR, in dB. Float-exact scaling leaves errors
# many orders below this.
SNR_CONSTRUCTION_TOL_DB = 1e-6


def rng_for(seed: int, domain: int) -> np.random.Generator:
    """Philox stream for one (seed, domain) pair."""
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    key = np.array([seed, domain], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gen_pseudo_speech(
    seed: int, length: int, sample_rate: int = DEFAULT_SAMPLE_RATE
) -> Waveform:
    """Harmonic pseudo-speech, deterministic in ``seed``.

    Randomized fundamental in 80..300 Hz, 3..8 harmonics with decaying
    amplitudes, mild vibrato, and a slow amplitude modulation envelope that
    stays strictly positive, so the output always has nonzero energy.
    """
    if length < 1:
        raise DimensionError(f"length must be >= 1, got {length}")
    rng = rng_for(seed, _SPEECH_DOMAIN)
    f0 = rng.uniform(*_F0_RANGE_HZ)
    n_harmonics = int(rng.integers(_HARMONIC_RANGE[0], _HARMONIC_RANGE[1] + 1))
    vib_hz = rng.uniform(*_VIBRATO_RATE_HZ)
    vib_depth = rng.uniform(*_VIBRATO_DEPTH)
    vib_phase = rng.uniform(0.0, 2.0 * math.pi)
    am_hz = rng.uniform(*_AM_RATE_HZ)
    am_depth = rng.uniform(*_AM_DEPTH)
    am_phase = rng.uniform(0.0, 2.0 * math.pi)

    t = np.arange(length, dtype=np.float64) / float(sample_rate)
    # Integrated instantaneous frequency f0 * (1 + depth * sin(w t + p)).
    omega = 2.0 * math.pi * vib_hz
    base_phase = 2.0 * math.pi * f0 * (
        t - (vib_depth / omega) * (np.cos(omega * t + vib_phase) - math.cos(vib_phase))
    )

    nyquist = sample_rate / 2.0
    wave = np.zeros(length, dtype=np.float64)
    kept = 0
    for h in range(1, n_harmonics + 1):
        amp = rng.uniform(0.5, 1.0) / h
        phase = rng.uniform(0.0, 2.0 * math.pi)
        if h * f0 >= nyquist:
            continue
        wave += amp * np.sin(h * base_phase + phase)
        kept += 1
    if kept == 0:
        raise ValueError(
            f"sample rate {sample_rate} Hz is too low for the 80..300 Hz speech band"
        )

    envelope = 1.0 + am_depth * np.sin(2.0 * math.pi * am_hz * t + am_phase)
    return Waveform(envelope * wave, sample_rate)


def gen_noise(seed: int, length: int, sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Zero-mean unit-variance Gaussian white noise, deterministic in ``seed``."""
    if length < 1:
        raise DimensionError(f"length must be >= 1, got {length}")
    rng = rng_for(seed, _NOISE_DOMAIN)
    return Waveform(rng.standard_normal(length), sample_rate)


@dataclass(frozen=True)
class NoisySource:
    """A single-talker signal split into clean speech and its own noise.

    ``noisy`` is always the sample-exact sum of ``clean`` and ``noise``. The
    noiseless case is encoded as ``snr_db=None`` with an all-zero noise
    waveform, never as a float infinity, so no Inf enters any arithmetic.
    Seeds and label carry provenance into batch manifests when available.
    """

    clean: Waveform
    noise: Waveform
    noisy: Waveform
    snr_db: float | None
    speech_seed: int | None = None
    noise_seed: int | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        from .signal_core import require_compatible

        require_compatible(self.clean, self.noise)
        require_compatible(self.clean, self.noisy)
        if not np.array_equal(self.noisy.samples, self.clean.samples + self.noise.samples):
            raise DegenerateSignalError("noisy waveform is not the exact clean + noise sum")
        if self.snr_db is None:
            if energy(self.noise) != 0.0:
                raise DegenerateSignalError(
                    "snr_db=None is the noiseless sentinel and requires zero noise"
                )
        else:
            got = measured_snr_db(self.clean, self.noise)
            if abs(got - float(self.snr_db)) > SNR_CONSTRUCTION_TOL_DB:
                raise DegenerateSignalError(
                    f"declared SNR {self.snr_db} dB but measured {got:.9f} dB"
                )

    def __len__(self) -> int:
        return len(self.clean)

    @property
    def sample_rate(self) -> int:
        return self.clean.sample_rate


def make_noisy_source(
    speech_seed: int,
    noise_seed: int,
    snr_db: float | None,
    length: int,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> NoisySource:
    """Build a NoisySource from seeds at the requested SNR.

    ``snr_db=None`` produces the noiseless sentinel: zero noise, noisy equal
    to clean.
    """
    clean = gen_pseudo_speech(speech_seed, length, sample_rate)
    if snr_db is None:
        noise = Waveform.zeros(length, sample_rate)
    else:
        noise = scale_to_snr(clean, gen_noise(noise_seed, length, sample_rate), snr_db)
    return NoisySource(
        clean=clean,
        noise=noise,
        noisy=clean + noise,
        snr_db=None if snr_db is None else float(snr_db),
        speech_seed=int(speech_seed),
        noise_seed=int(noise_seed),
    )


def normalize_source(source: NoisySource, target_energy: float = 1.0) -> NoisySource:
    """Rescale clean, noise, and noisy by one common factor.

    The clean energy lands on ``target_energy`` and the SNR is untouched, so
    batches built from equal-SNR normalized sources have equal noise energies.
    """
    if target_energy <= 0.0:
        raise ValueError(f"target energy must be positive, got {target_energy}")
    gain = math.sqrt(target_energy / energy(source.clean))
    clean = source.clean.scaled(gain)
    noise = source.noise.scaled(gain)
    return NoisySource(
        clean=clean,
        noise=noise,
        noisy=clean + noise,
        snr_db=source.snr_db,
        speech_seed=source.speech_seed,
        noise_seed=source.noise_seed,
        label=source.label,
    )


def crop_source(source: NoisySource, offset: int, length: int) -> NoisySource:
    """Slice ``length`` samples starting at ``offset`` out of every component."""
    if offset < 0 or length < 1 or offset + length > len(source):
        raise DimensionError(
            f"cannot crop [{offset}, {offset + length}) out of {len(source)} samples"
        )
    rate = source.sample_rate
    sl = slice(offset, offset + length)
    clean = Waveform(source.clean.samples[sl], rate)
    noise = Waveform(source.noise.samples[sl], rate)
    noisy = Waveform(source.noisy.samples[sl], rate)
    # Cropping changes the realized SNR, so re-measure it for the slice.
    snr = None if source.snr_db is None else measured_snr_db(clean, noise)
    label = source.label or ""
    return NoisySource(
        clean=clean,
        noise=noise,
        noisy=noisy,
        snr_db=snr,
        speech_seed=source.speech_seed,
        noise_seed=source.noise_seed,
        label=f"{label}@{offset}" if label else f"@{offset}",
    )


def source_from_waveform(waveform: Waveform, label: str | None = None) -> NoisySource:
    """Wrap a real recording whose clean/noise split is unavailable.

    The whole recording is treated as the clean part with zero noise, which
    is all downstream mixing needs (only ``noisy`` enters mixtures). Metrics
    that require the underlying split are simply undefined for such sources.
    """
    zero = Waveform.zeros(len(waveform), waveform.sample_rate)
    return NoisySource(
        clean=waveform,
        noise=zero,
        noisy=waveform + zero,
        snr_db=None,
        label=label,
    )

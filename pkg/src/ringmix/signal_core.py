"""Waveform container and the inner-product primitives the losses are built on.

Samples are stored as float64 and all accumulation happens in float64, the
widest portable float, regardless of where the data came from. Every
operation here is a pure function and Waveform is immutable, so concurrent
use needs no locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError, DimensionError, UndefinedScaleError

DEFAULT_SAMPLE_RATE = 8000

# |<a, b>| below this scale-free threshold counts as orthogonal, which makes
# the projection scale undefined.
PROJECTION_DOT_TOL = 1e-12


@dataclass(frozen=True)
class Waveform:
    """A finite mono signal: 1-D float64 samples plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=np.float64, copy=True)
        if samples.ndim != 1 or samples.size < 1:
            raise DimensionError(
                f"waveform must be 1-D and non-empty, got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise DegenerateSignalError("waveform contains NaN or Inf samples")
        rate = int(self.sample_rate)
        if rate <= 0:
            raise DimensionError(f"sample rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", rate)

    def __len__(self) -> int:
        return int(self.samples.size)

    def __add__(self, other: Waveform) -> Waveform:
        require_compatible(self, other)
        return Waveform(self.samples + other.samples, self.sample_rate)

    def __sub__(self, other: Waveform) -> Waveform:
        require_compatible(self, other)
        return Waveform(self.samples - other.samples, self.sample_rate)

    def scaled(self, factor: float) -> Waveform:
        """A copy with every sample multiplied by ``factor``."""
        return Waveform(self.samples * float(factor), self.sample_rate)

    @staticmethod
    def zeros(length: int, sample_rate: int = DEFAULT_SAMPLE_RATE) -> Waveform:
        return Waveform(np.zeros(int(length)), sample_rate)


def require_compatible(a: Waveform, b: Waveform) -> None:
    """Raise DimensionError unless the two waveforms can be combined."""
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")
    if a.sample_rate != b.sample_rate:
        raise DimensionError(
            f"sample rate mismatch: {a.sample_rate} Hz vs {b.sample_rate} Hz"
        )


def dot(a: Waveform, b: Waveform) -> float:
    """Plain inner product, symmetric in its arguments."""
    require_compatible(a, b)
    return float(np.dot(a.samples, b.samples))


def energy(a: Waveform) -> float:
    """Sum of squared samples; non-negative and zero only for the zero signal."""
    return float(np.dot(a.samples, a.samples))


def projection_scale(estimate: Waveform, reference: Waveform) -> float:
    """Scale beta making ``reference - beta * estimate`` orthogonal to the reference.

    beta = energy(reference) / dot(estimate, reference). Raises
    UndefinedScaleError when the inner product is too close to zero for the
    scale to mean anything.
    """
    require_compatible(estimate, reference)
    d = dot(estimate, reference)
    gate = PROJECTION_DOT_TOL * math.sqrt(energy(estimate) * energy(reference))
    if abs(d) <= gate:
        raise UndefinedScaleError(
            f"estimate is orthogonal to the reference (|dot| = {abs(d):.3e})"
        )
    return energy(reference) / d


def scale_to_snr(signal: Waveform, noise: Waveform, target_snr_db: float) -> Waveform:
    """Rescale ``noise`` so the signal-to-noise ratio hits ``target_snr_db``.

    Energies must both be nonzero. The returned waveform satisfies
    10 log10(energy(signal) / energy(scaled)) == target_snr_db to float
    precision.
    """
    require_compatible(signal, noise)
    e_signal = energy(signal)
    e_noise = energy(noise)
    if e_signal == 0.0:
        raise DegenerateSignalError("cannot set an SNR against a zero-energy signal")
    if e_noise == 0.0:
        raise DegenerateSignalError("cannot rescale a zero-energy noise")
    gain = math.sqrt(e_signal / e_noise) * 10.0 ** (-float(target_snr_db) / 20.0)
    return noise.scaled(gain)


def measured_snr_db(signal: Waveform, noise: Waveform) -> float:
    """SNR in dB between two nonzero-energy waveforms."""
    e_signal = energy(signal)
    e_noise = energy(noise)
    if e_signal == 0.0 or e_noise == 0.0:
        raise DegenerateSignalError("SNR undefined for zero-energy inputs")
    return 10.0 * math.log10(e_signal / e_noise)

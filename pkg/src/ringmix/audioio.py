"""Minimal mono WAV reader/writer: pcm16 or float32, canonical 44-byte header.

pcm16 samples normalize to [-1, 1) by dividing by 32768; writing requires
samples inside [-1, 1] and never clips silently. float32 round-trips
bit-exactly for data already at single precision (encoding a float64
waveform quantizes it once). No resampling, no extra chunks, no compressed
codecs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import (
    CorruptFileError,
    SampleRangeError,
    UnsupportedChannelsError,
    UnsupportedFormatError,
)
from .signal_core import Waveform

Encoding = Literal["pcm16", "float32"]

PCM16_SCALE = 32768.0

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


@dataclass(frozen=True)
class AudioFile:
    path: str
    waveform: Waveform
    encoding: Encoding


def read_wav(path: str | Path) -> AudioFile:
    """Decode a mono pcm16 or float32 RIFF/WAVE file."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise CorruptFileError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body_start = pos + 8
        if chunk_id == b"fmt ":
            if chunk_size < 16 or body_start + 16 > len(raw):
                raise CorruptFileError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", raw, body_start)
        elif chunk_id == b"data":
            if body_start + chunk_size > len(raw):
                raise CorruptFileError(
                    f"{path}: data chunk declares {chunk_size} bytes but "
                    f"{len(raw) - body_start} remain"
                )
            data = raw[body_start : body_start + chunk_size]
        pos = body_start + chunk_size + (chunk_size & 1)

    if fmt is None or data is None:
        raise CorruptFileError(f"{path}: missing fmt or data chunk")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if channels != 1:
        raise UnsupportedChannelsError(f"{path}: {channels} channels, only mono is supported")
    if audio_format == _FMT_PCM and bits == 16:
        encoding: Encoding = "pcm16"
        if len(data) % 2 != 0:
            raise CorruptFileError(f"{path}: pcm16 data length is odd")
        samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / PCM16_SCALE
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        encoding = "float32"
        if len(data) % 4 != 0:
            raise CorruptFileError(f"{path}: float32 data length not a multiple of 4")
        samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedFormatError(
            f"{path}: format tag {audio_format} with {bits} bits is not pcm16 or float32"
        )
    if samples.size == 0:
        raise CorruptFileError(f"{path}: empty data chunk")
    return AudioFile(
        path=str(path),
        waveform=Waveform(samples, sample_rate),
        encoding=encoding,
    )


def write_wav(path: str | Path, waveform: Waveform, encoding: Encoding = "float32") -> None:
    """Encode a waveform under the canonical 44-byte header."""
    if encoding == "pcm16":
        peak = float(np.max(np.abs(waveform.samples)))
        if peak > 1.0:
            raise SampleRangeError(
                f"pcm16 needs samples in [-1, 1]; max absolute value is {peak:.6g}"
            )
        ints = np.clip(np.round(waveform.samples * PCM16_SCALE), -32768, 32767)
        payload = ints.astype("<i2").tobytes()
        fmt_tag, bits = _FMT_PCM, 16
    elif encoding == "float32":
        payload = waveform.samples.astype("<f4").tobytes()
        fmt_tag, bits = _FMT_IEEE_FLOAT, 32
    else:
        raise UnsupportedFormatError(f"unknown encoding {encoding!r}")

    rate = waveform.sample_rate
    block_align = bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        fmt_tag,
        1,
        rate,
        rate * block_align,
        block_align,
        bits,
        b"data",
        len(payload),
    )
    Path(path).write_bytes(header + payload)

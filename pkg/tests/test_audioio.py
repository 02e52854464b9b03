import struct

import numpy as np
import pytest

from ringmix.audioio import PCM16_SCALE, read_wav, write_wav
from ringmix.errors import (
    CorruptFileError,
    SampleRangeError,
    UnsupportedChannelsError,
    UnsupportedFormatError,
)
from ringmix.signal_core import Waveform


def as_f32(values):
    return np.asarray(values, dtype=np.float32).astype(np.float64)


class TestRoundTrips:
    def test_pcm16_silence(self, tmp_path):
        path = tmp_path / "silence.wav"
        write_wav(path, Waveform(np.zeros(8000), 8000), "pcm16")
        audio = read_wav(path)
        assert audio.encoding == "pcm16"
        assert audio.waveform.sample_rate == 8000
        assert np.array_equal(audio.waveform.samples, np.zeros(8000))

    def test_pcm16_full_scale_square(self, tmp_path):
        square = np.tile([-1.0, 32767.0 / 32768.0], 100)
        path = tmp_path / "square.wav"
        write_wav(path, Waveform(square, 8000), "pcm16")
        back = read_wav(path).waveform.samples
        assert set(np.unique(back)) == {-1.0, 32767.0 / 32768.0}
        assert np.array_equal(back, square)

    def test_pcm16_one_lsb(self, tmp_path):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-1.0, 1.0, 4000)
        path = tmp_path / "random.wav"
        write_wav(path, Waveform(samples, 8000), "pcm16")
        back = read_wav(path).waveform.samples
        assert float(np.max(np.abs(back - samples))) <= 1.0 / PCM16_SCALE

    def test_float32_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        samples = as_f32(rng.standard_normal(3000))  # already at single precision
        path = tmp_path / "f32.wav"
        write_wav(path, Waveform(samples, 16000), "float32")
        back = read_wav(path)
        assert back.encoding == "float32"
        assert np.array_equal(back.waveform.samples, samples)


class TestHeader:
    def test_canonical_44_bytes(self, tmp_path):
        path = tmp_path / "h.wav"
        write_wav(path, Waveform(np.zeros(10), 8000), "pcm16")
        raw = path.read_bytes()
        assert len(raw) == 44 + 20
        assert raw[:4] == b"RIFF" and raw[8:12] == b"WAVE"
        fmt = struct.unpack_from("<HHIIHH", raw, 20)
        assert fmt == (1, 1, 8000, 16000, 2, 16)
        assert raw[36:40] == b"data"
        assert struct.unpack_from("<I", raw, 40)[0] == 20

    def test_float32_header_fields(self, tmp_path):
        path = tmp_path / "h32.wav"
        write_wav(path, Waveform(np.zeros(5), 44100), "float32")
        raw = path.read_bytes()
        fmt = struct.unpack_from("<HHIIHH", raw, 20)
        assert fmt == (3, 1, 44100, 176400, 4, 32)

    def test_rate_preserved(self, tmp_path):
        path = tmp_path / "rate.wav"
        write_wav(path, Waveform(np.zeros(5), 12345), "pcm16")
        assert read_wav(path).waveform.sample_rate == 12345


class TestErrors:
    def test_pcm16_range(self, tmp_path):
        with pytest.raises(SampleRangeError, match="1.5"):
            write_wav(tmp_path / "x.wav", Waveform(np.array([0.0, 1.5]), 8000), "pcm16")

    def test_multichannel_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        payload = struct.pack("<4h", 0, 0, 0, 0)
        header = struct.pack(
            "<4sI4s4sIHHIIHH4sI",
            b"RIFF", 36 + len(payload), b"WAVE", b"fmt ", 16,
            1, 2, 8000, 32000, 4, 16, b"data", len(payload),
        )
        path.write_bytes(header + payload)
        with pytest.raises(UnsupportedChannelsError):
            read_wav(path)

    def test_unknown_codec_rejected(self, tmp_path):
        path = tmp_path / "alaw.wav"
        payload = b"\x00\x00"
        header = struct.pack(
            "<4sI4s4sIHHIIHH4sI",
            b"RIFF", 36 + len(payload), b"WAVE", b"fmt ", 16,
            6, 1, 8000, 8000, 1, 8, b"data", len(payload),
        )
        path.write_bytes(header + payload)
        with pytest.raises(UnsupportedFormatError):
            read_wav(path)

    def test_truncated_data(self, tmp_path):
        path = tmp_path / "trunc.wav"
        write_wav(path, Waveform(np.zeros(100), 8000), "pcm16")
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 50])
        with pytest.raises(CorruptFileError):
            read_wav(path)

    def test_not_riff(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"not a wave file at all")
        with pytest.raises(CorruptFileError):
            read_wav(path)

    def test_empty_data(self, tmp_path):
        path = tmp_path / "empty.wav"
        header = struct.pack(
            "<4sI4s4sIHHIIHH4sI",
            b"RIFF", 36, b"WAVE", b"fmt ", 16,
            1, 1, 8000, 16000, 2, 16, b"data", 0,
        )
        path.write_bytes(header)
        with pytest.raises(CorruptFileError):
            read_wav(path)

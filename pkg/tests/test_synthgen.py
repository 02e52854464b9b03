import numpy as np
import pytest

from ringmix.errors import DegenerateSignalError
from ringmix.signal_core import Waveform, dot, energy, measured_snr_db
from ringmix.synthgen import (
    NoisySource,
    crop_source,
    gen_noise,
    gen_pseudo_speech,
    make_noisy_source,
    normalize_source,
    source_from_waveform,
)


class TestPseudoSpeech:
    def test_deterministic(self):
        a = gen_pseudo_speech(12345, 4000)
        b = gen_pseudo_speech(12345, 4000)
        assert np.array_equal(a.samples, b.samples)

    def test_nonzero_energy(self):
        for seed in range(10):
            assert energy(gen_pseudo_speech(seed, 1000)) > 0.0

    def test_seed_pairs_decorrelate(self):
        # 100 disjoint seed pairs at length 8000; harmonic stacks with
        # independent fundamentals stay weakly correlated.
        worst = 0.0
        for i in range(100):
            a = gen_pseudo_speech(2 * i, 8000).samples
            b = gen_pseudo_speech(2 * i + 1, 8000).samples
            worst = max(worst, abs(float(np.corrcoef(a, b)[0, 1])))
        assert worst < 0.2

    def test_seed_must_fit_64_bits(self):
        with pytest.raises(ValueError):
            gen_pseudo_speech(-1, 100)
        with pytest.raises(ValueError):
            gen_pseudo_speech(2**64, 100)


class TestNoise:
    def test_deterministic_and_seed_sensitive(self):
        assert np.array_equal(gen_noise(7, 1000).samples, gen_noise(7, 1000).samples)
        assert not np.array_equal(gen_noise(7, 1000).samples, gen_noise(8, 1000).samples)

    def test_mean_bound(self):
        n = 8000
        for seed in range(20):
            mean = float(np.mean(gen_noise(seed, n).samples))
            assert abs(mean) < 4.0 / np.sqrt(n)

    def test_variance_near_unit(self):
        for seed in range(20):
            var = float(np.var(gen_noise(seed, 8000).samples))
            assert 0.9 < var < 1.1

    def test_cross_seed_orthogonality(self):
        for seed in range(20):
            a = gen_noise(seed, 8000)
            b = gen_noise(1000 + seed, 8000)
            norm = abs(dot(a, b)) / np.sqrt(energy(a) * energy(b))
            assert norm < 0.05

    def test_domain_separation_from_speech(self):
        # Same seed value in the speech and noise roles gives unrelated streams.
        n = gen_noise(42, 4000).samples
        s = gen_pseudo_speech(42, 4000).samples
        assert abs(float(np.corrcoef(n, s)[0, 1])) < 0.1


class TestNoisySource:
    def test_snr_by_construction(self):
        src = make_noisy_source(1, 2, 10.0, 8000)
        assert measured_snr_db(src.clean, src.noise) == pytest.approx(10.0, abs=1e-6)
        assert np.array_equal(src.noisy.samples, src.clean.samples + src.noise.samples)

    def test_noiseless_sentinel(self):
        src = make_noisy_source(1, 2, None, 4000)
        assert src.snr_db is None
        assert energy(src.noise) == 0.0
        assert np.array_equal(src.noisy.samples, src.clean.samples)

    def test_disjoint_seeds_give_orthogonal_noises(self):
        a = make_noisy_source(1, 10, 10.0, 8000)
        b = make_noisy_source(2, 20, 10.0, 8000)
        norm = abs(dot(a.noise, b.noise)) / np.sqrt(energy(a.noise) * energy(b.noise))
        assert norm < 0.05

    def test_invariant_enforced(self):
        src = make_noisy_source(1, 2, 10.0, 1000)
        with pytest.raises(DegenerateSignalError):
            NoisySource(
                clean=src.clean,
                noise=src.noise,
                noisy=src.clean,  # not the sum
                snr_db=10.0,
            )

    def test_sentinel_requires_zero_noise(self):
        src = make_noisy_source(1, 2, 10.0, 1000)
        with pytest.raises(DegenerateSignalError):
            NoisySource(clean=src.clean, noise=src.noise, noisy=src.noisy, snr_db=None)


class TestNormalizeAndCrop:
    def test_normalize_hits_target_and_keeps_snr(self):
        src = make_noisy_source(3, 4, 12.5, 8000)
        out = normalize_source(src, 1.0)
        assert energy(out.clean) == pytest.approx(1.0, rel=1e-12)
        assert measured_snr_db(out.clean, out.noise) == pytest.approx(12.5, abs=1e-9)
        assert np.array_equal(out.noisy.samples, out.clean.samples + out.noise.samples)

    def test_crop_slices_consistently(self):
        src = make_noisy_source(5, 6, 8.0, 4000)
        cropped = crop_source(src, 1000, 2000)
        assert len(cropped) == 2000
        assert np.array_equal(cropped.noisy.samples, src.noisy.samples[1000:3000])
        assert np.array_equal(cropped.clean.samples, src.clean.samples[1000:3000])

    def test_crop_bounds(self):
        src = make_noisy_source(5, 6, 8.0, 1000)
        from ringmix.errors import DimensionError

        with pytest.raises(DimensionError):
            crop_source(src, 900, 200)


class TestWaveformWrap:
    def test_recording_wraps_as_noiseless(self):
        w = Waveform(np.sin(np.linspace(0, 20, 500)), 8000)
        src = source_from_waveform(w, label="take1.wav")
        assert src.snr_db is None
        assert src.label == "take1.wav"
        assert np.array_equal(src.noisy.samples, w.samples)

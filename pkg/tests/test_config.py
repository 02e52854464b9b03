import pytest

from ringmix.config import ExperimentConfig, load_config
from ringmix.errors import ConfigError


def write_config(tmp_path, text):
    path = tmp_path / "config.txt"
    path.write_text(text)
    return path


class TestParsing:
    def test_full_config(self, tmp_path):
        path = write_config(
            tmp_path,
            """
            # comment line
            seed = 7
            sample_rate = 16000
            segment_length = 4000   # trailing comment
            batch_k = 6
            snr_db = 10, 12, 8, 10, 12, 8
            alpha = 0, 0.5, 1
            grid_points = 51
            mc_trials = 32
            steps = 500
            step_size = 0.1
            init_lambda = 0.8
            tied = false
            mode = conventional
            encoding = pcm16
            out = results
            """,
        )
        cfg = load_config(path)
        assert cfg.seed == 7
        assert cfg.snr_db == (10.0, 12.0, 8.0, 10.0, 12.0, 8.0)
        assert cfg.alpha == (0.0, 0.5, 1.0)
        assert cfg.tied is False
        assert cfg.mode == "conventional"
        assert cfg.out == "results"

    def test_defaults(self, tmp_path):
        cfg = load_config(write_config(tmp_path, "seed = 1\n"))
        assert cfg.batch_k == 8
        assert cfg.alpha == (1.0,)
        assert cfg.mc_trials == 64

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown config key"):
            load_config(write_config(tmp_path, "sedd = 1\n"))

    def test_duplicate_key(self, tmp_path):
        with pytest.raises(ConfigError, match="duplicate"):
            load_config(write_config(tmp_path, "seed = 1\nseed = 2\n"))

    def test_bad_value(self, tmp_path):
        with pytest.raises(ConfigError, match="seed"):
            load_config(write_config(tmp_path, "seed = lots\n"))

    def test_missing_equals(self, tmp_path):
        with pytest.raises(ConfigError, match="key = value"):
            load_config(write_config(tmp_path, "seed 5\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.txt")


class TestValidation:
    def test_init_lambda_range(self):
        with pytest.raises(ConfigError, match="init_lambda"):
            ExperimentConfig(init_lambda=1.0)

    def test_mode(self):
        with pytest.raises(ConfigError, match="mode"):
            ExperimentConfig(mode="circle")

    def test_encoding(self):
        with pytest.raises(ConfigError, match="encoding"):
            ExperimentConfig(encoding="mp3")

    def test_profile_defaults_follow_snr(self):
        cfg = ExperimentConfig(snr_db=(10.0,))
        e1, e2 = cfg.profile
        assert e1 == pytest.approx(0.1) and e2 == pytest.approx(0.1)
        cfg = ExperimentConfig(profile_e1=1.0, profile_e2=0.0)
        assert cfg.profile == (1.0, 0.0)

    def test_per_source_snr_count(self):
        cfg = ExperimentConfig(snr_db=(10.0, 12.0))
        with pytest.raises(ConfigError, match="snr_db"):
            cfg.snr_for_source(0, 3)
        assert cfg.snr_for_source(1, 2) == 12.0

import json
import shutil

import pytest

from ringmix.cli import main
from ringmix.audioio import write_wav
from ringmix.signal_core import Waveform
from ringmix.synthgen import gen_pseudo_speech


def write_config(tmp_path, text, name="config.txt"):
    path = tmp_path / name
    path.write_text(text)
    return path


BASE = """
seed = 3
segment_length = 3000
batch_k = 6
snr_db = 10
alpha = 0, 1
mc_trials = 16
steps = 400
grid_points = 101
"""


class TestLandscapeCommand:
    def test_balanced_prints_half(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE + f"out = {tmp_path / 'land'}\n")
        assert main(["landscape", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "pair loss minima: 0.5000" in out
        assert (tmp_path / "land" / "landscape.csv").exists()
        assert (tmp_path / "land" / "landscape.svg").exists()

    def test_degenerate_profile_prints_endpoints(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            "profile_e1 = 1.0\nprofile_e2 = 0.0\nmc_trials = 0\nalpha = 1\n"
            f"out = {tmp_path / 'land'}\n",
        )
        assert main(["landscape", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "pair loss minima: 0.0000, 1.0000" in out

    def test_combined_minimum_below_half(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE + f"out = {tmp_path / 'land'}\n")
        assert main(["landscape", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        line = next(l for l in out.splitlines() if l.startswith("combined (alpha=1)"))
        value = float(line.split(":")[1].split(",")[0])
        assert value < 0.5

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "sedd = 1\n")
        assert main(["landscape", "--config", str(cfg)]) == 2
        assert "sedd" in capsys.readouterr().err


class TestMixCommand:
    def test_synthetic_ring(self, tmp_path):
        out = tmp_path / "mixed"
        cfg = write_config(tmp_path, BASE + f"write_references = true\nout = {out}\n")
        assert main(["mix", "--config", str(cfg)]) == 0
        for j in range(6):
            assert (out / f"mix_{j + 1:03d}.wav").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["kind"] == "ring"
        pairs = manifest["pairing"]["mixture_sources"]
        assert pairs[5] == [5, 0]
        # incidence forms one 6-cycle
        seen = set()
        src = 0
        for _ in range(6):
            seen.add(src)
            nxt = [p for p in pairs if src in p]
            assert len(nxt) == 2
        assert len({tuple(p) for p in pairs}) == 6

    def test_k2_ring_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "batch_k = 2\n" + f"out = {tmp_path / 'o'}\n")
        assert main(["mix", "--config", str(cfg)]) == 2
        assert "ring" in capsys.readouterr().err

    def test_insufficient_corpus_exits_3(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for i in range(2):
            write_wav(
                corpus / f"{i}.wav",
                Waveform(gen_pseudo_speech(i, 4000).samples / 50.0, 8000),
            )
        cfg = write_config(
            tmp_path, BASE + f"corpus = {corpus}\nout = {tmp_path / 'o'}\n"
        )
        assert main(["mix", "--config", str(cfg)]) == 3

    def test_corpus_mode_manifest_rebuilds(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for i in range(8):
            write_wav(
                corpus / f"take_{i}.wav",
                Waveform(gen_pseudo_speech(50 + i, 5000).samples / 50.0, 8000),
            )
        out = tmp_path / "mixed"
        cfg = write_config(
            tmp_path,
            f"seed = 3\nsegment_length = 3000\nbatch_k = 4\ncorpus = {corpus}\nout = {out}\n",
        )
        assert main(["mix", "--config", str(cfg)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert all("path" in entry for entry in manifest["sources"])


@pytest.fixture
def mixed_experiment(tmp_path):
    out = tmp_path / "mixed"
    cfg = write_config(tmp_path, BASE + f"write_references = true\nout = {out}\n")
    assert main(["mix", "--config", str(cfg)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    return out, manifest


class TestEvaluateCommand:
    def test_clean_references_hit_cap(self, tmp_path, mixed_experiment, capsys):
        out, manifest = mixed_experiment
        estimates = tmp_path / "ests"
        estimates.mkdir()
        for j, (a, b) in enumerate(manifest["pairing"]["mixture_sources"]):
            shutil.copy(out / "refs" / f"ref_clean_{a + 1:03d}.wav", estimates / f"est_{j + 1:03d}_0.wav")
            shutil.copy(out / "refs" / f"ref_clean_{b + 1:03d}.wav", estimates / f"est_{j + 1:03d}_1.wav")
        metrics_dir = tmp_path / "metrics"
        code = main(
            [
                "evaluate",
                "--manifest", str(out / "manifest.json"),
                "--estimates", str(estimates),
                "--references", str(out / "refs"),
                "--out", str(metrics_dir),
            ]
        )
        assert code == 0
        rows = (metrics_dir / "metrics.csv").read_text().splitlines()
        mean = rows[-1].split(",")
        assert float(mean[2]) == 120.0  # si_sdr vs clean at the cap
        for col in (4, 5, 6):
            assert abs(float(mean[col])) < 0.1  # occupancies near zero

    def test_mixtures_as_estimates_have_unit_occupancy(self, tmp_path, mixed_experiment):
        out, manifest = mixed_experiment
        estimates = tmp_path / "ests"
        estimates.mkdir()
        for j in range(6):
            for slot in (0, 1):
                shutil.copy(out / f"mix_{j + 1:03d}.wav", estimates / f"est_{j + 1:03d}_{slot}.wav")
        metrics_dir = tmp_path / "metrics"
        code = main(
            [
                "evaluate",
                "--manifest", str(out / "manifest.json"),
                "--estimates", str(estimates),
                "--out", str(metrics_dir),
            ]
        )
        assert code == 0
        mean = (metrics_dir / "metrics.csv").read_text().splitlines()[-1].split(",")
        for col in (4, 5, 6):
            assert float(mean[col]) == pytest.approx(1.0, abs=0.15)

    def test_missing_estimates_listed_exit_4(self, tmp_path, mixed_experiment, capsys):
        out, _ = mixed_experiment
        estimates = tmp_path / "ests"
        estimates.mkdir()
        code = main(
            [
                "evaluate",
                "--manifest", str(out / "manifest.json"),
                "--estimates", str(estimates),
                "--out", str(tmp_path / "m"),
            ]
        )
        assert code == 4
        err = capsys.readouterr().err
        assert "est_001_0.wav" in err

    def test_half_lambda_estimates_occupy_half_of_each_noise(self, tmp_path, mixed_experiment):
        # Write the lambda = 0.5 family estimates to files and score them
        # through the full evaluate path; both noise occupancies sit near 0.5.
        import numpy as np

        from ringmix.mixing import batch_from_manifest
        from ringmix.toysep import estimates_for_lambdas

        out, manifest = mixed_experiment
        batch = batch_from_manifest(manifest)
        family = estimates_for_lambdas(batch, np.full((batch.k, 2), 0.5))
        estimates = tmp_path / "ests"
        estimates.mkdir()
        for j, (a, b) in enumerate(batch.mixture_sources):
            write_wav(estimates / f"est_{j + 1:03d}_0.wav", family[(a, j)])
            write_wav(estimates / f"est_{j + 1:03d}_1.wav", family[(b, j)])
        metrics_dir = tmp_path / "metrics"
        code = main(
            [
                "evaluate",
                "--manifest", str(out / "manifest.json"),
                "--estimates", str(estimates),
                "--out", str(metrics_dir),
            ]
        )
        assert code == 0
        mean = (metrics_dir / "metrics.csv").read_text().splitlines()[-1].split(",")
        assert float(mean[5]) == pytest.approx(0.5, abs=0.1)  # occ_n_other
        assert float(mean[6]) == pytest.approx(0.5, abs=0.1)  # occ_n_self

    def test_rerun_reproduces_metrics_bytes(self, tmp_path, mixed_experiment):
        out, manifest = mixed_experiment
        estimates = tmp_path / "ests"
        estimates.mkdir()
        for j in range(6):
            for slot in (0, 1):
                shutil.copy(out / f"mix_{j + 1:03d}.wav", estimates / f"est_{j + 1:03d}_{slot}.wav")
        args = [
            "evaluate",
            "--manifest", str(out / "manifest.json"),
            "--estimates", str(estimates),
        ]
        assert main(args + ["--out", str(tmp_path / "m1")]) == 0
        assert main(args + ["--out", str(tmp_path / "m2")]) == 0
        a = (tmp_path / "m1" / "metrics.csv").read_bytes()
        b = (tmp_path / "m2" / "metrics.csv").read_bytes()
        assert a == b


class TestOptimizeCommand:
    def test_sweep_outputs_and_ordering(self, tmp_path):
        out = tmp_path / "opt"
        cfg = write_config(
            tmp_path,
            "seed = 3\nsegment_length = 3000\nbatch_k = 6\nsnr_db = 10\n"
            f"alpha = 0, 1, 2\nsteps = 400\nout = {out}\n",
        )
        assert main(["optimize", "--config", str(cfg)]) == 0
        lines = (out / "sweep_summary.csv").read_text().splitlines()
        assert len(lines) == 4
        rows = [line.split(",") for line in lines[1:]]
        alphas = [float(r[0]) for r in rows]
        finals = [float(r[1]) for r in rows]
        assert alphas == [0.0, 1.0, 2.0]
        assert finals[0] > finals[1] >= finals[2]
        # the alpha=0 baseline retains about half of each noise
        assert 0.4 <= float(rows[0][2]) <= 0.6
        assert 0.4 <= float(rows[0][3]) <= 0.6
        for j, alpha in enumerate(("0", "1", "2")):
            assert (out / f"trajectory_alpha_{alpha}.csv").exists()
        assert (out / "trajectories.svg").exists()

    def test_conventional_mix_and_evaluate(self, tmp_path):
        out = tmp_path / "conv"
        cfg = write_config(
            tmp_path,
            "seed = 5\nsegment_length = 2000\nbatch_k = 3\nmode = conventional\n"
            f"write_references = true\nout = {out}\n",
        )
        assert main(["mix", "--config", str(cfg)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["kind"] == "conventional"
        assert len(manifest["sources"]) == 6
        estimates = tmp_path / "ests"
        estimates.mkdir()
        for j, (a, b) in enumerate(manifest["pairing"]["mixture_sources"]):
            shutil.copy(out / "refs" / f"ref_noisy_{a + 1:03d}.wav", estimates / f"est_{j + 1:03d}_0.wav")
            shutil.copy(out / "refs" / f"ref_noisy_{b + 1:03d}.wav", estimates / f"est_{j + 1:03d}_1.wav")
        metrics_dir = tmp_path / "metrics"
        code = main(
            [
                "evaluate",
                "--manifest", str(out / "manifest.json"),
                "--estimates", str(estimates),
                "--out", str(metrics_dir),
            ]
        )
        assert code == 0
        lines = (metrics_dir / "metrics.csv").read_text().splitlines()
        # one row per source (each source has one host mixture) plus header and mean
        assert len(lines) == 1 + 6 + 1

    def test_corpus_evaluate_leaves_noise_occupancy_empty(self, tmp_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for i in range(6):
            write_wav(
                corpus / f"take_{i}.wav",
                Waveform(gen_pseudo_speech(70 + i, 5000).samples / 50.0, 8000),
            )
        out = tmp_path / "mixed"
        cfg = write_config(
            tmp_path,
            f"seed = 2\nsegment_length = 3000\nbatch_k = 3\ncorpus = {corpus}\nout = {out}\n",
        )
        assert main(["mix", "--config", str(cfg)]) == 0
        estimates = tmp_path / "ests"
        estimates.mkdir()
        for j in range(3):
            for slot in (0, 1):
                shutil.copy(out / f"mix_{j + 1:03d}.wav", estimates / f"est_{j + 1:03d}_{slot}.wav")
        metrics_dir = tmp_path / "metrics"
        code = main(
            [
                "evaluate",
                "--manifest", str(out / "manifest.json"),
                "--estimates", str(estimates),
                "--out", str(metrics_dir),
            ]
        )
        assert code == 0
        rows = [l.split(",") for l in (metrics_dir / "metrics.csv").read_text().splitlines()[1:]]
        for row in rows:
            assert row[5] == "" and row[6] == ""  # noise occupancies undefined
            assert row[4] != ""  # other-talker occupancy still present

    def test_seed_override_changes_outputs(self, tmp_path):
        cfg = write_config(
            tmp_path,
            "segment_length = 2000\nbatch_k = 4\nalpha = 0\nsteps = 150\nseed = 3\n"
            f"out = {tmp_path / 'a'}\n",
        )
        assert main(["optimize", "--config", str(cfg)]) == 0
        assert main(["optimize", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "trajectory_alpha_0.csv").read_bytes()
        b = (tmp_path / "b" / "trajectory_alpha_0.csv").read_bytes()
        assert a != b

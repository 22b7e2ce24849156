"""Command-line interface: exit codes, reproducibility, E2E toy run."""

import hashlib
import json
import os

import numpy as np
import pytest

from noisekernel.cli import main
from noisekernel.core import seed_rng


@pytest.fixture()
def toy_run(tmp_path):
    """A tiny continuous config + dataset, cheap enough to train in tests."""
    data = tmp_path / "toy.csv"
    rng = seed_rng(0)
    points = 0.5 * rng.standard_normal((256, 2))
    np.savetxt(data, np.clip(points, -1, 1), delimiter=",", fmt="%.6f")
    config = tmp_path / "toy.toml"
    config.write_text(f"""
[kernel]
kind = "continuous"
w = 0.5

[schedule]
steps = 100
beta_start = 1.0
beta_end = 0.01

[denoiser]
type = "mlp"
hidden = [16, 16]
emb_dim = 8

[dataset]
path = "{data}"
kind = "continuous"

[train]
learning_rate = 1e-3
batch_size = 32
total_steps = 50
seed = 7

[output]
dir = "{tmp_path}/run"
""")
    return tmp_path, config


class TestValidate:
    def test_props_suite_passes(self, capsys):
        assert main(["validate", "--suite", "props"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_json_output(self, capsys):
        assert main(["validate", "--suite", "gradients", "--json"]) == 0
        records = json.loads(capsys.readouterr().out)
        assert all(r["pass"] for r in records)
        assert {"check", "statistic", "threshold", "pass"} <= set(records[0])


class TestTrain:
    def test_train_writes_checkpoint_and_metrics(self, toy_run):
        tmp_path, config = toy_run
        assert main(["train", "--config", str(config)]) == 0
        assert (tmp_path / "run" / "checkpoint.nkc").exists()
        lines = (tmp_path / "run" / "metrics.ndjson").read_text().splitlines()
        assert {"step", "loss", "seconds"} == set(json.loads(lines[0]))
        assert (tmp_path / "run" / "toy.toml").exists()  # config echoed

    def test_same_seed_identical_digests(self, toy_run, tmp_path):
        _, config = toy_run
        assert main(["train", "--config", str(config)]) == 0
        first = hashlib.sha256(
            (tmp_path / "run" / "checkpoint.nkc").read_bytes()).hexdigest()
        assert main(["train", "--config", str(config)]) == 0
        second = hashlib.sha256(
            (tmp_path / "run" / "checkpoint.nkc").read_bytes()).hexdigest()
        assert first == second

    def test_env_seed_override_changes_result(self, toy_run, tmp_path,
                                              monkeypatch):
        _, config = toy_run
        assert main(["train", "--config", str(config)]) == 0
        base = hashlib.sha256(
            (tmp_path / "run" / "checkpoint.nkc").read_bytes()).hexdigest()
        monkeypatch.setenv("NKCA_SEED", "12345")
        assert main(["train", "--config", str(config)]) == 0
        overridden = hashlib.sha256(
            (tmp_path / "run" / "checkpoint.nkc").read_bytes()).hexdigest()
        assert base != overridden

    def test_bad_config_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[kernel]\nkind = \"continuous\"\nw = 0.9\n"
                       "[schedule]\nsteps = 3\nbeta_start = 1.0\n"
                       "beta_end = 0.01\n")
        assert main(["train", "--config", str(bad)]) == 2
        assert "config error" in capsys.readouterr().err


class TestSample:
    def test_sample_and_invalid_schedule(self, toy_run, tmp_path):
        _, config = toy_run
        assert main(["train", "--config", str(config)]) == 0
        ckpt = str(tmp_path / "run" / "checkpoint.nkc")
        out_dir = str(tmp_path / "samples")
        assert main(["sample", "--ckpt", ckpt, "-n", "5", "-o", out_dir]) == 0
        rows = np.loadtxt(os.path.join(out_dir, "samples.csv"), delimiter=",")
        assert rows.shape == (5, 2)
        # steep 3-step schedule violates the w=0.5 validity condition
        assert main(["sample", "--ckpt", ckpt, "-n", "1", "-T", "3",
                     "-o", out_dir]) == 2

    def test_sample_determinism(self, toy_run, tmp_path):
        _, config = toy_run
        assert main(["train", "--config", str(config)]) == 0
        ckpt = str(tmp_path / "run" / "checkpoint.nkc")
        for d in ("s1", "s2"):
            assert main(["sample", "--ckpt", ckpt, "-n", "3", "--seed", "5",
                         "-o", str(tmp_path / d)]) == 0
        a = (tmp_path / "s1" / "samples.csv").read_bytes()
        b = (tmp_path / "s2" / "samples.csv").read_bytes()
        assert a == b


class TestVariantsAndInpaint:
    def test_variants_cli(self, toy_run, tmp_path):
        _, config = toy_run
        assert main(["train", "--config", str(config)]) == 0
        ckpt = str(tmp_path / "run" / "checkpoint.nkc")
        seed_csv = tmp_path / "seed.csv"
        seed_csv.write_text("0.1,0.2\n")
        out_dir = str(tmp_path / "variants")
        assert main(["variants", "--ckpt", ckpt, "--seed-image", str(seed_csv),
                     "--beta", "0.2", "-T", "10", "-n", "4",
                     "-o", out_dir]) == 0
        rows = np.loadtxt(os.path.join(out_dir, "variants.csv"), delimiter=",")
        assert rows.shape == (4, 2)

    def test_inpaint_cli_preserves_observed_pixels(self, tmp_path):
        from PIL import Image

        size = 8
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        rng = seed_rng(1)
        for i in range(8):
            arr = rng.integers(0, 256, (size, size)).astype(np.uint8)
            Image.fromarray(arr).save(img_dir / f"im_{i}.png")
        config = tmp_path / "img.toml"
        config.write_text(f"""
[kernel]
kind = "continuous"
w = 0.5
[schedule]
steps = 100
beta_start = 1.0
beta_end = 0.01
[denoiser]
type = "mlp"
hidden = [16]
emb_dim = 8
[dataset]
path = "{img_dir}"
kind = "continuous"
[train]
learning_rate = 1e-3
batch_size = 8
total_steps = 20
seed = 3
[output]
dir = "{tmp_path}/imgrun"
""")
        assert main(["train", "--config", str(config)]) == 0
        ckpt = str(tmp_path / "imgrun" / "checkpoint.nkc")

        source = rng.integers(0, 256, (size, size)).astype(np.uint8)
        Image.fromarray(source).save(tmp_path / "source.png")
        mask = np.zeros((size, size), dtype=np.uint8)
        mask[0:4, 0:4] = 255
        Image.fromarray(mask).save(tmp_path / "mask.png")
        out_dir = str(tmp_path / "inpainted")
        assert main(["inpaint", "--ckpt", ckpt,
                     "--image", str(tmp_path / "source.png"),
                     "--mask", str(tmp_path / "mask.png"),
                     "-o", out_dir]) == 0
        result = np.asarray(Image.open(
            os.path.join(out_dir, "inpaint_0000.png")))
        keep = mask == 0
        np.testing.assert_array_equal(result[keep], source[keep])

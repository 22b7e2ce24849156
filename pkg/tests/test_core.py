"""Core contracts: RNG determinism, schedules, ingestion, checkpoints."""

import numpy as np
import pytest

from noisekernel.core import (seed_rng, derive_stream, NoiseSchedule,
                              linear_schedule, Dataset, ingest_dataset,
                              save_dataset_npy, Checkpoint, save_checkpoint,
                              load_checkpoint)
from noisekernel.errors import (DataFormatError, DataValidationError,
                                DomainError, IntegrityError,
                                ScheduleValidityError, VersionError)


class TestRng:
    def test_identical_seeds_identical_streams(self):
        a = seed_rng(42).random(3)
        b = seed_rng(42).random(3)
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        a = seed_rng(0).random(100)
        b = seed_rng(1).random(100)
        assert np.any(a != b)

    def test_uniform_mean(self):
        draws = seed_rng(7).random(10 ** 6)
        assert abs(draws.mean() - 0.5) < 0.002

    def test_derived_streams_independent_and_reproducible(self):
        a1 = derive_stream(5, 0).random(8)
        a2 = derive_stream(5, 0).random(8)
        b = derive_stream(5, 1).random(8)
        np.testing.assert_array_equal(a1, a2)
        assert np.any(a1 != b)


class TestNoiseSchedule:
    def test_levels_validated(self):
        with pytest.raises(DomainError):
            NoiseSchedule(betas=np.array([0.5, 0.0]), kind="continuous")
        with pytest.raises(DomainError):
            NoiseSchedule(betas=np.array([1.2]), kind="continuous")

    def test_linear_grid_inclusive(self):
        sched = linear_schedule(1.0, 0.01, 100)
        assert len(sched.betas) == 101
        assert sched.betas[0] == 1.0 and sched.betas[-1] == 0.01
        assert sched.is_annealing()

    def test_continuous_validity_condition(self):
        # beta halving each step fails for w=0.8 (0.64 * beta_t > beta_next)
        sched = NoiseSchedule(betas=np.array([1.0, 0.5, 0.25]), kind="continuous")
        sched.validate_for_w(0.5)
        with pytest.raises(ScheduleValidityError):
            sched.validate_for_w(0.8)

    def test_categorical_validity_condition(self):
        sched = NoiseSchedule(betas=np.array([1.0, 0.96, 0.93]), kind="categorical")
        sched.validate_for_w(0.95)
        with pytest.raises(ScheduleValidityError):
            NoiseSchedule(betas=np.array([1.0, 0.9]), kind="categorical") \
                .validate_for_w(0.95)

    def test_domain_default_schedules_valid(self):
        linear_schedule(1.0, 0.01, 100, kind="continuous").validate_for_w(0.5)
        linear_schedule(1.0, 0.5, 500, kind="categorical").validate_for_w(0.95)


class TestIngestion:
    def test_equal_width_binning_endpoints(self, tmp_path):
        from PIL import Image
        d = tmp_path / "imgs"
        d.mkdir()
        arr = np.array([[0, 255], [255, 0]], dtype=np.uint8)
        Image.fromarray(arr).save(d / "a.png")
        ds = ingest_dataset(str(d), "categorical", num_categories=10)
        assert set(np.unique(ds.data)) == {1, 10}

    def test_midpoint_maps_to_zero(self, tmp_path):
        path = tmp_path / "data.npy"
        np.save(path, np.array([[0.0], [127.5], [255.0]]))
        ds = ingest_dataset(str(path), "continuous")
        np.testing.assert_allclose(ds.data[:, 0], [-1.0, 0.0, 1.0], atol=1e-7)

    def test_record_count_and_dim(self, tmp_path):
        path = tmp_path / "cifar_like.npy"
        rng = seed_rng(3)
        np.save(path, rng.integers(0, 256, size=(12, 32, 32, 3)).astype(np.uint8))
        ds = ingest_dataset(str(path), "continuous")
        assert ds.num_examples == 12
        assert ds.dim == 3072
        assert ds.example_shape == (32, 32, 3)

    def test_ingestion_idempotent(self, tmp_path):
        src = tmp_path / "src.npy"
        rng = seed_rng(4)
        np.save(src, rng.uniform(-3, 5, size=(20, 6)))
        ds1 = ingest_dataset(str(src), "continuous")
        round_trip = tmp_path / "round.npy"
        save_dataset_npy(ds1, str(round_trip))
        ds2 = ingest_dataset(str(round_trip), "continuous")
        np.testing.assert_array_equal(ds1.data, ds2.data)

    def test_csv_round_trip_and_parse_error(self, tmp_path):
        good = tmp_path / "toy.csv"
        good.write_text("0.1,0.2\n-0.3,0.4\n")
        ds = ingest_dataset(str(good), "continuous")
        assert ds.data.shape == (2, 2)
        bad = tmp_path / "bad.csv"
        bad.write_text("0.1,0.2\noops,0.4\n")
        with pytest.raises(DataFormatError) as err:
            ingest_dataset(str(bad), "continuous")
        assert "byte offset" in str(err.value)

    def test_out_of_range_category_rejected(self, tmp_path):
        path = tmp_path / "cats.npy"
        np.save(path, np.array([[1, 2], [3, 11]], dtype=np.int64))
        with pytest.raises(DataValidationError):
            ingest_dataset(str(path), "categorical", num_categories=10)

    def test_absorbing_index_never_in_clean_data(self):
        with pytest.raises(DataValidationError):
            Dataset(kind="categorical", data=np.array([[1, 4]]),
                    example_shape=(2,), num_categories=3)


def _toy_checkpoint():
    params = {"layer0.weight": np.arange(6, dtype=np.float32).reshape(2, 3),
              "layer0.bias": np.ones(3, dtype=np.float32)}
    return Checkpoint(
        parameters=params,
        ema_parameters={k: v * 0.5 for k, v in params.items()},
        optimizer_state={"adam.step": np.array([7], dtype=np.int64)},
        config={"note": "toy"},
        rng_seed=123456789,
    )


class TestCheckpoint:
    def test_round_trip_bit_identical(self, tmp_path):
        ckpt = _toy_checkpoint()
        path = str(tmp_path / "toy.nkc")
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        for section in ("parameters", "ema_parameters", "optimizer_state"):
            for name, arr in getattr(ckpt, section).items():
                got = getattr(loaded, section)[name]
                assert got.tobytes() == arr.tobytes()
                assert got.dtype == arr.dtype and got.shape == arr.shape
        assert loaded.rng_seed == ckpt.rng_seed
        assert loaded.config == ckpt.config

    def test_truncated_file_rejected(self, tmp_path):
        path = str(tmp_path / "toy.nkc")
        save_checkpoint(_toy_checkpoint(), path)
        blob = open(path, "rb").read()
        open(path, "wb").write(blob[:-1])
        with pytest.raises(IntegrityError):
            load_checkpoint(path)

    def test_unknown_version_rejected(self, tmp_path):
        path = str(tmp_path / "toy.nkc")
        save_checkpoint(_toy_checkpoint(), path)
        blob = open(path, "rb").read()
        open(path, "wb").write(blob.replace(b'"format_version": 1',
                                            b'"format_version": 9'))
        with pytest.raises(VersionError):
            load_checkpoint(path)

    def test_ema_name_mismatch_rejected(self):
        params = {"a": np.zeros(2)}
        with pytest.raises(DataValidationError):
            Checkpoint(parameters=params, ema_parameters={"b": np.zeros(2)},
                       optimizer_state={}, config={}, rng_seed=0)

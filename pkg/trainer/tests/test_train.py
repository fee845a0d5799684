"""Training loop, evaluation report, and the trainer CLI at small scale."""

import numpy as np
import pytest
import torch
from click.testing import CliRunner

from mgtrain.cli import main
from mgtrain.errors import ConfigurationError
from mgtrain.formats import WindowPair, read_srwt, write_mgds
from mgtrain.model import Generator
from mgtrain.train import (
    TrainConfig,
    evaluate_operator,
    report_to_csv,
    split_dataset,
    spline_upsample_window,
    train_generator,
)


def smooth_window(rng, n=6):
    """Band-limited random window with values in [-1, 1]."""
    z = rng.standard_normal((n, n))
    zh = np.fft.fft2(z)
    m = np.fft.fftfreq(n) * n
    zh[np.abs(m)[:, None] + np.abs(m)[None, :] > 2] = 0.0
    v = np.real(np.fft.ifft2(zh))
    return (v / (np.abs(v).max() + 1e-12)).astype(np.float32)


def nearest_upsample_dataset(path, count, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(count):
        w = smooth_window(rng)
        t = np.repeat(np.repeat(w, 4, axis=0), 4, axis=1)
        pairs.append(WindowPair(w, t, i, 2, 0, 0))
    write_mgds(pairs, path)
    return pairs


class TestTrainConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(val_fraction=0.0),
            dict(val_fraction=0.6),
            dict(epochs=-1),
            dict(batch_size=0),
            dict(lr=0.0),
            dict(adv_weight=-1.0),
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        base = dict(dataset="d.mgds", out_path="w.srwt")
        with pytest.raises(ConfigurationError):
            TrainConfig(**{**base, **kwargs})


class TestSplit:
    def test_deterministic_and_disjoint(self):
        rng = np.random.default_rng(0)
        pairs = [
            WindowPair(
                rng.uniform(size=(6, 6)).astype(np.float32),
                rng.uniform(size=(24, 24)).astype(np.float32),
                i, 2, 0, 0,
            )
            for i in range(40)
        ]
        tr1, va1 = split_dataset(pairs, 0.25, seed=3)
        tr2, va2 = split_dataset(pairs, 0.25, seed=3)
        assert len(va1) == 10 and len(tr1) == 30
        assert [p.field_id for p in va1] == [p.field_id for p in va2]
        assert set(p.field_id for p in tr1).isdisjoint(p.field_id for p in va1)


class TestTrainGenerator:
    def test_zero_epochs_exports_seeded_initialization(self, tmp_path):
        data = tmp_path / "d.mgds"
        nearest_upsample_dataset(data, 20)
        out = tmp_path / "w.srwt"
        cfg = TrainConfig(dataset=str(data), out_path=str(out), epochs=0, seed=9)
        train_generator(cfg)
        torch.manual_seed(9)
        expected = Generator().export_weights()
        got = read_srwt(out)
        for name in expected.tensors:
            assert np.array_equal(got.tensors[name], expected.tensors[name])

    def test_two_epoch_determinism(self, tmp_path):
        data = tmp_path / "d.mgds"
        nearest_upsample_dataset(data, 64)
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.srwt"
            cfg = TrainConfig(
                dataset=str(data), out_path=str(out), epochs=2, seed=5,
                batch_size=16,
            )
            train_generator(cfg)
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_learns_nearest_neighbor_upsampling(self, tmp_path):
        data = tmp_path / "d.mgds"
        pairs = nearest_upsample_dataset(data, 300, seed=1)
        out = tmp_path / "w.srwt"
        log = tmp_path / "log.csv"
        cfg = TrainConfig(
            dataset=str(data), out_path=str(out), epochs=50, seed=0,
            batch_size=32, lr=2e-3, log_path=str(log),
        )
        train_generator(cfg)
        report = evaluate_operator(read_srwt(out), str(data), 0.1, 0)
        assert report["generator_mse"] <= 0.1 * report["zero_mse"]
        lines = log.read_text().strip().splitlines()
        assert lines[0] == "epoch,train_mse,val_mse"
        assert len(lines) == 51

    def test_adversarial_mode_runs(self, tmp_path):
        data = tmp_path / "d.mgds"
        nearest_upsample_dataset(data, 40)
        out = tmp_path / "w.srwt"
        cfg = TrainConfig(
            dataset=str(data), out_path=str(out), epochs=1, seed=0,
            batch_size=16, adversarial=True,
        )
        w = train_generator(cfg)
        assert out.exists()
        assert all(np.all(np.isfinite(t)) for t in w.tensors.values())


class TestEvaluate:
    def test_zero_generator_matches_zero_predictor(self, tmp_path):
        data = tmp_path / "d.mgds"
        nearest_upsample_dataset(data, 60, seed=2)
        g = Generator()
        with torch.no_grad():
            for p in g.parameters():
                p.zero_()
        report = evaluate_operator(g.export_weights(), str(data), 0.2, 0)
        assert report["generator_mse"] == pytest.approx(report["zero_mse"], rel=1e-6)

    def test_spline_oracle_identity(self, tmp_path):
        # targets that ARE spline upsamples give the spline baseline ~zero MSE
        rng = np.random.default_rng(3)
        pairs = []
        for i in range(60):
            w = smooth_window(rng)
            t = spline_upsample_window(w.astype(np.float64)).astype(np.float32)
            pairs.append(WindowPair(w, t, i, 2, 0, 0))
        data = tmp_path / "d.mgds"
        write_mgds(pairs, data)
        report = evaluate_operator(Generator().export_weights(), str(data), 0.2, 0)
        assert report["spline_mse"] <= 1e-12

    def test_report_csv(self, tmp_path):
        path = tmp_path / "r.csv"
        report_to_csv({"b": 2.0, "a": 1.0}, path)
        assert path.read_text() == "metric,value\na,1\nb,2\n"


class TestCli:
    def test_train_and_eval(self, tmp_path):
        data = tmp_path / "d.mgds"
        nearest_upsample_dataset(data, 40)
        runner = CliRunner()
        r = runner.invoke(
            main,
            ["train", "--dataset", str(data), "--epochs", "1",
             "--batch-size", "16", "--out", str(tmp_path / "w.srwt")],
        )
        assert r.exit_code == 0, r.output
        assert (tmp_path / "w.srwt").exists()
        assert (tmp_path / "training_log.csv").exists()
        r = runner.invoke(
            main,
            ["eval", "--weights", str(tmp_path / "w.srwt"), "--dataset",
             str(data), "--out", str(tmp_path / "report.csv")],
        )
        assert r.exit_code == 0, r.output
        assert "generator_mse" in r.output
        assert (tmp_path / "report.csv").exists()

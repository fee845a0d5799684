"""Turbulence generation, snapshot consistency, and window sampling."""

import numpy as np
import pytest

from mgsr.datagen import (
    DatasetManifest,
    TrainingSample,
    VelocityField,
    build_level_pyramid,
    compute_source,
    derive_global_spec,
    divergence_fd,
    evolve,
    field_paths,
    init_broadband_velocity,
    read_mgds,
    sample_training_windows,
    window_space_size,
    write_mgds,
)
from mgsr.errors import ConfigurationError, InputError, ShapeError
from mgsr.grid import Grid, laplacian, norm
from mgsr.prolongation import NormalizationSpec, symlog_normalize


class TestVelocityField:
    def test_mismatched_components(self):
        with pytest.raises(ShapeError):
            VelocityField(Grid.zeros(8), Grid.zeros(16), 1e-3)

    def test_bad_viscosity(self):
        with pytest.raises(ConfigurationError):
            VelocityField(Grid.zeros(8), Grid.zeros(8), 0.0)

    def test_max_speed(self):
        u = Grid.from_values(np.full((8, 8), 3.0))
        v = Grid.from_values(np.full((8, 8), 4.0))
        assert VelocityField(u, v, 1e-3).max_speed() == pytest.approx(5.0)


class TestInitialCondition:
    def test_unit_rms_and_solenoidal(self):
        vel = init_broadband_velocity(64, seed=0)
        rms = np.sqrt(np.mean(vel.u.values**2 + vel.v.values**2))
        assert rms == pytest.approx(1.0, rel=1e-12)
        vel_norm = np.sqrt(norm(vel.u) ** 2 + norm(vel.v) ** 2)
        assert norm(divergence_fd(vel)) < 1e-10 * vel_norm / vel.h

    def test_deterministic_per_seed(self):
        a = init_broadband_velocity(32, seed=5)
        b = init_broadband_velocity(32, seed=5)
        c = init_broadband_velocity(32, seed=6)
        assert np.array_equal(a.u.values, b.u.values)
        assert not np.array_equal(a.u.values, c.u.values)

    def test_energy_concentrated_around_peak(self):
        from mgsr.spectral import power_spectrum

        vel = init_broadband_velocity(64, seed=1, k_peak=4)
        rec_u = power_spectrum(vel.u)
        rec_v = power_spectrum(vel.v)
        total = np.sum((rec_u.power + rec_v.power) * rec_u.counts)
        band = slice(1, 9)  # shells 1..8 around k_peak = 4
        in_band = np.sum(
            (rec_u.power[band] + rec_v.power[band]) * rec_u.counts[band]
        )
        assert in_band > 0.8 * total

    def test_too_small_grid(self):
        with pytest.raises(ConfigurationError):
            init_broadband_velocity(8, seed=0)


class TestEvolve:
    def test_snapshots_are_exact_discrete_pairs(self):
        vel = init_broadband_velocity(32, seed=2)
        snaps = evolve(vel, None, 10, snapshot_every=5)
        assert len(snaps) == 2
        for p, f in snaps:
            assert abs(f.values.mean()) < 1e-12
            assert abs(p.values.mean()) < 1e-12
            assert norm(p.with_values(laplacian(p).values - f.values)) < 1e-9 * norm(f)

    def test_divergence_free_after_every_step(self):
        vel = init_broadband_velocity(32, seed=3)
        snaps, state = evolve(vel, None, 8, snapshot_every=2, return_state=True)
        vel_norm = np.sqrt(norm(state.u) ** 2 + norm(state.v) ** 2)
        assert norm(divergence_fd(state)) < 1e-10 * vel_norm / state.h

    def test_explicit_dt_bound_enforced(self):
        vel = init_broadband_velocity(32, seed=4)
        bound = 0.5 * vel.h / vel.max_speed()
        with pytest.raises(ConfigurationError):
            evolve(vel, 10.0 * bound, 1)

    def test_energy_decays(self):
        vel = init_broadband_velocity(32, seed=5)
        ke0 = np.mean(vel.u.values**2 + vel.v.values**2)
        _snaps, state = evolve(vel, None, 50, snapshot_every=0, return_state=True)
        ke1 = np.mean(state.u.values**2 + state.v.values**2)
        assert ke1 < ke0


@pytest.fixture(scope="module")
def fields():
    vel = init_broadband_velocity(192, seed=6)
    snaps = evolve(vel, None, 4, snapshot_every=2)
    return [p for p, _f in snaps]


class TestSampling:
    def test_pyramid_levels(self, fields):
        pyr = build_level_pyramid(fields[0], 5)
        assert [g.n for g in pyr] == [192, 96, 48, 24, 12, 6]
        assert np.array_equal(pyr[2].values, fields[0].values[::4, ::4])

    def test_window_space_size(self):
        # levels 2..5 of a 192 grid: 43^2 + 19^2 + 7^2 + 1
        assert window_space_size(192) == 43**2 + 19**2 + 7**2 + 1

    def test_samples_align_with_pyramid(self, fields):
        spec = derive_global_spec(fields)
        samples = sample_training_windows(fields, 40, seed=0, spec=spec)
        assert len(samples) == 40
        for s in samples[:10]:
            pyr = build_level_pyramid(fields[s.field_id], 5)
            coarse, fine = pyr[s.level], pyr[s.level - 2]
            cw = coarse.values[s.row : s.row + 6, s.col : s.col + 6]
            fw = fine.values[4 * s.row : 4 * s.row + 24, 4 * s.col : 4 * s.col + 24]
            cn = symlog_normalize(Grid(6, coarse.h, cw.copy()), spec).values
            fn = symlog_normalize(Grid(24, fine.h, fw.copy()), spec).values
            assert np.array_equal(s.inputs, cn)
            assert np.array_equal(s.target, fn)
            assert np.all(np.abs(s.inputs) <= 1.0)
            assert np.all(np.abs(s.target) <= 1.0)

    def test_sampling_deterministic(self, fields):
        spec = derive_global_spec(fields)
        a = sample_training_windows(fields, 20, seed=1, spec=spec)
        b = sample_training_windows(fields, 20, seed=1, spec=spec)
        assert all(
            np.array_equal(x.inputs, y.inputs) and x.level == y.level
            for x, y in zip(a, b)
        )

    def test_rejects_empty_inputs(self):
        with pytest.raises(InputError):
            sample_training_windows([], 10, 0, NormalizationSpec())
        with pytest.raises(InputError):
            sample_training_windows([Grid.zeros(192)], 0, 0, NormalizationSpec())


class TestMgdsFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        samples = [
            TrainingSample(
                rng.uniform(-1, 1, (6, 6)).astype(np.float32).astype(np.float64),
                rng.uniform(-1, 1, (24, 24)).astype(np.float32).astype(np.float64),
                field_id=i,
                level=3,
                row=2 * i,
                col=i,
            )
            for i in range(5)
        ]
        path = tmp_path / "d.mgds"
        write_mgds(samples, path)
        back = read_mgds(path)
        assert len(back) == 5
        for s, t in zip(samples, back):
            assert (s.field_id, s.level, s.row, s.col) == (t.field_id, t.level, t.row, t.col)
            assert np.array_equal(s.inputs, t.inputs)
            assert np.array_equal(s.target, t.target)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mgds"
        path.write_bytes(b"XXXX" + b"\x00" * 8)
        with pytest.raises(InputError):
            read_mgds(path)


class TestManifestsAndPaths:
    def test_manifest_round_trip(self, tmp_path):
        m = DatasetManifest(
            count=10, seed=1, p_min=1e-9, p_max=1e-2, source_fields=[0, 1]
        )
        path = tmp_path / "m.json"
        m.to_json(path)
        assert DatasetManifest.from_json(path) == m

    def test_field_paths(self, tmp_path):
        p, f = field_paths(tmp_path, 7)
        assert p.name == "field_7_p.pgrd"
        assert f.name == "field_7_f.pgrd"

    def test_derive_global_spec(self):
        g = Grid.from_values(np.full((8, 8), 2.0))
        spec = derive_global_spec([g, Grid.zeros(8)])
        assert spec.p_max == 2.0
        assert spec.p_min == pytest.approx(2e-7)
        with pytest.raises(InputError):
            derive_global_spec([Grid.zeros(8)])

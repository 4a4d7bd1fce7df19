import dataclasses

import numpy as np
import pytest

from obalign.errors import ExtrapolationError
from obalign.sensors import (
    GnssData,
    SensorSpec,
    interpolate_gnss,
    read_gnss_csv,
    read_imu_csv,
    sample_gnss,
    sensor_preset,
    synthesize_imu,
    write_gnss_csv,
    write_imu_csv,
)
from obalign.trajectory import Circle, Stationary, simulate_trajectory


@pytest.fixture(scope="module")
def short_truth():
    return simulate_trajectory(Circle(), 10.0, rate=100.0)


class TestSynthesizeImu:
    def test_perfect_sensor_passthrough(self, short_truth):
        imu = synthesize_imu(short_truth, SensorSpec(), seed=1)
        np.testing.assert_array_equal(imu.gyro, short_truth.body_rate)
        np.testing.assert_array_equal(imu.accel, short_truth.specific_force)

    def test_constant_bias_offset(self, short_truth):
        b = (0.01, -0.02, 0.03)
        spec = SensorSpec(gyro_bias=b, accel_bias=(0.1, 0.0, -0.1))
        imu = synthesize_imu(short_truth, spec, seed=1)
        np.testing.assert_allclose(
            imu.gyro - short_truth.body_rate, np.tile(b, (len(imu.time), 1)), atol=0
        )
        np.testing.assert_allclose(
            imu.accel - short_truth.specific_force,
            np.tile((0.1, 0.0, -0.1), (len(imu.time), 1)),
            atol=0,
        )

    def test_white_noise_std(self):
        # 1e5 samples; a chi-square 99.9% band on the sample std of
        # n=3e5 draws is well within +-3%.
        truth = simulate_trajectory(Stationary(), 1000.0, rate=100.0)
        arw = 1e-4
        spec = SensorSpec(gyro_arw=arw)
        imu = synthesize_imu(truth, spec, seed=42)
        resid = imu.gyro - truth.body_rate
        assert resid.shape[0] > 1e5
        expect = arw * np.sqrt(spec.sample_rate)
        assert np.std(resid) == pytest.approx(expect, rel=0.03)

    def test_bias_walk_recorded(self, short_truth):
        spec = SensorSpec(gyro_rrw=1e-4)
        imu = synthesize_imu(short_truth, spec, seed=3)
        np.testing.assert_allclose(
            imu.gyro - short_truth.body_rate, imu.true_gyro_bias, atol=1e-15
        )
        assert np.any(imu.true_gyro_bias[-1] != 0.0)

    def test_same_seed_bit_identical(self, short_truth):
        spec = sensor_preset("low")
        a = synthesize_imu(short_truth, spec, seed=9)
        b = synthesize_imu(short_truth, spec, seed=9)
        np.testing.assert_array_equal(a.gyro, b.gyro)
        np.testing.assert_array_equal(a.accel, b.accel)

    def test_rate_mismatch_rejected(self, short_truth):
        with pytest.raises(ValueError):
            synthesize_imu(short_truth, SensorSpec(sample_rate=64.0), seed=0)

    def test_decimation(self, short_truth):
        imu = synthesize_imu(short_truth, SensorSpec(sample_rate=50.0), seed=0)
        assert imu.rate == pytest.approx(50.0)
        np.testing.assert_array_equal(imu.time, short_truth.time[::2])


class TestPresets:
    def test_known_names(self):
        for name in ("navigation", "low", "perfect"):
            sensor_preset(name)
        with pytest.raises(ValueError):
            sensor_preset("tactical")

    def test_navigation_bias_scale(self):
        spec = sensor_preset("navigation")
        assert spec.gyro_bias_bound == pytest.approx(np.radians(0.05) / 3600.0)

    def test_low_bias_scale(self):
        spec = sensor_preset("low")
        assert spec.gyro_bias_bound == pytest.approx(np.radians(0.5))
        assert spec.accel_bias_bound == pytest.approx(0.005 * 9.80665)

    def test_validation(self):
        with pytest.raises(ValueError):
            SensorSpec(gyro_arw=-1.0)
        with pytest.raises(ValueError):
            SensorSpec(sample_rate=0.0)


class TestGnss:
    def test_noise_free_sampling(self, short_truth):
        gnss = sample_gnss(short_truth, rate=1.0)
        np.testing.assert_array_equal(gnss.time, short_truth.time[::100])
        np.testing.assert_array_equal(gnss.vel, short_truth.vel[::100])

    def test_interpolate_at_sample(self, short_truth):
        gnss = sample_gnss(short_truth, rate=1.0)
        vel, pos = interpolate_gnss(gnss, 3.0)
        np.testing.assert_array_equal(vel, gnss.vel[3])
        np.testing.assert_array_equal(pos, gnss.pos[3])

    def test_interpolate_midpoint(self, short_truth):
        gnss = sample_gnss(short_truth, rate=1.0)
        vel, _ = interpolate_gnss(gnss, 3.5)
        np.testing.assert_allclose(vel, 0.5 * (gnss.vel[3] + gnss.vel[4]), atol=1e-15)

    def test_linear_velocity_recovered_exactly(self):
        t = np.arange(11.0)
        vel = np.outer(t, [0.5, -0.2, 0.1])
        gnss = GnssData(time=t, vel=vel, pos=np.zeros((11, 3)))
        v, _ = interpolate_gnss(gnss, 4.37)
        np.testing.assert_allclose(v, 4.37 * np.array([0.5, -0.2, 0.1]), atol=1e-12)

    def test_extrapolation_rejected(self, short_truth):
        gnss = sample_gnss(short_truth, rate=1.0)
        with pytest.raises(ExtrapolationError):
            interpolate_gnss(gnss, -0.5)
        with pytest.raises(ExtrapolationError):
            interpolate_gnss(gnss, gnss.time[-1] + 0.5)

    def test_noisy_sampling_seeded(self, short_truth):
        a = sample_gnss(short_truth, rate=1.0, vel_noise_std=0.1, seed=5)
        b = sample_gnss(short_truth, rate=1.0, vel_noise_std=0.1, seed=5)
        np.testing.assert_array_equal(a.vel, b.vel)
        assert np.any(a.vel != short_truth.vel[::100])


class TestCsvRoundTrip:
    def test_imu(self, short_truth, tmp_path):
        imu = synthesize_imu(short_truth, sensor_preset("low"), seed=2)
        path = tmp_path / "imu.csv"
        write_imu_csv(imu, path)
        back = read_imu_csv(path)
        np.testing.assert_array_equal(back.time, imu.time)
        np.testing.assert_array_equal(back.gyro, imu.gyro)
        np.testing.assert_array_equal(back.accel, imu.accel)

    def test_gnss(self, short_truth, tmp_path):
        gnss = sample_gnss(short_truth, rate=1.0)
        path = tmp_path / "gnss.csv"
        write_gnss_csv(gnss, path)
        back = read_gnss_csv(path)
        np.testing.assert_array_equal(back.time, gnss.time)
        np.testing.assert_array_equal(back.pos, gnss.pos)

    def test_bad_header_rejected(self, short_truth, tmp_path):
        gnss = sample_gnss(short_truth, rate=1.0)
        path = tmp_path / "gnss.csv"
        write_gnss_csv(gnss, path)
        with pytest.raises(ValueError):
            read_imu_csv(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "imu.csv"
        path.write_text("time,gx,gy,gz,ax,ay,az\n")
        with pytest.raises(ValueError):
            read_imu_csv(path)

import dataclasses

import numpy as np
import pytest

from obalign.sensors import sample_gnss, sensor_preset, synthesize_imu
from obalign.trajectory import Circle, simulate_trajectory


@pytest.fixture(scope="session")
def circle_truth_100s():
    return simulate_trajectory(Circle(), 100.0, rate=100.0)


@pytest.fixture(scope="session")
def circle_truth_250s():
    return simulate_trajectory(Circle(), 250.0, rate=100.0)


@pytest.fixture(scope="session")
def perfect_circle_streams(circle_truth_100s):
    truth = circle_truth_100s
    spec = sensor_preset("perfect")
    imu = synthesize_imu(truth, spec, seed=0)
    gnss = sample_gnss(truth, rate=1.0, seed=0)
    return truth, imu, gnss


@pytest.fixture(scope="session")
def lowgrade_circle_streams(circle_truth_250s):
    # Gyro-error budget of the low preset; accelerometer bias off so the
    # scenario isolates what the methods differ on (see README presets).
    truth = circle_truth_250s
    spec = dataclasses.replace(sensor_preset("low"), accel_bias=(0.0, 0.0, 0.0))
    imu = synthesize_imu(truth, spec, seed=7)
    gnss = sample_gnss(truth, rate=1.0, seed=1007)
    return truth, spec, imu, gnss


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

"""Inertial and GNSS measurement synthesis, plus sensor-log CSV I/O.

Error model: constant bias per axis, white noise scaled from a
continuous density (std = density * sqrt(sample_rate)), and for the
gyros a bias random walk (std of each step = rrw * sqrt(dt)). All
synthesis is driven by a seeded generator, so identical seeds give
bit-identical streams.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtrapolationError

__all__ = [
    "GnssData",
    "ImuData",
    "SENSOR_PRESETS",
    "SensorSpec",
    "interpolate_gnss",
    "read_gnss_csv",
    "read_imu_csv",
    "sample_gnss",
    "sensor_preset",
    "synthesize_imu",
    "write_gnss_csv",
    "write_imu_csv",
]

_DEG = np.pi / 180.0
_G0 = 9.80665

IMU_HEADER = "time,gx,gy,gz,ax,ay,az"
GNSS_HEADER = "time,ve,vn,vu,lat,lon,h"


@dataclass(frozen=True)
class SensorSpec:
    """IMU error budget, SI units.

    gyro_bias : rad/s, per-axis constant bias actually injected.
    gyro_arw : rad/s/sqrt(Hz), angular random walk density.
    gyro_rrw : rad/s^(3/2), bias random-walk density.
    accel_bias : m/s^2 per axis.
    accel_vrw : m/s^2/sqrt(Hz), velocity random walk density.
    sample_rate : Hz.
    """

    gyro_bias: tuple = (0.0, 0.0, 0.0)
    gyro_arw: float = 0.0
    gyro_rrw: float = 0.0
    accel_bias: tuple = (0.0, 0.0, 0.0)
    accel_vrw: float = 0.0
    sample_rate: float = 100.0

    def __post_init__(self):
        if self.sample_rate <= 0.0:
            raise ValueError("sample_rate must be positive")
        for name in ("gyro_arw", "gyro_rrw", "accel_vrw"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def gyro_bias_bound(self) -> float:
        """Largest per-axis gyro bias magnitude; used as the prior sigma."""
        return float(np.max(np.abs(self.gyro_bias)))

    @property
    def accel_bias_bound(self) -> float:
        """Largest per-axis accelerometer bias magnitude."""
        return float(np.max(np.abs(self.accel_bias)))


def _preset_navigation() -> SensorSpec:
    # Ring-laser-grade unit: bias 0.05 deg/h, accel bias 50 ug.
    b = 0.05 * _DEG / 3600.0
    return SensorSpec(
        gyro_bias=(b, -b, b),
        gyro_arw=0.002 * _DEG / 60.0,      # 0.002 deg/sqrt(h)
        gyro_rrw=2.0e-9,
        accel_bias=(50e-6 * _G0, -50e-6 * _G0, 50e-6 * _G0),
        accel_vrw=20e-6 * _G0,             # 20 ug/sqrt(Hz)
        sample_rate=100.0,
    )


def _preset_low() -> SensorSpec:
    # Industrial MEMS unit: large uncalibrated turn-on biases (0.5 deg/s
    # gyro, 5 mg accel) paired with the noise densities of a
    # current-generation part (about 0.08 deg/sqrt(h) and 35 ug/sqrt(Hz)).
    # In-run bias stability is far better than turn-on repeatability,
    # hence the small rrw next to the large constant bias.
    b = 0.5 * _DEG
    return SensorSpec(
        gyro_bias=(b, -b, b),
        gyro_arw=0.08 * _DEG / 60.0,       # 0.08 deg/sqrt(h)
        gyro_rrw=2.0e-7,
        accel_bias=(0.005 * _G0, -0.005 * _G0, 0.005 * _G0),
        accel_vrw=35e-6 * _G0,             # 35 ug/sqrt(Hz)
        sample_rate=100.0,
    )


def _preset_perfect() -> SensorSpec:
    return SensorSpec()


SENSOR_PRESETS = {
    "navigation": _preset_navigation,
    "low": _preset_low,
    "perfect": _preset_perfect,
}


def sensor_preset(name: str) -> SensorSpec:
    try:
        return SENSOR_PRESETS[name]()
    except KeyError:
        raise ValueError(
            f"unknown sensor grade {name!r}; expected one of {sorted(SENSOR_PRESETS)}"
        ) from None


@dataclass
class ImuData:
    time: np.ndarray        # (N,)
    gyro: np.ndarray        # (N, 3) rad/s
    accel: np.ndarray       # (N, 3) m/s^2
    true_gyro_bias: np.ndarray = None  # (N, 3), bias + walk actually injected

    def __post_init__(self):
        if self.true_gyro_bias is None:
            self.true_gyro_bias = np.zeros_like(self.gyro)

    @property
    def rate(self) -> float:
        return 1.0 / (self.time[1] - self.time[0])


@dataclass
class GnssData:
    time: np.ndarray        # (M,)
    vel: np.ndarray         # (M, 3) ENU m/s
    pos: np.ndarray         # (M, 3) [lat, lon, h]


def synthesize_imu(truth, spec: SensorSpec, seed=None) -> ImuData:
    """Corrupt truth body rates / specific forces per the sensor spec.

    The truth must be sampled at an integer multiple of the spec's
    sample rate; it is decimated when faster.
    """
    step = truth.rate / spec.sample_rate
    if abs(step - round(step)) > 1e-9 or step < 1.0 - 1e-9:
        raise ValueError(
            f"truth rate {truth.rate} must be an integer multiple of "
            f"sensor rate {spec.sample_rate}"
        )
    sl = slice(None, None, int(round(step)))
    time = truth.time[sl]
    gyro = truth.body_rate[sl].copy()
    accel = truth.specific_force[sl].copy()
    n = len(time)
    dt = 1.0 / spec.sample_rate

    rng = np.random.default_rng(seed)
    walk = np.zeros((n, 3))
    if spec.gyro_rrw > 0.0:
        steps = rng.normal(0.0, spec.gyro_rrw * np.sqrt(dt), size=(n - 1, 3))
        walk[1:] = np.cumsum(steps, axis=0)
    bias = np.asarray(spec.gyro_bias, dtype=float) + walk
    gyro += bias
    if spec.gyro_arw > 0.0:
        gyro += rng.normal(0.0, spec.gyro_arw * np.sqrt(spec.sample_rate), size=(n, 3))
    accel += np.asarray(spec.accel_bias, dtype=float)
    if spec.accel_vrw > 0.0:
        accel += rng.normal(0.0, spec.accel_vrw * np.sqrt(spec.sample_rate), size=(n, 3))

    return ImuData(time=time, gyro=gyro, accel=accel, true_gyro_bias=bias)


def sample_gnss(
    truth,
    rate: float = 1.0,
    vel_noise_std: float = 0.0,
    pos_noise_std: float = 0.0,
    seed=None,
) -> GnssData:
    """Sample truth velocity/position at the GNSS rate.

    Noise is optional and zero by default (reference-quality aiding).
    Position noise is specified in meters per ENU axis and mapped to
    geodetic perturbations through the local radii.
    """
    step = truth.rate / rate
    if abs(step - round(step)) > 1e-9 or step < 1.0 - 1e-9:
        raise ValueError("truth rate must be an integer multiple of the GNSS rate")
    sl = slice(None, None, int(round(step)))
    time = truth.time[sl]
    vel = truth.vel[sl].copy()
    pos = truth.pos[sl].copy()
    if vel_noise_std > 0.0 or pos_noise_std > 0.0:
        rng = np.random.default_rng(seed)
        if vel_noise_std > 0.0:
            vel += rng.normal(0.0, vel_noise_std, size=vel.shape)
        if pos_noise_std > 0.0:
            enu = rng.normal(0.0, pos_noise_std, size=pos.shape)
            rm, rn = truth.earth.principal_radii(pos[:, 0])
            pos[:, 0] += enu[:, 1] / (rm + pos[:, 2])
            pos[:, 1] += enu[:, 0] / ((rn + pos[:, 2]) * np.cos(pos[:, 0]))
            pos[:, 2] += enu[:, 2]
    return GnssData(time=time, vel=vel, pos=pos)


def interpolate_gnss(gnss: GnssData, t):
    """Linear interpolation of velocity and position at times t.

    Raises ExtrapolationError for queries outside the covered span.
    """
    t = np.asarray(t, dtype=float)
    t0, t1 = gnss.time[0], gnss.time[-1]
    if np.any(t < t0 - 1e-9) or np.any(t > t1 + 1e-9):
        raise ExtrapolationError(
            f"GNSS query outside [{t0}, {t1}]"
        )
    tc = np.clip(t, t0, t1)
    vel = np.stack([np.interp(tc, gnss.time, gnss.vel[:, i]) for i in range(3)], axis=-1)
    pos = np.stack([np.interp(tc, gnss.time, gnss.pos[:, i]) for i in range(3)], axis=-1)
    return vel, pos


def _write_csv(path, header, columns):
    data = np.column_stack(columns)
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in data:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def _read_csv(path, header):
    with open(path) as fh:
        first = fh.readline().strip()
        if first != header:
            raise ValueError(f"unexpected header {first!r}; want {header!r}")
        body = fh.read()
    if not body.strip():
        raise ValueError("sensor log contains no samples")
    return np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)


def write_imu_csv(imu: ImuData, path) -> None:
    _write_csv(
        path,
        IMU_HEADER,
        [imu.time, *[imu.gyro[:, i] for i in range(3)], *[imu.accel[:, i] for i in range(3)]],
    )


def read_imu_csv(path) -> ImuData:
    data = _read_csv(path, IMU_HEADER)
    return ImuData(time=data[:, 0], gyro=data[:, 1:4], accel=data[:, 4:7])


def write_gnss_csv(gnss: GnssData, path) -> None:
    _write_csv(
        path,
        GNSS_HEADER,
        [gnss.time, *[gnss.vel[:, i] for i in range(3)], *[gnss.pos[:, i] for i in range(3)]],
    )


def read_gnss_csv(path) -> GnssData:
    data = _read_csv(path, GNSS_HEADER)
    return GnssData(time=data[:, 0], vel=data[:, 1:4], pos=data[:, 4:7])

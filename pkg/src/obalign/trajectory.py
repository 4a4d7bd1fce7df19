"""Ground-truth trajectory synthesis for alignment experiments.

Profiles define attitude and velocity analytically; the generator
back-solves the body angular rate and specific force so that every
emitted sample satisfies the strapdown kinematics exactly:

    dC/dt = C * skew(w_nb_body)
    dv/dt = C f_body - (2*w_ie + w_en) x v + g

Geodetic position is integrated from the analytic velocity with RK4 at
the sample rate, so position-dependent terms (gravity, earth rate,
transport rate) are evaluated on a self-consistent track.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import earth as earth_mod
from .attitude import dcm_from_quat, euler_from_quat, quat_from_euler

__all__ = [
    "Circle",
    "DEFAULT_ORIGIN",
    "Stationary",
    "StraightAccelerate",
    "Swaying",
    "TruthSeries",
    "simulate_trajectory",
]

DEFAULT_ORIGIN = np.array([np.deg2rad(30.0), np.deg2rad(114.0), 20.0])


@dataclass(frozen=True)
class Stationary:
    """Parked vehicle with a fixed attitude."""

    pitch: float = 0.0
    roll: float = 0.0
    yaw: float = 0.0

    moves = False

    def attitude(self, t):
        shape = np.shape(t)
        return (
            np.full(shape, self.pitch),
            np.full(shape, self.roll),
            np.full(shape, self.yaw),
        )

    def attitude_rates(self, t):
        z = np.zeros(np.shape(t))
        return z, z.copy(), z.copy()

    def velocity(self, t):
        return np.zeros(np.shape(t) + (3,))

    def acceleration(self, t):
        return np.zeros(np.shape(t) + (3,))


@dataclass(frozen=True)
class StraightAccelerate:
    """Level run along a fixed heading: constant acceleration from rest
    until top_speed, then constant speed."""

    accel: float = 1.0
    top_speed: float = 15.0
    yaw: float = 0.0

    moves = True

    def __post_init__(self):
        if self.accel <= 0.0 or self.top_speed <= 0.0:
            raise ValueError("accel and top_speed must be positive")

    def _forward(self):
        return np.array([-np.sin(self.yaw), np.cos(self.yaw), 0.0])

    def attitude(self, t):
        shape = np.shape(t)
        return np.zeros(shape), np.zeros(shape), np.full(shape, self.yaw)

    def attitude_rates(self, t):
        z = np.zeros(np.shape(t))
        return z, z.copy(), z.copy()

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        speed = np.minimum(self.accel * t, self.top_speed)
        return speed[..., None] * self._forward()

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)
        accel = np.where(self.accel * t < self.top_speed, self.accel, 0.0)
        return accel[..., None] * self._forward()


@dataclass(frozen=True)
class Circle:
    """Level coordinated circle at constant speed.

    The body forward axis tracks the velocity, so the yaw rate is
    speed/radius (counterclockwise seen from above when ccw=True).
    """

    radius: float = 400.0
    speed: float = 10.0
    yaw0: float = 0.0
    ccw: bool = True

    moves = True

    def __post_init__(self):
        if self.radius <= 0.0 or self.speed <= 0.0:
            raise ValueError("radius and speed must be positive")

    @property
    def yaw_rate(self) -> float:
        w = self.speed / self.radius
        return w if self.ccw else -w

    def attitude(self, t):
        t = np.asarray(t, dtype=float)
        shape = np.shape(t)
        return np.zeros(shape), np.zeros(shape), self.yaw0 + self.yaw_rate * t

    def attitude_rates(self, t):
        shape = np.shape(t)
        return np.zeros(shape), np.zeros(shape), np.full(shape, self.yaw_rate)

    def velocity(self, t):
        _, _, yaw = self.attitude(t)
        return self.speed * np.stack(
            [-np.sin(yaw), np.cos(yaw), np.zeros_like(yaw)], axis=-1
        )

    def acceleration(self, t):
        _, _, yaw = self.attitude(t)
        w = self.yaw_rate
        return self.speed * w * np.stack(
            [-np.cos(yaw), -np.sin(yaw), np.zeros_like(yaw)], axis=-1
        )


@dataclass(frozen=True)
class Swaying:
    """Moored-vehicle angular motion: sinusoidal pitch/roll/yaw about a
    base heading with zero velocity."""

    pitch_amp: float = np.deg2rad(5.0)
    roll_amp: float = np.deg2rad(8.0)
    yaw_amp: float = np.deg2rad(6.0)
    pitch_period: float = 8.0
    roll_period: float = 6.0
    yaw_period: float = 10.0
    pitch_phase: float = 0.0
    roll_phase: float = 1.2
    yaw_phase: float = 2.1
    yaw0: float = 0.0

    moves = False

    def __post_init__(self):
        if min(self.pitch_period, self.roll_period, self.yaw_period) <= 0.0:
            raise ValueError("periods must be positive")

    def attitude(self, t):
        t = np.asarray(t, dtype=float)
        pitch = self.pitch_amp * np.sin(2.0 * np.pi * t / self.pitch_period + self.pitch_phase)
        roll = self.roll_amp * np.sin(2.0 * np.pi * t / self.roll_period + self.roll_phase)
        yaw = self.yaw0 + self.yaw_amp * np.sin(2.0 * np.pi * t / self.yaw_period + self.yaw_phase)
        return pitch, roll, yaw

    def attitude_rates(self, t):
        t = np.asarray(t, dtype=float)
        wp = 2.0 * np.pi / self.pitch_period
        wr = 2.0 * np.pi / self.roll_period
        wy = 2.0 * np.pi / self.yaw_period
        dpitch = self.pitch_amp * wp * np.cos(wp * t + self.pitch_phase)
        droll = self.roll_amp * wr * np.cos(wr * t + self.roll_phase)
        dyaw = self.yaw_amp * wy * np.cos(wy * t + self.yaw_phase)
        return dpitch, droll, dyaw

    def velocity(self, t):
        return np.zeros(np.shape(t) + (3,))

    def acceleration(self, t):
        return np.zeros(np.shape(t) + (3,))


@dataclass
class TruthSeries:
    """Sampled ground truth. All arrays share the leading axis."""

    time: np.ndarray          # (N,), seconds
    quat: np.ndarray          # (N, 4), body-to-nav
    vel: np.ndarray           # (N, 3), ENU m/s
    pos: np.ndarray           # (N, 3), [lat, lon, h]
    body_rate: np.ndarray     # (N, 3), gyro truth, rad/s
    specific_force: np.ndarray  # (N, 3), accelerometer truth, m/s^2
    earth: object = field(default_factory=lambda: earth_mod.WGS84)

    def __post_init__(self):
        n = len(self.time)
        for name in ("quat", "vel", "pos", "body_rate", "specific_force"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"TruthSeries.{name} length mismatch")

    @property
    def rate(self) -> float:
        return 1.0 / (self.time[1] - self.time[0])

    def euler(self) -> np.ndarray:
        """(N, 3) array of (pitch, roll, yaw)."""
        return euler_from_quat(self.quat)


def _angular_rate_nav(pitch, roll, yaw, dpitch, droll, dyaw):
    """Body-relative-to-nav angular rate in nav axes from Euler rates."""
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    # Axes the successive Euler rotations turn about, seen in nav axes.
    pitch_axis = np.stack([cy, sy, np.zeros_like(cy)], axis=-1)
    roll_axis = np.stack([-sy * cp, cy * cp, sp], axis=-1)
    yaw_axis = np.array([0.0, 0.0, 1.0])
    return (
        dpitch[..., None] * pitch_axis
        + droll[..., None] * roll_axis
        + dyaw[..., None] * yaw_axis
    )


def _integrate_positions(profile, time, origin, earth):
    """RK4 on d[lat, lon, h]/dt with the profile's analytic velocity."""
    n = len(time)
    pos = np.empty((n, 3))
    pos[0] = origin
    if not profile.moves:
        pos[:] = origin
        return pos
    h = time[1] - time[0]
    v0 = profile.velocity(time)
    vh = profile.velocity(time + 0.5 * h)
    for i in range(n - 1):
        p = pos[i]
        k1 = earth.geodetic_rates(v0[i], p)
        k2 = earth.geodetic_rates(vh[i], p + 0.5 * h * k1)
        k3 = earth.geodetic_rates(vh[i], p + 0.5 * h * k2)
        k4 = earth.geodetic_rates(v0[i + 1], p + h * k3)
        pos[i + 1] = p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return pos


def simulate_trajectory(
    profile,
    duration: float,
    rate: float = 100.0,
    origin=DEFAULT_ORIGIN,
    earth=earth_mod.WGS84,
) -> TruthSeries:
    """Sample a motion profile into a kinematically consistent truth set.

    Parameters
    ----------
    profile : Stationary | StraightAccelerate | Circle | Swaying
    duration : float
        Span in seconds; samples cover [0, duration] inclusive.
    rate : float
        Sample rate in Hz.
    origin : array
        Geodetic start position [lat, lon, h].
    earth : earth model
        WGS84 (default) or UniformEarth for closed-form checks.
    """
    if duration <= 0.0 or rate <= 0.0:
        raise ValueError("duration and rate must be positive")
    n = int(round(duration * rate))
    time = np.arange(n + 1) / rate

    pitch, roll, yaw = profile.attitude(time)
    dpitch, droll, dyaw = profile.attitude_rates(time)
    vel = profile.velocity(time)
    acc = profile.acceleration(time)
    pos = _integrate_positions(profile, time, np.asarray(origin, dtype=float), earth)

    quat = quat_from_euler(pitch, roll, yaw)
    cbn = dcm_from_quat(quat)

    w_nb_n = _angular_rate_nav(pitch, roll, yaw, dpitch, droll, dyaw)
    w_ie = earth.earth_rate(pos)
    w_en = earth.transport_rate(vel, pos)
    g = earth.gravity(pos)

    # Back-solve the sensed quantities from the kinematic equations.
    body_rate = np.einsum("nji,nj->ni", cbn, w_nb_n + w_ie + w_en)
    accel_nav = acc + np.cross(2.0 * w_ie + w_en, vel) - g
    specific_force = np.einsum("nji,nj->ni", cbn, accel_nav)

    return TruthSeries(
        time=time,
        quat=quat,
        vel=vel,
        pos=pos,
        body_rate=body_rate,
        specific_force=specific_force,
        earth=earth,
    )

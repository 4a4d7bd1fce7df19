"""Vector-observation construction for optimization-based alignment.

The constant initial attitude C (body frame at start -> nav frame at
start) satisfies C @ alpha = beta for pairs of integrated specific-force
observations. Two frozen-frame attitude chains are integrated from the
raw streams:

    Cb0(t) = C_{b(t)}^{b(0)}:  dCb0/dt = Cb0 @ skew(w_ib^b)   (gyros)
    Cn0(t) = C_{n(t)}^{n(0)}:  dCn0/dt = Cn0 @ skew(w_in^n)   (aiding)

Per update interval [t_k, t_{k+1}] (one GNSS spacing) the integrator
caches sub-integrals evaluated with two-sample trapezoids and a
rotation/coning correction across the IMU sub-samples:

    da_k = int C_{b(t)}^{b(tk)} f^b dt
    dr_k = int C_{n(t)}^{n(tk)} (w_ie^n x v^n) dt
    dg_k = int C_{n(t)}^{n(tk)} g^n dt

projected into the frozen frames as a_k = Cb0(t_k) @ da_k and
s_k = Cn0(t_k) @ (dr_k - dg_k). A pair over [t_m, t_M] is then

    alpha = sum_{k=m}^{M-1} a_k
    beta  = Cn0(t_M) v(t_M) - Cn0(t_m) v(t_m) + sum_{k=m}^{M-1} s_k.

The w_ie x v integrand is exactly what remains of the Coriolis and
transport terms once the frame rotation of the velocity derivative is
moved into the boundary terms by integration by parts; the boundary
velocities make the pair computable from GNSS fixes alone.

Pairs can be re-anchored by rotating both sides with the chain values
at the window start ("shifted", target attitude at t_m) or at the
current time ("dynamic", target attitude at t_M). Per-interval sums are
accumulated with compensated summation, so windowed pairs are additive
to round-off and a window starting at 0 reproduces the full pair.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import earth as earth_mod
from .attitude import (
    dcm_from_quat,
    quat_from_rotvec,
    quat_identity,
    quat_multiply,
    quat_normalize,
    quat_rotate,
)
from .errors import DiscontinuityError, WindowError
from .sensors import GnssData, ImuData, interpolate_gnss

__all__ = [
    "ChainState",
    "EpochInput",
    "ObservationPair",
    "epochs_from_streams",
    "write_pairs_csv",
]

PAIR_KINDS = (
    "acceleration",
    "velocity-full",
    "velocity-partial",
    "velocity-shifted",
    "dynamic",
)


@dataclass
class EpochInput:
    """Raw data covering one update interval [t0, t1].

    IMU arrays hold the samples at both interval ends inclusive, so an
    interval spanning r sensor periods carries r + 1 rows. Velocity and
    position are the aiding values at the interval boundaries.
    """

    index: int
    t0: float
    t1: float
    time: np.ndarray      # (r+1,)
    gyro: np.ndarray      # (r+1, 3)
    accel: np.ndarray     # (r+1, 3)
    v0: np.ndarray        # (3,)
    v1: np.ndarray        # (3,)
    pos0: np.ndarray      # (3,)
    pos1: np.ndarray      # (3,)

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise ValueError("epoch must span positive time")
        if len(self.time) < 2:
            raise ValueError("epoch needs at least two IMU samples")
        if abs(self.time[0] - self.t0) > 1e-9 or abs(self.time[-1] - self.t1) > 1e-9:
            raise ValueError("IMU samples must cover the epoch ends")
        if np.any(np.diff(self.time) <= 0.0):
            raise ValueError("IMU sample times must increase")


@dataclass(frozen=True)
class ObservationPair:
    """One vector observation: target_dcm @ alpha = beta.

    kind says which frame the target attitude lives in:
    velocity-full / velocity-partial -> attitude at the chain start,
    velocity-shifted -> attitude at the window start t_m,
    dynamic -> attitude at the current time t_M.
    """

    alpha: np.ndarray
    beta: np.ndarray
    kind: str
    start: int
    stop: int
    t_start: float
    t_stop: float

    def __post_init__(self):
        if self.kind not in PAIR_KINDS:
            raise ValueError(f"unknown pair kind {self.kind!r}")
        if not 0 <= self.start < self.stop:
            raise ValueError("pair window must satisfy 0 <= start < stop")


def _fsum_rows(rows, lo, hi) -> np.ndarray:
    """Correctly rounded per-component sum of rows[lo:hi]."""
    return np.array(
        [math.fsum(r[j] for r in rows[lo:hi]) for j in range(3)]
    )


@dataclass(frozen=True)
class _Boundary:
    k: int
    t: float
    cb0: np.ndarray
    cn0: np.ndarray
    v: np.ndarray


class ChainState:
    """Sequential integrator of the frozen-frame chains and the cached
    per-interval sub-integrals.

    retention bounds how many past interval boundaries stay addressable
    for windowed pairs (None keeps all). Pair builders are read-only.
    """

    def __init__(self, earth=earth_mod.WGS84, retention: int | None = None):
        if retention is not None and retention < 1:
            raise WindowError("retention must be at least 1 interval")
        self.earth = earth
        self.k = 0
        self.time = None
        self.quat_b0 = quat_identity()
        self.quat_n0 = quat_identity()
        self._a: list[np.ndarray] = []
        self._s: list[np.ndarray] = []
        self._v_first = None
        self._t_first = None
        maxlen = None if retention is None else retention + 1
        self._boundaries: deque[_Boundary] = deque(maxlen=maxlen)
        self._prev_dtheta_b = np.zeros(3)
        self._prev_dtheta_n = np.zeros(3)

    @property
    def dcm_b0(self) -> np.ndarray:
        return dcm_from_quat(self.quat_b0)

    @property
    def dcm_n0(self) -> np.ndarray:
        return dcm_from_quat(self.quat_n0)

    def advance(self, epoch: EpochInput) -> None:
        """Integrate one update interval and cache its contributions."""
        if self.time is None:
            self.time = float(epoch.t0)
            self._t_first = self.time
            self._v_first = np.asarray(epoch.v0, dtype=float).copy()
            self._boundaries.append(
                _Boundary(0, self.time, np.eye(3), np.eye(3), self._v_first.copy())
            )
        elif abs(epoch.t0 - self.time) > 1e-9:
            raise DiscontinuityError(
                f"epoch starts at {epoch.t0} but chains are at {self.time}"
            )

        h = np.diff(epoch.time)[:, None]
        dth_b = 0.5 * (epoch.gyro[:-1] + epoch.gyro[1:]) * h
        dv_b = 0.5 * (epoch.accel[:-1] + epoch.accel[1:]) * h

        # Aiding quantities at the IMU sub-times, linear in the interval.
        frac = ((epoch.time - epoch.t0) / (epoch.t1 - epoch.t0))[:, None]
        v_sub = epoch.v0 + frac * (epoch.v1 - epoch.v0)
        pos_sub = epoch.pos0 + frac * (epoch.pos1 - epoch.pos0)
        w_ie = self.earth.earth_rate(pos_sub)
        w_in = w_ie + self.earth.transport_rate(v_sub, pos_sub)
        cor = np.cross(w_ie, v_sub)
        grav = self.earth.gravity(pos_sub)
        dth_n = 0.5 * (w_in[:-1] + w_in[1:]) * h
        dr_n = 0.5 * (cor[:-1] + cor[1:]) * h
        dg_n = 0.5 * (grav[:-1] + grav[1:]) * h

        q_b = quat_identity()
        q_n = quat_identity()
        da = np.zeros(3)
        dr = np.zeros(3)
        dg = np.zeros(3)
        prev_b = self._prev_dtheta_b
        prev_n = self._prev_dtheta_n
        for i in range(len(h)):
            da += quat_rotate(q_b, dv_b[i] + 0.5 * np.cross(dth_b[i], dv_b[i]))
            phi_b = dth_b[i] + np.cross(prev_b, dth_b[i]) / 12.0
            q_b = quat_multiply(q_b, quat_from_rotvec(phi_b))
            prev_b = dth_b[i]

            dr += quat_rotate(q_n, dr_n[i] + 0.5 * np.cross(dth_n[i], dr_n[i]))
            dg += quat_rotate(q_n, dg_n[i] + 0.5 * np.cross(dth_n[i], dg_n[i]))
            phi_n = dth_n[i] + np.cross(prev_n, dth_n[i]) / 12.0
            q_n = quat_multiply(q_n, quat_from_rotvec(phi_n))
            prev_n = dth_n[i]
        self._prev_dtheta_b = prev_b
        self._prev_dtheta_n = prev_n

        cb0_k = self.dcm_b0
        cn0_k = self.dcm_n0
        self._a.append(cb0_k @ da)
        self._s.append(cn0_k @ (dr - dg))

        self.quat_b0 = quat_normalize(quat_multiply(self.quat_b0, q_b))
        self.quat_n0 = quat_normalize(quat_multiply(self.quat_n0, q_n))
        self.k += 1
        self.time = float(epoch.t1)
        self._boundaries.append(
            _Boundary(
                self.k,
                self.time,
                self.dcm_b0,
                self.dcm_n0,
                np.asarray(epoch.v1, dtype=float).copy(),
            )
        )

    def _boundary(self, m: int) -> _Boundary:
        if not self._boundaries:
            raise WindowError("no intervals integrated yet")
        first = self._boundaries[0].k
        if m < first:
            raise WindowError(
                f"boundary {m} no longer retained (oldest is {first})"
            )
        if m > self.k:
            raise WindowError(f"boundary {m} is in the future (current is {self.k})")
        return self._boundaries[m - first]

    def _window_sums(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        if self.k == 0:
            raise WindowError("no intervals integrated yet")
        if not 0 <= m < self.k:
            raise WindowError(f"window start {m} not in [0, {self.k})")
        alpha = _fsum_rows(self._a, m, self.k)
        svec = _fsum_rows(self._s, m, self.k)
        return alpha, svec

    def build_full_pair(self) -> ObservationPair:
        """Pair over the whole history; target is the attitude at start."""
        alpha, svec = self._window_sums(0)
        cur = self._boundary(self.k)
        beta = cur.cn0 @ cur.v - self._v_first + svec
        return ObservationPair(
            alpha, beta, "velocity-full", 0, self.k, self._t_first, self.time
        )

    def build_partial_pair(self, m: int) -> ObservationPair:
        """Pair over [t_m, now]; target is still the attitude at start."""
        alpha, svec = self._window_sums(m)
        bm = self._boundary(m)
        cur = self._boundary(self.k)
        beta = cur.cn0 @ cur.v - bm.cn0 @ bm.v + svec
        return ObservationPair(
            alpha, beta, "velocity-partial", m, self.k, bm.t, self.time
        )

    def build_shifted_pair(self, m: int) -> ObservationPair:
        """Windowed pair re-anchored so the target is the attitude at t_m."""
        base = self.build_partial_pair(m)
        bm = self._boundary(m)
        return ObservationPair(
            bm.cb0.T @ base.alpha,
            bm.cn0.T @ base.beta,
            "velocity-shifted",
            m,
            self.k,
            base.t_start,
            base.t_stop,
        )

    def build_dynamic_pair(self, m: int) -> ObservationPair:
        """Windowed pair re-anchored so the target is the current attitude."""
        base = self.build_partial_pair(m)
        cur = self._boundary(self.k)
        return ObservationPair(
            cur.cb0.T @ base.alpha,
            cur.cn0.T @ base.beta,
            "dynamic",
            m,
            self.k,
            base.t_start,
            base.t_stop,
        )


def epochs_from_streams(imu: ImuData, gnss: GnssData, dt: float = 1.0):
    """Slice synchronized IMU/GNSS streams into update intervals.

    dt is the update-interval length in seconds and must be an integer
    number of IMU sample periods; the aiding values at interval ends are
    linearly interpolated from the GNSS stream (exact when dt matches the
    GNSS spacing).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    imu_dt = imu.time[1] - imu.time[0]
    r = dt / imu_dt
    if abs(r - round(r)) > 1e-6 or r < 1.0 - 1e-9:
        raise ValueError("dt must be an integer multiple of the IMU period")
    r = int(round(r))
    if abs(imu.time[0] - gnss.time[0]) > 1e-9:
        raise DiscontinuityError("IMU and GNSS streams must start together")
    t_end = min(imu.time[-1], gnss.time[-1])
    n_epochs = int(np.floor((t_end - imu.time[0]) / dt + 1e-9))
    epochs = []
    for k in range(n_epochs):
        lo, hi = k * r, (k + 1) * r
        t0, t1 = imu.time[lo], imu.time[hi]
        (v0, p0) = interpolate_gnss(gnss, t0)
        (v1, p1) = interpolate_gnss(gnss, t1)
        epochs.append(
            EpochInput(
                index=k,
                t0=float(t0),
                t1=float(t1),
                time=imu.time[lo : hi + 1],
                gyro=imu.gyro[lo : hi + 1],
                accel=imu.accel[lo : hi + 1],
                v0=v0,
                v1=v1,
                pos0=p0,
                pos1=p1,
            )
        )
    return epochs


def write_pairs_csv(pairs, path) -> None:
    """Debug dump of observation pairs."""
    with open(path, "w", newline="") as fh:
        fh.write("t_start,t_stop,kind,ax,ay,az,bx,by,bz\n")
        for p in pairs:
            nums = [*p.alpha, *p.beta]
            fh.write(
                f"{p.t_start:.17g},{p.t_stop:.17g},{p.kind},"
                + ",".join(format(x, ".17g") for x in nums)
                + "\n"
            )

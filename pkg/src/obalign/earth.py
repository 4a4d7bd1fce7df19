"""Earth models: WGS-84 ellipsoid plus a uniform flat model for tests.

Positions are arrays [lat, lon, h] (radians, radians, meters above the
ellipsoid). Velocities are East-North-Up, m/s. Gravity points along -Up.
All methods broadcast over leading axes: (..., 3) in, (..., 3) out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PolarSingularityError

__all__ = [
    "EARTH_RATE",
    "UniformEarth",
    "WGS84",
    "Wgs84Earth",
    "earth_rate_n",
    "gravity_n",
    "principal_radii",
    "transport_rate_n",
]

EARTH_RATE = 7.292115e-5  # rad/s

_A = 6378137.0
_F = 1.0 / 298.257223563
_E2 = _F * (2.0 - _F)
# Somigliana normal-gravity constants plus the mass term entering the
# free-air height correction.
_GE = 9.7803253359
_K_SOMIGLIANA = 0.00193185265241
_M_GRAV = 0.00344978650684

_MAX_TRANSPORT_LAT = np.deg2rad(89.9)


def _check_position(pos) -> np.ndarray:
    pos = np.asarray(pos, dtype=float)
    if pos.shape[-1] != 3:
        raise ValueError("position must be [lat, lon, h]")
    if np.any(np.abs(pos[..., 0]) > np.pi / 2.0):
        raise ValueError("latitude out of [-pi/2, pi/2]")
    return pos


class Wgs84Earth:
    """Rotating WGS-84 ellipsoid with Somigliana normal gravity."""

    rate = EARTH_RATE
    semimajor = _A
    flattening = _F

    def principal_radii(self, lat):
        """(meridian radius R_M, prime-vertical radius R_N) at latitude."""
        s2 = np.sin(lat) ** 2
        den = 1.0 - _E2 * s2
        rn = _A / np.sqrt(den)
        rm = _A * (1.0 - _E2) / den**1.5
        return rm, rn

    def gravity_magnitude(self, lat, h):
        s2 = np.sin(lat) ** 2
        g0 = _GE * (1.0 + _K_SOMIGLIANA * s2) / np.sqrt(1.0 - _E2 * s2)
        hterm = (
            1.0
            - 2.0 * (1.0 + _F + _M_GRAV - 2.0 * _F * s2) * h / _A
            + 3.0 * h * h / (_A * _A)
        )
        return g0 * hterm

    def gravity(self, pos) -> np.ndarray:
        pos = _check_position(pos)
        mag = self.gravity_magnitude(pos[..., 0], pos[..., 2])
        zero = np.zeros_like(mag)
        return np.stack([zero, zero, -mag], axis=-1)

    def earth_rate(self, pos) -> np.ndarray:
        pos = _check_position(pos)
        lat = pos[..., 0]
        zero = np.zeros_like(lat)
        return np.stack([zero, self.rate * np.cos(lat), self.rate * np.sin(lat)], axis=-1)

    def transport_rate(self, vel, pos) -> np.ndarray:
        """Rotation rate of the local-level frame due to translation."""
        pos = _check_position(pos)
        vel = np.asarray(vel, dtype=float)
        lat, h = pos[..., 0], pos[..., 2]
        if np.any(np.abs(lat) > _MAX_TRANSPORT_LAT):
            raise PolarSingularityError(
                "transport rate undefined above 89.9 deg latitude"
            )
        rm, rn = self.principal_radii(lat)
        return np.stack(
            [
                -vel[..., 1] / (rm + h),
                vel[..., 0] / (rn + h),
                vel[..., 0] * np.tan(lat) / (rn + h),
            ],
            axis=-1,
        )

    def geodetic_rates(self, vel, pos) -> np.ndarray:
        """d/dt [lat, lon, h] for ENU velocity at a position."""
        pos = _check_position(pos)
        vel = np.asarray(vel, dtype=float)
        lat, h = pos[..., 0], pos[..., 2]
        rm, rn = self.principal_radii(lat)
        return np.stack(
            [
                vel[..., 1] / (rm + h),
                vel[..., 0] / ((rn + h) * np.cos(lat)),
                vel[..., 2],
            ],
            axis=-1,
        )


@dataclass(frozen=True)
class UniformEarth:
    """Non-rotating flat model: constant gravity, zero frame rates.

    Useful for closed-form checks where earth rotation and transport
    terms would otherwise obscure the quantity under test.
    """

    gravity_magnitude_value: float = 9.80665
    rate: float = 0.0

    def principal_radii(self, lat):
        big = np.full_like(np.asarray(lat, dtype=float), np.inf)
        return big, big

    def gravity_magnitude(self, lat, h):
        return np.full_like(np.asarray(lat, dtype=float), self.gravity_magnitude_value)

    def gravity(self, pos) -> np.ndarray:
        pos = np.asarray(pos, dtype=float)
        mag = np.full(pos.shape[:-1], self.gravity_magnitude_value)
        zero = np.zeros_like(mag)
        return np.stack([zero, zero, -mag], axis=-1)

    def earth_rate(self, pos) -> np.ndarray:
        pos = np.asarray(pos, dtype=float)
        lat = pos[..., 0]
        zero = np.zeros_like(lat)
        return np.stack([zero, self.rate * np.cos(lat), self.rate * np.sin(lat)], axis=-1)

    def transport_rate(self, vel, pos) -> np.ndarray:
        return np.zeros(np.asarray(pos, dtype=float).shape)

    def geodetic_rates(self, vel, pos) -> np.ndarray:
        return np.zeros(np.asarray(pos, dtype=float).shape)


WGS84 = Wgs84Earth()


def gravity_n(pos) -> np.ndarray:
    """ENU gravity vector at a geodetic position (WGS-84)."""
    return WGS84.gravity(pos)


def earth_rate_n(pos) -> np.ndarray:
    """Earth rotation rate in ENU coordinates (WGS-84)."""
    return WGS84.earth_rate(pos)


def transport_rate_n(vel, pos) -> np.ndarray:
    """Local-level frame rotation rate due to translation (WGS-84)."""
    return WGS84.transport_rate(vel, pos)


def principal_radii(lat):
    """(R_M, R_N) of the WGS-84 ellipsoid at a latitude."""
    return WGS84.principal_radii(lat)

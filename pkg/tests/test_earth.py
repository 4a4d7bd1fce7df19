import numpy as np
import pytest

from obalign.earth import (
    EARTH_RATE,
    UniformEarth,
    WGS84,
    earth_rate_n,
    gravity_n,
    principal_radii,
    transport_rate_n,
)
from obalign.errors import PolarSingularityError

from oracles import meridian_radius, prime_vertical_radius, somigliana_gravity


class TestGravity:
    def test_equator_sea_level(self):
        g = WGS84.gravity_magnitude(0.0, 0.0)
        assert g == pytest.approx(9.7803, abs=1e-3)
        assert g == pytest.approx(somigliana_gravity(0.0, 0.0), abs=1e-12)

    def test_latitude_symmetry(self):
        lat = np.deg2rad(37.0)
        assert WGS84.gravity_magnitude(lat, 50.0) == pytest.approx(
            WGS84.gravity_magnitude(-lat, 50.0), abs=0
        )

    def test_free_air_decrease(self):
        lat = np.deg2rad(45.0)
        assert WGS84.gravity_magnitude(lat, 1000.0) < WGS84.gravity_magnitude(lat, 0.0)

    def test_vector_points_down(self):
        g = gravity_n([np.deg2rad(30.0), 1.0, 100.0])
        assert g[0] == 0.0 and g[1] == 0.0 and g[2] < 0.0

    def test_matches_oracle_over_grid(self):
        for lat in np.deg2rad([-80.0, -30.0, 0.0, 15.0, 60.0]):
            for h in (0.0, 500.0, 5000.0):
                assert WGS84.gravity_magnitude(lat, h) == pytest.approx(
                    somigliana_gravity(lat, h), rel=1e-12
                )


class TestRates:
    def test_earth_rate_at_pole(self):
        w = earth_rate_n([np.pi / 2.0, 0.0, 0.0])
        np.testing.assert_allclose(w, [0.0, 0.0, EARTH_RATE], atol=1e-20)

    def test_transport_zero_velocity(self):
        w = transport_rate_n([0.0, 0.0, 0.0], [0.5, 0.2, 100.0])
        np.testing.assert_allclose(w, np.zeros(3), atol=0)

    def test_transport_eastward_at_equator(self):
        h = 0.0
        w = transport_rate_n([10.0, 0.0, 0.0], [0.0, 0.0, h])
        rn = prime_vertical_radius(0.0)
        np.testing.assert_allclose(w, [0.0, 10.0 / (rn + h), 0.0], atol=1e-18)

    def test_transport_polar_guard(self):
        with pytest.raises(PolarSingularityError):
            transport_rate_n([1.0, 0.0, 0.0], [np.deg2rad(89.95), 0.0, 0.0])

    def test_radii_match_oracle(self):
        for lat in np.deg2rad([0.0, 30.0, 45.0, 60.0, 89.0]):
            rm, rn = principal_radii(lat)
            assert rm == pytest.approx(meridian_radius(lat), rel=1e-12)
            assert rn == pytest.approx(prime_vertical_radius(lat), rel=1e-12)


class TestValidation:
    def test_latitude_bound(self):
        with pytest.raises(ValueError):
            WGS84.gravity([2.0, 0.0, 0.0])

    def test_shape_check(self):
        with pytest.raises(ValueError):
            WGS84.gravity([0.0, 0.0])


class TestUniformEarth:
    def test_constant_gravity(self):
        e = UniformEarth()
        np.testing.assert_allclose(
            e.gravity([0.3, 0.1, 50.0]), [0.0, 0.0, -9.80665], atol=0
        )

    def test_zero_rates(self):
        e = UniformEarth()
        np.testing.assert_allclose(e.earth_rate([0.3, 0.1, 0.0]), np.zeros(3), atol=0)
        np.testing.assert_allclose(
            e.transport_rate([5.0, 1.0, 0.0], [0.3, 0.1, 0.0]), np.zeros(3), atol=0
        )

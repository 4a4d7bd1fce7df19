import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obalign.attitude import (
    GrpParams,
    dcm_from_euler,
    dcm_from_quat,
    error_quat_from_grp,
    euler_from_dcm,
    euler_from_quat,
    grp_from_error_quat,
    integrate_attitude,
    quat_angle_between,
    quat_average,
    quat_conj,
    quat_from_dcm,
    quat_from_euler,
    quat_from_rotvec,
    quat_identity,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    rot_z,
    rotvec_from_quat,
    wrap_angle,
)
from obalign.errors import AmbiguousAverageError, GrpSingularityError

from oracles import quat_average_eig, wahba_svd  # noqa: F401 (wahba used elsewhere)

unit_quats = st.builds(
    lambda v: quat_normalize(np.asarray(v)),
    st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4).filter(
        lambda v: sum(x * x for x in v) > 1e-2
    ),
)


def random_unit_quats(rng, n):
    q = rng.standard_normal((n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


class TestQuatMultiply:
    def test_identity_left(self, rng):
        q = random_unit_quats(rng, 1)[0]
        np.testing.assert_allclose(quat_multiply(quat_identity(), q), q, atol=1e-15)

    def test_inverse_gives_identity(self, rng):
        q = random_unit_quats(rng, 1)[0]
        np.testing.assert_allclose(
            quat_multiply(q, quat_conj(q)), quat_identity(), atol=1e-15
        )

    def test_two_z_quarter_turns(self):
        qz90 = quat_from_rotvec([0.0, 0.0, np.pi / 2.0])
        q = quat_multiply(qz90, qz90)
        np.testing.assert_allclose(
            dcm_from_quat(q), rot_z(np.pi / 2.0) @ rot_z(np.pi / 2.0), atol=1e-14
        )

    @given(unit_quats, unit_quats)
    @settings(max_examples=50, deadline=None)
    def test_composition_matches_dcm_product(self, q1, q2):
        left = dcm_from_quat(quat_multiply(q1, q2))
        right = dcm_from_quat(q1) @ dcm_from_quat(q2)
        np.testing.assert_allclose(left, right, atol=1e-12)

    def test_rotate_matches_dcm(self, rng):
        q = random_unit_quats(rng, 1)[0]
        v = rng.standard_normal(3)
        np.testing.assert_allclose(
            quat_rotate(q, v), dcm_from_quat(q) @ v, atol=1e-12
        )


class TestDcm:
    def test_identity(self):
        np.testing.assert_allclose(dcm_from_quat(quat_identity()), np.eye(3), atol=0)

    def test_z_quarter_turn_closed_form(self):
        q = quat_from_rotvec([0.0, 0.0, np.pi / 2.0])
        np.testing.assert_allclose(dcm_from_quat(q), rot_z(np.pi / 2.0), atol=1e-15)

    def test_round_trip_1000(self, rng):
        # component-wise, up to the global sign
        qs = random_unit_quats(rng, 1000)
        worst = 0.0
        for q in qs:
            r = quat_from_dcm(dcm_from_quat(q))
            d = min(np.max(np.abs(r - q)), np.max(np.abs(r + q)))
            worst = max(worst, d)
        assert worst < 1e-12


class TestIntegrateAttitude:
    def test_zero_increments(self, rng):
        q = random_unit_quats(rng, 1)[0]
        out = integrate_attitude(q, np.zeros((10, 3)))
        assert quat_angle_between(out, q) < 1e-15

    def test_constant_z_rate_closed_form(self):
        w, T, n = 0.3, 10.0, 1000
        incs = np.tile([0.0, 0.0, w * T / n], (n, 1))
        out = integrate_attitude(quat_identity(), incs)
        expect = quat_from_rotvec([0.0, 0.0, w * T])
        assert quat_angle_between(out, expect) < 1e-9

    def test_coning_against_fine_steps(self):
        # Classical coning: two-axis sinusoids at 2 Hz sampled at 100 Hz,
        # checked against the same motion integrated 100x finer.
        from oracles import integrate_fine

        amp, freq, rate, T = 0.01, 2.0, 100.0, 2.0

        def body_rate(t):
            w = 2.0 * np.pi * freq
            return np.array(
                [amp * w * np.cos(w * t), -amp * w * np.sin(w * t), 0.0]
            )

        n = int(T * rate)
        ts = np.arange(n + 1) / rate
        incs = []
        for a, b in zip(ts[:-1], ts[1:]):
            fine = np.linspace(a, b, 101)
            mids = 0.5 * (fine[:-1] + fine[1:])
            incs.append(
                np.sum([body_rate(t) for t in mids], axis=0) * (b - a) / 100.0
            )
        coarse = integrate_attitude(quat_identity(), np.asarray(incs))
        fine = integrate_fine(quat_identity(), body_rate, 0.0, T, 100 * n)
        assert quat_angle_between(coarse, fine) < 1e-8


class TestGrp:
    def test_identity_error_quat(self):
        np.testing.assert_allclose(
            grp_from_error_quat(quat_identity()), np.zeros(3), atol=0
        )

    def test_worked_value(self):
        dq = np.array([0.1, 0.0, 0.0, np.sqrt(0.99)])
        dp = grp_from_error_quat(dq)
        np.testing.assert_allclose(
            dp, [0.4 / (1.0 + np.sqrt(0.99)), 0.0, 0.0], atol=1e-15
        )
        np.testing.assert_allclose(error_quat_from_grp(dp), dq, atol=1e-15)

    def test_singularity_guard(self):
        # negated near-identity error: a + w ~ 0 for a = 1
        dq = -quat_from_rotvec([1e-9, 0.0, 0.0])
        with pytest.raises(GrpSingularityError):
            grp_from_error_quat(dq)

    def test_zero_grp(self):
        np.testing.assert_allclose(
            error_quat_from_grp(np.zeros(3)), quat_identity(), atol=0
        )

    def test_unit_norm_for_bounded_grp(self, rng):
        for _ in range(100):
            dp = rng.standard_normal(3)
            dp /= max(1.0, np.linalg.norm(dp))
            assert abs(np.linalg.norm(error_quat_from_grp(dp)) - 1.0) < 1e-12

    def test_round_trip_1000(self, rng):
        for _ in range(1000):
            v = rng.standard_normal(3) * 0.4
            dq = quat_from_rotvec(v)
            out = error_quat_from_grp(grp_from_error_quat(dq))
            assert np.max(np.abs(out - dq)) < 1e-12

    @given(
        st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3),
        st.floats(0.1, 1.0),
        st.floats(0.5, 8.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_round_trip_property(self, rv, a, f):
        params = GrpParams(a=a, f=f)
        dq = quat_from_rotvec(np.asarray(rv))
        dp = grp_from_error_quat(dq, params)
        assert np.max(np.abs(error_quat_from_grp(dp, params) - dq)) < 1e-10


class TestQuatAverage:
    def test_copies(self, rng):
        q = random_unit_quats(rng, 1)[0]
        out = quat_average(np.tile(q, (5, 1)))
        assert quat_angle_between(out, q) < 1e-12

    def test_sign_insensitive(self, rng):
        q = random_unit_quats(rng, 1)[0]
        out = quat_average(np.stack([q, -q]))
        assert quat_angle_between(out, q) < 1e-12

    def test_matches_dense_eig(self, rng):
        center = random_unit_quats(rng, 1)[0]
        cluster = [
            quat_multiply(center, quat_from_rotvec(rng.standard_normal(3) * 0.05))
            for _ in range(12)
        ]
        weights = rng.uniform(0.5, 2.0, 12)
        ours = quat_average(cluster, weights)
        ref = quat_average_eig(cluster, weights)
        assert quat_angle_between(ours, ref) < 1e-10

    def test_ambiguous_rejected(self):
        qa = quat_identity()
        qb = quat_from_rotvec([0.0, 0.0, np.pi])
        with pytest.raises(AmbiguousAverageError):
            quat_average(np.stack([qa, qb]))


class TestEuler:
    def test_round_trip(self, rng):
        for _ in range(200):
            p = rng.uniform(-1.2, 1.2)
            r = rng.uniform(-np.pi + 0.1, np.pi - 0.1)
            y = rng.uniform(-np.pi + 0.1, np.pi - 0.1)
            out = euler_from_quat(quat_from_euler(p, r, y))
            np.testing.assert_allclose(out, [p, r, y], atol=1e-10)

    def test_dcm_euler_consistency(self, rng):
        p, r, y = 0.3, -0.5, 1.7
        np.testing.assert_allclose(
            dcm_from_euler(p, r, y),
            dcm_from_quat(quat_from_euler(p, r, y)),
            atol=1e-14,
        )
        np.testing.assert_allclose(
            euler_from_dcm(dcm_from_euler(p, r, y)), [p, r, y], atol=1e-12
        )

    def test_wrap(self):
        assert wrap_angle(np.pi) == pytest.approx(np.pi)
        assert wrap_angle(-np.pi) == pytest.approx(np.pi)
        assert wrap_angle(3.0 * np.pi / 2.0) == pytest.approx(-np.pi / 2.0)
        np.testing.assert_allclose(
            wrap_angle(np.array([0.1, 2.0 * np.pi + 0.1])), [0.1, 0.1], atol=1e-12
        )


class TestRotvec:
    @given(st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3))
    @settings(max_examples=100, deadline=None)
    def test_round_trip(self, v):
        v = np.asarray(v)
        ang = np.linalg.norm(v)
        if ang >= np.pi:
            return
        out = rotvec_from_quat(quat_from_rotvec(v))
        np.testing.assert_allclose(out, v, atol=1e-9)

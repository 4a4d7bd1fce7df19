"""Attitude algebra: quaternions, DCMs, rotation vectors, generalized
Rodrigues parameters and Euler angles.

Conventions fixed here and relied on everywhere else in the package:

- Quaternions are length-4 float arrays ``[x, y, z, w]`` (vector part
  first, scalar last), unit norm. ``q`` and ``-q`` encode the same
  rotation; functions may return either sign unless stated otherwise.
- ``dcm_from_quat(q)`` is the matrix that maps body coordinates into
  navigation coordinates, ``v_nav = C @ v_body``.
- ``quat_multiply`` composes so that
  ``dcm_from_quat(quat_multiply(a, b)) = dcm_from_quat(a) @ dcm_from_quat(b)``.
- The navigation frame is East-North-Up. Euler angles are reported as
  (pitch, roll, yaw) with ``C = Rz(yaw) @ Rx(pitch) @ Ry(roll)``: body
  axes are right-forward-up, yaw rotates about the Up axis
  (counterclockwise positive seen from above), pitch about the body
  right axis (nose-up positive), roll about the body forward axis.
  Pitch lies in [-pi/2, pi/2], roll and yaw in (-pi, pi].

Most functions broadcast over leading axes, so stacks of quaternions or
vectors with shape (..., 4) / (..., 3) are handled in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousAverageError, GrpSingularityError, InvalidRotationError

__all__ = [
    "GrpParams",
    "dcm_from_euler",
    "dcm_from_quat",
    "error_quat_from_grp",
    "euler_from_dcm",
    "euler_from_quat",
    "grp_from_error_quat",
    "integrate_attitude",
    "quat_angle_between",
    "quat_average",
    "quat_conj",
    "quat_from_dcm",
    "quat_from_euler",
    "quat_from_rotvec",
    "quat_identity",
    "quat_multiply",
    "quat_normalize",
    "quat_rotate",
    "rot_x",
    "rot_y",
    "rot_z",
    "rotvec_from_quat",
    "skew",
    "wrap_angle",
]


def quat_identity() -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 1.0])


def quat_normalize(q) -> np.ndarray:
    """Return q scaled to unit norm. Raises on (near-)zero input."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(n < 1e-12):
        raise InvalidRotationError("cannot normalize a zero quaternion")
    return q / n


def quat_conj(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.concatenate([-q[..., :3], q[..., 3:]], axis=-1)


def quat_multiply(q1, q2) -> np.ndarray:
    """Compose two rotations; DCM of the result is DCM(q1) @ DCM(q2)."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    x1, y1, z1, w1 = np.moveaxis(q1, -1, 0)
    x2, y2, z2, w2 = np.moveaxis(q2, -1, 0)
    return np.stack(
        [
            w1 * x2 + w2 * x1 + y1 * z2 - z1 * y2,
            w1 * y2 + w2 * y1 + z1 * x2 - x1 * z2,
            w1 * z2 + w2 * z1 + x1 * y2 - y1 * x2,
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        ],
        axis=-1,
    )


def quat_rotate(q, v) -> np.ndarray:
    """Apply the rotation: returns DCM(q) @ v without forming the matrix."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qv, w = q[..., :3], q[..., 3:]
    t = 2.0 * np.cross(qv, v)
    return v + w * t + np.cross(qv, t)


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(a) @ b == cross(a, b)."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def dcm_from_quat(q) -> np.ndarray:
    q = quat_normalize(q)
    x, y, z, w = np.moveaxis(q, -1, 0)
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    row0 = np.stack([1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)], axis=-1)
    row1 = np.stack([2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)], axis=-1)
    row2 = np.stack([2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def quat_from_dcm(dcm) -> np.ndarray:
    """Inverse of dcm_from_quat, choosing the largest-pivot branch.

    The returned quaternion has nonnegative scalar part. Raises
    InvalidRotationError when the matrix is not a proper rotation
    (Frobenius orthonormality defect above 1e-6, or det <= 0).
    """
    c = np.asarray(dcm, dtype=float)
    if c.shape != (3, 3):
        raise InvalidRotationError("DCM must be 3x3")
    defect = np.linalg.norm(c.T @ c - np.eye(3))
    if defect > 1e-6:
        raise InvalidRotationError(f"orthonormality defect {defect:.3e} > 1e-6")
    if np.linalg.det(c) <= 0.0:
        raise InvalidRotationError("matrix is a reflection (det <= 0)")

    tr = c[0, 0] + c[1, 1] + c[2, 2]
    # Pivot on the largest of 4w^2-1, 4x^2-1, 4y^2-1, 4z^2-1.
    pivot = int(np.argmax([tr, c[0, 0], c[1, 1], c[2, 2]]))
    if pivot == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = np.array([
            (c[2, 1] - c[1, 2]) / s,
            (c[0, 2] - c[2, 0]) / s,
            (c[1, 0] - c[0, 1]) / s,
            0.25 * s,
        ])
    elif pivot == 1:
        s = 2.0 * np.sqrt(1.0 + c[0, 0] - c[1, 1] - c[2, 2])
        q = np.array([
            0.25 * s,
            (c[0, 1] + c[1, 0]) / s,
            (c[0, 2] + c[2, 0]) / s,
            (c[2, 1] - c[1, 2]) / s,
        ])
    elif pivot == 2:
        s = 2.0 * np.sqrt(1.0 - c[0, 0] + c[1, 1] - c[2, 2])
        q = np.array([
            (c[0, 1] + c[1, 0]) / s,
            0.25 * s,
            (c[1, 2] + c[2, 1]) / s,
            (c[0, 2] - c[2, 0]) / s,
        ])
    else:
        s = 2.0 * np.sqrt(1.0 - c[0, 0] - c[1, 1] + c[2, 2])
        q = np.array([
            (c[0, 2] + c[2, 0]) / s,
            (c[1, 2] + c[2, 1]) / s,
            0.25 * s,
            (c[1, 0] - c[0, 1]) / s,
        ])
    if q[3] < 0.0:
        q = -q
    return quat_normalize(q)


def quat_from_rotvec(phi) -> np.ndarray:
    """Quaternion of a rotation vector (axis times angle, radians)."""
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi, axis=-1, keepdims=True)
    # Series for sin(a/2)/a below 1e-10 rad; exact to double precision.
    small = angle < 1e-10
    safe = np.where(small, 1.0, angle)
    half_sinc = np.where(small, 0.5 - angle * angle / 48.0, np.sin(0.5 * safe) / safe)
    w = np.cos(0.5 * angle)
    return quat_normalize(np.concatenate([half_sinc * phi, w], axis=-1))


def rotvec_from_quat(q) -> np.ndarray:
    """Rotation vector of q, magnitude in [0, pi]."""
    q = quat_normalize(q)
    q = np.where(q[..., 3:] < 0.0, -q, q)
    s = np.linalg.norm(q[..., :3], axis=-1, keepdims=True)
    w = q[..., 3:]
    small = s < 1e-10
    safe = np.where(small, 1.0, s)
    scale = np.where(small, 2.0 / w, 2.0 * np.arctan2(safe, w) / safe)
    return scale * q[..., :3]


def integrate_attitude(q, increments) -> np.ndarray:
    """Propagate q through a sequence of body-frame rotation increments.

    Each row of `increments` is the integrated angular rate over one
    constant-length sub-interval, expressed in the moving frame. The
    update multiplies on the right (body-side kinematics) and applies a
    two-sample coning correction using the previous increment:

        phi_i = dtheta_i + cross(dtheta_{i-1}, dtheta_i) / 12

    which is exact for constant rates and compensates classical coning
    to high order at realistic sample rates.
    """
    q = quat_normalize(q)
    increments = np.atleast_2d(np.asarray(increments, dtype=float))
    prev = np.zeros(3)
    for dtheta in increments:
        phi = dtheta + np.cross(prev, dtheta) / 12.0
        q = quat_multiply(q, quat_from_rotvec(phi))
        prev = dtheta
    return quat_normalize(q)


@dataclass(frozen=True)
class GrpParams:
    """Generalized Rodrigues parameter map coefficients.

    With a=1, f=4 the parameter equals 4*tan(theta/4)*axis, which is the
    rotation vector to first order.
    """

    a: float = 1.0
    f: float = 4.0

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError("GrpParams.a must lie in [0, 1]")
        if self.f <= 0.0:
            raise ValueError("GrpParams.f must be positive")


def grp_from_error_quat(dq, params: GrpParams = GrpParams()) -> np.ndarray:
    """Map an error quaternion to its generalized Rodrigues parameters.

    dp = f * rho / (a + w). Raises GrpSingularityError when a + w is not
    safely positive (rotation too close to the parameterization's
    singular point).
    """
    dq = quat_normalize(dq)
    denom = params.a + dq[..., 3:]
    if np.any(denom <= 1e-12):
        raise GrpSingularityError(f"GRP map singular: min(a + w) = {denom.min():.3e}")
    return params.f * dq[..., :3] / denom


def error_quat_from_grp(dp, params: GrpParams = GrpParams()) -> np.ndarray:
    """Inverse of grp_from_error_quat; scalar part is always positive
    for a <= 1, so the round trip is exact away from the singularity."""
    dp = np.asarray(dp, dtype=float)
    a, f = params.a, params.f
    n2 = np.sum(dp * dp, axis=-1, keepdims=True)
    w = (-a * n2 + f * np.sqrt(f * f + (1.0 - a * a) * n2)) / (f * f + n2)
    rho = (a + w) / f * dp
    return quat_normalize(np.concatenate([rho, w], axis=-1))


def quat_average(quats, weights=None) -> np.ndarray:
    """Weighted chordal mean of unit quaternions.

    Maximizes sum_i w_i (q . q_i)^2, i.e. the dominant eigenvector of
    A = sum_i w_i q_i q_i^T. Sign-insensitive in the inputs; the result
    carries a nonnegative dot product with the first input. Raises
    AmbiguousAverageError when the dominant eigenvalue is not isolated.
    """
    quats = np.atleast_2d(np.asarray(quats, dtype=float))
    if quats.ndim != 2 or quats.shape[1] != 4 or quats.shape[0] == 0:
        raise ValueError("quats must be a nonempty (n, 4) array")
    if weights is None:
        weights = np.ones(quats.shape[0])
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (quats.shape[0],):
            raise ValueError("weights length must match quats")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
    total = float(np.sum(weights))
    if total <= 0.0:
        raise ValueError("weights must not all be zero")
    norms2 = np.sum(quats * quats, axis=1)
    a = (quats * (weights / norms2)[:, None]).T @ quats
    vals, vecs = np.linalg.eigh(a)
    if vals[-1] - vals[-2] <= 1e-12 * total:
        raise AmbiguousAverageError(
            f"average ambiguous: eigenvalue gap {vals[-1] - vals[-2]:.3e}"
        )
    q = vecs[:, -1]
    if float(q @ quats[0]) < 0.0:
        q = -q
    return quat_normalize(q)


def quat_angle_between(q1, q2) -> float:
    """Geodesic angle (radians) between two rotations, in [0, pi]."""
    d = abs(float(np.dot(quat_normalize(q1), quat_normalize(q2))))
    return 2.0 * np.arccos(min(1.0, d))


def rot_x(angle) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def dcm_from_euler(pitch, roll, yaw) -> np.ndarray:
    """Body-to-nav DCM from (pitch, roll, yaw), composed Rz Rx Ry."""
    return rot_z(yaw) @ rot_x(pitch) @ rot_y(roll)


def euler_from_dcm(dcm) -> np.ndarray:
    """Extract (pitch, roll, yaw) from a body-to-nav DCM."""
    c = np.asarray(dcm, dtype=float)
    pitch = np.arcsin(np.clip(c[..., 2, 1], -1.0, 1.0))
    yaw = np.arctan2(-c[..., 0, 1], c[..., 1, 1])
    roll = np.arctan2(-c[..., 2, 0], c[..., 2, 2])
    return np.stack([pitch, roll, yaw], axis=-1)


def quat_from_euler(pitch, roll, yaw) -> np.ndarray:
    """Quaternion of (pitch, roll, yaw); broadcasts over array inputs."""
    pitch, roll, yaw = np.broadcast_arrays(
        np.asarray(pitch, dtype=float),
        np.asarray(roll, dtype=float),
        np.asarray(yaw, dtype=float),
    )
    zero = np.zeros_like(yaw)
    qz = np.stack([zero, zero, np.sin(yaw / 2.0), np.cos(yaw / 2.0)], axis=-1)
    qx = np.stack([np.sin(pitch / 2.0), zero, zero, np.cos(pitch / 2.0)], axis=-1)
    qy = np.stack([zero, np.sin(roll / 2.0), zero, np.cos(roll / 2.0)], axis=-1)
    return quat_multiply(qz, quat_multiply(qx, qy))


def euler_from_quat(q) -> np.ndarray:
    """(pitch, roll, yaw) of a quaternion; broadcasts over (..., 4)."""
    q = quat_normalize(q)
    x, y, z, w = np.moveaxis(q, -1, 0)
    c21 = 2.0 * (y * z + w * x)
    c01 = 2.0 * (x * y - w * z)
    c11 = 1.0 - 2.0 * (x * x + z * z)
    c20 = 2.0 * (x * z - w * y)
    c22 = 1.0 - 2.0 * (x * x + y * y)
    pitch = np.arcsin(np.clip(c21, -1.0, 1.0))
    yaw = np.arctan2(-c01, c11)
    roll = np.arctan2(-c20, c22)
    return np.stack([pitch, roll, yaw], axis=-1)


def wrap_angle(x):
    """Wrap angle(s) to (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    wrapped = np.mod(x + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return wrapped if wrapped.ndim else float(wrapped)

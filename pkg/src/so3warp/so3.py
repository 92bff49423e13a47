"""Dependency-light 3x3 rotation kernels: skew maps, Rodrigues formula, quaternions.

Conventions used throughout the package:

* rotation matrices are plain ``(3, 3)`` float arrays, body-to-frame columns,
* quaternions are length-4 arrays ``[eta, ex, ey, ez]`` (scalar part first),
* axis-angle pairs are ``(angle_rad, unit_axis)`` with ``angle in [0, pi]``
  on output.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

ALG_TOL = 1e-12  # algebraic identities
ROT_TOL = 1e-9   # type-level orthonormality checks

_EYE3 = np.eye(3)
_E1 = np.array([1.0, 0.0, 0.0])


def hat(w: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of ``w``, so that ``hat(w) @ v == cross(w, v)``."""
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def vex(s: np.ndarray, tol: float = ROT_TOL) -> np.ndarray:
    """Inverse of :func:`hat`. Rejects input that is not skew within ``tol``."""
    if np.linalg.norm(s + s.T) >= tol:
        raise ValueError("vex: input matrix is not skew-symmetric")
    return np.array([s[2, 1], s[0, 2], s[1, 0]])


def pa(a: np.ndarray) -> np.ndarray:
    """Projection onto the skew-symmetric matrices: (a - a.T) / 2."""
    return 0.5 * (a - a.T)


def psi(a: np.ndarray) -> np.ndarray:
    """vex(pa(a)) for an arbitrary 3x3 matrix.

    Satisfies ``tr(a.T @ hat(u)) == 2 * psi(a) @ u`` for every ``u``.
    """
    return 0.5 * np.array([a[2, 1] - a[1, 2], a[0, 2] - a[2, 0], a[1, 0] - a[0, 1]])


def check_unit_axis(axis: np.ndarray, tol: float = ALG_TOL) -> None:
    if abs(np.linalg.norm(axis) - 1.0) >= tol:
        raise ValueError("axis must be a unit vector")


def rodrigues(angle: float, axis: np.ndarray) -> np.ndarray:
    """Rotation of ``angle`` radians about the unit vector ``axis``.

    I + sin(angle) [axis]_x + (1 - cos(angle)) [axis]_x^2
    """
    check_unit_axis(axis)
    k = hat(axis)
    return _EYE3 + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def check_unit_quat(q: np.ndarray, tol: float = ALG_TOL) -> None:
    if abs(q @ q - 1.0) >= tol:
        raise ValueError("quaternion is not unit norm")


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion: I + 2 eta [eps]_x + 2 [eps]_x^2."""
    check_unit_quat(q)
    eta = q[0]
    e = hat(q[1:])
    return _EYE3 + 2.0 * (e @ e) + 2.0 * eta * e


def quat_mul(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Quaternion product, renormalized to counter floating-point drift."""
    n1, e1 = q1[0], q1[1:]
    n2, e2 = q2[0], q2[1:]
    out = np.empty(4)
    out[0] = n1 * n2 - e1 @ e2
    out[1:] = n1 * e2 + n2 * e1 + np.cross(e1, e2)
    return out / np.linalg.norm(out)


def quat_conj(q: np.ndarray) -> np.ndarray:
    """Quaternion inverse (eta, -eps) for unit quaternions."""
    out = q.copy()
    out[1:] = -out[1:]
    return out


def rot_to_quat(r: np.ndarray) -> np.ndarray:
    """Unit quaternion of a rotation matrix, scalar part non-negative.

    Shepperd's method: branch on the largest of (1 + tr) and the diagonal
    entries to avoid cancellation.
    """
    t = np.trace(r)
    q = np.empty(4)
    if t > 0.0:
        s = np.sqrt(1.0 + t) * 2.0
        q[0] = 0.25 * s
        q[1] = (r[2, 1] - r[1, 2]) / s
        q[2] = (r[0, 2] - r[2, 0]) / s
        q[3] = (r[1, 0] - r[0, 1]) / s
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(1.0 + r[i, i] - r[j, j] - r[k, k]) * 2.0
        q[0] = (r[k, j] - r[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (r[j, i] + r[i, j]) / s
        q[1 + k] = (r[k, i] + r[i, k]) / s
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def _canonical_sign(v: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Flip sign so the first component above ``tol`` in magnitude is positive."""
    for x in v:
        if abs(x) > tol:
            return v if x > 0.0 else -v
    return v


def rot_to_axis_angle(r: np.ndarray) -> tuple[float, np.ndarray]:
    """Inverse of :func:`rodrigues` with ``angle in [0, pi]``.

    Near angle 0 the axis defaults to e1; near pi the axis is recovered from
    the rank-one symmetric part (R + I)/2 = u u^T using its largest diagonal
    entry, with the sign canonicalized (first nonzero component positive).
    """
    a = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    s = 0.5 * np.linalg.norm(a)          # |sin(angle)|
    c = 0.5 * (np.trace(r) - 1.0)        # cos(angle)
    angle = float(np.arctan2(s, c))
    if s > 1e-7 and angle < np.pi - 1e-3:
        return angle, a / (2.0 * s)
    if angle < 1e-7:
        return 0.0, _E1.copy()
    # angle at or near pi: B = (R + I)/2 is close to u u^T
    b = 0.5 * (r + _EYE3)
    i = int(np.argmax(np.diag(b)))
    axis = b[:, i] / np.sqrt(b[i, i])
    axis = axis / np.linalg.norm(axis)
    if s > 1e-12:
        # keep the orientation consistent with the antisymmetric part
        if axis @ a < 0.0:
            axis = -axis
        return angle, axis
    return angle, _canonical_sign(axis)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation via a normalized 4-dim Gaussian quaternion."""
    q = rng.normal(size=4)
    return quat_to_rot(q / np.linalg.norm(q))


def haar_rotations(n: int, rng: np.random.Generator) -> np.ndarray:
    """Batch of ``n`` Haar-distributed rotations, shape (n, 3, 3)."""
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return quats_to_rots(q)


def quats_to_rots(q: np.ndarray) -> np.ndarray:
    """Vectorized quaternion-to-rotation for an (n, 4) array of unit quaternions."""
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    r = np.empty((q.shape[0], 3, 3))
    r[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    r[:, 0, 1] = 2.0 * (x * y - w * z)
    r[:, 0, 2] = 2.0 * (x * z + w * y)
    r[:, 1, 0] = 2.0 * (x * y + w * z)
    r[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    r[:, 1, 2] = 2.0 * (y * z - w * x)
    r[:, 2, 0] = 2.0 * (x * z - w * y)
    r[:, 2, 1] = 2.0 * (y * z + w * x)
    r[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return r


def project_so3(m: np.ndarray, tol: float = 1e-14, max_iter: int = 100) -> np.ndarray:
    """Nearest rotation to ``m`` in the Frobenius sense.

    Polar-type iteration m <- (m + m^-T)/2, quadratically convergent for
    inputs with positive determinant.
    """
    if np.linalg.det(m) <= 0.0:
        raise ValueError("project_so3 requires det(m) > 0")
    x = np.asarray(m, dtype=float).copy()
    for _ in range(max_iter):
        x_next = 0.5 * (x + np.linalg.inv(x).T)
        if np.linalg.norm(x_next - x) < tol:
            x = x_next
            break
        x = x_next
    return x


def check_rotation(r: np.ndarray, tol: float = ROT_TOL) -> None:
    """Raise unless ``r`` is orthonormal within ``tol`` with positive determinant."""
    if np.linalg.norm(r.T @ r - _EYE3) >= tol:
        raise ValueError("matrix is not orthonormal")
    if np.linalg.det(r) <= 0.0:
        raise ValueError("matrix is not a proper rotation (det <= 0)")


def is_rotation(r: np.ndarray, tol: float = ROT_TOL) -> bool:
    return np.linalg.norm(r.T @ r - _EYE3) < tol and np.linalg.det(r) > 0.0

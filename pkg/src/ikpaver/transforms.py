"""Homogeneous 4x4 rigid transforms and revolute-joint exponentials."""
import numpy as np

ORTHO_TOL = 1e-9


def skew(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def rot_about(axis, theta: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    k = np.asarray(axis, dtype=float)
    kx = skew(k)
    return np.eye(3) + np.sin(theta) * kx + (1.0 - np.cos(theta)) * (kx @ kx)


def rot_x(theta):
    return rot_about((1.0, 0.0, 0.0), theta)


def rot_y(theta):
    return rot_about((0.0, 1.0, 0.0), theta)


def rot_z(theta):
    return rot_about((0.0, 0.0, 1.0), theta)


def make_transform(R=None, t=None) -> np.ndarray:
    T = np.eye(4)
    if R is not None:
        T[:3, :3] = R
    if t is not None:
        T[:3, 3] = t
    return T


def inv_transform(T) -> np.ndarray:
    R = T[:3, :3]
    out = np.eye(4)
    out[:3, :3] = R.T
    out[:3, 3] = -R.T @ T[:3, 3]
    return out


def revolute_exp(axis, point, theta: float) -> np.ndarray:
    """``exp(xi^ theta)`` for a rotation about ``axis`` through ``point``.

    The twist is ``(omega, v) = (axis, -axis x point)``.
    """
    R = rot_about(axis, theta)
    p = np.asarray(point, dtype=float)
    return make_transform(R, (np.eye(3) - R) @ p)


def twist_coordinates(axis, point) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(axis, dtype=float)
    return w, -np.cross(w, np.asarray(point, dtype=float))


def is_rotation(R, tol: float = ORTHO_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    return bool(np.max(np.abs(R.T @ R - np.eye(3))) <= tol and np.linalg.det(R) > 0)


def is_rigid(T, tol: float = ORTHO_TOL) -> bool:
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4) or not np.allclose(T[3], (0.0, 0.0, 0.0, 1.0), atol=tol):
        return False
    return is_rotation(T[:3, :3], tol)


def rotation_log(R) -> np.ndarray:
    """Axis-angle vector ``w`` with ``exp(skew(w)) = R``, ``|w| <= pi``."""
    R = np.asarray(R, dtype=float)
    cos_t = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    vee = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin_t = np.linalg.norm(vee)
    theta = np.arctan2(sin_t, cos_t)
    if theta < 1e-12:
        return vee
    if np.pi - theta > 1e-6:
        return vee * (theta / sin_t)
    # near pi: axis from the symmetric part
    B = 0.5 * (R + np.eye(3))
    k = np.sqrt(np.clip(np.diag(B), 0.0, None))
    i = int(np.argmax(k))
    k = B[i] / k[i]
    k /= np.linalg.norm(k)
    if np.dot(k, vee) < 0:
        k = -k
    return k * theta


def orthonormalize(R) -> np.ndarray:
    U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float))
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] = -U[:, -1]
        Q = U @ Vt
    return Q


def perpendicular_frame(axis) -> tuple[np.ndarray, np.ndarray]:
    """Unit ``e1, e2`` with ``e1 x e2 = axis``."""
    d = np.asarray(axis, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, d)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2

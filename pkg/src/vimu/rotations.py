"""Small rotation-matrix utilities used across the package."""

import numpy as np

from .errors import ValidationError


def orthonormality_error(mats):
    """Max deviation of R from a proper rotation: ||R R^T - I|| and |det-1|.

    ``mats`` may be a single 3x3 matrix or any (..., 3, 3) stack.
    """
    mats = np.asarray(mats, dtype=np.float64)
    eye = np.eye(3)
    gram = np.einsum("...ij,...kj->...ik", mats, mats) - eye
    err = np.abs(gram).max(axis=(-2, -1))
    det_err = np.abs(np.linalg.det(mats) - 1.0)
    return np.maximum(err, det_err)


def validate_rotations(mats, atol, what="rotation"):
    """Raise ValidationError if any matrix strays from SO(3) beyond atol."""
    err = orthonormality_error(mats)
    worst = float(np.max(err))
    if worst > atol:
        raise ValidationError(
            f"{what} matrices not orthonormal within {atol:g} (worst error {worst:.3g})"
        )


def polar_project(mats):
    """Project (..., 3, 3) matrices onto SO(3) (closest rotation, SVD polar factor)."""
    mats = np.asarray(mats, dtype=np.float64)
    u, _, vt = np.linalg.svd(mats)
    r = u @ vt
    # flip the axis of least significance where a reflection slipped in
    neg = np.linalg.det(r) < 0
    if np.any(neg):
        u = u.copy()
        u[neg, :, -1] *= -1.0
        r = u @ vt
    return r


def rotation_about_axis(axis, angle):
    """Rodrigues rotation matrix for a unit-ish axis and angle in radians."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)

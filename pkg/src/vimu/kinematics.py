"""Generic linear-blend-skinning body model.

A body is a template mesh deformed by shape and pose blendshapes, a joint
tree posed by per-joint rotation matrices, and a blend-weight matrix that
ties vertices to joints.  All operations are pure functions over immutable
inputs.

Conventions:
- joints are stored topologically sorted: joint 0 is the root and
  ``parent[j] < j`` for every other joint (``parent[0] == -1``);
- the pose feature driving the pose blendshape is the flattened
  ``R_j - I`` of the non-root joints, so a rest pose contributes nothing;
- rest joint locations are fixed; they do not move with the shape
  coefficients (shape only deforms the mesh surface).
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError, ValidationError
from .rotations import validate_rotations

WEIGHT_ATOL = 1e-6
ROTATION_ATOL = 1e-5


def _as_f64(a):
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64))


@dataclass(frozen=True)
class BodyModel:
    """Skinned articulated body: template, joint tree, weights, blendshapes.

    Shapes: template_vertices (N,3); parent (K+1,); rest_joint_positions
    (K+1,3); blend_weights (N,K+1); shape_basis (N,3,B); pose_basis (N,3,P)
    with P = 9*K.
    """

    template_vertices: np.ndarray
    parent: np.ndarray
    rest_joint_positions: np.ndarray
    blend_weights: np.ndarray
    shape_basis: np.ndarray
    pose_basis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "template_vertices", _as_f64(self.template_vertices))
        object.__setattr__(self, "parent", np.asarray(self.parent, dtype=np.int64))
        object.__setattr__(
            self, "rest_joint_positions", _as_f64(self.rest_joint_positions)
        )
        object.__setattr__(self, "blend_weights", _as_f64(self.blend_weights))
        object.__setattr__(self, "shape_basis", _as_f64(self.shape_basis))
        object.__setattr__(self, "pose_basis", _as_f64(self.pose_basis))
        self._validate()

    @property
    def vertex_count(self):
        return self.template_vertices.shape[0]

    @property
    def joint_count(self):
        """Number of joints including the root (K+1)."""
        return self.parent.shape[0]

    @property
    def shape_coeff_count(self):
        return self.shape_basis.shape[2]

    @property
    def pose_feature_count(self):
        return self.pose_basis.shape[2]

    def _validate(self):
        n = self.vertex_count
        k1 = self.joint_count
        if self.template_vertices.shape != (n, 3):
            raise ConfigurationError(
                f"template_vertices must be (N,3), got {self.template_vertices.shape}"
            )
        if self.rest_joint_positions.shape != (k1, 3):
            raise ConfigurationError(
                "rest_joint_positions shape "
                f"{self.rest_joint_positions.shape} inconsistent with {k1} joints"
            )
        if self.blend_weights.shape != (n, k1):
            raise ConfigurationError(
                f"blend_weights must be (N,K+1)=({n},{k1}), got {self.blend_weights.shape}"
            )
        if self.shape_basis.shape[:2] != (n, 3) or self.shape_basis.ndim != 3:
            raise ConfigurationError(
                f"shape_basis must be (N,3,B), got {self.shape_basis.shape}"
            )
        if self.pose_basis.shape[:2] != (n, 3) or self.pose_basis.ndim != 3:
            raise ConfigurationError(
                f"pose_basis must be (N,3,P), got {self.pose_basis.shape}"
            )
        expected_p = 9 * (k1 - 1)
        if self.pose_basis.shape[2] != expected_p:
            raise ConfigurationError(
                f"pose_basis must have P=9K={expected_p} columns, got {self.pose_basis.shape[2]}"
            )
        if self.parent[0] != -1:
            raise ValidationError("joint 0 must be the root (parent[0] == -1)")
        for j in range(1, k1):
            if not 0 <= self.parent[j] < j:
                raise ValidationError(
                    f"parent[{j}]={self.parent[j]} breaks the topologically "
                    "sorted tree (need 0 <= parent[j] < j)"
                )
        if np.any(self.blend_weights < -WEIGHT_ATOL):
            raise ValidationError("blend weights must be non-negative")
        row_sums = self.blend_weights.sum(axis=1)
        worst = float(np.abs(row_sums - 1.0).max())
        if worst > WEIGHT_ATOL:
            raise ValidationError(
                f"blend-weight rows must sum to 1 within {WEIGHT_ATOL:g} "
                f"(worst deviation {worst:.3g})"
            )


@dataclass(frozen=True)
class Pose:
    """Per-joint rotations relative to the parent plus a root translation."""

    joint_rotations: np.ndarray
    root_translation: np.ndarray = field(default=None)

    def __post_init__(self):
        rot = _as_f64(self.joint_rotations)
        if rot.ndim != 3 or rot.shape[1:] != (3, 3):
            raise ConfigurationError(
                f"joint_rotations must be (K+1,3,3), got {rot.shape}"
            )
        object.__setattr__(self, "joint_rotations", rot)
        tr = self.root_translation
        tr = np.zeros(3) if tr is None else _as_f64(tr).reshape(3)
        object.__setattr__(self, "root_translation", tr)

    @classmethod
    def rest(cls, joint_count):
        return cls(np.broadcast_to(np.eye(3), (joint_count, 3, 3)).copy())


@dataclass(frozen=True)
class Shape:
    """Shape coefficient vector (length B of the owning model)."""

    beta: np.ndarray

    def __post_init__(self):
        beta = _as_f64(self.beta).reshape(-1)
        if not np.all(np.isfinite(beta)):
            raise ValidationError("shape coefficients must be finite")
        object.__setattr__(self, "beta", beta)

    @classmethod
    def zeros(cls, count):
        return cls(np.zeros(count))


class JointTransforms(NamedTuple):
    """Global rigid transform per joint: rotations (K+1,3,3), translations (K+1,3)."""

    rotations: np.ndarray
    translations: np.ndarray


def pose_feature(pose: Pose) -> np.ndarray:
    """Flattened (R_j - I) entries of the non-root joints; zero at rest."""
    rel = pose.joint_rotations[1:] - np.eye(3)
    return rel.reshape(-1)


def _check_coeffs(model: BodyModel, shape: Shape):
    if shape.beta.shape[0] != model.shape_coeff_count:
        raise ConfigurationError(
            f"shape has {shape.beta.shape[0]} coefficients, "
            f"shape_basis expects {model.shape_coeff_count}"
        )


def _check_pose(model: BodyModel, pose: Pose):
    if pose.joint_rotations.shape[0] != model.joint_count:
        raise ConfigurationError(
            f"pose has {pose.joint_rotations.shape[0]} joints, "
            f"model has {model.joint_count}"
        )


def apply_blend_shapes(model: BodyModel, shape: Shape, pose: Pose) -> np.ndarray:
    """Template plus shape and pose blendshape offsets, (N,3)."""
    _check_coeffs(model, shape)
    _check_pose(model, pose)
    out = model.template_vertices.copy()
    out += model.shape_basis @ shape.beta
    out += model.pose_basis @ pose_feature(pose)
    return out


def forward_kinematics(model: BodyModel, shape: Shape, pose: Pose) -> JointTransforms:
    """Global joint transforms by composing local rotations down the tree.

    ``shape`` is accepted for interface symmetry; rest joint locations are
    shape-independent (see module docstring).
    """
    _check_coeffs(model, shape)
    _check_pose(model, pose)
    validate_rotations(pose.joint_rotations, ROTATION_ATOL, "pose")
    seq = _fk_frames(model, pose.joint_rotations[None], pose.root_translation[None])
    return JointTransforms(seq.rotations[0], seq.translations[0])


def _fk_frames(model, rotations, root_translations):
    """Forward kinematics batched over frames: (F,K+1,3,3), (F,3) inputs."""
    frames = rotations.shape[0]
    k1 = model.joint_count
    rest = model.rest_joint_positions
    g_rot = np.empty((frames, k1, 3, 3))
    g_tr = np.empty((frames, k1, 3))
    g_rot[:, 0] = rotations[:, 0]
    g_tr[:, 0] = rest[0] + root_translations
    for j in range(1, k1):
        p = model.parent[j]
        g_rot[:, j] = g_rot[:, p] @ rotations[:, j]
        offset = rest[j] - rest[p]
        g_tr[:, j] = g_tr[:, p] + g_rot[:, p] @ offset
    return JointTransforms(g_rot, g_tr)


def skin(model: BodyModel, shape: Shape, pose: Pose, vertex_indices=None) -> np.ndarray:
    """Pose the deformed template by blending per-joint rigid transforms.

    Each vertex is the blend-weighted sum of the joint transforms applied to
    its rest-joint-relative position.  ``vertex_indices`` restricts the
    output to a subset of vertices (same math, fewer rows).
    """
    transforms = forward_kinematics(model, shape, pose)
    deformed = apply_blend_shapes(model, shape, pose)
    return _skin_with_transforms(
        model, deformed, transforms.rotations[None], transforms.translations[None],
        vertex_indices,
    )[0]


def _skin_with_transforms(model, deformed, g_rot, g_tr, vertex_indices=None):
    """LBS given precomputed per-frame global transforms.

    deformed (N,3) or (F,N,3); g_rot (F,K+1,3,3); g_tr (F,K+1,3).
    Returns (F, n_out, 3).
    """
    weights = model.blend_weights
    if vertex_indices is not None:
        vertex_indices = np.asarray(vertex_indices, dtype=np.int64)
        weights = weights[vertex_indices]
        deformed = deformed[..., vertex_indices, :] if deformed.ndim == 3 else deformed[vertex_indices]
    rest = model.rest_joint_positions  # (K+1,3)
    if deformed.ndim == 2:
        rel = deformed[None, :, :] - rest[:, None, :]  # (K+1,n,3)
        moved = np.einsum("fjab,jnb->fjna", g_rot, rel)
    else:
        rel = deformed[:, None, :, :] - rest[None, :, None, :]  # (F,K+1,n,3)
        moved = np.einsum("fjab,fjnb->fjna", g_rot, rel)
    moved += g_tr[:, :, None, :]
    return np.einsum("nj,fjna->fna", weights, moved)

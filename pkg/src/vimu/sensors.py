"""Virtual IMU synthesis from posed body motion.

Orientation readings come straight from forward kinematics; accelerations
are the central second difference of the sensor vertex trajectory:

    a_t = (p_{t-1} + p_{t+1} - 2 p_t) / dt^2

which is exact on quadratic trajectories.  The difference is undefined at
the first and last frame, so an F-frame pose sequence yields F-2 IMU
frames (both boundary frames are dropped, nothing is padded).

Accelerations are reported in the global frame by default and contain no
gravity term; ``sensor_frame=True`` rotates them into the sensor mount
frame and ``add_gravity=True`` switches to the specific-force convention
(subtracting world gravity) for experimentation.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .kinematics import (
    BodyModel,
    JointTransforms,
    Pose,
    Shape,
    _fk_frames,
    _skin_with_transforms,
    apply_blend_shapes,
)
from .rotations import validate_rotations

ORIENTATION_ATOL = 1e-4
OFFSET_ATOL = 1e-5
GRAVITY = np.array([0.0, 0.0, -9.81])


@dataclass(frozen=True)
class SensorPlacement:
    """A virtual sensor: a mesh vertex (position source) tied to a joint
    (orientation source) with an optional mount-frame rotation offset."""

    name: str
    vertex_index: int
    joint_index: int
    local_rotation_offset: np.ndarray = field(default=None)

    def __post_init__(self):
        off = self.local_rotation_offset
        off = np.eye(3) if off is None else np.asarray(off, dtype=np.float64)
        if off.shape != (3, 3):
            raise ValidationError(
                f"sensor {self.name!r}: rotation offset must be 3x3, got {off.shape}"
            )
        validate_rotations(off, OFFSET_ATOL, f"sensor {self.name!r} offset")
        object.__setattr__(self, "local_rotation_offset", off)

    def check_against(self, model: BodyModel):
        if not 0 <= self.vertex_index < model.vertex_count:
            raise ValidationError(
                f"sensor {self.name!r}: vertex_index {self.vertex_index} out of "
                f"range for {model.vertex_count} vertices"
            )
        if not 0 <= self.joint_index < model.joint_count:
            raise ValidationError(
                f"sensor {self.name!r}: joint_index {self.joint_index} out of "
                f"range for {model.joint_count} joints"
            )


@dataclass(frozen=True)
class PoseSequence:
    """Time-ordered per-joint rotations at a fixed frame rate."""

    frame_rate: float
    joint_rotations: np.ndarray  # (F, K+1, 3, 3)
    root_translations: np.ndarray = field(default=None)  # (F, 3)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        rot = np.ascontiguousarray(np.asarray(self.joint_rotations, dtype=np.float64))
        if rot.ndim != 4 or rot.shape[2:] != (3, 3):
            raise ValidationError(
                f"joint_rotations must be (F,K+1,3,3), got {rot.shape}"
            )
        object.__setattr__(self, "joint_rotations", rot)
        tr = self.root_translations
        tr = np.zeros((rot.shape[0], 3)) if tr is None else np.asarray(tr, dtype=np.float64)
        if tr.shape != (rot.shape[0], 3):
            raise ValidationError(
                f"root_translations must be (F,3), got {tr.shape}"
            )
        object.__setattr__(self, "root_translations", np.ascontiguousarray(tr))
        if self.frame_rate <= 0:
            raise ValidationError(f"frame_rate must be > 0, got {self.frame_rate}")

    @property
    def frame_count(self):
        return self.joint_rotations.shape[0]

    @property
    def joint_count(self):
        return self.joint_rotations.shape[1]

    def pose_at(self, frame) -> Pose:
        return Pose(self.joint_rotations[frame], self.root_translations[frame])


@dataclass(frozen=True)
class IMUSequence:
    """Per-sensor orientation and acceleration streams at a fixed frame rate."""

    frame_rate: float
    sensor_names: tuple
    orientations: np.ndarray  # (S, F, 3, 3)
    accelerations: np.ndarray  # (S, F, 3)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        names = tuple(self.sensor_names)
        ori = np.ascontiguousarray(np.asarray(self.orientations, dtype=np.float64))
        acc = np.ascontiguousarray(np.asarray(self.accelerations, dtype=np.float64))
        s = len(names)
        if ori.ndim != 4 or ori.shape[0] != s or ori.shape[2:] != (3, 3):
            raise ValidationError(f"orientations must be (S,F,3,3), got {ori.shape}")
        if acc.shape != (s, ori.shape[1], 3):
            raise ValidationError(
                f"accelerations must be (S,F,3) matching orientations, got {acc.shape}"
            )
        if self.frame_rate <= 0:
            raise ValidationError(f"frame_rate must be > 0, got {self.frame_rate}")
        if ori.size:
            validate_rotations(ori, ORIENTATION_ATOL, "orientation")
        object.__setattr__(self, "sensor_names", names)
        object.__setattr__(self, "orientations", ori)
        object.__setattr__(self, "accelerations", acc)

    @property
    def frame_count(self):
        return self.orientations.shape[1]

    def sensor_index(self, name):
        try:
            return self.sensor_names.index(name)
        except ValueError:
            raise ValidationError(
                f"no sensor named {name!r}; available: {list(self.sensor_names)}"
            ) from None

    def orientation(self, name):
        return self.orientations[self.sensor_index(name)]

    def acceleration(self, name):
        return self.accelerations[self.sensor_index(name)]


def virtual_orientation(transforms: JointTransforms, placement: SensorPlacement):
    """Global sensor orientation: joint global rotation times the mount offset."""
    k1 = transforms.rotations.shape[0]
    if not 0 <= placement.joint_index < k1:
        raise ValidationError(
            f"sensor {placement.name!r}: joint_index {placement.joint_index} "
            f"out of range for {k1} joints"
        )
    return transforms.rotations[placement.joint_index] @ placement.local_rotation_offset


def virtual_acceleration(p_prev, p_curr, p_next, dt):
    """Central second difference of three consecutive positions."""
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    p_prev = np.asarray(p_prev, dtype=np.float64)
    p_curr = np.asarray(p_curr, dtype=np.float64)
    p_next = np.asarray(p_next, dtype=np.float64)
    return (p_prev + p_next - 2.0 * p_curr) / (dt * dt)


def synthesize_sequence(
    poses: PoseSequence,
    model: BodyModel,
    shape: Shape,
    placements,
    sensor_frame=False,
    add_gravity=False,
) -> IMUSequence:
    """Run the virtual sensors over a pose sequence.

    Returns an IMUSequence with ``poses.frame_count - 2`` frames; orientation
    and acceleration streams are aligned (both cover frames 1..F-2 of the
    input).
    """
    frames = poses.frame_count
    if frames < 3:
        raise ValidationError(
            f"need at least 3 frames for the central difference, got {frames}"
        )
    placements = list(placements)
    if not placements:
        raise ValidationError("at least one sensor placement is required")
    for p in placements:
        p.check_against(model)
    validate_rotations(poses.joint_rotations, 1e-5, "pose sequence")

    transforms = _fk_frames(model, poses.joint_rotations, poses.root_translations)
    vert_idx = np.array([p.vertex_index for p in placements], dtype=np.int64)

    # blendshape offsets: shape term is constant, pose term varies per frame
    shaped = apply_blend_shapes(model, shape, Pose.rest(model.joint_count))
    rel_rot = poses.joint_rotations[:, 1:] - np.eye(3)  # (F,K,3,3)
    pose_offsets = np.einsum(
        "nap,fp->fna", model.pose_basis, rel_rot.reshape(frames, -1)
    )
    deformed = shaped[None] + pose_offsets  # (F,N,3)

    positions = _skin_with_transforms(
        model, deformed, transforms.rotations, transforms.translations, vert_idx
    )  # (F, S, 3)

    dt = 1.0 / poses.frame_rate
    accel = (positions[:-2] + positions[2:] - 2.0 * positions[1:-1]) / (dt * dt)
    accel = np.transpose(accel, (1, 0, 2))  # (S, F-2, 3)

    joint_idx = np.array([p.joint_index for p in placements], dtype=np.int64)
    offsets = np.stack([p.local_rotation_offset for p in placements])
    core = transforms.rotations[1:-1][:, joint_idx]  # (F-2, S, 3, 3)
    ori = np.einsum("fsab,sbc->sfac", core, offsets)

    if add_gravity:
        accel = accel - GRAVITY  # specific force: kinematic minus gravity
    if sensor_frame:
        accel = np.einsum("sfba,sfb->sfa", ori, accel)  # R^T a

    names = tuple(p.name for p in placements)
    return IMUSequence(
        frame_rate=poses.frame_rate,
        sensor_names=names,
        orientations=ori,
        accelerations=accel,
        meta=dict(poses.meta),
    )


def with_acceleration_noise(seq: IMUSequence, std, seed) -> IMUSequence:
    """Seeded Gaussian noise on the acceleration streams (an extension for
    robustness studies; core synthesis is noise-free)."""
    if std < 0:
        raise ValidationError(f"noise std must be >= 0, got {std}")
    rng = np.random.default_rng(seed)
    noisy = seq.accelerations + rng.normal(0.0, std, size=seq.accelerations.shape)
    return IMUSequence(
        frame_rate=seq.frame_rate,
        sensor_names=seq.sensor_names,
        orientations=seq.orientations,
        accelerations=noisy,
        meta=dict(seq.meta),
    )

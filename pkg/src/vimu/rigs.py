"""Built-in test rigs.

``toy_humanoid`` is a 12-vertex, 4-joint stick figure (pelvis root with a
head, a left arm, and a right leg hanging off it) used by the tests, the
demo data generator, and the documentation examples.  It is deliberately
tiny; real rigs arrive via the documented body-model file format.
"""

import numpy as np

from .kinematics import BodyModel
from .sensors import SensorPlacement

PELVIS, HEAD, LEFT_ARM, RIGHT_LEG = 0, 1, 2, 3


def toy_humanoid():
    """Returns (BodyModel, default sensor placements)."""
    rest_joints = np.array([
        [0.00, 0.00, 0.90],   # pelvis (root)
        [0.00, 0.00, 1.55],   # head
        [0.55, 0.00, 1.25],   # left arm / wrist
        [-0.12, 0.00, 0.45],  # right leg / thigh
    ])
    parent = np.array([-1, 0, 0, 0])

    vertices = np.array([
        [0.00, 0.08, 0.92],
        [0.10, -0.08, 0.88],
        [-0.10, 0.00, 0.95],
        [0.00, 0.00, 1.62],   # head sensor vertex
        [0.07, 0.00, 1.50],
        [0.00, 0.09, 1.45],
        [0.22, 0.00, 1.28],
        [0.40, 0.02, 1.26],
        [0.58, 0.00, 1.24],   # left-wrist sensor vertex
        [-0.12, 0.03, 0.70],
        [-0.12, 0.00, 0.48],
        [-0.14, 0.00, 0.28],  # right-thigh sensor vertex
    ])

    weights = np.zeros((12, 4))
    weights[0, PELVIS] = 1.0
    weights[1, PELVIS] = 1.0
    weights[2, PELVIS], weights[2, HEAD] = 0.8, 0.2
    weights[3, HEAD] = 1.0
    weights[4, HEAD], weights[4, PELVIS] = 0.8, 0.2
    weights[5, HEAD], weights[5, PELVIS] = 0.6, 0.4
    weights[6, LEFT_ARM], weights[6, PELVIS] = 0.5, 0.5
    weights[7, LEFT_ARM], weights[7, PELVIS] = 0.9, 0.1
    weights[8, LEFT_ARM] = 1.0
    weights[9, RIGHT_LEG], weights[9, PELVIS] = 0.5, 0.5
    weights[10, RIGHT_LEG], weights[10, PELVIS] = 0.9, 0.1
    weights[11, RIGHT_LEG] = 1.0

    # shape basis: coefficient 0 stretches the figure vertically about the
    # pelvis, coefficient 1 widens it
    shape_basis = np.zeros((12, 3, 2))
    shape_basis[:, 2, 0] = vertices[:, 2] - 0.90
    shape_basis[:, 0, 1] = 0.3 * vertices[:, 0]
    shape_basis[:, 1, 1] = 0.3 * vertices[:, 1]

    # pose basis: small fixed wiggle so the pose blendshape path is exercised
    n_idx = np.arange(12)[:, None, None]
    a_idx = np.arange(3)[None, :, None]
    p_idx = np.arange(27)[None, None, :]
    pose_basis = 0.004 * np.sin(1.7 * n_idx + 0.9 * a_idx + 0.35 * p_idx + 0.5)

    model = BodyModel(
        template_vertices=vertices,
        parent=parent,
        rest_joint_positions=rest_joints,
        blend_weights=weights,
        shape_basis=shape_basis,
        pose_basis=pose_basis,
    )
    placements = [
        SensorPlacement("left_wrist", vertex_index=8, joint_index=LEFT_ARM),
        SensorPlacement("right_thigh", vertex_index=11, joint_index=RIGHT_LEG),
        SensorPlacement("head", vertex_index=3, joint_index=HEAD),
    ]
    return model, placements

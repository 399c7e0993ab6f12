import helpers
import numpy as np
import pytest

from vimu.errors import ConfigurationError, ValidationError
from vimu.kinematics import (
    BodyModel,
    Pose,
    Shape,
    apply_blend_shapes,
    forward_kinematics,
    pose_feature,
    skin,
    _skin_with_transforms,
)
from vimu.rotations import rotation_about_axis

Z90 = rotation_about_axis((0, 0, 1), np.pi / 2)


def two_joint_model(rest_child=(1.0, 0.0, 0.0)):
    rest = np.array([[0.0, 0.0, 0.0], list(rest_child)])
    return BodyModel(
        template_vertices=np.array([[1.5, 0.0, 0.0], [0.5, 0.0, 0.0], [1.5, 0.5, 0.0]]),
        parent=np.array([-1, 0]),
        rest_joint_positions=rest,
        blend_weights=np.array([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]]),
        shape_basis=np.zeros((3, 3, 1)),
        pose_basis=np.zeros((3, 3, 9)),
    )


class TestBlendShapes:
    def test_rest_pose_zero_shape_is_template(self, toy_rig):
        model, _ = toy_rig
        out = apply_blend_shapes(model, Shape.zeros(2), Pose.rest(4))
        np.testing.assert_array_equal(out, model.template_vertices)

    def test_unit_shape_coefficient_adds_one_basis_column(self, toy_rig):
        model, _ = toy_rig
        out = apply_blend_shapes(model, Shape([1.0, 0.0]), Pose.rest(4))
        np.testing.assert_allclose(
            out, model.template_vertices + model.shape_basis[:, :, 0], atol=1e-15
        )

    def test_matches_dense_loop_oracle(self):
        rng = np.random.default_rng(3)
        model = helpers.random_tree_model(rng, n_joints=3, n_vertices=4)
        rot = helpers.random_rotation_matrices(rng, 3)
        pose = Pose(rot)
        shape = Shape(rng.standard_normal(2))
        expected = helpers.blend_shapes_oracle(
            model.template_vertices, model.shape_basis, shape.beta,
            model.pose_basis, pose_feature(pose),
        )
        out = apply_blend_shapes(model, shape, pose)
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_dimension_mismatch_names_tensor(self, toy_rig):
        model, _ = toy_rig
        with pytest.raises(ConfigurationError, match="shape_basis"):
            apply_blend_shapes(model, Shape([1.0, 0.0, 0.0]), Pose.rest(4))

    def test_input_not_modified(self, toy_rig):
        model, _ = toy_rig
        before = model.template_vertices.copy()
        apply_blend_shapes(model, Shape([0.3, -0.2]), Pose.rest(4))
        np.testing.assert_array_equal(model.template_vertices, before)


class TestForwardKinematics:
    def test_identity_pose_keeps_rest_joints(self, toy_rig):
        model, _ = toy_rig
        t = forward_kinematics(model, Shape.zeros(2), Pose.rest(4))
        for j in range(4):
            np.testing.assert_allclose(t.rotations[j], np.eye(3), atol=1e-15)
        np.testing.assert_allclose(t.translations, model.rest_joint_positions,
                                   atol=1e-15)

    def test_two_joint_chain_hand_composed(self):
        # root and child both rotated 90 deg about z; child rest offset (1,0,0)
        model = two_joint_model()
        pose = Pose(np.stack([Z90, Z90]))
        t = forward_kinematics(model, Shape.zeros(1), pose)
        np.testing.assert_allclose(t.rotations[1], Z90 @ Z90, atol=1e-12)
        # child joint lands where the root rotation sends its offset
        np.testing.assert_allclose(t.translations[1], [0.0, 1.0, 0.0], atol=1e-12)

    def test_five_joint_chain_matches_homogeneous_oracle(self):
        rng = np.random.default_rng(11)
        model = helpers.random_tree_model(rng, n_joints=5)
        # force a pure chain
        object.__setattr__(model, "parent", np.array([-1, 0, 1, 2, 3]))
        rot = helpers.random_rotation_matrices(rng, 5)
        trans = rng.uniform(-1, 1, 3)
        t = forward_kinematics(model, Shape.zeros(2), Pose(rot, trans))
        o_rot, o_pos = helpers.homogeneous_fk_oracle(model, rot, trans)
        np.testing.assert_allclose(t.rotations, o_rot, atol=1e-10)
        np.testing.assert_allclose(t.translations, o_pos, atol=1e-10)

    def test_random_trees_match_homogeneous_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            n_joints = int(rng.integers(2, 9))
            model = helpers.random_tree_model(rng, n_joints)
            rot = helpers.random_rotation_matrices(rng, n_joints)
            trans = rng.uniform(-1, 1, 3)
            t = forward_kinematics(model, Shape.zeros(2), Pose(rot, trans))
            o_rot, o_pos = helpers.homogeneous_fk_oracle(model, rot, trans)
            np.testing.assert_allclose(t.rotations, o_rot, atol=1e-10)
            np.testing.assert_allclose(t.translations, o_pos, atol=1e-10)

    def test_global_rotations_stay_orthonormal(self):
        rng = np.random.default_rng(23)
        model = helpers.random_tree_model(rng, n_joints=8)
        rot = helpers.random_rotation_matrices(rng, 8)
        t = forward_kinematics(model, Shape.zeros(2), Pose(rot))
        gram = np.einsum("jab,jcb->jac", t.rotations, t.rotations)
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(3), (8, 3, 3)),
                                   atol=1e-5)

    def test_non_orthonormal_rotation_rejected(self, toy_rig):
        model, _ = toy_rig
        rot = np.broadcast_to(np.eye(3), (4, 3, 3)).copy()
        rot[2] *= 1.01
        with pytest.raises(ValidationError, match="orthonormal"):
            forward_kinematics(model, Shape.zeros(2), Pose(rot))


class TestSkin:
    def test_identity_pose_zero_shape_is_template(self, toy_rig):
        model, _ = toy_rig
        out = skin(model, Shape.zeros(2), Pose.rest(4))
        np.testing.assert_allclose(out, model.template_vertices, atol=1e-10)

    def test_single_joint_vertex_is_hand_rotated(self):
        model = two_joint_model()
        pose = Pose(np.stack([np.eye(3), Z90]))
        out = skin(model, Shape.zeros(1), pose)
        v = model.template_vertices[0]  # weight 1.0 on the child joint
        rest_child = model.rest_joint_positions[1]
        expected = Z90 @ (v - rest_child) + rest_child
        np.testing.assert_allclose(out[0], expected, atol=1e-12)

    def test_half_half_vertex_is_midpoint_of_single_joint_results(self):
        model = two_joint_model()
        pose = Pose(np.stack([rotation_about_axis((0, 1, 0), 0.4), Z90]))
        out = skin(model, Shape.zeros(1), pose)
        v = model.template_vertices[2]  # weights (0.5, 0.5)
        t = forward_kinematics(model, Shape.zeros(1), pose)
        single = [
            t.rotations[j] @ (v + model.pose_basis[2] @ pose_feature(pose)
                              - model.rest_joint_positions[j]) + t.translations[j]
            for j in (0, 1)
        ]
        np.testing.assert_allclose(out[2], 0.5 * (single[0] + single[1]), atol=1e-12)

    def test_rigid_motion_equivariance(self):
        rng = np.random.default_rng(17)
        model = helpers.random_tree_model(rng, n_joints=6)
        rot = helpers.random_rotation_matrices(rng, 6)
        pose = Pose(rot, rng.uniform(-1, 1, 3))
        shape = Shape(rng.standard_normal(2))
        t = forward_kinematics(model, shape, pose)
        deformed = apply_blend_shapes(model, shape, pose)
        base = _skin_with_transforms(
            model, deformed, t.rotations[None], t.translations[None]
        )[0]
        r = helpers.random_rotation_matrices(rng, 1)[0]
        moved = _skin_with_transforms(
            model, deformed, (r @ t.rotations)[None],
            (t.translations @ r.T)[None],
        )[0]
        np.testing.assert_allclose(moved, base @ r.T, atol=1e-9)

    def test_vertex_subset_matches_full(self, toy_rig):
        model, _ = toy_rig
        rng = np.random.default_rng(5)
        pose = Pose(helpers.random_rotation_matrices(rng, 4))
        full = skin(model, Shape.zeros(2), pose)
        sub = skin(model, Shape.zeros(2), pose, vertex_indices=[8, 3])
        np.testing.assert_array_equal(sub, full[[8, 3]])


class TestModelValidation:
    def test_weight_rows_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="sum to 1"):
            BodyModel(
                template_vertices=np.zeros((2, 3)),
                parent=np.array([-1, 0]),
                rest_joint_positions=np.zeros((2, 3)),
                blend_weights=np.array([[0.6, 0.6], [1.0, 0.0]]),
                shape_basis=np.zeros((2, 3, 1)),
                pose_basis=np.zeros((2, 3, 9)),
            )

    def test_negative_weights_rejected(self):
        with pytest.raises(ValidationError, match="non-negative"):
            BodyModel(
                template_vertices=np.zeros((1, 3)),
                parent=np.array([-1, 0]),
                rest_joint_positions=np.zeros((2, 3)),
                blend_weights=np.array([[1.5, -0.5]]),
                shape_basis=np.zeros((1, 3, 1)),
                pose_basis=np.zeros((1, 3, 9)),
            )

    def test_parent_order_enforced(self):
        with pytest.raises(ValidationError, match="parent"):
            BodyModel(
                template_vertices=np.zeros((1, 3)),
                parent=np.array([-1, 2, 1]),
                rest_joint_positions=np.zeros((3, 3)),
                blend_weights=np.array([[1.0, 0.0, 0.0]]),
                shape_basis=np.zeros((1, 3, 1)),
                pose_basis=np.zeros((1, 3, 18)),
            )

    def test_pose_basis_width_must_match_joints(self):
        with pytest.raises(ConfigurationError, match="pose_basis"):
            BodyModel(
                template_vertices=np.zeros((1, 3)),
                parent=np.array([-1, 0]),
                rest_joint_positions=np.zeros((2, 3)),
                blend_weights=np.array([[1.0, 0.0]]),
                shape_basis=np.zeros((1, 3, 1)),
                pose_basis=np.zeros((1, 3, 10)),
            )

    def test_weights_not_mutated_by_operations(self, toy_rig):
        model, _ = toy_rig
        before = model.blend_weights.copy()
        rng = np.random.default_rng(2)
        skin(model, Shape(rng.standard_normal(2)),
             Pose(helpers.random_rotation_matrices(rng, 4)))
        np.testing.assert_array_equal(model.blend_weights, before)

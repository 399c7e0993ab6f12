"""Shared test oracles and data generators.

Everything here is deliberately independent of the package's fast paths:
brute-force loops, homogeneous-matrix composition, explicit counting.
"""

import numpy as np

from vimu.kinematics import BodyModel


def random_rotation_matrices(rng, n):
    """Uniform-ish random rotations from normalized quaternions."""
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
    ], axis=1)


def random_tree_model(rng, n_joints, n_vertices=6, shape_coeffs=2):
    """A random valid body model over a random topologically sorted tree."""
    parent = np.full(n_joints, -1, dtype=np.int64)
    for j in range(1, n_joints):
        parent[j] = rng.integers(0, j)
    rest = rng.uniform(-1, 1, size=(n_joints, 3))
    weights = rng.uniform(0.0, 1.0, size=(n_vertices, n_joints))
    weights /= weights.sum(axis=1, keepdims=True)
    return BodyModel(
        template_vertices=rng.uniform(-1, 1, size=(n_vertices, 3)),
        parent=parent,
        rest_joint_positions=rest,
        blend_weights=weights,
        shape_basis=rng.uniform(-0.2, 0.2, size=(n_vertices, 3, shape_coeffs)),
        pose_basis=rng.uniform(-0.05, 0.05, size=(n_vertices, 3, 9 * (n_joints - 1))),
    )


def homogeneous_fk_oracle(model, rotations, root_translation):
    """Compose 4x4 matrices from root to every joint (the brute-force path)."""
    n_joints = model.joint_count
    rest = model.rest_joint_positions
    mats = [None] * n_joints
    m0 = np.eye(4)
    m0[:3, :3] = rotations[0]
    m0[:3, 3] = rest[0] + root_translation
    mats[0] = m0
    for j in range(1, n_joints):
        p = model.parent[j]
        local = np.eye(4)
        local[:3, :3] = rotations[j]
        local[:3, 3] = rest[j] - rest[p]
        mats[j] = mats[p] @ local
    rot = np.stack([m[:3, :3] for m in mats])
    pos = np.stack([m[:3, 3] for m in mats])
    return rot, pos


def blend_shapes_oracle(template, shape_basis, beta, pose_basis, pose_feat):
    """Explicit triple loop over vertices, axes, coefficients."""
    out = template.copy()
    n = template.shape[0]
    for v in range(n):
        for a in range(3):
            for i in range(beta.shape[0]):
                out[v, a] += shape_basis[v, a, i] * beta[i]
            for i in range(pose_feat.shape[0]):
                out[v, a] += pose_basis[v, a, i] * pose_feat[i]
    return out


def conv1d_oracle(x, w, b, stride):
    """Nested-loop valid 1-D convolution, (B,T,Ci) x (Co,Ci,K)."""
    batch, t_in, c_in = x.shape
    c_out, _, ksize = w.shape
    t_out = (t_in - ksize) // stride + 1
    y = np.zeros((batch, t_out, c_out), dtype=np.float64)
    for n in range(batch):
        for t in range(t_out):
            for o in range(c_out):
                acc = float(b[o])
                for k in range(ksize):
                    for c in range(c_in):
                        acc += float(x[n, t * stride + k, c]) * float(w[o, c, k])
                y[n, t, o] = acc
    return y


def deconv1d_oracle(x, w, b, stride):
    """Nested-loop transposed 1-D convolution, (B,T,Ci) x (Ci,Co,K)."""
    batch, t_in, c_in = x.shape
    _, c_out, ksize = w.shape
    t_out = (t_in - 1) * stride + ksize
    y = np.zeros((batch, t_out, c_out), dtype=np.float64)
    for n in range(batch):
        for t in range(t_in):
            for c in range(c_in):
                for o in range(c_out):
                    for k in range(ksize):
                        y[n, t * stride + k, o] += float(x[n, t, c]) * float(w[c, o, k])
    for o in range(c_out):
        y[:, :, o] += float(b[o])
    return y


def one_vs_rest_oracle(counts):
    """Enumerate TP/FP/TN/FN per class by explicit loops over all pairs."""
    counts = np.asarray(counts)
    cn = counts.shape[0]
    total = counts.sum()
    tp = np.zeros(cn, dtype=np.int64)
    fp = np.zeros(cn, dtype=np.int64)
    fn = np.zeros(cn, dtype=np.int64)
    tn = np.zeros(cn, dtype=np.int64)
    for c in range(cn):
        for t in range(cn):
            for p in range(cn):
                v = counts[t, p]
                if t == c and p == c:
                    tp[c] += v
                elif p == c:
                    fp[c] += v
                elif t == c:
                    fn[c] += v
                else:
                    tn[c] += v
    assert (tp + fp + fn + tn == total).all()
    acc = (tp.sum() + tn.sum()) / (tp.sum() + tn.sum() + fp.sum() + fn.sum())
    f1 = 2 * tp.sum() / (2 * tp.sum() + fp.sum() + fn.sum())
    return float(acc), float(f1)


def signature_dataset(rng, classes, per_class, frames, dims, noise=0.3,
                      bases=None, gain=None, bias=None):
    """Windows with one constant signature per class plus small noise.

    A linear classifier separates these by construction (see
    perceptron_accuracy).  ``gain``/``bias`` apply a per-dimension affine
    domain shift.
    """
    if bases is None:
        bases = rng.standard_normal((classes, dims)) * 2.0
    feats = []
    labels = []
    for c in range(classes):
        block = bases[c] + noise * rng.standard_normal((per_class, frames, dims))
        feats.append(block)
        labels.extend([c] * per_class)
    x = np.concatenate(feats).astype(np.float32)
    y = np.array(labels, dtype=np.int64)
    order = rng.permutation(len(y))
    x, y = x[order], y[order]
    if gain is not None:
        x = x * gain.astype(np.float32)
    if bias is not None:
        x = x + bias.astype(np.float32)
    return x, y, bases


def perceptron_accuracy(x_train, y_train, x_test, y_test, classes, epochs=50):
    """Multiclass perceptron on per-window feature means; the independent
    check that a signature dataset really is linearly separable."""
    f_train = x_train.mean(axis=1)
    f_test = x_test.mean(axis=1)
    f_train = np.hstack([f_train, np.ones((len(f_train), 1))])
    f_test = np.hstack([f_test, np.ones((len(f_test), 1))])
    w = np.zeros((classes, f_train.shape[1]))
    for _ in range(epochs):
        wrong = 0
        for i in range(len(f_train)):
            pred = int(np.argmax(w @ f_train[i]))
            truth = int(y_train[i])
            if pred != truth:
                w[truth] += f_train[i]
                w[pred] -= f_train[i]
                wrong += 1
        if wrong == 0:
            break
    preds = np.argmax(f_test @ w.T, axis=1)
    return float((preds == y_test).mean())

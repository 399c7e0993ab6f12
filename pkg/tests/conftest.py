import numpy as np
import pytest

from vimu.net import ConvSpec, NetworkConfig, TrainConfig, evaluate, fine_tune, train
from vimu.rigs import toy_humanoid


@pytest.fixture(scope="session")
def toy_rig():
    return toy_humanoid()


def tiny_net_config(penalty_weight=0.5, frames=16, dims=4, classes=3):
    """2 conv / 2 fc / 2 deconv, ~1k parameters; the gradient-check subject."""
    return NetworkConfig(
        frames=frames,
        dims=dims,
        classes=classes,
        conv=(ConvSpec(4, 6, 2), ConvSpec(3, 8, 1)),
        fc=(12, classes),
        penalty_weight=penalty_weight,
    )


@pytest.fixture(scope="session")
def transfer_experiment():
    """Shared pretrain/fine-tune run on an affine-shifted target domain.

    Used by both the fine-tune unit tests and the acceptance criterion so
    the (comparatively) expensive run happens once per session.
    """
    import helpers

    # moderate class margins plus a compressive gain and positive bias: the
    # shift reliably breaks direct transfer (below 50 percent here) while the
    # frozen conv features stay class-separable, so the head can re-learn
    rng = np.random.default_rng(2024)
    classes, frames, dims = 3, 30, 12
    bases = rng.standard_normal((classes, dims)) * 0.8
    src_x, src_y, _ = helpers.signature_dataset(
        rng, classes, 120, frames, dims, noise=0.5, bases=bases
    )
    gain = rng.uniform(0.6, 1.0, size=dims)
    bias = rng.uniform(1.0, 2.0, size=dims)
    tgt_train_x, tgt_train_y, _ = helpers.signature_dataset(
        rng, classes, 60, frames, dims, noise=0.5, bases=bases, gain=gain, bias=bias
    )
    tgt_test_x, tgt_test_y, _ = helpers.signature_dataset(
        rng, classes, 60, frames, dims, noise=0.5, bases=bases, gain=gain, bias=bias
    )

    cfg = NetworkConfig(
        frames=frames, dims=dims, classes=classes,
        conv=(ConvSpec(6, 8, 2), ConvSpec(5, 16, 2)),
        fc=(32, classes), penalty_weight=0.25,
    )
    pre = train(src_x, src_y, cfg, TrainConfig(epochs=40, seed=5, batch_size=32))
    _, src_acc = evaluate(pre.params, src_x, src_y)
    _, direct_acc = evaluate(pre.params, tgt_test_x, tgt_test_y)

    before = {n: a.tobytes() for n, a in pre.params.named_tensors()}
    tuned = fine_tune(
        pre.params, tgt_train_x, tgt_train_y,
        TrainConfig(epochs=20, seed=6, batch_size=32, freeze_encoder=True,
                    learning_rate=0.02),
    )
    _, tuned_acc = evaluate(tuned.params, tgt_test_x, tgt_test_y)
    after = {n: a.tobytes() for n, a in tuned.params.named_tensors()}
    return {
        "pretrained": pre.params,
        "tuned": tuned.params,
        "bytes_before": before,
        "bytes_after": after,
        "source_accuracy": src_acc,
        "direct_transfer_accuracy": direct_acc,
        "fine_tuned_accuracy": tuned_acc,
    }

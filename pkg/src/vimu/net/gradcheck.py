"""Central finite-difference checking of the analytic gradients.

Used by the test suite; checks are run on float64 parameters so the
difference quotient is not drowned by rounding.
"""

import numpy as np

from .network import Network, NetworkParams


def finite_difference_gradients(params: NetworkParams, loss_fn, eps=1e-4):
    """Numeric d(loss)/d(tensor) for every entry of every parameter.

    ``loss_fn`` is called with no arguments and must read the (mutated)
    ``params`` each time.
    """
    out = {}
    for name, tensor in params.named_tensors():
        grad = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = loss_fn()
            flat[i] = orig - eps
            lo = loss_fn()
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * eps)
        out[name] = grad
    return out


def relative_errors(analytic, numeric, floor=1e-5):
    """Per-tensor max of |a-n| / max(|a|, |n|, floor)."""
    out = {}
    for name, num in numeric.items():
        ana = analytic[name]
        denom = np.maximum(np.maximum(np.abs(ana), np.abs(num)), floor)
        out[name] = float(np.max(np.abs(ana - num) / denom))
    return out


def check_joint_loss_gradients(params: NetworkParams, x, onehot,
                               penalty_weight=None, eps=1e-4, floor=1e-5):
    """Max relative error between analytic and finite-difference gradients.

    Returns (worst error over all tensors, per-tensor error dict).
    """
    net = Network(params)
    grads, _ = net.backward(x, onehot, penalty_weight)
    analytic = dict(grads.named_tensors())

    def loss():
        return Network(params).joint_loss(x, onehot, penalty_weight).total

    numeric = finite_difference_gradients(params, loss, eps)
    errors = relative_errors(analytic, numeric, floor)
    return max(errors.values()), errors

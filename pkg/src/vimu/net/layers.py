"""Activation functions and the conv / dense / deconv layer primitives.

Each forward returns (output, cache); each backward consumes the cache and
the upstream gradient and returns (input gradient, weight gradient, bias
gradient).  Convolutions run on the selected kernel backend.
"""

import numpy as np

from .. import kernels
from ..errors import ConfigurationError

ACTIVATIONS = ("relu", "tanh", "sigmoid", "linear")


def check_activation(name):
    if name not in ACTIVATIONS:
        raise ConfigurationError(
            f"unknown activation {name!r}; choose from {ACTIVATIONS}"
        )
    return name


def act_forward(name, z):
    if name == "relu":
        return np.maximum(z, 0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def act_backward(name, z, a, ga):
    if name == "relu":
        return ga * (z > 0)
    if name == "tanh":
        return ga * (1.0 - a * a)
    if name == "sigmoid":
        return ga * a * (1.0 - a)
    return ga


def conv_forward(x, w, b, stride, activation):
    z = kernels.conv1d_forward(x, w, b, stride)
    a = act_forward(activation, z)
    return a, (x, z, a)


def conv_backward(cache, w, stride, activation, ga):
    x, z, a = cache
    gz = act_backward(activation, z, a, ga)
    return kernels.conv1d_backward(x, w, stride, gz)


def deconv_forward(x, w, b, stride, activation):
    z = kernels.deconv1d_forward(x, w, b, stride)
    a = act_forward(activation, z)
    return a, (x, z, a)


def deconv_backward(cache, w, stride, activation, ga):
    x, z, a = cache
    gz = act_backward(activation, z, a, ga)
    return kernels.deconv1d_backward(x, w, stride, gz)


def dense_forward(x, w, b, activation):
    z = x @ w.T + b
    a = act_forward(activation, z)
    return a, (x, z, a)


def dense_backward(cache, w, activation, ga):
    x, z, a = cache
    gz = act_backward(activation, z, a, ga)
    gw = gz.T @ x
    gb = gz.sum(axis=0)
    gx = gz @ w
    return gx, gw, gb


def softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)

"""Network configuration, parameters, forward passes, joint loss, backprop.

Parameter groups: ``encoder`` (strided conv layers), ``classifier``
(fully-connected layers ending in linear class scores), ``decoder``
(transposed convs mirroring the encoder so the reconstruction has exactly
the input shape).  The groups partition the full parameter set.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, ValidationError
from . import layers
from .layers import check_activation, softmax

_DEBUG_FINITE = False


def set_debug_finite(on):
    """Toggle the after-every-op finite check (slow; meant for tests)."""
    global _DEBUG_FINITE
    _DEBUG_FINITE = bool(on)


def _check_finite(name, arr):
    if _DEBUG_FINITE and not np.all(np.isfinite(arr)):
        raise ValidationError(f"non-finite values in {name}")


@dataclass(frozen=True)
class ConvSpec:
    """One encoder conv layer: kernel length along time, output channels, stride."""

    kernel: int
    channels: int
    stride: int = 1

    def __post_init__(self):
        if self.kernel < 1 or self.channels < 1 or self.stride < 1:
            raise ConfigurationError(f"invalid conv spec {self}")


@dataclass(frozen=True)
class NetworkConfig:
    """Static network layout; penalty_weight has no default on purpose."""

    frames: int
    dims: int
    classes: int
    conv: tuple
    fc: tuple
    penalty_weight: float
    activation: str = "relu"
    classifier_output: str = "softmax"  # squash for the squared-error loss

    def __post_init__(self):
        conv = tuple(
            c if isinstance(c, ConvSpec) else ConvSpec(**c) for c in self.conv
        )
        object.__setattr__(self, "conv", conv)
        object.__setattr__(self, "fc", tuple(int(w) for w in self.fc))
        if not conv:
            raise ConfigurationError("need at least one conv layer")
        if not self.fc:
            raise ConfigurationError("need at least one fully-connected layer")
        if self.fc[-1] != self.classes:
            raise ConfigurationError(
                f"last fc width {self.fc[-1]} must equal class count {self.classes}"
            )
        if self.penalty_weight < 0:
            raise ValidationError(
                f"penalty_weight must be >= 0, got {self.penalty_weight}"
            )
        if self.classifier_output not in ("softmax", "linear"):
            raise ConfigurationError(
                f"classifier_output must be softmax or linear, got {self.classifier_output!r}"
            )
        check_activation(self.activation)
        self.time_lengths()  # fails fast on a non-mirrorable layout

    def time_lengths(self):
        """Per-layer time lengths [T_0 .. T_U]; raises if the mirrored decoder
        could not reproduce the input length exactly."""
        lengths = [self.frames]
        for i, spec in enumerate(self.conv):
            t = lengths[-1]
            if t < spec.kernel:
                raise ConfigurationError(
                    f"conv layer {i}: kernel {spec.kernel} exceeds time length {t}"
                )
            if (t - spec.kernel) % spec.stride != 0:
                raise ConfigurationError(
                    f"conv layer {i}: (time {t} - kernel {spec.kernel}) not divisible "
                    f"by stride {spec.stride}; the mirrored decoder cannot restore "
                    "the input length"
                )
            lengths.append((t - spec.kernel) // spec.stride + 1)
        latent = lengths[-1] * self.conv[-1].channels
        if latent >= self.frames * self.dims:
            raise ConfigurationError(
                f"latent size {latent} must be smaller than input size "
                f"{self.frames * self.dims}"
            )
        return lengths

    @property
    def channel_counts(self):
        """[C_0 .. C_U] with C_0 = dims."""
        return [self.dims] + [spec.channels for spec in self.conv]

    @property
    def latent_size(self):
        return self.time_lengths()[-1] * self.conv[-1].channels

    def to_dict(self):
        return {
            "frames": self.frames,
            "dims": self.dims,
            "classes": self.classes,
            "conv": [
                {"kernel": c.kernel, "channels": c.channels, "stride": c.stride}
                for c in self.conv
            ],
            "fc": list(self.fc),
            "penalty_weight": self.penalty_weight,
            "activation": self.activation,
            "classifier_output": self.classifier_output,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["conv"] = tuple(ConvSpec(**c) for c in d["conv"])
        d["fc"] = tuple(d["fc"])
        return cls(**d)


@dataclass
class LayerParams:
    weight: np.ndarray
    bias: np.ndarray

    def copy(self):
        return LayerParams(self.weight.copy(), self.bias.copy())


def _iter_named(groups):
    prefixes = {"encoder": "conv", "classifier": "fc", "decoder": "deconv"}
    for group_name, group in groups:
        kind = prefixes[group_name]
        for i, lp in enumerate(group):
            yield f"{group_name}.{kind}{i}.weight", lp.weight
            yield f"{group_name}.{kind}{i}.bias", lp.bias


@dataclass
class NetworkParams:
    """The full parameter set, partitioned into three disjoint groups."""

    config: NetworkConfig
    encoder: list
    classifier: list
    decoder: list

    def groups(self):
        return (
            ("encoder", self.encoder),
            ("classifier", self.classifier),
            ("decoder", self.decoder),
        )

    def named_tensors(self):
        """(name, array) pairs in the canonical serialization order."""
        return list(_iter_named(self.groups()))

    def group(self, name):
        return dict(self.groups())[name]

    @property
    def dtype(self):
        return self.encoder[0].weight.dtype

    def copy(self):
        return NetworkParams(
            self.config,
            [lp.copy() for lp in self.encoder],
            [lp.copy() for lp in self.classifier],
            [lp.copy() for lp in self.decoder],
        )

    def astype(self, dtype):
        return NetworkParams(
            self.config,
            *[
                [LayerParams(lp.weight.astype(dtype), lp.bias.astype(dtype)) for lp in g]
                for g in (self.encoder, self.classifier, self.decoder)
            ],
        )


@dataclass
class Gradients:
    """Same layout as NetworkParams, holding d(loss)/d(tensor)."""

    encoder: list = field(default_factory=list)
    classifier: list = field(default_factory=list)
    decoder: list = field(default_factory=list)

    def groups(self):
        return (
            ("encoder", self.encoder),
            ("classifier", self.classifier),
            ("decoder", self.decoder),
        )

    def named_tensors(self):
        return list(_iter_named(self.groups()))

    @classmethod
    def zeros_like(cls, params: NetworkParams):
        return cls(
            *[
                [LayerParams(np.zeros_like(lp.weight), np.zeros_like(lp.bias)) for lp in g]
                for g in (params.encoder, params.classifier, params.decoder)
            ]
        )


def _decoder_layout(config: NetworkConfig):
    """Mirrored deconv specs: (in_channels, out_channels, kernel, stride) per layer."""
    chans = config.channel_counts
    out = []
    for j in range(len(config.conv) - 1, -1, -1):
        spec = config.conv[j]
        out.append((chans[j + 1], chans[j], spec.kernel, spec.stride))
    return out


def init_params(config: NetworkConfig, seed, dtype=np.float32) -> NetworkParams:
    """Fan-in-scaled uniform weights, zero biases, fully seeded.

    ``seed`` may be an int or an existing numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    chans = config.channel_counts
    encoder = []
    for i, spec in enumerate(config.conv):
        w = uniform((spec.channels, chans[i], spec.kernel), chans[i] * spec.kernel)
        encoder.append(LayerParams(w, np.zeros(spec.channels, dtype=dtype)))

    classifier = []
    widths = [config.latent_size] + list(config.fc)
    for i in range(len(config.fc)):
        w = uniform((widths[i + 1], widths[i]), widths[i])
        classifier.append(LayerParams(w, np.zeros(widths[i + 1], dtype=dtype)))

    decoder = []
    for c_in, c_out, kernel, _ in _decoder_layout(config):
        w = uniform((c_in, c_out, kernel), c_in * kernel)
        decoder.append(LayerParams(w, np.zeros(c_out, dtype=dtype)))

    return NetworkParams(config, encoder, classifier, decoder)


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    class_loss: float
    recon_loss: float


class Network:
    """Stateless forward/backward over a NetworkParams instance."""

    def __init__(self, params: NetworkParams):
        self.params = params
        self.config = params.config

    # ---- forward passes -------------------------------------------------

    def _check_input(self, x):
        x = np.asarray(x)
        if x.ndim == 2:
            x = x[None]
        cfg = self.config
        if x.ndim != 3 or x.shape[1] != cfg.frames or x.shape[2] != cfg.dims:
            raise ValidationError(
                f"input shape {x.shape} does not match expected "
                f"(batch, {cfg.frames}, {cfg.dims})"
            )
        return np.ascontiguousarray(x, dtype=self.params.dtype)

    def _encode(self, x):
        caches = []
        a = x
        for lp, spec in zip(self.params.encoder, self.config.conv):
            a, cache = layers.conv_forward(
                a, lp.weight, lp.bias, spec.stride, self.config.activation
            )
            _check_finite("encoder activation", a)
            caches.append(cache)
        return a, caches

    def _classify(self, latent):
        caches = []
        a = latent.reshape(latent.shape[0], -1)
        flat_shape = latent.shape
        n_layers = len(self.params.classifier)
        for i, lp in enumerate(self.params.classifier):
            act = "linear" if i == n_layers - 1 else self.config.activation
            a, cache = layers.dense_forward(a, lp.weight, lp.bias, act)
            _check_finite("classifier activation", a)
            caches.append(cache)
        return a, (caches, flat_shape)

    def _decode(self, latent):
        caches = []
        a = latent
        layout = _decoder_layout(self.config)
        n_layers = len(layout)
        for i, (lp, (_, _, kernel, stride)) in enumerate(zip(self.params.decoder, layout)):
            act = "linear" if i == n_layers - 1 else self.config.activation
            a, cache = layers.deconv_forward(a, lp.weight, lp.bias, stride, act)
            _check_finite("decoder activation", a)
            caches.append(cache)
        return a, caches

    def forward_encoder(self, x):
        """Latent features (batch, T_latent, C_latent)."""
        return self._encode(self._check_input(x))[0]

    def forward_classifier(self, latent):
        """Linear class scores (batch, classes) from the latent."""
        return self._classify(np.asarray(latent, dtype=self.params.dtype))[0]

    def forward_decoder(self, latent):
        """Reconstruction with exactly the input shape (batch, frames, dims)."""
        return self._decode(np.asarray(latent, dtype=self.params.dtype))[0]

    def class_outputs(self, scores):
        """Scores after the configured squash (softmax or identity)."""
        if self.config.classifier_output == "softmax":
            return softmax(scores)
        return scores

    # ---- loss and gradients ---------------------------------------------

    def _check_labels(self, onehot, batch):
        onehot = np.asarray(onehot, dtype=self.params.dtype)
        if onehot.shape != (batch, self.config.classes):
            raise ValidationError(
                f"one-hot labels shape {onehot.shape} does not match "
                f"(batch, classes) = ({batch}, {self.config.classes})"
            )
        return onehot

    def _penalty(self, penalty_weight):
        lam = self.config.penalty_weight if penalty_weight is None else penalty_weight
        if lam < 0:
            raise ValidationError(f"penalty_weight must be >= 0, got {lam}")
        return lam

    def joint_loss(self, x, onehot, penalty_weight=None) -> LossBreakdown:
        """class_loss + penalty_weight * recon_loss (both mean squared errors)."""
        x = self._check_input(x)
        onehot = self._check_labels(onehot, x.shape[0])
        lam = self._penalty(penalty_weight)
        latent, _ = self._encode(x)
        scores, _ = self._classify(latent)
        outputs = self.class_outputs(scores)
        class_loss = float(np.mean((outputs - onehot) ** 2))
        recon, _ = self._decode(latent)
        recon_loss = float(np.mean((recon - x) ** 2))
        return LossBreakdown(class_loss + lam * recon_loss, class_loss, recon_loss)

    def backward(self, x, onehot, penalty_weight=None, classifier_only=False):
        """Analytic gradients of the joint loss for every parameter tensor.

        Returns (Gradients, LossBreakdown).  With ``classifier_only`` the
        encoder/decoder gradients are left at zero and their backward pass
        is skipped (used by FC-only fine-tuning).
        """
        x = self._check_input(x)
        onehot = self._check_labels(onehot, x.shape[0])
        lam = self._penalty(penalty_weight)
        cfg = self.config

        latent, enc_caches = self._encode(x)
        scores, (cls_caches, latent_shape) = self._classify(latent)
        outputs = self.class_outputs(scores)
        class_loss = float(np.mean((outputs - onehot) ** 2))
        recon, dec_caches = self._decode(latent)
        recon_loss = float(np.mean((recon - x) ** 2))

        grads = Gradients.zeros_like(self.params)

        # classifier head: d(class_loss)/d(scores)
        g_out = (2.0 / outputs.size) * (outputs - onehot)
        if cfg.classifier_output == "softmax":
            inner = (g_out * outputs).sum(axis=1, keepdims=True)
            g_scores = outputs * (g_out - inner)
        else:
            g_scores = g_out
        ga = g_scores.astype(self.params.dtype)
        n_cls = len(self.params.classifier)
        for i in range(n_cls - 1, -1, -1):
            act = "linear" if i == n_cls - 1 else cfg.activation
            ga, gw, gb = layers.dense_backward(
                cls_caches[i], self.params.classifier[i].weight, act, ga
            )
            grads.classifier[i].weight[...] = gw
            grads.classifier[i].bias[...] = gb
        g_latent_cls = ga.reshape(latent_shape)

        if classifier_only:
            return grads, LossBreakdown(
                class_loss + lam * recon_loss, class_loss, recon_loss
            )

        # decoder: d(lam * recon_loss)/d(recon)
        g_recon = (2.0 * lam / recon.size) * (recon - x)
        ga = g_recon.astype(self.params.dtype)
        layout = _decoder_layout(cfg)
        for i in range(len(layout) - 1, -1, -1):
            act = "linear" if i == len(layout) - 1 else cfg.activation
            stride = layout[i][3]
            ga, gw, gb = layers.deconv_backward(
                dec_caches[i], self.params.decoder[i].weight, stride, act, ga
            )
            grads.decoder[i].weight[...] = gw
            grads.decoder[i].bias[...] = gb
        g_latent = g_latent_cls + ga

        # encoder receives both loss paths through the latent
        ga = g_latent
        for i in range(len(cfg.conv) - 1, -1, -1):
            ga, gw, gb = layers.conv_backward(
                enc_caches[i], self.params.encoder[i].weight, cfg.conv[i].stride,
                cfg.activation, ga,
            )
            grads.encoder[i].weight[...] = gw
            grads.encoder[i].bias[...] = gb

        return grads, LossBreakdown(
            class_loss + lam * recon_loss, class_loss, recon_loss
        )

    def predict(self, x):
        """(labels, squashed scores); argmax ties resolve to the lowest id."""
        x = self._check_input(x)
        latent, _ = self._encode(x)
        scores, _ = self._classify(latent)
        outputs = self.class_outputs(scores)
        return np.argmax(outputs, axis=1), outputs

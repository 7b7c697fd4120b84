"""
Multitask temporal convolutional network in plain numpy.

The network is a stack of non-causal dilated 1-D convolutions over time, each
followed by an ELU and spatial dropout. Every layer after the first adds its
output to a residual stream. Two heads read the final stream:

* beat head -- per-frame linear projection and sigmoid,
* tempo head -- global average pool over time, linear projection and softmax
  over 1-BPM tempo bins.

Gradients are derived by hand (see :func:`backward`) and checked against
finite differences in the test-suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..errors import InvalidConfig, ShapeMismatch


def _default_dilations():
    return tuple(2 ** i for i in range(11))


@dataclass
class TcnConfig:
    num_bands: int = 81
    num_layers: int = 11
    kernel_size: int = 5
    num_filters: int = 16
    dilations: tuple = field(default_factory=_default_dilations)
    dropout_rate: float = 0.1
    tempo_bins: int = 300

    def __post_init__(self):
        self.dilations = tuple(int(d) for d in self.dilations)

    def validate(self):
        if self.num_layers != len(self.dilations):
            raise InvalidConfig('num_layers must equal the number of dilations')
        if self.num_layers < 1:
            raise InvalidConfig('need at least one layer')
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise InvalidConfig('kernel_size must be odd and positive')
        if min(self.dilations) < 1:
            raise InvalidConfig('dilations must be positive')
        if self.num_bands < 1 or self.num_filters < 1 or self.tempo_bins < 2:
            raise InvalidConfig('num_bands, num_filters and tempo_bins must be positive')
        if not 0 <= self.dropout_rate < 1:
            raise InvalidConfig('dropout_rate must lie in [0, 1)')


@dataclass
class TcnWeights:
    """Named parameter tensors of one network together with its config."""

    cfg: TcnConfig
    tensors: Dict[str, np.ndarray]

    def copy(self):
        return TcnWeights(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype):
        return TcnWeights(self.cfg, {k: v.astype(dtype) for k, v in self.tensors.items()})

    def num_parameters(self):
        return sum(v.size for v in self.tensors.values())

    def __getitem__(self, name):
        return self.tensors[name]


@dataclass
class ModelOutput:
    beat_activation: np.ndarray
    tempo_activation: np.ndarray
    beat_logits: Optional[np.ndarray] = None
    tempo_logits: Optional[np.ndarray] = None


def layer_shapes(cfg):
    """Ordered mapping of tensor name to shape for `cfg`."""
    shapes = {}
    in_ch = cfg.num_bands
    for i in range(cfg.num_layers):
        shapes[f'conv{i}.kernel'] = (cfg.kernel_size, in_ch, cfg.num_filters)
        shapes[f'conv{i}.bias'] = (cfg.num_filters,)
        in_ch = cfg.num_filters
    shapes['beat.weight'] = (cfg.num_filters,)
    shapes['beat.bias'] = (1,)
    shapes['tempo.weight'] = (cfg.num_filters, cfg.tempo_bins)
    shapes['tempo.bias'] = (cfg.tempo_bins,)
    return shapes


def init_model(cfg=None, seed=0, dtype=np.float32):
    """
    Draw weights uniformly in ``+-1/sqrt(fan_in)``; biases start at zero.

    The same `cfg` and `seed` always give identical weights.
    """
    cfg = cfg or TcnConfig()
    cfg.validate()
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in layer_shapes(cfg).items():
        if name.endswith('bias'):
            tensors[name] = np.zeros(shape, dtype=dtype)
            continue
        fan_in = int(np.prod(shape[:-1])) if len(shape) > 1 else shape[0]
        limit = 1.0 / np.sqrt(fan_in)
        tensors[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
    return TcnWeights(cfg, tensors)


def receptive_field(cfg):
    """Number of input frames seen by one output frame."""
    return 1 + (cfg.kernel_size - 1) * sum(cfg.dilations)


def elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0)))


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


def conv1d(x, kernel, bias, dilation):
    """Same-length non-causal dilated convolution of ``x`` (T, C_in)."""
    k = kernel.shape[0]
    t = x.shape[0]
    pad = (k - 1) // 2 * dilation
    xp = np.pad(x, ((pad, pad), (0, 0)))
    out = np.broadcast_to(bias, (t, kernel.shape[2])).copy()
    for j in range(k):
        out += xp[j * dilation:j * dilation + t] @ kernel[j]
    return out


def conv1d_backward(x, kernel, dilation, grad_out):
    """Gradients of :func:`conv1d` w.r.t. input, kernel and bias."""
    k = kernel.shape[0]
    t = x.shape[0]
    pad = (k - 1) // 2 * dilation
    xp = np.pad(x, ((pad, pad), (0, 0)))
    grad_xp = np.zeros_like(xp)
    grad_kernel = np.empty_like(kernel)
    for j in range(k):
        sl = slice(j * dilation, j * dilation + t)
        grad_kernel[j] = xp[sl].T @ grad_out
        grad_xp[sl] += grad_out @ kernel[j].T
    return grad_xp[pad:pad + t], grad_kernel, grad_out.sum(axis=0)


def _features(spec):
    return spec.values if hasattr(spec, 'values') else np.asarray(spec)


def forward(weights, spec, training_mode=False, rng=None, return_cache=False):
    """
    Run the network on a spectrogram.

    Parameters
    ----------
    weights : TcnWeights
    spec : Spectrogram or numpy array, shape (frames, bands)
    training_mode : bool, optional
        Enable spatial dropout (whole channels dropped per sequence).
    rng : numpy Generator, optional
        Source of dropout masks; required in training mode.
    return_cache : bool, optional
        Also return the intermediates needed by :func:`backward`.

    Returns
    -------
    ModelOutput, or (ModelOutput, cache) if `return_cache`.

    """
    cfg = weights.cfg
    w = weights.tensors
    dtype = w['beat.weight'].dtype
    x = np.asarray(_features(spec), dtype=dtype)
    if x.ndim != 2 or x.shape[1] != cfg.num_bands:
        raise ShapeMismatch(
            f'expected (frames, {cfg.num_bands}) features, got {x.shape}')
    if x.shape[0] < 1:
        raise ShapeMismatch('spectrogram has no frames')
    if training_mode and cfg.dropout_rate > 0 and rng is None:
        raise ValueError('training mode needs an rng for dropout masks')

    layers = []
    h = x
    for i, d in enumerate(cfg.dilations):
        z = conv1d(h, w[f'conv{i}.kernel'], w[f'conv{i}.bias'], d)
        a = elu(z)
        mask = None
        if training_mode and cfg.dropout_rate > 0:
            keep = rng.random(cfg.num_filters) >= cfg.dropout_rate
            mask = (keep / (1.0 - cfg.dropout_rate)).astype(dtype)
            out = a * mask
        else:
            out = a
        layers.append((h, z, a, mask))
        h = out if i == 0 else h + out

    beat_logits = h @ w['beat.weight'] + w['beat.bias'][0]
    pooled = h.mean(axis=0)
    tempo_logits = pooled @ w['tempo.weight'] + w['tempo.bias']
    out = ModelOutput(sigmoid(beat_logits), softmax(tempo_logits), beat_logits, tempo_logits)
    if return_cache:
        return out, {'layers': layers, 'final': h, 'pooled': pooled}
    return out


def backward(weights, cache, grad_beat_logits, grad_tempo_logits):
    """
    Back-propagate logit gradients through the network.

    Returns
    -------
    dict
        One gradient array per tensor name, same shapes as the weights.

    """
    cfg = weights.cfg
    w = weights.tensors
    h = cache['final']
    t = h.shape[0]
    grads = {}
    grads['beat.weight'] = h.T @ grad_beat_logits
    grads['beat.bias'] = np.array([grad_beat_logits.sum()], dtype=h.dtype)
    grads['tempo.weight'] = np.outer(cache['pooled'], grad_tempo_logits)
    grads['tempo.bias'] = np.asarray(grad_tempo_logits, dtype=h.dtype).copy()

    grad_h = np.outer(grad_beat_logits, w['beat.weight'])
    grad_h += (w['tempo.weight'] @ grad_tempo_logits) / t

    for i in range(cfg.num_layers - 1, -1, -1):
        h_in, z, a, mask = cache['layers'][i]
        grad_a = grad_h * mask if mask is not None else grad_h
        grad_z = grad_a * np.where(z > 0, 1.0, a + 1.0)
        grad_in, grad_k, grad_b = conv1d_backward(
            h_in, w[f'conv{i}.kernel'], cfg.dilations[i], grad_z)
        grads[f'conv{i}.kernel'] = grad_k
        grads[f'conv{i}.bias'] = grad_b
        # layer 0 has no residual path and its input is the spectrogram
        grad_h = grad_h + grad_in if i > 0 else grad_in
    return grads

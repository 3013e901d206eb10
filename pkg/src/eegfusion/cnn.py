"""Small 3D CNN with hand-written forward and reverse passes, float64 throughout.

Architecture: two 3x3x3 conv+ReLU pairs, 2x2x2 max-pool with (0,1,1) padding,
two more conv+ReLU pairs at doubled width, a second pool, then a linear map to
two logits. Input blocks are (1, 32, 5, 3): one feature channel over EEG
channels x bands x frames. Convolutions are im2col + matmul; pooling records
argmax positions and routes gradients through them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError

CHECKPOINT_MAGIC = b"MCA3DCNN"
CHECKPOINT_VERSION = 1


def _triple(v) -> tuple[int, int, int]:
    if np.isscalar(v):
        return (int(v),) * 3
    t = tuple(int(d) for d in v)
    if len(t) != 3:
        raise ShapeMismatchError(f"expected a scalar or 3-tuple, got {v!r}")
    return t


def _out_size(dim: int, pad: int, kernel: int, stride: int) -> int:
    size = (dim + 2 * pad - kernel) // stride + 1
    if size < 1 or dim + 2 * pad < kernel:
        raise ShapeMismatchError(
            f"kernel {kernel} does not fit axis of size {dim} with padding {pad}"
        )
    return size


def _im2col(x, kernel, pad, stride):
    """Contiguous (N * n_windows, kernel_volume * C_in) patch matrix.

    Columns are kernel-major / channel-minor: going channels-last before the
    window extraction keeps the gather's inner runs contiguous, which matters
    because the spatial extents here are tiny. Weight matrices must be
    flattened with the matching (kd, kh, kw, C_in) order.
    """
    pd, ph, pw = _triple(pad)
    sd, sh, sw = _triple(stride)
    kd, kh, kw = _triple(kernel)
    out = tuple(
        _out_size(dim, p, k, s)
        for dim, p, k, s in zip(x.shape[2:], (pd, ph, pw), (kd, kh, kw), (sd, sh, sw))
    )
    x_cl = np.ascontiguousarray(x.transpose(0, 2, 3, 4, 1))  # (N, D, H, W, C)
    xp = np.pad(x_cl, ((0, 0), (pd, pd), (ph, ph), (pw, pw), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kd, kh, kw), axis=(1, 2, 3))
    win = win[:, ::sd, ::sh, ::sw]  # (N, Do, Ho, Wo, C, kd, kh, kw)
    cols = win.transpose(0, 1, 2, 3, 5, 6, 7, 4).reshape(
        x.shape[0] * out[0] * out[1] * out[2], kd * kh * kw * x.shape[1]
    )
    return np.ascontiguousarray(cols), out


def _weights_as_matrix(weights):
    """(C_out, kd * kh * kw * C_in) flattening matching the _im2col column order."""
    c_out = weights.shape[0]
    return np.ascontiguousarray(weights.transpose(0, 2, 3, 4, 1).reshape(c_out, -1))


def _col2im(dcols, x_shape, kernel, pad, stride, out):
    """Scatter patch-matrix gradients back onto the (padded, then cropped) input."""
    n, c_in = x_shape[0], x_shape[1]
    pd, ph, pw = _triple(pad)
    sd, sh, sw = _triple(stride)
    kd, kh, kw = _triple(kernel)
    dxp = np.zeros((n, x_shape[2] + 2 * pd, x_shape[3] + 2 * ph, x_shape[4] + 2 * pw, c_in))
    grads = dcols.reshape(n, out[0], out[1], out[2], kd, kh, kw, c_in)
    for a in range(kd):
        for b in range(kh):
            for c in range(kw):
                dxp[
                    :,
                    a : a + sd * out[0] : sd,
                    b : b + sh * out[1] : sh,
                    c : c + sw * out[2] : sw,
                    :,
                ] += grads[:, :, :, :, a, b, c, :]
    dx = dxp[:, pd : pd + x_shape[2], ph : ph + x_shape[3], pw : pw + x_shape[4], :]
    return np.ascontiguousarray(dx.transpose(0, 4, 1, 2, 3))


def conv3d_forward(x, weights, bias, pad=1, stride=1):
    """Cross-correlation of (N, C_in, D, H, W) with (C_out, C_in, kd, kh, kw)."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if x.ndim != 5 or weights.ndim != 5 or x.shape[1] != weights.shape[1]:
        raise ShapeMismatchError(
            f"conv3d input {x.shape} incompatible with weights {weights.shape}"
        )
    cols, out = _im2col(x, weights.shape[2:], pad, stride)
    y = cols @ _weights_as_matrix(weights).T + bias
    y = y.reshape(x.shape[0], *out, weights.shape[0])
    return np.ascontiguousarray(y.transpose(0, 4, 1, 2, 3))


def conv3d_backward(dy, x, weights, pad=1, stride=1, cols=None):
    """Gradients (dx, dweights, dbias) of conv3d_forward.

    ``cols`` may pass the forward pass's patch matrix to skip re-extraction.
    At unit stride dx is computed as a transposed convolution (one more
    matmul); otherwise the generic col2im scatter is used.
    """
    dy = np.asarray(dy, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if cols is None:
        cols, _ = _im2col(x, weights.shape[2:], pad, stride)
    c_out = weights.shape[0]
    kd, kh, kw = weights.shape[2:]
    dy_mat = np.ascontiguousarray(dy.transpose(0, 2, 3, 4, 1)).reshape(-1, c_out)
    db = dy_mat.sum(axis=0)
    dw_mat = dy_mat.T @ cols  # (C_out, kd * kh * kw * C_in)
    dw = np.ascontiguousarray(
        dw_mat.reshape(c_out, kd, kh, kw, weights.shape[1]).transpose(0, 4, 1, 2, 3)
    )

    pads = _triple(pad)
    strides = _triple(stride)
    kdims = weights.shape[2:]
    if strides == (1, 1, 1) and all(k - 1 - p >= 0 for k, p in zip(kdims, pads)):
        flipped = np.ascontiguousarray(
            weights.transpose(1, 0, 2, 3, 4)[:, :, ::-1, ::-1, ::-1]
        )
        back_pad = tuple(k - 1 - p for k, p in zip(kdims, pads))
        dx = conv3d_forward(dy, flipped, np.zeros(flipped.shape[0]), pad=back_pad)
    else:
        dcols = dy_mat @ _weights_as_matrix(weights)
        dx = _col2im(dcols, x.shape, kdims, pad, stride, tuple(dy.shape[2:]))
    return dx, dw, db


def maxpool3d_forward(x, kernel=2, stride=2, pad=(0, 1, 1)):
    """Max pooling with -inf padding sentinels; returns (pooled, argmax indices)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 5:
        raise ShapeMismatchError(f"maxpool3d expects (N, C, D, H, W), got {x.shape}")
    pd, ph, pw = _triple(pad)
    sd, sh, sw = _triple(stride)
    kd, kh, kw = _triple(kernel)
    for dim, p, k, s in zip(x.shape[2:], (pd, ph, pw), (kd, kh, kw), (sd, sh, sw)):
        _out_size(dim, p, k, s)
    xp = np.pad(x, ((0, 0), (0, 0), (pd, pd), (ph, ph), (pw, pw)), constant_values=-np.inf)
    win = np.lib.stride_tricks.sliding_window_view(xp, (kd, kh, kw), axis=(2, 3, 4))
    win = win[:, :, ::sd, ::sh, ::sw]
    flat = win.reshape(win.shape[:5] + (kd * kh * kw,))
    idx = flat.argmax(axis=-1)
    pooled = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    if not np.isfinite(pooled).all():
        raise ShapeMismatchError("a pooling window contained only padding")
    return np.ascontiguousarray(pooled), idx


def maxpool3d_backward(dy, idx, x_shape, kernel=2, stride=2, pad=(0, 1, 1)):
    """Route each output gradient to the argmax position; padding receives zero."""
    dy = np.asarray(dy, dtype=np.float64)
    pd, ph, pw = _triple(pad)
    sd, sh, sw = _triple(stride)
    kd, kh, kw = _triple(kernel)
    n, ch = x_shape[0], x_shape[1]
    padded_shape = (n, ch, x_shape[2] + 2 * pd, x_shape[3] + 2 * ph, x_shape[4] + 2 * pw)
    dxp = np.zeros(padded_shape)

    od, oh, ow = dy.shape[2:]
    ni, ci, di, hi, wi = np.indices((n, ch, od, oh, ow), sparse=True)
    off_d = idx // (kh * kw)
    off_h = (idx % (kh * kw)) // kw
    off_w = idx % kw
    np.add.at(
        dxp,
        (ni, ci, di * sd + off_d, hi * sh + off_h, wi * sw + off_w),
        dy,
    )
    return np.ascontiguousarray(
        dxp[:, :, pd : pd + x_shape[2], ph : ph + x_shape[3], pw : pw + x_shape[4]]
    )


def softmax_cross_entropy(logits, labels):
    """Mean softmax cross-entropy over the batch; returns (loss, dlogits, probs)."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or logits.shape[0] != labels.shape[0]:
        raise ShapeMismatchError(f"logits {logits.shape} do not match {labels.shape[0]} labels")
    if labels.size and not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    labels = labels.astype(np.intp)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    n = logits.shape[0]
    loss = -log_probs[np.arange(n), labels].mean()
    probs = np.exp(log_probs)
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    return float(loss), dlogits, probs


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------

@dataclass
class Param:
    name: str
    value: np.ndarray
    grad: np.ndarray

    @classmethod
    def make(cls, name, value):
        value = np.ascontiguousarray(value, dtype=np.float64)
        return cls(name, value, np.zeros_like(value))


class Conv3d:
    def __init__(self, name, in_channels, out_channels, kernel=3, pad=1, stride=1, rng=None):
        self.name = name
        self.pad = pad
        self.stride = stride
        kd, kh, kw = _triple(kernel)
        fan_in = in_channels * kd * kh * kw
        rng = rng or np.random.default_rng(0)
        w = rng.standard_normal((out_channels, in_channels, kd, kh, kw)) * np.sqrt(2.0 / fan_in)
        self.weight = Param.make(f"{name}.weight", w)
        self.bias = Param.make(f"{name}.bias", np.zeros(out_channels))
        self._x = None
        self._cols = None

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 5 or x.shape[1] != self.weight.value.shape[1]:
            raise ShapeMismatchError(
                f"conv3d input {x.shape} incompatible with weights {self.weight.value.shape}"
            )
        self._x = x
        cols, out = _im2col(x, self.weight.value.shape[2:], self.pad, self.stride)
        self._cols = cols
        c_out = self.weight.value.shape[0]
        y = cols @ _weights_as_matrix(self.weight.value).T + self.bias.value
        return np.ascontiguousarray(y.reshape(x.shape[0], *out, c_out).transpose(0, 4, 1, 2, 3))

    def backward(self, dy):
        dx, dw, db = conv3d_backward(
            dy, self._x, self.weight.value, self.pad, self.stride, cols=self._cols
        )
        self.weight.grad += dw
        self.bias.grad += db
        return dx


class ReLU:
    def __init__(self):
        self._mask = None

    def params(self):
        return []

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy):
        return np.where(self._mask, dy, 0.0)


class MaxPool3d:
    def __init__(self, kernel=2, stride=2, pad=(0, 1, 1)):
        self.kernel = kernel
        self.stride = stride
        self.pad = pad
        self._idx = None
        self._x_shape = None

    def params(self):
        return []

    def forward(self, x):
        y, idx = maxpool3d_forward(x, self.kernel, self.stride, self.pad)
        self._idx = idx
        self._x_shape = x.shape
        return y

    def backward(self, dy):
        return maxpool3d_backward(dy, self._idx, self._x_shape, self.kernel, self.stride, self.pad)


class Flatten:
    def __init__(self):
        self._shape = None

    def params(self):
        return []

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class Linear:
    def __init__(self, name, in_features, out_features, rng=None):
        self.name = name
        rng = rng or np.random.default_rng(0)
        w = rng.standard_normal((out_features, in_features)) * np.sqrt(2.0 / in_features)
        self.weight = Param.make(f"{name}.weight", w)
        self.bias = Param.make(f"{name}.bias", np.zeros(out_features))
        self._x = None

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.weight.value.shape[1]:
            raise ShapeMismatchError(
                f"linear layer expects (N, {self.weight.value.shape[1]}), got {x.shape}"
            )
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, dy):
        self.weight.grad += dy.T @ self._x
        self.bias.grad += dy.sum(axis=0)
        return dy @ self.weight.value


class Network:
    """Plain layer stack; forward caches activations, backward walks them in reverse."""

    def __init__(self, layers, input_shape):
        self.layers = layers
        self.input_shape = tuple(input_shape)
        self.shape_chain = self._dry_run()

    def _dry_run(self):
        x = np.zeros((1,) + self.input_shape)
        chain = [x.shape[1:]]
        for layer in self.layers:
            x = layer.forward(x)
            chain.append(x.shape[1:])
        return chain

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def zero_grads(self):
        for p in self.params():
            p.grad[...] = 0.0

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise ShapeMismatchError(f"expected batch of {self.input_shape}, got {x.shape}")
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dlogits):
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad


def build_network(seed: int = 0, input_shape=(1, 32, 5, 3)) -> Network:
    """The two-block conv stack ending in a two-way linear head.

    Construction dry-runs a zero batch through every layer and records the
    shape chain, so a mis-sized stack fails immediately rather than mid-train.
    """
    rng = np.random.default_rng(seed)
    layers = [
        Conv3d("conv1", input_shape[0], 32, rng=rng),
        ReLU(),
        Conv3d("conv2", 32, 32, rng=rng),
        ReLU(),
        MaxPool3d(),
        Conv3d("conv3", 32, 64, rng=rng),
        ReLU(),
        Conv3d("conv4", 64, 64, rng=rng),
        ReLU(),
        MaxPool3d(),
        Flatten(),
    ]
    probe = np.zeros((1,) + tuple(input_shape))
    for layer in layers:
        probe = layer.forward(probe)
    layers.append(Linear("fc", probe.shape[1], 2, rng=rng))
    return Network(layers, input_shape)


def forward_single(net: Network, segment) -> np.ndarray:
    """Logits (2,) for one (1, 32, 5, 3) block (a bare (32, 5, 3) is promoted)."""
    seg = np.asarray(segment, dtype=np.float64)
    if seg.shape == net.input_shape[1:]:
        seg = seg[None, ...]
    if seg.shape != net.input_shape:
        raise ShapeMismatchError(f"segment shape {seg.shape} does not match {net.input_shape}")
    return net.forward(seg[None, ...])[0]


# ---------------------------------------------------------------------------
# Checkpoint container: magic, version, named shape table, raw float64 payload
# ---------------------------------------------------------------------------

def save_checkpoint(net: Network, path):
    params = net.params()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(params)))
        for p in params:
            name = p.name.encode("utf-8")
            fh.write(struct.pack("<H", len(name)))
            fh.write(name)
            fh.write(struct.pack("<B", p.value.ndim))
            fh.write(struct.pack(f"<{p.value.ndim}I", *p.value.shape))
        for p in params:
            fh.write(np.ascontiguousarray(p.value, dtype="<f8").tobytes())


def load_checkpoint(path) -> Network:
    from .errors import ContainerFormatError

    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise ContainerFormatError(f"bad checkpoint magic {blob[:8]!r}")
    version, n_params = struct.unpack_from("<HI", blob, 8)
    if version != CHECKPOINT_VERSION:
        raise ContainerFormatError(f"unsupported checkpoint version {version}")
    offset = 14
    table = []
    for _ in range(n_params):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        table.append((name, shape))

    net = build_network(seed=0)
    by_name = {p.name: p for p in net.params()}
    if set(by_name) != {name for name, _ in table}:
        raise ContainerFormatError("checkpoint layer table does not match the network")
    for name, shape in table:
        param = by_name[name]
        if tuple(shape) != param.value.shape:
            raise ContainerFormatError(
                f"checkpoint shape {shape} for {name} does not match {param.value.shape}"
            )
        count = int(np.prod(shape))
        end = offset + 8 * count
        if end > len(blob):
            raise ContainerFormatError("checkpoint payload truncated")
        param.value[...] = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape)
        offset = end
    if offset != len(blob):
        raise ContainerFormatError("trailing bytes after checkpoint payload")
    return net

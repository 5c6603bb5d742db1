"""NumPy execution of the supported ONNX operator vocabulary."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .model import Node, OnnxModel


class UnsupportedOp(ValueError):
    pass


def _attr(node: Node, name: str, default=None):
    return node.attrs.get(name, default)


def _pool_windows(x: np.ndarray, kernel: tuple[int, int], strides: tuple[int, int], pads, fill: float):
    """[N,C,Ho,Wo,kh,kw] view of pooling windows; pads = (top, left, bottom, right)."""
    pt, pl, pb, pr = pads
    if any(pads):
        x = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)), constant_values=fill)
    windows = sliding_window_view(x, kernel, axis=(2, 3))
    return windows[:, :, :: strides[0], :: strides[1]]


def _op_conv(node: Node, inputs):
    x, weight = inputs[0], inputs[1]
    bias = inputs[2] if len(inputs) > 2 else None
    group = _attr(node, "group", 1)
    dilations = tuple(_attr(node, "dilations", (1, 1)))
    if group != 1 or set(dilations) != {1}:
        raise UnsupportedOp(f"Conv with group={group} dilations={dilations} not supported")
    strides = tuple(_attr(node, "strides", (1, 1)))
    pads = tuple(_attr(node, "pads", (0, 0, 0, 0)))
    kh, kw = weight.shape[2], weight.shape[3]
    windows = _pool_windows(x, (kh, kw), strides, pads, 0.0)
    n, c, ho, wo = windows.shape[:4]
    m = weight.shape[0]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * kh * kw)
    out = cols @ weight.reshape(m, -1).T
    out = out.reshape(n, ho, wo, m).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.reshape(1, m, 1, 1)
    return out.astype(x.dtype, copy=False)


def _op_maxpool(node: Node, inputs):
    x = inputs[0]
    if _attr(node, "ceil_mode", 0):
        raise UnsupportedOp("MaxPool ceil_mode not supported")
    kernel = tuple(_attr(node, "kernel_shape"))
    strides = tuple(_attr(node, "strides", kernel))
    pads = tuple(_attr(node, "pads", (0, 0, 0, 0)))
    windows = _pool_windows(x, kernel, strides, pads, -np.inf)
    return windows.max(axis=(-2, -1)).astype(x.dtype, copy=False)


def _op_averagepool(node: Node, inputs):
    x = inputs[0]
    pads = tuple(_attr(node, "pads", (0, 0, 0, 0)))
    if any(pads) and not _attr(node, "count_include_pad", 0):
        raise UnsupportedOp("AveragePool with exclude-pad counting not supported")
    kernel = tuple(_attr(node, "kernel_shape"))
    strides = tuple(_attr(node, "strides", kernel))
    windows = _pool_windows(x, kernel, strides, pads, 0.0)
    return windows.mean(axis=(-2, -1)).astype(x.dtype, copy=False)


def _op_global_average_pool(node: Node, inputs):
    x = inputs[0]
    return x.mean(axis=(2, 3), keepdims=True).astype(x.dtype, copy=False)


def _op_batchnorm(node: Node, inputs):
    x, scale, bias, mean, var = inputs[:5]
    eps = _attr(node, "epsilon", 1e-5)
    shape = (1, -1) + (1,) * (x.ndim - 2)
    inv = scale.reshape(shape) / np.sqrt(var.reshape(shape) + np.asarray(eps, dtype=x.dtype))
    return (x - mean.reshape(shape)) * inv + bias.reshape(shape)


def _op_gemm(node: Node, inputs):
    a, b = inputs[0], inputs[1]
    c = inputs[2] if len(inputs) > 2 else None
    if _attr(node, "transA", 0):
        a = a.T
    if _attr(node, "transB", 0):
        b = b.T
    out = _attr(node, "alpha", 1.0) * (a @ b)
    if c is not None:
        out = out + _attr(node, "beta", 1.0) * c
    return out.astype(a.dtype, copy=False)


def _op_softmax(node: Node, inputs):
    x = inputs[0]
    axis = _attr(node, "axis", -1)
    shifted = x - x.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def _op_flatten(node: Node, inputs):
    x = inputs[0]
    axis = _attr(node, "axis", 1)
    lead = int(np.prod(x.shape[:axis])) if axis else 1
    return x.reshape(lead, -1)


def _op_reshape(node: Node, inputs):
    x, shape = inputs[0], [int(v) for v in inputs[1]]
    resolved = [x.shape[i] if v == 0 else v for i, v in enumerate(shape)]
    return x.reshape(resolved)


def _op_concat(node: Node, inputs):
    return np.concatenate(inputs, axis=_attr(node, "axis", 0))


def _op_transpose(node: Node, inputs):
    perm = _attr(node, "perm")
    return inputs[0].transpose(perm if perm else None)


def _axes_arg(node: Node, inputs):
    if len(inputs) > 1:
        return [int(v) for v in inputs[1]]
    return [int(v) for v in _attr(node, "axes", [])]


def _op_unsqueeze(node: Node, inputs):
    out = inputs[0]
    for axis in sorted(_axes_arg(node, inputs)):
        out = np.expand_dims(out, axis)
    return out


def _op_squeeze(node: Node, inputs):
    axes = _axes_arg(node, inputs)
    return inputs[0].squeeze(tuple(axes) if axes else None)


def _op_cast(node: Node, inputs):
    from .model import _ONNX_TO_DTYPE

    return inputs[0].astype(_ONNX_TO_DTYPE[_attr(node, "to")])


_OPS = {
    "Conv": _op_conv,
    "MaxPool": _op_maxpool,
    "AveragePool": _op_averagepool,
    "GlobalAveragePool": _op_global_average_pool,
    "BatchNormalization": _op_batchnorm,
    "Gemm": _op_gemm,
    "MatMul": lambda node, inputs: inputs[0] @ inputs[1],
    "Softmax": _op_softmax,
    "Relu": lambda node, inputs: np.maximum(inputs[0], 0),
    "Sigmoid": lambda node, inputs: 1.0 / (1.0 + np.exp(-inputs[0])),
    "Flatten": _op_flatten,
    "Reshape": _op_reshape,
    "Concat": _op_concat,
    "Transpose": _op_transpose,
    "Unsqueeze": _op_unsqueeze,
    "Squeeze": _op_squeeze,
    "Add": lambda node, inputs: inputs[0] + inputs[1],
    "Sub": lambda node, inputs: inputs[0] - inputs[1],
    "Mul": lambda node, inputs: inputs[0] * inputs[1],
    "Div": lambda node, inputs: inputs[0] / inputs[1],
    "Identity": lambda node, inputs: inputs[0],
    "Dropout": lambda node, inputs: inputs[0],
    "Constant": lambda node, inputs: node.attrs["value"],
    "Cast": _op_cast,
}

SUPPORTED_OPS = frozenset(_OPS)


class GraphExecutor:
    """Runs a model's nodes in graph order over NumPy arrays."""

    def __init__(self, model: OnnxModel):
        self.model = model
        unsupported = {n.op_type for n in model.nodes} - SUPPORTED_OPS
        if unsupported:
            raise UnsupportedOp(f"model uses unsupported ops: {sorted(unsupported)}")

    def run(self, feeds: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        values: dict[str, np.ndarray] = dict(self.model.initializers)
        for info in self.model.inputs:
            if info.name not in feeds:
                raise ValueError(f"missing graph input {info.name!r}")
        values.update({k: np.asarray(v) for k, v in feeds.items()})
        for node in self.model.nodes:
            inputs = [values[name] for name in node.inputs if name]
            result = _OPS[node.op_type](node, inputs)
            outputs = result if isinstance(result, tuple) else (result,)
            for name, value in zip(node.outputs, outputs):
                if name:
                    values[name] = value
        missing = [o.name for o in self.model.outputs if o.name not in values]
        if missing:
            raise ValueError(f"graph outputs never produced: {missing}")
        return {o.name: values[o.name] for o in self.model.outputs}

"""Minimal ONNX emission (protobuf wire format written directly).

The deployment environment has no onnx package, so models are serialized
here by hand for the small graph this trainer produces. Field numbers follow
onnx.proto3; tensors go out as little-endian raw_data. Kept independent of
the runtime package on purpose: the file format is the contract between the
two components, and each side speaks it with its own code.
"""

from __future__ import annotations

import struct

import numpy as np

_FLOAT, _INT, _STRING, _TENSOR, _INTS = 1, 2, 3, 4, 7
_DTYPE_CODES = {np.dtype(np.float32): 1, np.dtype(np.int64): 7}


def _varint(value: int) -> bytes:
    if value < 0:
        value &= (1 << 64) - 1
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        out.append(byte | (0x80 if value else 0))
        if not value:
            return bytes(out)


def _field(number: int, wire_type: int) -> bytes:
    return _varint((number << 3) | wire_type)


def _scalar(number: int, value: int) -> bytes:
    return _field(number, 0) + _varint(value)


def _blob(number: int, payload: bytes) -> bytes:
    return _field(number, 2) + _varint(len(payload)) + payload


def _text(number: int, value: str) -> bytes:
    return _blob(number, value.encode("utf-8"))


def _packed_ints(number: int, values) -> bytes:
    return _blob(number, b"".join(_varint(v) for v in values))


def tensor(name: str, array: np.ndarray) -> bytes:
    dtype = np.dtype(array.dtype)
    if dtype not in _DTYPE_CODES:
        raise ValueError(f"cannot serialize dtype {dtype}")
    payload = _packed_ints(1, array.shape)
    payload += _scalar(2, _DTYPE_CODES[dtype])
    payload += _text(8, name)
    payload += _blob(9, np.ascontiguousarray(array).astype(dtype.newbyteorder("<")).tobytes())
    return payload


def _attribute(name: str, value) -> bytes:
    payload = _text(1, name)
    if isinstance(value, bool) or isinstance(value, int):
        payload += _scalar(3, int(value)) + _scalar(20, _INT)
    elif isinstance(value, float):
        payload += _field(2, 5) + struct.pack("<f", value) + _scalar(20, _FLOAT)
    elif isinstance(value, str):
        payload += _text(4, value) + _scalar(20, _STRING)
    elif isinstance(value, np.ndarray):
        payload += _blob(5, tensor(name, value)) + _scalar(20, _TENSOR)
    elif isinstance(value, (list, tuple)):
        payload += _packed_ints(8, [int(v) for v in value]) + _scalar(20, _INTS)
    else:
        raise ValueError(f"cannot serialize attribute {name}={value!r}")
    return payload


def node(op_type: str, inputs, outputs, **attrs) -> bytes:
    payload = b"".join(_text(1, name) for name in inputs)
    payload += b"".join(_text(2, name) for name in outputs)
    payload += _text(4, op_type)
    payload += b"".join(_blob(5, _attribute(k, v)) for k, v in sorted(attrs.items()))
    return payload


def value_info(name: str, dims, dtype=np.float32) -> bytes:
    dims_payload = b"".join(_blob(1, _scalar(1, d)) for d in dims)
    tensor_type = _scalar(1, _DTYPE_CODES[np.dtype(dtype)]) + _blob(2, dims_payload)
    return _text(1, name) + _blob(2, _blob(1, tensor_type))


def model(
    nodes: list[bytes],
    initializers: list[bytes],
    inputs: list[bytes],
    outputs: list[bytes],
    graph_name: str = "petident_classifier",
    opset: int = 13,
) -> bytes:
    graph = b"".join(_blob(1, n) for n in nodes)
    graph += _text(2, graph_name)
    graph += b"".join(_blob(5, t) for t in initializers)
    graph += b"".join(_blob(11, vi) for vi in inputs)
    graph += b"".join(_blob(12, vi) for vi in outputs)

    out = _scalar(1, 7)  # ir_version
    out += _text(2, "petident-trainer")
    out += _text(3, "0.1.0")
    out += _blob(7, graph)
    out += _blob(8, _text(1, "") + _scalar(2, opset))
    return out

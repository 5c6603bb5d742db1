"""ONNX model schema subset: graph, nodes, attributes, tensors.

Field numbers follow the onnx.proto3 schema. Tensors are stored via raw_data
in little-endian order; attribute values map to the natural Python types.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import wire

# onnx.TensorProto.DataType values
_DTYPE_TO_ONNX = {
    np.dtype(np.float32): 1,
    np.dtype(np.uint8): 2,
    np.dtype(np.int8): 3,
    np.dtype(np.int32): 6,
    np.dtype(np.int64): 7,
    np.dtype(np.bool_): 9,
    np.dtype(np.float64): 11,
}
_ONNX_TO_DTYPE = {v: k for k, v in _DTYPE_TO_ONNX.items()}

# onnx.AttributeProto.AttributeType values
_ATTR_FLOAT = 1
_ATTR_INT = 2
_ATTR_STRING = 3
_ATTR_TENSOR = 4
_ATTR_FLOATS = 6
_ATTR_INTS = 7
_ATTR_STRINGS = 8


@dataclass(frozen=True)
class TensorInfo:
    """Name, element dtype, and static shape (None for symbolic dims)."""

    name: str
    dtype: np.dtype
    shape: tuple[int | None, ...]


@dataclass(frozen=True)
class Node:
    op_type: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    attrs: dict[str, object] = field(default_factory=dict)
    name: str = ""


@dataclass
class OnnxModel:
    nodes: list[Node]
    initializers: dict[str, np.ndarray]
    inputs: list[TensorInfo]
    outputs: list[TensorInfo]
    graph_name: str = "graph"
    opset_version: int = 13
    ir_version: int = 7
    producer_name: str = "petident"
    producer_version: str = "0.1.0"


# --- encoding ---------------------------------------------------------------


def _encode_tensor(name: str, array: np.ndarray) -> bytes:
    dtype = np.dtype(array.dtype)
    if dtype not in _DTYPE_TO_ONNX:
        raise ValueError(f"unsupported tensor dtype {dtype}")
    out = bytearray()
    out += wire.encode_packed_int64s(1, array.shape)
    out += wire.encode_uint(2, _DTYPE_TO_ONNX[dtype])
    out += wire.encode_string(8, name)
    out += wire.encode_bytes(9, np.ascontiguousarray(array).astype(dtype.newbyteorder("<")).tobytes())
    return bytes(out)


def _encode_attribute(name: str, value: object) -> bytes:
    out = bytearray()
    out += wire.encode_string(1, name)
    if isinstance(value, bool):
        out += wire.encode_int64(3, int(value))
        out += wire.encode_uint(20, _ATTR_INT)
    elif isinstance(value, int):
        out += wire.encode_int64(3, value)
        out += wire.encode_uint(20, _ATTR_INT)
    elif isinstance(value, float):
        out += wire.encode_float32(2, value)
        out += wire.encode_uint(20, _ATTR_FLOAT)
    elif isinstance(value, str):
        out += wire.encode_bytes(4, value.encode("utf-8"))
        out += wire.encode_uint(20, _ATTR_STRING)
    elif isinstance(value, np.ndarray):
        out += wire.encode_bytes(5, _encode_tensor(name, value))
        out += wire.encode_uint(20, _ATTR_TENSOR)
    elif isinstance(value, (list, tuple)) and all(isinstance(v, int) for v in value):
        out += wire.encode_packed_int64s(8, value)
        out += wire.encode_uint(20, _ATTR_INTS)
    elif isinstance(value, (list, tuple)) and all(isinstance(v, float) for v in value):
        out += wire.encode_packed_float32s(7, value)
        out += wire.encode_uint(20, _ATTR_FLOATS)
    elif isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value):
        for v in value:
            out += wire.encode_bytes(9, v.encode("utf-8"))
        out += wire.encode_uint(20, _ATTR_STRINGS)
    else:
        raise ValueError(f"unsupported attribute value for {name!r}: {type(value)}")
    return bytes(out)


def _encode_node(node: Node) -> bytes:
    out = bytearray()
    for name in node.inputs:
        out += wire.encode_string(1, name)
    for name in node.outputs:
        out += wire.encode_string(2, name)
    if node.name:
        out += wire.encode_string(3, node.name)
    out += wire.encode_string(4, node.op_type)
    for attr_name in sorted(node.attrs):
        out += wire.encode_bytes(5, _encode_attribute(attr_name, node.attrs[attr_name]))
    return bytes(out)


def _encode_value_info(info: TensorInfo) -> bytes:
    dims = bytearray()
    for dim in info.shape:
        if dim is None:
            dims += wire.encode_bytes(1, wire.encode_string(2, "dyn"))
        else:
            dims += wire.encode_bytes(1, wire.encode_int64(1, dim))
    tensor_type = (
        wire.encode_uint(1, _DTYPE_TO_ONNX[np.dtype(info.dtype)])
        + wire.encode_bytes(2, bytes(dims))
    )
    type_proto = wire.encode_bytes(1, tensor_type)
    return wire.encode_string(1, info.name) + wire.encode_bytes(2, type_proto)


def model_to_bytes(model: OnnxModel) -> bytes:
    graph = bytearray()
    for node in model.nodes:
        graph += wire.encode_bytes(1, _encode_node(node))
    graph += wire.encode_string(2, model.graph_name)
    for name, array in model.initializers.items():
        graph += wire.encode_bytes(5, _encode_tensor(name, array))
    for info in model.inputs:
        graph += wire.encode_bytes(11, _encode_value_info(info))
    for info in model.outputs:
        graph += wire.encode_bytes(12, _encode_value_info(info))

    out = bytearray()
    out += wire.encode_uint(1, model.ir_version)
    out += wire.encode_string(2, model.producer_name)
    out += wire.encode_string(3, model.producer_version)
    out += wire.encode_bytes(7, bytes(graph))
    opset = wire.encode_string(1, "") + wire.encode_uint(2, model.opset_version)
    out += wire.encode_bytes(8, opset)
    return bytes(out)


def save_model(model: OnnxModel, path: str | Path) -> None:
    Path(path).write_bytes(model_to_bytes(model))


# --- decoding ---------------------------------------------------------------


def _decode_tensor(data: bytes) -> tuple[str, np.ndarray]:
    fields = wire.parse_fields(data)
    dims = wire.repeated_int64(fields, 1)
    onnx_type = wire.first_uint(fields, 2)
    name = wire.first_string(fields, 8)
    if onnx_type not in _ONNX_TO_DTYPE:
        raise ValueError(f"unsupported tensor data_type {onnx_type} for {name!r}")
    dtype = _ONNX_TO_DTYPE[onnx_type]
    raw = wire.first_bytes(fields, 9)
    if raw:
        array = np.frombuffer(raw, dtype=dtype.newbyteorder("<")).astype(dtype)
    elif onnx_type == 1 and 4 in fields:
        array = np.array(wire.repeated_float32(fields, 4), dtype=np.float32)
    elif onnx_type == 7 and 7 in fields:
        array = np.array(wire.repeated_int64(fields, 7), dtype=np.int64)
    elif onnx_type == 6 and 5 in fields:
        array = np.array(wire.repeated_int64(fields, 5), dtype=np.int32)
    else:
        array = np.zeros(0, dtype=dtype)
    return name, array.reshape(dims)


def _decode_attribute(data: bytes) -> tuple[str, object]:
    fields = wire.parse_fields(data)
    name = wire.first_string(fields, 1)
    attr_type = wire.first_uint(fields, 20, 0)
    if attr_type == _ATTR_FLOAT or (attr_type == 0 and 2 in fields):
        return name, wire.first_float32(fields, 2)
    if attr_type == _ATTR_INT or (attr_type == 0 and 3 in fields):
        return name, wire.first_int64(fields, 3)
    if attr_type == _ATTR_STRING or (attr_type == 0 and 4 in fields):
        return name, wire.first_bytes(fields, 4).decode("utf-8")
    if attr_type == _ATTR_TENSOR or (attr_type == 0 and 5 in fields):
        return name, _decode_tensor(wire.first_bytes(fields, 5))[1]
    if attr_type == _ATTR_FLOATS or (attr_type == 0 and 7 in fields):
        return name, wire.repeated_float32(fields, 7)
    if attr_type == _ATTR_INTS or (attr_type == 0 and 8 in fields):
        return name, wire.repeated_int64(fields, 8)
    if attr_type == _ATTR_STRINGS or (attr_type == 0 and 9 in fields):
        return name, [b.decode("utf-8") for b in wire.repeated_bytes(fields, 9)]
    raise ValueError(f"unsupported attribute encoding for {name!r} (type {attr_type})")


def _decode_node(data: bytes) -> Node:
    fields = wire.parse_fields(data)
    attrs = dict(_decode_attribute(raw) for raw in wire.repeated_bytes(fields, 5))
    return Node(
        op_type=wire.first_string(fields, 4),
        inputs=tuple(b.decode("utf-8") for b in wire.repeated_bytes(fields, 1)),
        outputs=tuple(b.decode("utf-8") for b in wire.repeated_bytes(fields, 2)),
        attrs=attrs,
        name=wire.first_string(fields, 3),
    )


def _decode_value_info(data: bytes) -> TensorInfo:
    fields = wire.parse_fields(data)
    name = wire.first_string(fields, 1)
    type_fields = wire.parse_fields(wire.first_bytes(fields, 2))
    tensor_fields = wire.parse_fields(wire.first_bytes(type_fields, 1))
    elem_type = wire.first_uint(tensor_fields, 1)
    dtype = _ONNX_TO_DTYPE.get(elem_type, np.dtype(np.float32))
    shape: list[int | None] = []
    shape_fields = wire.parse_fields(wire.first_bytes(tensor_fields, 2))
    for dim_raw in wire.repeated_bytes(shape_fields, 1):
        dim_fields = wire.parse_fields(dim_raw)
        if 1 in dim_fields:
            shape.append(wire.first_int64(dim_fields, 1))
        else:
            shape.append(None)
    return TensorInfo(name=name, dtype=dtype, shape=tuple(shape))


def model_from_bytes(data: bytes) -> OnnxModel:
    fields = wire.parse_fields(data)
    graph_raw = wire.first_bytes(fields, 7)
    if not graph_raw:
        raise ValueError("model has no graph")
    graph = wire.parse_fields(graph_raw)
    initializers = dict(_decode_tensor(raw) for raw in wire.repeated_bytes(graph, 5))
    inputs = [_decode_value_info(raw) for raw in wire.repeated_bytes(graph, 11)]
    # ONNX permits initializers to be re-listed as graph inputs; hide those.
    inputs = [info for info in inputs if info.name not in initializers]
    opset_version = 13
    for raw in wire.repeated_bytes(fields, 8):
        opset_fields = wire.parse_fields(raw)
        if wire.first_string(opset_fields, 1, "") == "":
            opset_version = wire.first_uint(opset_fields, 2, 13)
    return OnnxModel(
        nodes=[_decode_node(raw) for raw in wire.repeated_bytes(graph, 1)],
        initializers=initializers,
        inputs=inputs,
        outputs=[_decode_value_info(raw) for raw in wire.repeated_bytes(graph, 12)],
        graph_name=wire.first_string(graph, 2, "graph"),
        opset_version=opset_version,
        ir_version=wire.first_uint(fields, 1, 7),
        producer_name=wire.first_string(fields, 2, ""),
        producer_version=wire.first_string(fields, 3, ""),
    )


def load_model(path: str | Path) -> OnnxModel:
    return model_from_bytes(Path(path).read_bytes())

"""Protobuf wire-format primitives (encode and decode).

Only what the ONNX schema needs: varints, length-delimited fields, 32-bit
floats, and packed repeated scalars. Signed 64-bit values use two's-complement
varints per the protobuf spec.
"""

from __future__ import annotations

import struct

_U64_MASK = 0xFFFFFFFFFFFFFFFF

WIRE_VARINT = 0
WIRE_FIXED64 = 1
WIRE_LEN = 2
WIRE_FIXED32 = 5


def encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varints are unsigned; sign-extend first")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def encode_tag(field: int, wire_type: int) -> bytes:
    return encode_varint((field << 3) | wire_type)


def encode_uint(field: int, value: int) -> bytes:
    return encode_tag(field, WIRE_VARINT) + encode_varint(value)


def encode_int64(field: int, value: int) -> bytes:
    """Signed int64 field; negatives take the 10-byte two's-complement form."""
    return encode_tag(field, WIRE_VARINT) + encode_varint(value & _U64_MASK)


def encode_bytes(field: int, data: bytes) -> bytes:
    return encode_tag(field, WIRE_LEN) + encode_varint(len(data)) + data


def encode_string(field: int, text: str) -> bytes:
    return encode_bytes(field, text.encode("utf-8"))


def encode_float32(field: int, value: float) -> bytes:
    return encode_tag(field, WIRE_FIXED32) + struct.pack("<f", value)


def encode_packed_int64s(field: int, values) -> bytes:
    payload = b"".join(encode_varint(v & _U64_MASK) for v in values)
    return encode_bytes(field, payload)


def encode_packed_float32s(field: int, values) -> bytes:
    return encode_bytes(field, b"".join(struct.pack("<f", v) for v in values))


def to_signed64(value: int) -> int:
    return value - (1 << 64) if value >= (1 << 63) else value


def decode_varint(data: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise ValueError("truncated varint")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise ValueError("varint too long")


def parse_fields(data: bytes) -> dict[int, list[tuple[int, object]]]:
    """Split a message into {field_number: [(wire_type, raw_value), ...]}.

    Varints come back as unsigned ints, length-delimited fields as bytes,
    and fixed32/fixed64 as their raw byte strings.
    """
    fields: dict[int, list[tuple[int, object]]] = {}
    pos = 0
    while pos < len(data):
        tag, pos = decode_varint(data, pos)
        field, wire_type = tag >> 3, tag & 7
        value: object
        if wire_type == WIRE_VARINT:
            value, pos = decode_varint(data, pos)
        elif wire_type == WIRE_FIXED64:
            value, pos = data[pos : pos + 8], pos + 8
        elif wire_type == WIRE_LEN:
            length, pos = decode_varint(data, pos)
            value, pos = data[pos : pos + length], pos + length
            if len(value) != length:
                raise ValueError("truncated length-delimited field")
        elif wire_type == WIRE_FIXED32:
            value, pos = data[pos : pos + 4], pos + 4
        else:
            raise ValueError(f"unsupported wire type {wire_type} for field {field}")
        fields.setdefault(field, []).append((wire_type, value))
    return fields


def first_uint(fields, number: int, default: int = 0) -> int:
    for wire_type, value in fields.get(number, ()):
        if wire_type == WIRE_VARINT:
            return value
    return default


def first_int64(fields, number: int, default: int = 0) -> int:
    for wire_type, value in fields.get(number, ()):
        if wire_type == WIRE_VARINT:
            return to_signed64(value)
    return default


def first_bytes(fields, number: int, default: bytes = b"") -> bytes:
    for wire_type, value in fields.get(number, ()):
        if wire_type == WIRE_LEN:
            return value
    return default


def first_string(fields, number: int, default: str = "") -> str:
    raw = first_bytes(fields, number, b"")
    return raw.decode("utf-8") if raw else default


def first_float32(fields, number: int, default: float = 0.0) -> float:
    for wire_type, value in fields.get(number, ()):
        if wire_type == WIRE_FIXED32:
            return struct.unpack("<f", value)[0]
    return default


def repeated_bytes(fields, number: int) -> list[bytes]:
    return [value for wire_type, value in fields.get(number, ()) if wire_type == WIRE_LEN]


def repeated_int64(fields, number: int) -> list[int]:
    """Repeated int64 values, accepting both packed and unpacked encodings."""
    out: list[int] = []
    for wire_type, value in fields.get(number, ()):
        if wire_type == WIRE_VARINT:
            out.append(to_signed64(value))
        elif wire_type == WIRE_LEN:
            pos = 0
            while pos < len(value):
                raw, pos = decode_varint(value, pos)
                out.append(to_signed64(raw))
    return out


def repeated_float32(fields, number: int) -> list[float]:
    """Repeated float values, accepting both packed and unpacked encodings."""
    out: list[float] = []
    for wire_type, value in fields.get(number, ()):
        if wire_type == WIRE_FIXED32:
            out.append(struct.unpack("<f", value)[0])
        elif wire_type == WIRE_LEN:
            out.extend(struct.unpack(f"<{len(value) // 4}f", value))
    return out

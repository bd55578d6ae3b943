"""Minimal ABI encoding for the template registry's four entry points.

Only the shapes the registry needs are supported: ``(uint256)`` and
``(uint256, bytes, bytes)``. Dynamic arguments are head offsets followed by
length-prefixed, 32-byte padded tails, as in the Solidity ABI.
"""

from __future__ import annotations

from .hashing import keccak256

WORD = 32
UINT256_MAX = (1 << 256) - 1

SIGNATURES = {
    "create": "createNewTemplate(uint256,bytes,bytes)",
    "modify": "modifyTemplate(uint256,bytes,bytes)",
    "delete": "deleteTemplate(uint256)",
    "get": "getTemplate(uint256)",
}


def selector(signature: str) -> bytes:
    return keccak256(signature.encode("ascii"))[:4]


DEFAULT_SELECTORS: dict[str, bytes] = {op: selector(sig) for op, sig in SIGNATURES.items()}


class ABIDecodeError(ValueError):
    pass


def encode_uint(value: int) -> bytes:
    if not 0 <= value <= UINT256_MAX:
        raise ValueError(f"uint256 out of range: {value}")
    return value.to_bytes(WORD, "big")


def padded_len(n: int) -> int:
    return -(-n // WORD) * WORD


def _encode_bytes_tail(data: bytes) -> bytes:
    return encode_uint(len(data)) + data + b"\x00" * (padded_len(len(data)) - len(data))


def encode_id_call(sel: bytes, template_id: int) -> bytes:
    return sel + encode_uint(template_id)


def encode_record_call(sel: bytes, template_id: int, metadata: bytes, data: bytes) -> bytes:
    head_size = 3 * WORD
    meta_tail = _encode_bytes_tail(metadata)
    data_tail = _encode_bytes_tail(data)
    head = encode_uint(template_id) + encode_uint(head_size) + encode_uint(head_size + len(meta_tail))
    return sel + head + meta_tail + data_tail


def _word(buf: bytes, offset: int) -> int:
    if offset < 0 or offset + WORD > len(buf):
        raise ABIDecodeError("calldata too short")
    return int.from_bytes(buf[offset:offset + WORD], "big")


def decode_id_args(args: bytes) -> int:
    return _word(args, 0)


def decode_record_args(args: bytes) -> tuple[int, bytes, bytes]:
    template_id = _word(args, 0)
    out = []
    for k in (1, 2):
        off = _word(args, k * WORD)
        length = _word(args, off)
        start = off + WORD
        if start + length > len(args):
            raise ABIDecodeError("dynamic argument runs past calldata")
        out.append(bytes(args[start:start + length]))
    return template_id, out[0], out[1]


def decode_bytes_return(ret: bytes) -> bytes:
    off = _word(ret, 0)
    length = _word(ret, off)
    return bytes(ret[off + WORD:off + WORD + length])


def encode_bytes_return(data: bytes) -> bytes:
    return encode_uint(WORD) + _encode_bytes_tail(data)

"""256-bit hash functions used for slot keys, digests and Merkle nodes.

``sha3_256`` is NIST FIPS-202 SHA3-256 (hashlib). ``keccak256`` is the
original Keccak submission padding used by Ethereum (pycryptodome).
"""

from __future__ import annotations

import hashlib
from typing import Callable

from Crypto.Hash import keccak as _keccak

HashFn = Callable[[bytes], bytes]


def sha3_256(data: bytes) -> bytes:
    return hashlib.sha3_256(data).digest()


def keccak256(data: bytes) -> bytes:
    h = _keccak.new(digest_bits=256)
    h.update(data)
    return h.digest()


HASHES: dict[str, HashFn] = {
    "sha3_256": sha3_256,
    "keccak256": keccak256,
}


def get_hash(name: str) -> HashFn:
    try:
        return HASHES[name]
    except KeyError:
        raise ValueError(f"unknown hash {name!r}; choose from {sorted(HASHES)}") from None

"""Template registry contract and its client.

The contract keeps ``mapping(uint => BiometricTemplate)`` at storage position
0, each record holding two dynamic byte arrays (metadata at the record's base
slot, data at base + 1). Byte arrays use the compact layout: fewer than 32
bytes are packed with ``2 * len`` in the low byte of one slot; longer arrays
store ``2 * len + 1`` in the base slot and their content in consecutive words
starting at ``H(base)``. Overwriting an array clears any words the new value
no longer needs.

No access control: any caller may create, modify or delete any record.
"""

from __future__ import annotations

import struct
from typing import Mapping

from . import abi
from .ledger import Call, Ledger, Revert, StorageView, TxReceipt

MAPPING_POSITION = 0
WORD = 32
_MASK = (1 << 256) - 1

METADATA_VERSION = 1
# fixed by default so that receipts are reproducible
METADATA_TIMESTAMP = 1552000000
MODALITY_TAGS = {
    "signature_global": b"SGLB",
    "signature_local": b"SLOC",
    "face": b"FACE",
    "digest": b"HASH",
    "merkle_root": b"MRKL",
    "generic": b"GENR",
}


def make_metadata(modality: str = "generic", version: int = METADATA_VERSION,
                  timestamp: int = METADATA_TIMESTAMP) -> bytes:
    """16-byte descriptor: 4-byte modality tag, uint32 version, uint64 timestamp."""
    tag = MODALITY_TAGS.get(modality, modality.encode("ascii")[:4].ljust(4, b"_"))
    return tag + struct.pack(">IQ", version, timestamp)


def parse_metadata(blob: bytes) -> dict:
    if len(blob) != 16:
        return {"raw": blob.hex()}
    version, timestamp = struct.unpack(">IQ", blob[4:])
    return {"tag": blob[:4].decode("ascii", "replace"), "version": version, "timestamp": timestamp}


DEFAULT_METADATA = make_metadata()


def record_base_slot(template_id: int, hash_fn) -> int:
    return int.from_bytes(hash_fn(abi.encode_uint(template_id) + abi.encode_uint(MAPPING_POSITION)), "big")


def data_start_slot(slot: int, hash_fn) -> int:
    return int.from_bytes(hash_fn(abi.encode_uint(slot)), "big")


def _decode_length(word: int) -> tuple[int, bool]:
    if word & 1:
        return (word - 1) // 2, True
    return (word & 0xFF) // 2, False


def array_slots(storage, slot: int) -> list[int]:
    """Slots currently occupied by the byte array rooted at ``slot``."""
    length, long_form = _decode_length(storage.sload(slot))
    if not long_form:
        return [slot]
    start = data_start_slot(slot, storage.hash)
    return [slot] + [(start + i) & _MASK for i in range(-(-length // WORD))]


def read_bytes(storage, slot: int) -> bytes:
    word = storage.sload(slot)
    length, long_form = _decode_length(word)
    if not long_form:
        return word.to_bytes(WORD, "big")[:length]
    start = data_start_slot(slot, storage.hash)
    n = -(-length // WORD)
    raw = b"".join(storage.sload((start + i) & _MASK).to_bytes(WORD, "big") for i in range(n))
    return raw[:length]


def write_bytes(storage, slot: int, value: bytes):
    old_len, old_long = _decode_length(storage.sload(slot))
    old_words = -(-old_len // WORD) if old_long else 0
    start = data_start_slot(slot, storage.hash)
    n = len(value)
    if n < WORD:
        packed = int.from_bytes(value.ljust(WORD, b"\x00"), "big") | (2 * n)
        storage.sstore(slot, packed)
        new_words = 0
    else:
        storage.sstore(slot, 2 * n + 1)
        new_words = -(-n // WORD)
        padded = value.ljust(new_words * WORD, b"\x00")
        for i in range(new_words):
            storage.sstore((start + i) & _MASK, int.from_bytes(padded[i * WORD:(i + 1) * WORD], "big"))
    for i in range(new_words, old_words):
        storage.sstore((start + i) & _MASK, 0)


def delete_bytes(storage, slot: int):
    length, long_form = _decode_length(storage.sload(slot))
    if long_form:
        start = data_start_slot(slot, storage.hash)
        for i in range(-(-length // WORD)):
            storage.sstore((start + i) & _MASK, 0)
    storage.sstore(slot, 0)


class BioBlockchainContract:
    """Contract code executed by :class:`~biochain.ledger.Ledger`."""

    name = "BioBlockchain"

    def __init__(self, selectors: Mapping[str, bytes] = abi.DEFAULT_SELECTORS):
        self.selectors = dict(selectors)
        self._dispatch = {sel: op for op, sel in self.selectors.items()}

    def execute(self, storage, calldata: bytes, static: bool) -> bytes:
        op = self._dispatch.get(calldata[:4])
        if op is None:
            raise Revert(f"unknown selector {calldata[:4].hex()}")
        args = calldata[4:]
        try:
            if op in ("create", "modify"):
                template_id, metadata, data = abi.decode_record_args(args)
            else:
                template_id = abi.decode_id_args(args)
        except abi.ABIDecodeError as exc:
            raise Revert(str(exc)) from None
        base = record_base_slot(template_id, storage.hash)
        if op == "get":
            return abi.encode_bytes_return(read_bytes(storage, (base + 1) & _MASK))
        if op in ("create", "modify"):
            # modifyTemplate delegates to createNewTemplate
            write_bytes(storage, base, metadata)
            write_bytes(storage, (base + 1) & _MASK, data)
        else:
            delete_bytes(storage, base)
            delete_bytes(storage, (base + 1) & _MASK)
        return b""


CONTRACT_CODES = {BioBlockchainContract.name: BioBlockchainContract}


class TemplateRegistry:
    """Client for a deployed :class:`BioBlockchainContract`."""

    def __init__(self, ledger: Ledger, address: str, selectors: Mapping[str, bytes] = abi.DEFAULT_SELECTORS,
                 default_metadata: bytes = DEFAULT_METADATA):
        self.ledger = ledger
        self.address = address
        self.selectors = dict(selectors)
        self.default_metadata = default_metadata

    @classmethod
    def deploy(cls, ledger: Ledger, **kwargs) -> tuple["TemplateRegistry", TxReceipt]:
        selectors = kwargs.get("selectors", abi.DEFAULT_SELECTORS)
        address, receipt = ledger.deploy(BioBlockchainContract(selectors))
        return cls(ledger, address, **kwargs), receipt

    def _meta(self, metadata):
        return self.default_metadata if metadata is None else bytes(metadata)

    def create_template(self, template_id: int, metadata: bytes | None, data: bytes) -> TxReceipt:
        payload = abi.encode_record_call(self.selectors["create"], template_id, self._meta(metadata), bytes(data))
        return self.ledger.submit(Call(self.address, payload, "create"))

    def modify_template(self, template_id: int, metadata: bytes | None, data: bytes) -> TxReceipt:
        payload = abi.encode_record_call(self.selectors["modify"], template_id, self._meta(metadata), bytes(data))
        return self.ledger.submit(Call(self.address, payload, "modify"))

    def delete_template(self, template_id: int) -> TxReceipt:
        payload = abi.encode_id_call(self.selectors["delete"], template_id)
        return self.ledger.submit(Call(self.address, payload, "delete"))

    def get_template(self, template_id: int) -> bytes:
        ret = self.ledger.call(Call(self.address, abi.encode_id_call(self.selectors["get"], template_id), "get"))
        return abi.decode_bytes_return(ret)

    def record_slots(self, template_id: int) -> list[int]:
        """Storage slots currently backing the record, metadata first."""
        view = StorageView(self.ledger.store, self.address, self.ledger.tx_count, self.ledger.hash_name, True)
        base = record_base_slot(template_id, view.hash)
        return array_slots(view, base) + array_slots(view, (base + 1) & _MASK)

    def occupied_slots(self, template_id: int) -> list[int]:
        slots = self.ledger.store.contract_slots(self.address)
        return [s for s in self.record_slots(template_id) if slots.get(s, 0)]

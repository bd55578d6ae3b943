"""Full on-chain, data hashing and Merkle-anchored template storage.

All three schemes share one interface: :meth:`enroll`, :meth:`retrieve_verified`
and :meth:`remove`. The hashing and Merkle schemes keep template bytes in a
content-addressed :class:`OffChainStore` and put only 32 bytes on chain
(a per-template digest, or one commitment to the tree root stored under a
reserved ID).
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from . import abi, merkle
from .errors import IntegrityViolation, NotEnrolled, OffChainWriteError
from .gas import DEFAULT_SCHEDULE, FeeQuote, GasSchedule, estimate_tx, quote_fee
from .hashing import get_hash
from .ledger import TxReceipt
from .registry import DEFAULT_METADATA, TemplateRegistry, make_metadata

KINDS = ("full_on_chain", "data_hashing", "merkle_anchor")
# reserved record for the Merkle anchor; a zero ID word keeps anchor calldata cheap
ANCHOR_ID = 0
DIGEST_BYTES = 32
_COMMIT_PREFIX = b"\x02"


def anchor_commitment(root: bytes, hash_name: str = "sha3_256") -> bytes:
    """32-byte on-chain commitment to a Merkle root, free of zero bytes.

    ``H(0x02 || root || k)`` for the smallest 4-byte counter ``k`` whose
    digest has no zero byte. Calldata prices zero and nonzero bytes
    differently, so a zero-free value makes every anchor write cost the same
    gas whatever the root. Anyone holding the root recomputes it.
    """
    h = get_hash(hash_name)
    k = 0
    while True:
        c = h(_COMMIT_PREFIX + root + k.to_bytes(4, "big"))
        if 0 not in c:
            return c
        k += 1


class OffChainStore:
    """Directory of ``<hex digest>.bin`` files plus a user index.

    The index maps user id to ``{digest, size, modality}`` and is written to
    ``index_path`` (``<directory>/index.json`` by default) after each change.
    Identical payloads share one file, which is removed with its last user.
    """

    def __init__(self, directory, index_path=None, hash_name: str = "sha3_256"):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.index_path = Path(index_path) if index_path else self.directory / "index.json"
        self.hash_name = hash_name
        self._hash = get_hash(hash_name)
        self.index: dict[int, dict] = {}
        if self.index_path.exists():
            raw = json.loads(self.index_path.read_text())
            self.index = {int(k): v for k, v in raw.items()}

    def digest(self, payload: bytes) -> bytes:
        return self._hash(bytes(payload))

    def path_for(self, digest_hex: str) -> Path:
        return self.directory / f"{digest_hex}.bin"

    def _save_index(self):
        tmp = self.index_path.with_suffix(".tmp")
        tmp.write_text(json.dumps({str(k): v for k, v in sorted(self.index.items())}, indent=1))
        os.replace(tmp, self.index_path)

    def __contains__(self, user_id: int) -> bool:
        return user_id in self.index

    def put(self, user_id: int, payload: bytes, modality: str | None = None) -> bytes:
        payload = bytes(payload)
        digest = self.digest(payload)
        path = self.path_for(digest.hex())
        try:
            if not path.exists():
                tmp = path.with_suffix(".part")
                tmp.write_bytes(payload)
                os.replace(tmp, path)
        except OSError as exc:
            raise OffChainWriteError(f"cannot write {path}: {exc}") from exc
        previous = self.index.get(user_id)
        self.index[user_id] = {"digest": digest.hex(), "size": len(payload), "modality": modality}
        if previous and previous["digest"] != digest.hex():
            self._drop_file_if_unused(previous["digest"])
        self._save_index()
        return digest

    def get(self, user_id: int) -> bytes:
        """Raw stored bytes, not verified. Missing files raise IntegrityViolation."""
        entry = self.index.get(user_id)
        if entry is None:
            raise NotEnrolled(user_id)
        path = self.path_for(entry["digest"])
        try:
            return path.read_bytes()
        except FileNotFoundError:
            raise IntegrityViolation(f"off-chain file for user {user_id} is missing") from None

    def delete(self, user_id: int):
        entry = self.index.pop(user_id, None)
        if entry is None:
            raise NotEnrolled(user_id)
        self._drop_file_if_unused(entry["digest"])
        self._save_index()

    def _drop_file_if_unused(self, digest_hex: str):
        if any(e["digest"] == digest_hex for e in self.index.values()):
            return
        self.path_for(digest_hex).unlink(missing_ok=True)

    def check(self, user_id: int) -> bool:
        entry = self.index[user_id]
        try:
            return self.digest(self.get(user_id)).hex() == entry["digest"]
        except IntegrityViolation:
            return False


class TemplateStoreScheme:
    kind: str = ""

    def __init__(self, registry: TemplateRegistry, off_chain: OffChainStore | None = None):
        self.registry = registry
        self.off_chain = off_chain
        self._lock = threading.Lock()

    def enroll(self, user_id: int, payload: bytes, modality: str | None = None):
        raise NotImplementedError

    def retrieve_verified(self, user_id: int) -> bytes:
        raise NotImplementedError

    def remove(self, user_id: int) -> TxReceipt:
        raise NotImplementedError

    def is_enrolled(self, user_id: int) -> bool:
        raise NotImplementedError


class FullOnChain(TemplateStoreScheme):
    kind = "full_on_chain"

    def enroll(self, user_id, payload, modality=None):
        with self._lock:
            meta = make_metadata(modality) if modality else DEFAULT_METADATA
            receipt = self.registry.create_template(user_id, meta, bytes(payload))
            return receipt, self.registry.ledger.hash_name

    def is_enrolled(self, user_id):
        # the metadata descriptor is never empty, so an enrolled record always has a nonzero base slot
        return bool(self.registry.occupied_slots(user_id))

    def retrieve_verified(self, user_id):
        if not self.is_enrolled(user_id):
            raise NotEnrolled(user_id)
        return self.registry.get_template(user_id)

    def remove(self, user_id):
        with self._lock:
            if not self.is_enrolled(user_id):
                raise NotEnrolled(user_id)
            return self.registry.delete_template(user_id)


class DataHashing(TemplateStoreScheme):
    kind = "data_hashing"

    def __init__(self, registry, off_chain):
        if off_chain is None:
            raise ValueError("data hashing needs an off-chain store")
        super().__init__(registry, off_chain)

    def enroll(self, user_id, payload, modality=None):
        with self._lock:
            digest = self.off_chain.put(user_id, payload, modality)
            receipt = self.registry.create_template(user_id, make_metadata("digest"), digest)
            return receipt, digest.hex()

    def is_enrolled(self, user_id):
        return user_id in self.off_chain

    def retrieve_verified(self, user_id):
        if not self.is_enrolled(user_id):
            raise NotEnrolled(user_id)
        anchored = self.registry.get_template(user_id)
        if len(anchored) != DIGEST_BYTES:
            raise IntegrityViolation(f"no on-chain digest for user {user_id}")
        payload = self.off_chain.get(user_id)
        if self.off_chain.digest(payload) != anchored:
            raise IntegrityViolation(f"off-chain template for user {user_id} does not match its on-chain digest")
        return payload

    def remove(self, user_id):
        with self._lock:
            if not self.is_enrolled(user_id):
                raise NotEnrolled(user_id)
            receipt = self.registry.delete_template(user_id)
            self.off_chain.delete(user_id)
            return receipt


class MerkleAnchor(TemplateStoreScheme):
    """One tree root anchored on chain under ``anchor_id``.

    ``batch_size`` > 1 defers re-anchoring until that many tree changes are
    pending (or :meth:`flush` is called); users enrolled since the last anchor
    cannot be verified until then.
    """

    kind = "merkle_anchor"

    def __init__(self, registry, off_chain, anchor_id: int = ANCHOR_ID, tree_path=None,
                 batch_size: int = 1, hash_name: str = "sha3_256"):
        if off_chain is None:
            raise ValueError("Merkle anchoring needs an off-chain store")
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        super().__init__(registry, off_chain)
        self.anchor_id = anchor_id
        self.batch_size = batch_size
        self.tree_path = Path(tree_path) if tree_path else None
        self.pending = 0
        if self.tree_path and self.tree_path.exists():
            state = json.loads(self.tree_path.read_text())
            self.tree = merkle.MerkleTree.from_dict(state["tree"])
            self.pending = state.get("pending", 0)
        else:
            self.tree = merkle.MerkleTree(hash_name)

    def _save(self):
        if self.tree_path:
            state = {"anchor_id": hex(self.anchor_id), "pending": self.pending, "tree": self.tree.to_dict()}
            self.tree_path.write_text(json.dumps(state, indent=1))

    def _anchor(self) -> TxReceipt:
        value = anchor_commitment(self.tree.root, self.tree.hash_name)
        receipt = self.registry.modify_template(self.anchor_id, make_metadata("merkle_root"), value)
        self.pending = 0
        return receipt

    def _after_change(self) -> TxReceipt | None:
        self.pending += 1
        receipt = self._anchor() if self.pending >= self.batch_size else None
        self._save()
        return receipt

    def flush(self) -> TxReceipt | None:
        with self._lock:
            if not self.pending:
                return None
            receipt = self._anchor()
            self._save()
            return receipt

    def enroll(self, user_id, payload, modality=None):
        with self._lock:
            self.off_chain.put(user_id, payload, modality)
            self.tree, root = merkle.update_leaf(self.tree, user_id, bytes(payload))
            return self._after_change(), root.hex()

    def is_enrolled(self, user_id):
        return user_id in self.tree

    def anchored_value(self) -> bytes:
        """The on-chain commitment (see :func:`anchor_commitment`)."""
        return self.registry.get_template(self.anchor_id)

    def retrieve_verified(self, user_id):
        if not self.is_enrolled(user_id):
            raise NotEnrolled(user_id)
        payload = self.off_chain.get(user_id)
        proof = merkle.prove(self.tree, user_id)
        if anchor_commitment(proof.root, self.tree.hash_name) != self.anchored_value():
            raise IntegrityViolation(f"local Merkle root for user {user_id} is not the anchored one")
        if not merkle.verify(proof.root, payload, proof, self.tree.hash_name):
            raise IntegrityViolation(f"Merkle proof for user {user_id} does not match the anchored root")
        return payload

    def remove(self, user_id):
        with self._lock:
            if not self.is_enrolled(user_id):
                raise NotEnrolled(user_id)
            self.tree, _ = merkle.remove_leaf(self.tree, user_id)
            self.off_chain.delete(user_id)
            return self._after_change()

    def drop_anchor(self) -> TxReceipt:
        """Delete the anchor record itself (decommissions the whole store)."""
        with self._lock:
            return self.registry.delete_template(self.anchor_id)


SCHEMES = {cls.kind: cls for cls in (FullOnChain, DataHashing, MerkleAnchor)}


def open_scheme(kind: str, registry: TemplateRegistry, off_chain: OffChainStore | None = None,
                **kwargs) -> TemplateStoreScheme:
    try:
        cls = SCHEMES[kind]
    except KeyError:
        raise ValueError(f"unknown scheme {kind!r}; choose from {KINDS}") from None
    if cls is FullOnChain:
        return cls(registry)
    if cls is DataHashing:
        return cls(registry, off_chain)
    return cls(registry, off_chain, **kwargs)


def single_op_gas(kind: str, template_size: int, op: str, schedule: GasSchedule = DEFAULT_SCHEDULE,
                  modality: str | None = None) -> int:
    """Net gas of one on-chain operation under ``kind``.

    Calldata carries the scheme's real metadata descriptor and nonzero
    template content. Every Merkle operation is one anchor rewrite, priced
    as a fresh write; its cost matches a live anchor exactly because anchor
    commitments contain no zero bytes.
    """
    if op == "retrieve":
        return 0
    if op not in ("create", "modify", "delete"):
        raise ValueError(f"unknown op {op!r}")
    if kind == "full_on_chain":
        meta, size, tid = (make_metadata(modality) if modality else DEFAULT_METADATA), template_size, 1
    elif kind == "data_hashing":
        meta, size, tid = make_metadata("digest"), DIGEST_BYTES, 1
    elif kind == "merkle_anchor":
        meta, size, tid = make_metadata("merkle_root"), DIGEST_BYTES, ANCHOR_ID
        op = "modify"
    else:
        raise ValueError(f"unknown scheme {kind!r}")
    if op == "delete":
        calldata = abi.encode_id_call(abi.DEFAULT_SELECTORS["delete"], tid)
        return estimate_tx("delete", size, len(meta), "occupied", schedule, calldata).net
    calldata = abi.encode_record_call(abi.DEFAULT_SELECTORS[op], tid, meta, b"\xab" * size)
    return estimate_tx(op, size, len(meta), "vacant", schedule, calldata).net


def project_cost(kind: str, n_templates: int, template_size: int, op: str = "create",
                 schedule: GasSchedule = DEFAULT_SCHEDULE, gas_price=1, eth_usd=140,
                 modality: str | None = None) -> FeeQuote:
    """Fee for applying ``op`` to ``n_templates`` templates.

    Full on-chain and hashing costs grow linearly; a Merkle store pays one
    anchor update regardless of ``n_templates``.
    """
    if n_templates < 0:
        raise ValueError("n_templates must be >= 0")
    per_op = single_op_gas(kind, template_size, op, schedule, modality)
    if kind == "merkle_anchor":
        total = per_op if n_templates else 0
    else:
        total = per_op * n_templates
    return quote_fee(total, gas_price, eth_usd)

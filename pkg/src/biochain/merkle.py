"""Binary hash tree over template payloads.

Leaves are ``H(0x00 || payload)`` and interior nodes ``H(0x01 || left || right)``.
An unpaired node at the end of a level is promoted unchanged. The empty tree
has the sentinel root ``H(0x00)``.

Trees have value semantics: every mutating operation returns a new tree and
leaves the argument untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Sequence

from .errors import UnknownTemplateId
from .hashing import get_hash

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"
LEFT, RIGHT = "left", "right"


def leaf_digest(payload: bytes, hash_name: str = "sha3_256") -> bytes:
    return get_hash(hash_name)(LEAF_PREFIX + bytes(payload))


def node_digest(left: bytes, right: bytes, hash_name: str = "sha3_256") -> bytes:
    return get_hash(hash_name)(NODE_PREFIX + left + right)


def empty_root(hash_name: str = "sha3_256") -> bytes:
    return leaf_digest(b"", hash_name)


@dataclass(frozen=True)
class MerkleProof:
    leaf_position: int
    path: tuple[tuple[bytes, str], ...]
    root: bytes

    def to_dict(self) -> dict:
        return {
            "leaf_position": self.leaf_position,
            "path": [[d.hex(), side] for d, side in self.path],
            "root": self.root.hex(),
        }


@dataclass
class MerkleTree:
    hash_name: str = "sha3_256"
    levels: list[list[bytes]] = field(default_factory=list)
    ids: list[Hashable] = field(default_factory=list)
    leaf_index: dict[Hashable, int] = field(default_factory=dict)

    @property
    def leaf_digests(self) -> list[bytes]:
        return self.levels[0] if self.levels else []

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, template_id) -> bool:
        return template_id in self.leaf_index

    @property
    def root(self) -> bytes:
        if not self.levels:
            return empty_root(self.hash_name)
        return self.levels[-1][0]

    def copy(self) -> "MerkleTree":
        return MerkleTree(self.hash_name, [list(lv) for lv in self.levels], list(self.ids), dict(self.leaf_index))

    def to_dict(self) -> dict:
        return {
            "hash": self.hash_name,
            "leaves": [[tid, d.hex()] for tid, d in zip(self.ids, self.leaf_digests)],
        }

    @classmethod
    def from_dict(cls, d) -> "MerkleTree":
        ids = [tid for tid, _ in d["leaves"]]
        digests = [bytes.fromhex(h) for _, h in d["leaves"]]
        return from_digests(digests, ids, d.get("hash", "sha3_256"))


def _build_levels(digests: list[bytes], hash_name: str) -> list[list[bytes]]:
    if not digests:
        return []
    levels = [list(digests)]
    while len(levels[-1]) > 1:
        prev = levels[-1]
        nxt = [node_digest(prev[i], prev[i + 1], hash_name) for i in range(0, len(prev) - 1, 2)]
        if len(prev) % 2:
            nxt.append(prev[-1])
        levels.append(nxt)
    return levels


def from_digests(digests: Sequence[bytes], ids: Sequence[Hashable] | None = None,
                 hash_name: str = "sha3_256") -> MerkleTree:
    ids = list(range(len(digests))) if ids is None else list(ids)
    if len(ids) != len(digests):
        raise ValueError("ids and digests differ in length")
    index = {tid: i for i, tid in enumerate(ids)}
    if len(index) != len(ids):
        raise ValueError("duplicate template ids")
    return MerkleTree(hash_name, _build_levels(list(digests), hash_name), ids, index)


def build(leaves: Iterable[bytes], ids: Sequence[Hashable] | None = None,
          hash_name: str = "sha3_256") -> MerkleTree:
    """Build a tree from leaf payloads; ids default to positions."""
    digests = [leaf_digest(x, hash_name) for x in leaves]
    return from_digests(digests, ids, hash_name)


def _recompute_path(tree: MerkleTree, position: int):
    """Refresh the ancestors of leaf ``position``, growing the tree if needed."""
    levels = tree.levels
    idx = position
    lvl = 0
    while len(levels[lvl]) > 1:
        cur = levels[lvl]
        parent = idx // 2
        left = 2 * parent
        if left + 1 < len(cur):
            value = node_digest(cur[left], cur[left + 1], tree.hash_name)
        else:
            value = cur[left]
        if lvl + 1 == len(levels):
            levels.append([])
        nxt = levels[lvl + 1]
        if parent < len(nxt):
            nxt[parent] = value
        else:
            nxt.append(value)
        idx = parent
        lvl += 1
    # a previous top level may now be stale
    del levels[lvl + 1:]


def update_leaf(tree: MerkleTree, template_id, payload: bytes) -> tuple[MerkleTree, bytes]:
    """Replace the leaf for ``template_id``, or append it if absent.

    Only digests on the leaf-to-root path are recomputed.
    """
    new = tree.copy()
    digest = leaf_digest(payload, tree.hash_name)
    if template_id in new.leaf_index:
        pos = new.leaf_index[template_id]
        if new.levels[0][pos] == digest:
            return new, new.root
        new.levels[0][pos] = digest
    else:
        pos = len(new.ids)
        new.ids.append(template_id)
        new.leaf_index[template_id] = pos
        if not new.levels:
            new.levels.append([])
        new.levels[0].append(digest)
    _recompute_path(new, pos)
    return new, new.root


def remove_leaf(tree: MerkleTree, template_id) -> tuple[MerkleTree, bytes]:
    """Drop a leaf; later leaves shift left and the tree is rebuilt."""
    if template_id not in tree.leaf_index:
        raise UnknownTemplateId(template_id)
    pos = tree.leaf_index[template_id]
    digests = tree.leaf_digests[:pos] + tree.leaf_digests[pos + 1:]
    ids = tree.ids[:pos] + tree.ids[pos + 1:]
    new = from_digests(digests, ids, tree.hash_name)
    return new, new.root


def prove(tree: MerkleTree, template_id) -> MerkleProof:
    if template_id not in tree.leaf_index:
        raise UnknownTemplateId(template_id)
    pos = tree.leaf_index[template_id]
    path = []
    idx = pos
    for level in tree.levels[:-1]:
        sibling = idx ^ 1
        if sibling < len(level):
            path.append((level[sibling], RIGHT if sibling > idx else LEFT))
        idx //= 2
    return MerkleProof(pos, tuple(path), tree.root)


def verify(root: bytes, payload: bytes, proof: MerkleProof, hash_name: str = "sha3_256") -> bool:
    if proof.root != root:
        return False
    acc = leaf_digest(payload, hash_name)
    for sibling, side in proof.path:
        if side == RIGHT:
            acc = node_digest(acc, sibling, hash_name)
        elif side == LEFT:
            acc = node_digest(sibling, acc, hash_name)
        else:
            return False
    return acc == root


# golden vectors: [{"leaves": [hex, ...], "root": hex}, ...]

def golden_record(leaves: Sequence[bytes], hash_name: str = "sha3_256") -> dict:
    return {"leaves": [x.hex() for x in leaves], "root": build(leaves, hash_name=hash_name).root.hex()}


def write_golden_vectors(path, cases: Iterable[Sequence[bytes]], hash_name: str = "sha3_256"):
    records = [golden_record(leaves, hash_name) for leaves in cases]
    Path(path).write_text(json.dumps(records, indent=1) + "\n")


def check_golden_vectors(path, hash_name: str = "sha3_256") -> list[tuple[int, bool]]:
    """Rebuild every record in a golden file; returns ``(index, matches)`` pairs."""
    records = json.loads(Path(path).read_text())
    out = []
    for i, rec in enumerate(records):
        leaves = [bytes.fromhex(h) for h in rec["leaves"]]
        out.append((i, build(leaves, hash_name=hash_name).root.hex() == rec["root"]))
    return out

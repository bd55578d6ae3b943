import json
import os

import pytest

from biochain import reference
from biochain.errors import IntegrityViolation, NotEnrolled
from biochain.ledger import Ledger
from biochain.registry import TemplateRegistry
from biochain.schemes import (
    ANCHOR_ID,
    anchor_commitment,
    KINDS,
    MerkleAnchor,
    OffChainStore,
    open_scheme,
    project_cost,
    single_op_gas,
)


def make(kind, tmp_path, **kw):
    ledger = Ledger()
    reg, _ = TemplateRegistry.deploy(ledger)
    off = None if kind == "full_on_chain" else OffChainStore(tmp_path / "off")
    return open_scheme(kind, reg, off, **kw)


def flip_bit(path, bit):
    b = bytearray(path.read_bytes())
    b[bit // 8] ^= 1 << (bit % 8)
    path.write_bytes(bytes(b))


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip(kind, tmp_path):
    s = make(kind, tmp_path)
    payloads = {u: os.urandom(60 + u) for u in range(1, 6)}
    for u, p in payloads.items():
        s.enroll(u, p, "signature_global")
    for u, p in payloads.items():
        assert s.retrieve_verified(u) == p
    s.remove(3)
    with pytest.raises(NotEnrolled):
        s.retrieve_verified(3)
    with pytest.raises(NotEnrolled):
        s.remove(3)
    assert s.retrieve_verified(4) == payloads[4]


def test_only_digest_on_chain(tmp_path):
    s = make("data_hashing", tmp_path)
    receipt, ref = s.enroll(1, b"\x05" * 400, "face")
    assert s.registry.get_template(1) == bytes.fromhex(ref)
    assert abs(receipt.gas_used - 86848) / 86848 <= 0.05
    r = s.remove(1)
    assert abs(r.gas_used - 18850) / 18850 <= 0.05


def test_merkle_anchor_holds_root_only(tmp_path):
    s = make("merkle_anchor", tmp_path)
    for u in range(1, 5):
        s.enroll(u, bytes([u]) * 100)
    assert s.anchored_value() == anchor_commitment(s.tree.root)
    assert 0 not in s.anchored_value()
    assert len(s.registry.get_template(ANCHOR_ID)) == 32
    for u in range(1, 5):
        assert s.registry.get_template(u) == b""


@pytest.mark.parametrize("kind", ["data_hashing", "merkle_anchor"])
def test_tamper_detected(kind, tmp_path):
    s = make(kind, tmp_path)
    s.enroll(1, os.urandom(60))
    s.enroll(2, os.urandom(60))
    f = s.off_chain.path_for(s.off_chain.index[1]["digest"])
    flip_bit(f, 17)
    with pytest.raises(IntegrityViolation):
        s.retrieve_verified(1)
    assert s.retrieve_verified(2)
    assert not s.off_chain.check(1)


@pytest.mark.parametrize("kind", ["data_hashing", "merkle_anchor"])
def test_missing_file_detected(kind, tmp_path):
    s = make(kind, tmp_path)
    s.enroll(1, b"abc" * 30)
    s.off_chain.path_for(s.off_chain.index[1]["digest"]).unlink()
    with pytest.raises(IntegrityViolation):
        s.retrieve_verified(1)


def test_full_on_chain_ignores_off_chain_tamper(tmp_path):
    s = make("full_on_chain", tmp_path)
    data = os.urandom(60)
    s.enroll(1, data)
    (tmp_path / "decoy.bin").write_bytes(b"x")
    flip_bit(tmp_path / "decoy.bin", 0)
    assert s.retrieve_verified(1) == data


def test_shared_payload_files_are_refcounted(tmp_path):
    store = OffChainStore(tmp_path)
    store.put(1, b"same")
    store.put(2, b"same")
    store.delete(1)
    assert store.get(2) == b"same"
    store.delete(2)
    assert not list(tmp_path.glob("*.bin"))
    assert json.loads((tmp_path / "index.json").read_text()) == {}


def test_index_layout(tmp_path):
    store = OffChainStore(tmp_path)
    d = store.put(9, b"payload", "face")
    idx = json.loads((tmp_path / "index.json").read_text())
    assert idx == {"9": {"digest": d.hex(), "size": 7, "modality": "face"}}
    assert (tmp_path / f"{d.hex()}.bin").read_bytes() == b"payload"
    assert OffChainStore(tmp_path).get(9) == b"payload"


def test_merkle_gas_independent_of_store_size(tmp_path):
    gases = {}
    for n in (1, 10, 100):
        s = make("merkle_anchor", tmp_path / str(n))
        for u in range(n - 1):
            s.enroll(u, u.to_bytes(4, "big") * 15)
        enroll, _ = s.enroll(10_000, b"\x42" * 60)
        remove = s.remove(10_000)
        gases[n] = (enroll.gas_used, remove.gas_used)
    assert len(set(gases.values())) == 1


def test_merkle_batching(tmp_path):
    s = make("merkle_anchor", tmp_path, batch_size=3)
    r1, _ = s.enroll(1, b"a" * 40)
    r2, _ = s.enroll(2, b"b" * 40)
    assert r1 is None and r2 is None
    with pytest.raises(IntegrityViolation):
        s.retrieve_verified(1)
    r3, _ = s.enroll(3, b"c" * 40)
    assert r3 is not None
    assert s.retrieve_verified(1) == b"a" * 40
    s.enroll(4, b"d" * 40)
    assert s.flush() is not None and s.flush() is None


def test_merkle_state_persists(tmp_path):
    ledger = Ledger()
    reg, _ = TemplateRegistry.deploy(ledger)
    off = OffChainStore(tmp_path / "off")
    s = MerkleAnchor(reg, off, tree_path=tmp_path / "tree.json")
    s.enroll(1, b"one" * 20)
    s2 = MerkleAnchor(reg, OffChainStore(tmp_path / "off"), tree_path=tmp_path / "tree.json")
    assert s2.retrieve_verified(1) == b"one" * 20


def test_tampered_tree_state_detected(tmp_path):
    ledger = Ledger()
    reg, _ = TemplateRegistry.deploy(ledger)
    s = MerkleAnchor(reg, OffChainStore(tmp_path / "off"), tree_path=tmp_path / "tree.json")
    s.enroll(1, b"one" * 20)
    s.enroll(2, b"two" * 20)
    # swap in a forged payload and a matching local tree; the anchor still disagrees
    s.off_chain.put(1, b"forged")
    from biochain import merkle
    s.tree, _ = merkle.update_leaf(s.tree, 1, b"forged")
    with pytest.raises(IntegrityViolation):
        s.retrieve_verified(1)


def test_commitment_is_zero_free_and_binding():
    roots = [bytes([i]) * 32 for i in range(64)]
    values = [anchor_commitment(r) for r in roots]
    assert all(0 not in v and len(v) == 32 for v in values)
    assert len(set(values)) == len(values)


def test_analytic_merkle_gas_equals_live_anchor(tmp_path):
    s = make("merkle_anchor", tmp_path)
    for u in range(5):
        r, _ = s.enroll(u, os.urandom(50))
        assert r.gas_used == single_op_gas("merkle_anchor", 50, "create")
    assert s.remove(2).gas_used == single_op_gas("merkle_anchor", 50, "delete")


@pytest.mark.parametrize("modality", list(reference.TEMPLATE_SHAPES))
def test_analytic_full_gas_close_to_live(tmp_path, modality):
    s = make("full_on_chain", tmp_path)
    size = reference.template_bytes(modality)
    r, _ = s.enroll(1, b"\xab" * size, modality)
    assert r.gas_used == single_op_gas("full_on_chain", size, "create", modality=modality)
    assert s.remove(1).gas_used == single_op_gas("full_on_chain", size, "delete", modality=modality)


def test_drop_anchor(tmp_path):
    s = make("merkle_anchor", tmp_path)
    s.enroll(1, b"x" * 60)
    r = s.drop_anchor()
    assert abs(r.gas_used - 18850) / 18850 <= 0.05
    assert s.registry.get_template(ANCHOR_ID) == b""


def test_full_on_chain_linearity(tmp_path):
    s = make("full_on_chain", tmp_path)
    single = single_op_gas("full_on_chain", 60, "create")
    total = sum(s.enroll(u, b"\xab" * 60)[0].gas_used for u in range(1, 10))
    assert total == 9 * s.enroll(10, b"\xab" * 60)[0].gas_used
    assert project_cost("full_on_chain", 9, 60).gas_used == 9 * single


def test_projection_shapes():
    assert project_cost("merkle_anchor", 0, 60).gas_used == 0
    assert project_cost("merkle_anchor", 1, 60).gas_used == project_cost("merkle_anchor", 10**6, 60).gas_used
    assert project_cost("data_hashing", 10, 60).gas_used == project_cost("data_hashing", 10, 6174).gas_used
    assert single_op_gas("data_hashing", 60, "retrieve") == 0
    with pytest.raises(ValueError):
        project_cost("data_hashing", -1, 60)


@pytest.mark.parametrize("key, usd", list(reference.PROJECTIONS_USD.items()))
def test_projections_near_reference(key, usd):
    kind, modality = key
    size = reference.template_bytes(modality or "face")
    got = project_cost(kind, reference.PROJECTION_N, size).usd_cost
    assert abs(got - usd) / usd <= 0.10


def test_unknown_scheme(tmp_path):
    with pytest.raises(ValueError):
        open_scheme("carrier_pigeon", None)
    with pytest.raises(ValueError):
        single_op_gas("carrier_pigeon", 1, "create")

"""In-memory single-chain ledger with slot-level gas accounting.

The ledger keeps one slot map per deployed contract, applies transactions
atomically, records every slot write in an append-only history, and samples
a simulated confirmation latency for each mined transaction. Contract code is
any object with a ``name`` attribute and an
``execute(storage, calldata, static) -> bytes`` method; raising
:class:`Revert` from ``execute`` reverts the transaction.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Iterable, Mapping

import numpy as np

from . import gas
from .errors import RevertedCall, TooFewRepetitions, UnknownContract
from .gas import DEFAULT_SCHEDULE, FeeQuote, GasBreakdown, GasSchedule, SlotOps
from .hashing import get_hash

OVERWRITE_PRICING = ("fresh", "occupied")


class Revert(Exception):
    """Raised by contract code to abort the current transaction."""


@dataclass
class LatencyModel:
    """Confirmation delay of a mined transaction.

    A transaction waits one block interval drawn uniformly from
    ``mean * [1 - jitter, 1 + jitter]``; with probability ``jitter`` it misses
    that block and waits two. Samples therefore lie in
    ``[mean * (1 - jitter), 2 * mean * (1 + jitter)]``.
    """

    mean_block_interval: float = 13.0
    jitter_fraction: float = 0.3
    rng_seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mean_block_interval <= 0:
            raise ValueError("mean_block_interval must be > 0")
        if not 0 <= self.jitter_fraction < 1:
            raise ValueError("jitter_fraction must be in [0, 1)")
        self._rng = np.random.default_rng(self.rng_seed)

    @property
    def bounds(self) -> tuple[float, float]:
        m, j = self.mean_block_interval, self.jitter_fraction
        return m * (1 - j), 2 * m * (1 + j)

    def sample(self) -> float:
        m, j = self.mean_block_interval, self.jitter_fraction
        if j == 0:
            return float(m)
        wait = m * self._rng.uniform(1 - j, 1 + j)
        if self._rng.random() < j:
            wait *= 2
        return float(wait)

    def get_state(self) -> dict:
        return {
            "mean_block_interval": self.mean_block_interval,
            "jitter_fraction": self.jitter_fraction,
            "rng_seed": self.rng_seed,
            "rng_state": self._rng.bit_generator.state,
        }

    @classmethod
    def from_state(cls, d: Mapping) -> "LatencyModel":
        model = cls(d["mean_block_interval"], d["jitter_fraction"], d["rng_seed"])
        if "rng_state" in d:
            model._rng.bit_generator.state = d["rng_state"]
        return model


def trimmed_mean(samples: Iterable[float]) -> float:
    """Mean after dropping one minimum and one maximum sample."""
    xs = sorted(samples)
    if len(xs) < 3:
        raise TooFewRepetitions(f"need at least 3 samples, got {len(xs)}")
    inner = xs[1:-1]
    return sum(inner) / len(inner)


@dataclass(frozen=True)
class HistoryEntry:
    tx_index: int
    address: str
    slot: int
    old: int
    new: int

    def to_list(self) -> list:
        return [self.tx_index, self.address, _hex(self.slot), _hex(self.old), _hex(self.new)]

    @classmethod
    def from_list(cls, row) -> "HistoryEntry":
        tx, addr, slot, old, new = row
        return cls(int(tx), addr, int(slot, 16), int(old, 16), int(new, 16))


def _hex(x: int) -> str:
    return "0x" + format(x, "064x")


class SlotStore:
    """Contract storage: ``(address, slot) -> word`` plus write history.

    Zero words are not kept in the map; absent keys read as zero.
    """

    def __init__(self):
        self.slots: dict[tuple[str, int], int] = {}
        self.history: list[HistoryEntry] = []

    def read(self, address: str, slot: int) -> int:
        return self.slots.get((address, slot), 0)

    def _apply(self, entry: HistoryEntry):
        key = (entry.address, entry.slot)
        if entry.new:
            self.slots[key] = entry.new
        else:
            self.slots.pop(key, None)

    def commit(self, entries: list[HistoryEntry]):
        for e in entries:
            self._apply(e)
        self.history.extend(entries)

    @classmethod
    def replay(cls, history: Iterable[HistoryEntry]) -> "SlotStore":
        store = cls()
        store.commit(list(history))
        return store

    def contract_slots(self, address: str) -> dict[int, int]:
        return {k[1]: v for k, v in self.slots.items() if k[0] == address}


class StorageView:
    """Per-transaction storage journal handed to contract code."""

    def __init__(self, store: SlotStore, address: str, tx_index: int, hash_name: str, static: bool):
        self._store = store
        self.address = address
        self._tx_index = tx_index
        self.hash = get_hash(hash_name)
        self.static = static
        self._pending: dict[int, int] = {}
        self.writes: list[HistoryEntry] = []

    def sload(self, slot: int) -> int:
        if slot in self._pending:
            return self._pending[slot]
        return self._store.read(self.address, slot)

    def sstore(self, slot: int, word: int):
        if self.static:
            raise Revert("state modification in a read-only call")
        slot &= (1 << 256) - 1
        old = self.sload(slot)
        self.writes.append(HistoryEntry(self._tx_index, self.address, slot, old, word))
        self._pending[slot] = word


def classify_writes(writes: Iterable[HistoryEntry], overwrite_pricing: str = "fresh") -> SlotOps:
    """Count slot writes by gas category.

    A nonzero-to-nonzero overwrite counts as a fresh write under "fresh"
    pricing and as a reset under "occupied" pricing.
    """
    sets = resets = clears = 0
    for w in writes:
        if w.old == 0:
            if w.new == 0:
                resets += 1
            else:
                sets += 1
        elif w.new == 0:
            clears += 1
        elif overwrite_pricing == "fresh":
            sets += 1
        else:
            resets += 1
    return SlotOps(sets, resets, clears)


@dataclass(frozen=True)
class TxReceipt:
    tx_index: int
    breakdown: GasBreakdown
    fee: FeeQuote
    confirmation_latency: float
    status: str = "success"
    to: str | None = None
    kind: str = "call"
    slot_ops: SlotOps = SlotOps()

    @property
    def gas_used(self) -> int:
        return self.breakdown.net

    def to_dict(self) -> dict:
        return {
            "tx_index": self.tx_index,
            "to": self.to,
            "kind": self.kind,
            "status": self.status,
            "gas": self.breakdown.to_dict(),
            "fee": self.fee.to_dict(),
            "slot_ops": {"sets": self.slot_ops.sets, "resets": self.slot_ops.resets,
                         "clears": self.slot_ops.clears},
            "confirmation_latency": round(self.confirmation_latency, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


@dataclass(frozen=True)
class Call:
    to: str
    data: bytes
    kind: str = "call"


class Ledger:
    """Single-writer simulated chain.

    ``overwrite_pricing`` selects how nonzero-to-nonzero overwrites are
    charged: "fresh" (default) bills them like first writes, "occupied" at
    ``sstore_reset``.
    """

    def __init__(self, schedule: GasSchedule = DEFAULT_SCHEDULE, latency: LatencyModel | None = None,
                 gas_price=1, eth_usd=140, hash_name: str = "keccak256",
                 overwrite_pricing: str = "fresh"):
        if overwrite_pricing not in OVERWRITE_PRICING:
            raise ValueError(f"overwrite_pricing must be one of {OVERWRITE_PRICING}")
        get_hash(hash_name)
        self.schedule = schedule
        self.latency = latency if latency is not None else LatencyModel()
        self.gas_price = Decimal(str(gas_price))
        self.eth_usd = Decimal(str(eth_usd))
        self.hash_name = hash_name
        self.overwrite_pricing = overwrite_pricing
        self.store = SlotStore()
        self.contracts: dict[str, object] = {}
        self.receipts: list[TxReceipt] = []
        self.tx_count = 0
        self._lock = threading.RLock()

    def _fee(self, gas_used: int) -> FeeQuote:
        return gas.quote_fee(gas_used, self.gas_price, self.eth_usd)

    def _new_address(self) -> str:
        h = get_hash(self.hash_name)(b"deploy" + self.tx_count.to_bytes(8, "big"))
        return "0x" + h[12:].hex()

    def deploy(self, code) -> tuple[str, TxReceipt]:
        with self._lock:
            address = self._new_address()
            self.contracts[address] = code
            gas_used = self.schedule.deploy_gas
            bd = GasBreakdown(gas_used, 0, 0, 0, 0, gas_used)
            receipt = TxReceipt(self.tx_count, bd, self._fee(gas_used), self.latency.sample(),
                                "success", address, "deploy")
            self.receipts.append(receipt)
            self.tx_count += 1
            return address, receipt

    def _code(self, address: str):
        try:
            return self.contracts[address]
        except KeyError:
            raise UnknownContract(f"no contract deployed at {address}") from None

    def submit(self, tx: Call) -> TxReceipt:
        with self._lock:
            code = self._code(tx.to)
            view = StorageView(self.store, tx.to, self.tx_count, self.hash_name, static=False)
            try:
                code.execute(view, bytes(tx.data), False)
            except Revert as exc:
                bd = gas.reverted_breakdown(tx.data, self.schedule)
                receipt = TxReceipt(self.tx_count, bd, self._fee(bd.net), self.latency.sample(),
                                    "reverted", tx.to, tx.kind)
                self.receipts.append(receipt)
                self.tx_count += 1
                raise RevertedCall(f"transaction {receipt.tx_index} reverted: {exc}", receipt) from None
            ops = classify_writes(view.writes, self.overwrite_pricing)
            bd = gas.compose(tx.data, ops, self.schedule)
            self.store.commit(view.writes)
            receipt = TxReceipt(self.tx_count, bd, self._fee(bd.net), self.latency.sample(),
                                "success", tx.to, tx.kind, ops)
            self.receipts.append(receipt)
            self.tx_count += 1
            return receipt

    def call(self, query: Call) -> bytes:
        """Execute a read-only query against current state; free and immediate."""
        with self._lock:
            code = self._code(query.to)
            view = StorageView(self.store, query.to, self.tx_count, self.hash_name, static=True)
            try:
                return code.execute(view, bytes(query.data), True)
            except Revert as exc:
                raise RevertedCall(f"call reverted: {exc}") from None

    def measure_latency(self, op: Callable[[], TxReceipt] | str, repetitions: int = 10) -> float:
        """Average confirmation latency over ``repetitions`` runs, min and max dropped.

        ``op`` is either a zero-argument callable that performs one
        transaction and returns its receipt, or a label, in which case the
        latency model is sampled directly.
        """
        if repetitions < 3:
            raise TooFewRepetitions(f"repetitions must be >= 3, got {repetitions}")
        if callable(op):
            samples = [op().confirmation_latency for _ in range(repetitions)]
        else:
            samples = [self.latency.sample() for _ in range(repetitions)]
        return trimmed_mean(samples)

    # persistence

    def to_dict(self) -> dict:
        with self._lock:
            slots: dict[str, dict[str, str]] = {a: {} for a in self.contracts}
            for (addr, slot), word in sorted(self.store.slots.items()):
                slots.setdefault(addr, {})[_hex(slot)] = _hex(word)
            return {
                "format": "biochain-ledger/1",
                "hash": self.hash_name,
                "overwrite_pricing": self.overwrite_pricing,
                "gas_price": str(self.gas_price),
                "eth_usd": str(self.eth_usd),
                "schedule": self.schedule.to_dict(),
                "latency": self.latency.get_state(),
                "tx_count": self.tx_count,
                "contracts": {a: c.name for a, c in self.contracts.items()},
                "slots": slots,
                "history": [e.to_list() for e in self.store.history],
            }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: Mapping, codes: Mapping[str, Callable[[], object]] | None = None) -> "Ledger":
        if codes is None:
            from .registry import CONTRACT_CODES
            codes = CONTRACT_CODES
        ledger = cls(GasSchedule(**d["schedule"]), LatencyModel.from_state(d["latency"]),
                     d["gas_price"], d["eth_usd"], d["hash"], d["overwrite_pricing"])
        ledger.tx_count = int(d["tx_count"])
        for addr, name in d["contracts"].items():
            ledger.contracts[addr] = codes[name]()
        history = [HistoryEntry.from_list(r) for r in d["history"]]
        ledger.store = SlotStore.replay(history)
        exported = {(a, int(k, 16)): int(v, 16) for a, kv in d["slots"].items() for k, v in kv.items()}
        if exported != ledger.store.slots:
            raise ValueError("ledger export is inconsistent: slots do not match replayed history")
        return ledger

    @classmethod
    def from_json(cls, text: str, codes=None) -> "Ledger":
        return cls.from_dict(json.loads(text), codes)

"""Deterministic gas and fee model for registry transactions.

The model prices a transaction as

    gross = tx_base + calldata + storage + exec_overhead_base
            + exec_overhead_per_slot * touched_slots
    net   = gross - min(refund_earned, gross // 2)

with storage priced per 256-bit slot (first write, overwrite, clear) and
refunds earned by clearing slots. Dynamic ``bytes`` values occupy one packed
slot when shorter than 32 bytes and ``1 + ceil(len / 32)`` slots otherwise.
Fees are computed in exact decimal arithmetic.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Mapping

import numpy as np

from . import abi
from .errors import ConfigError

WORD = 32
GWEI = Decimal("1e-9")

OPS = ("create", "modify", "delete", "retrieve")
PRIOR_STATES = ("vacant", "occupied")

# fill byte for synthetic calldata; estimates assume nonzero template content
_CONTENT_BYTE = b"\xab"


@dataclass(frozen=True)
class GasSchedule:
    tx_base: int = 21000
    sstore_set: int = 20000
    sstore_reset: int = 5000
    sstore_clear: int = 5000
    clear_refund: int = 15000
    sload: int = 200
    calldata_nonzero: int = 68
    calldata_zero: int = 4
    exec_overhead_base: int = 1070
    exec_overhead_per_slot: int = 58
    deploy_gas: int = 498274

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{f.name} must be an integer, got {value!r}")
            if f.name.startswith("exec_overhead") or f.name == "deploy_gas":
                if value < 0:
                    raise ConfigError(f"{f.name} must be >= 0, got {value}")
            elif value <= 0:
                raise ConfigError(f"{f.name} must be > 0, got {value}")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def replace(self, **changes) -> "GasSchedule":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, int]:
        return dataclasses.asdict(self)


DEFAULT_SCHEDULE = GasSchedule()


def parse_schedule_text(text: str, path=None, base: GasSchedule = DEFAULT_SCHEDULE) -> GasSchedule:
    """Parse ``name = integer`` lines into a schedule.

    Blank lines and ``#`` comments are ignored. Unknown names and malformed
    values raise :class:`ConfigError` naming the offending line.
    """
    known = set(GasSchedule.field_names())
    values: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'name = value', got {raw.strip()!r}", lineno, path)
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in known:
            raise ConfigError(f"unknown gas constant {key!r}", lineno, path)
        try:
            values[key] = int(val.replace("_", ""))
        except ValueError:
            raise ConfigError(f"{key}: {val!r} is not an integer", lineno, path) from None
    try:
        return base.replace(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc), None, path) from None


def load_schedule(path) -> GasSchedule:
    path = Path(path)
    return parse_schedule_text(path.read_text(), path=path)


def dump_schedule(schedule: GasSchedule) -> str:
    return "".join(f"{k} = {v}\n" for k, v in schedule.to_dict().items())


@dataclass(frozen=True)
class FeeQuote:
    gas_used: int
    gas_price: Decimal = Decimal(1)
    eth_usd_rate: Decimal = Decimal(140)

    @property
    def eth_cost(self) -> Decimal:
        return Decimal(self.gas_used) * self.gas_price * GWEI

    @property
    def usd_cost(self) -> Decimal:
        return self.eth_cost * self.eth_usd_rate

    def to_dict(self) -> dict:
        # decimals as strings keep the figures exact on round-trip
        return {
            "gas": self.gas_used,
            "gwei": str(self.gas_price),
            "eth": str(self.eth_cost),
            "usd": str(self.usd_cost),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeeQuote":
        gas_price = Decimal(str(d["gwei"]))
        eth = Decimal(str(d["eth"]))
        usd = Decimal(str(d["usd"]))
        rate = usd / eth if eth else Decimal(140)
        return cls(int(d["gas"]), gas_price, rate)


@dataclass(frozen=True)
class GasBreakdown:
    base: int
    calldata: int
    storage: int
    overhead: int
    refund_granted: int
    net: int

    @property
    def gross(self) -> int:
        return self.base + self.calldata + self.storage + self.overhead

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


ZERO_BREAKDOWN = GasBreakdown(0, 0, 0, 0, 0, 0)


@dataclass(frozen=True)
class SlotOps:
    """Counts of storage writes by kind.

    ``sets`` are first writes to vacant slots, ``resets`` overwrites of
    occupied slots (or zero writes to vacant ones), ``clears`` nonzero-to-zero
    writes that earn a refund.
    """

    sets: int = 0
    resets: int = 0
    clears: int = 0

    @property
    def touched(self) -> int:
        return self.sets + self.resets + self.clears

    def __add__(self, other: "SlotOps") -> "SlotOps":
        return SlotOps(self.sets + other.sets, self.resets + other.resets, self.clears + other.clears)


def _to_decimal(x) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


def slots_for_byte_array(length: int) -> int:
    if length < 0:
        raise ValueError("length must be >= 0")
    if length < WORD:
        return 1
    return 1 + math.ceil(length / WORD)


def calldata_gas(payload: bytes, schedule: GasSchedule = DEFAULT_SCHEDULE) -> int:
    zeros = bytes(payload).count(0)
    return zeros * schedule.calldata_zero + (len(payload) - zeros) * schedule.calldata_nonzero


def bulk_storage_gas(kilobytes, direction: str, schedule: GasSchedule = DEFAULT_SCHEDULE) -> int:
    """Raw word cost of reading or writing ``kilobytes`` KB of storage."""
    kb = _to_decimal(kilobytes)
    if kb < 0:
        raise ValueError("kilobytes must be >= 0")
    words = math.ceil(kb * WORD)
    if direction == "write":
        return words * schedule.sstore_set
    if direction == "read":
        return words * schedule.sload
    raise ValueError(f"direction must be 'read' or 'write', got {direction!r}")


def apply_refund(gross: int, refund_earned: int) -> int:
    return gross - min(refund_earned, gross // 2)


def storage_gas(ops: SlotOps, schedule: GasSchedule = DEFAULT_SCHEDULE) -> int:
    return (ops.sets * schedule.sstore_set + ops.resets * schedule.sstore_reset
            + ops.clears * schedule.sstore_clear)


def compose(calldata: bytes, ops: SlotOps, schedule: GasSchedule = DEFAULT_SCHEDULE) -> GasBreakdown:
    """Price one state-changing transaction from its calldata and slot writes."""
    base = schedule.tx_base
    cd = calldata_gas(calldata, schedule)
    st = storage_gas(ops, schedule)
    overhead = schedule.exec_overhead_base + schedule.exec_overhead_per_slot * ops.touched
    gross = base + cd + st + overhead
    net = apply_refund(gross, ops.clears * schedule.clear_refund)
    return GasBreakdown(base, cd, st, overhead, gross - net, net)


def reverted_breakdown(calldata: bytes, schedule: GasSchedule = DEFAULT_SCHEDULE) -> GasBreakdown:
    cd = calldata_gas(calldata, schedule)
    return GasBreakdown(schedule.tx_base, cd, 0, 0, 0, schedule.tx_base + cd)


def quote_fee(gas_used: int, gas_price=1, eth_usd=140) -> FeeQuote:
    gas_price = _to_decimal(gas_price)
    eth_usd = _to_decimal(eth_usd)
    if gas_used < 0 or gas_price < 0 or eth_usd < 0:
        raise ValueError("fee inputs must be >= 0")
    return FeeQuote(int(gas_used), gas_price, eth_usd)


def _array_write_ops(length: int, prior_length: int | None) -> SlotOps:
    """Slot writes for storing a ``length``-byte array over ``prior_length``.

    ``prior_length`` None means the record is vacant. Content words are
    assumed nonzero.
    """
    n_new = slots_for_byte_array(length)
    if not prior_length:
        if length == 0:
            return SlotOps(resets=1)
        return SlotOps(sets=n_new)
    n_old = slots_for_byte_array(prior_length)
    if length == 0:
        # base word -> 0; stale data words cleared
        return SlotOps(clears=n_old) if prior_length > 0 else SlotOps(resets=1)
    overlap = min(n_new, n_old)
    return SlotOps(sets=max(0, n_new - n_old), resets=overlap, clears=max(0, n_old - n_new))


def _array_delete_ops(length: int | None) -> SlotOps:
    if not length:
        return SlotOps(resets=1)
    return SlotOps(clears=slots_for_byte_array(length))


def synthetic_calldata(op: str, data_len: int, metadata_len: int, template_id: int = 1,
                       selectors: Mapping[str, bytes] = abi.DEFAULT_SELECTORS) -> bytes:
    if op in ("create", "modify"):
        return abi.encode_record_call(selectors[op], template_id,
                                      _CONTENT_BYTE * metadata_len, _CONTENT_BYTE * data_len)
    if op in ("delete", "retrieve"):
        return abi.encode_id_call(selectors["delete" if op == "delete" else "get"], template_id)
    raise ValueError(f"unknown op {op!r}; expected one of {OPS}")


def estimate_tx(op: str, data_len: int, metadata_len: int, prior_state: str = "vacant",
                schedule: GasSchedule = DEFAULT_SCHEDULE, calldata: bytes | None = None) -> GasBreakdown:
    """Analytic gas estimate for one registry operation.

    ``prior_state`` "occupied" means a record with the same lengths is already
    stored under the ID. Modification of an occupied record is priced at
    ``sstore_reset`` per slot here; pass ``"vacant"`` to price it as a fresh
    write. ``calldata`` overrides the synthetic ABI payload.
    """
    if op not in OPS:
        raise ValueError(f"unknown op {op!r}; expected one of {OPS}")
    if prior_state not in PRIOR_STATES:
        raise ValueError(f"prior_state must be one of {PRIOR_STATES}")
    if data_len < 0 or metadata_len < 0:
        raise ValueError("lengths must be >= 0")
    if op == "retrieve":
        return ZERO_BREAKDOWN
    if calldata is None:
        calldata = synthetic_calldata(op, data_len, metadata_len)
    occupied = prior_state == "occupied"
    if op == "delete":
        if occupied:
            ops = _array_delete_ops(metadata_len) + _array_delete_ops(data_len)
        else:
            ops = _array_delete_ops(None) + _array_delete_ops(None)
    else:
        ops = (_array_write_ops(metadata_len, metadata_len if occupied else None)
               + _array_write_ops(data_len, data_len if occupied else None))
    return compose(calldata, ops, schedule)


def fit_overheads(cases, schedule: GasSchedule = DEFAULT_SCHEDULE, relative: bool = True):
    """Least-squares fit of ``exec_overhead_base`` and ``exec_overhead_per_slot``.

    ``cases`` is an iterable of ``(op, data_len, metadata_len, target_gas)``
    for vacant creates and occupied deletes. Net gas is affine in both
    overheads (with slope 1/2 where the refund cap binds), so the fit is a
    2-parameter linear problem. Residuals are relative to the target when
    ``relative`` is true. Returns ``(base, per_slot)`` rounded to integers.
    """
    rows, rhs, weights = [], [], []
    zero = schedule.replace(exec_overhead_base=0, exec_overhead_per_slot=0)
    for op, data_len, metadata_len, target in cases:
        prior = "occupied" if op == "delete" else "vacant"
        b0 = estimate_tx(op, data_len, metadata_len, prior, zero)
        slots = _touched_slots(op, data_len, metadata_len, prior)
        # refund cap binds for every occupied delete with >= 1 cleared slot
        factor = 0.5 if (op == "delete" and b0.refund_granted * 2 >= b0.gross - 1) else 1.0
        rows.append([factor, factor * slots])
        rhs.append(target - b0.net)
        weights.append(1.0 / target if relative else 1.0)
    a = np.asarray(rows) * np.asarray(weights)[:, None]
    y = np.asarray(rhs) * np.asarray(weights)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return int(round(coef[0])), int(round(coef[1]))


def _touched_slots(op, data_len, metadata_len, prior) -> int:
    if op == "delete":
        if prior == "occupied":
            ops = _array_delete_ops(metadata_len) + _array_delete_ops(data_len)
        else:
            ops = SlotOps(resets=2)
    else:
        occ = prior == "occupied"
        ops = (_array_write_ops(metadata_len, metadata_len if occ else None)
               + _array_write_ops(data_len, data_len if occ else None))
    return ops.touched

"""Cost tables and storage projections.

Every gas figure here comes from running the operation on a fresh simulated
ledger; nothing is re-derived or re-rounded. Only the printed USD (4
decimals) and ETH (9 decimals) strings are rounded.
"""

from __future__ import annotations

import csv
import io
import json
import tempfile
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from . import gas, reference
from .gas import DEFAULT_SCHEDULE, GasSchedule, quote_fee
from .ledger import LatencyModel, Ledger
from .registry import TemplateRegistry
from .schemes import KINDS, OffChainStore, open_scheme, project_cost

MODALITIES = tuple(reference.TEMPLATE_SHAPES)
OPERATIONS = ("create", "modify", "retrieve", "delete")
COLUMNS = ("modality", "template_size_bits", "operation", "scheme", "gas", "eth", "usd", "latency_avg_s")
LATENCY_REPETITIONS = 10


def fmt_usd(x: Decimal) -> str:
    return format(Decimal(x).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN), "f")


def fmt_eth(x: Decimal) -> str:
    return format(Decimal(x).quantize(Decimal("0.000000001"), rounding=ROUND_HALF_EVEN), "f")


@dataclass(frozen=True)
class CostRow:
    modality: str
    template_size_bits: int | None
    operation: str
    scheme: str
    gas: int
    eth: Decimal
    usd: Decimal
    latency_avg_s: float | None

    def formatted(self) -> dict:
        d = asdict(self)
        d["eth"] = fmt_eth(self.eth)
        d["usd"] = fmt_usd(self.usd)
        d["latency_avg_s"] = None if self.latency_avg_s is None else round(self.latency_avg_s, 3)
        return d


@dataclass
class CostTable:
    rows: list[CostRow]

    def find(self, modality: str, operation: str, scheme: str) -> CostRow:
        for r in self.rows:
            if (r.modality, r.operation, r.scheme) == (modality, operation, scheme):
                return r
        raise KeyError((modality, operation, scheme))

    def to_csv(self) -> str:
        return rows_to_csv([r.formatted() for r in self.rows], COLUMNS)

    def to_json(self) -> str:
        return json.dumps([r.formatted() for r in self.rows], indent=1)


def rows_to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: "" if r.get(k) is None else r[k] for k in columns})
    return buf.getvalue()


def template_payload(modality: str, seed: int = 0, variant: int = 0) -> bytes:
    """Deterministic stand-in template bytes of the modality's on-chain size."""
    rng = np.random.default_rng([seed, MODALITIES.index(modality), variant])
    return rng.integers(0, 256, reference.template_bytes(modality), dtype=np.uint8).tobytes()


def _row(modality, bits, op, scheme, gas_used, gas_price, eth_usd, latency):
    fee = quote_fee(gas_used, gas_price, eth_usd)
    return CostRow(modality, bits, op, scheme, gas_used, fee.eth_cost, fee.usd_cost, latency)


def _pipeline(kind: str, modality: str, schedule: GasSchedule, gas_price, eth_usd, seed: int, workdir) -> dict:
    """Run create, modify, retrieve and delete once on a fresh chain; gas per op."""
    ledger = Ledger(schedule, LatencyModel(rng_seed=seed), gas_price, eth_usd)
    registry, deploy = TemplateRegistry.deploy(ledger)
    off = OffChainStore(f"{workdir}/{kind}-{modality}") if kind != "full_on_chain" else None
    scheme = open_scheme(kind, registry, off)
    user = 1
    first, second = template_payload(modality, seed, 0), template_payload(modality, seed, 1)
    created, _ = scheme.enroll(user, first, modality)
    # modification re-runs the write path with a different template
    modified, _ = scheme.enroll(user, second, modality)
    scheme.retrieve_verified(user)
    if kind == "merkle_anchor":
        # the contract's delete on the anchor record; per-user removal is an anchor rewrite
        deleted = scheme.drop_anchor()
    else:
        deleted = scheme.remove(user)
    return {"deploy": deploy, "create": created, "modify": modified, "delete": deleted, "ledger": ledger}


def cost_table(schedule: GasSchedule = DEFAULT_SCHEDULE, gas_price=1, eth_usd=140, seed: int = 0) -> CostTable:
    rows: list[CostRow] = []
    latency = LatencyModel(rng_seed=seed)
    probe = Ledger(schedule, latency, gas_price, eth_usd)

    def lat(label):
        return probe.measure_latency(label, LATENCY_REPETITIONS)

    rows.append(_row("-", None, "deploy", "-", schedule.deploy_gas, gas_price, eth_usd, lat("deploy")))
    for direction in ("write", "read"):
        g = gas.bulk_storage_gas(1, direction, schedule)
        rows.append(_row("raw_storage", 8 * 1024, f"{direction}_1kb", "-", g, gas_price, eth_usd, None))
    with tempfile.TemporaryDirectory() as workdir:
        for modality in MODALITIES:
            count, width = reference.TEMPLATE_SHAPES[modality]
            bits = count * width
            for kind in KINDS:
                res = _pipeline(kind, modality, schedule, gas_price, eth_usd, seed, workdir)
                for op in OPERATIONS:
                    if op == "retrieve":
                        rows.append(_row(modality, bits, op, kind, 0, gas_price, eth_usd, 0.0))
                        continue
                    rows.append(_row(modality, bits, op, kind, res[op].gas_used, gas_price, eth_usd, lat(op)))
    return CostTable(rows)


PROJECTION_COLUMNS = ("scheme", "op", "n", "gas", "eth", "usd", "modality")


def projection_rows(n_templates: int, schedule: GasSchedule = DEFAULT_SCHEDULE, gas_price=1, eth_usd=140,
                    op: str = "create") -> list[dict]:
    """Total cost of applying ``op`` to ``n_templates`` templates per scheme and modality."""
    rows = []
    for kind in KINDS:
        for modality in MODALITIES:
            fee = project_cost(kind, n_templates, reference.template_bytes(modality), op, schedule,
                               gas_price, eth_usd, modality)
            rows.append({"scheme": kind, "op": op, "n": n_templates, "gas": fee.gas_used,
                         "eth": fmt_eth(fee.eth_cost), "usd": fmt_usd(fee.usd_cost), "modality": modality})
    return rows


def render(rows: list[dict], columns, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1)
    return rows_to_csv(rows, columns)


__all__ = ["CostRow", "CostTable", "cost_table", "projection_rows", "template_payload", "fmt_usd",
           "fmt_eth", "render", "COLUMNS", "PROJECTION_COLUMNS"]

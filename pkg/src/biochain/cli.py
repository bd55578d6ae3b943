"""``biochain`` command line.

Exit codes: 0 success, 1 other failure, 2 integrity violation, 3 config
error, 4 not enrolled.
"""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import reports
from .errors import BiochainError, ConfigError, IntegrityViolation, NotEnrolled
from .gas import DEFAULT_SCHEDULE, dump_schedule, load_schedule
from .hashing import sha3_256
from .ledger import LatencyModel, Ledger
from .registry import TemplateRegistry
from .schemes import KINDS, OffChainStore, open_scheme

EXIT_OK, EXIT_FAIL, EXIT_INTEGRITY, EXIT_CONFIG, EXIT_NOT_ENROLLED = 0, 1, 2, 3, 4

DEFAULT_SWEEP_SIZES = {
    "face": [1, 2, 5, 10, 25, 50, 100, 200, 500, 1000, 2000, 4096],
    "signature_global": None,
    "signature_local": None,
}


# store directory


class Store:
    """On-disk state of one deployment: ledger export, off-chain files and config."""

    def __init__(self, root):
        self.root = Path(root)
        self.chain = self.root / "chain.json"
        self.offchain = self.root / "offchain"
        self.index = self.root / "index.json"
        self.config = self.root / "config.txt"
        self.meta = self.root / "store.json"
        self.tree = self.root / "merkle.json"

    @property
    def exists(self) -> bool:
        return self.chain.exists() and self.meta.exists()

    def initialize(self, scheme: str, schedule, gas_price, eth_usd, seed: int, occupied: bool = False,
                   batch: int = 1):
        self.root.mkdir(parents=True, exist_ok=True)
        self.config.write_text(dump_schedule(schedule))
        ledger = Ledger(schedule, LatencyModel(rng_seed=seed), gas_price, eth_usd,
                        overwrite_pricing="occupied" if occupied else "fresh")
        registry, receipt = TemplateRegistry.deploy(ledger)
        self.meta.write_text(json.dumps({"scheme": scheme, "address": registry.address, "batch": batch}, indent=1))
        self.chain.write_text(ledger.to_json())
        return receipt

    def open(self):
        meta = json.loads(self.meta.read_text())
        ledger = Ledger.from_json(self.chain.read_text())
        registry = TemplateRegistry(ledger, meta["address"])
        kind = meta["scheme"]
        off = None if kind == "full_on_chain" else OffChainStore(self.offchain, self.index)
        extra = {"tree_path": self.tree, "batch_size": meta.get("batch", 1)} if kind == "merkle_anchor" else {}
        return ledger, open_scheme(kind, registry, off, **extra)

    def save(self, ledger: Ledger):
        tmp = self.chain.with_suffix(".tmp")
        tmp.write_text(ledger.to_json())
        tmp.replace(self.chain)


def _schedule(args):
    if args.config:
        return load_schedule(args.config)
    return DEFAULT_SCHEDULE


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _receipt_doc(receipt, **extra) -> dict:
    doc = dict(extra)
    if receipt is None:
        doc["receipt"] = None
        return doc
    doc["receipt"] = receipt.to_dict()
    doc["gas"] = receipt.gas_used
    doc["usd"] = reports.fmt_usd(receipt.fee.usd_cost)
    doc["eth"] = reports.fmt_eth(receipt.fee.eth_cost)
    doc["latency_s"] = round(receipt.confirmation_latency, 3)
    return doc


# commands


def cmd_costs(args) -> int:
    table = reports.cost_table(_schedule(args), args.gas_price, args.eth_usd, args.seed)
    rows = [r.formatted() for r in table.rows]
    proj = None
    if args.n_templates is not None:
        proj = reports.projection_rows(args.n_templates, _schedule(args), args.gas_price, args.eth_usd)
    as_json = json.dumps({"costs": rows, "projections": proj}, indent=1) if proj is not None else table.to_json()
    as_csv = table.to_csv()
    if proj is not None:
        as_csv += "\n" + reports.rows_to_csv(proj, reports.PROJECTION_COLUMNS)
    _emit(as_json if args.format == "json" else as_csv, args.out)
    if args.out:
        # a file report is written in both formats, side by side
        other = Path(args.out).with_suffix(".csv" if args.format == "json" else ".json")
        if other != Path(args.out):
            other.write_text(as_csv if args.format == "json" else as_json)
    return EXIT_OK


def cmd_project(args) -> int:
    n = 1_000_000 if args.n_templates is None else args.n_templates
    rows = reports.projection_rows(n, _schedule(args), args.gas_price, args.eth_usd, args.operation)
    _emit(reports.render(rows, reports.PROJECTION_COLUMNS, args.format), args.out)
    return EXIT_OK


def _open_store(args, create: bool):
    store = Store(args.store_dir)
    init_receipt = None
    if not store.exists:
        if not create:
            raise NotEnrolled(f"no store at {store.root}")
        if args.batch < 1:
            raise ConfigError("--batch must be >= 1")
        init_receipt = store.initialize(args.scheme or "data_hashing", _schedule(args),
                                        args.gas_price, args.eth_usd, args.seed, args.occupied, args.batch)
    ledger, scheme = store.open()
    if args.scheme and args.scheme != scheme.kind:
        raise ConfigError(f"store {store.root} uses scheme {scheme.kind!r}, not {args.scheme!r}")
    return store, ledger, scheme, init_receipt


def cmd_enroll(args) -> int:
    payload = Path(args.template).read_bytes()
    store, ledger, scheme, init = _open_store(args, create=True)
    receipt, anchor = scheme.enroll(args.user, payload, args.modality)
    store.save(ledger)
    doc = _receipt_doc(receipt, command="enroll", user=args.user, scheme=scheme.kind,
                       template_sha3=sha3_256(payload).hex(), anchor=anchor)
    if init is not None:
        doc["deploy"] = _receipt_doc(init)
    _emit(json.dumps(doc), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    _, _, scheme, _ = _open_store(args, create=False)
    payload = scheme.retrieve_verified(args.user)
    doc = {"command": "verify", "user": args.user, "scheme": scheme.kind, "integrity": "ok",
           "bytes": len(payload), "template_sha3": sha3_256(payload).hex(), "gas": 0}
    _emit(json.dumps(doc), args.out)
    return EXIT_OK


def cmd_remove(args) -> int:
    store, ledger, scheme, _ = _open_store(args, create=False)
    receipt = scheme.remove(args.user)
    store.save(ledger)
    _emit(json.dumps(_receipt_doc(receipt, command="remove", user=args.user, scheme=scheme.kind)), args.out)
    return EXIT_OK


def cmd_flush(args) -> int:
    store, ledger, scheme, _ = _open_store(args, create=False)
    receipt = scheme.flush() if scheme.kind == "merkle_anchor" else None
    store.save(ledger)
    _emit(json.dumps(_receipt_doc(receipt, command="flush", scheme=scheme.kind)), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .biometrics import sweeps
    from .biometrics.synthetic import generate_synthetic, load_dataset

    if args.dataset:
        ds = load_dataset(args.dataset)
        modality = ds.modality
    else:
        modality = args.modality
        ds = generate_synthetic(modality, args.users, args.samples, args.separation, args.seed)
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else DEFAULT_SWEEP_SIZES[modality]
    if modality == "face":
        dim = ds.features.shape[1]
        sizes = [s for s in sizes if s <= dim] if not args.sizes else sizes
        points = sweeps.random_removal_sweep(ds.features, ds.labels, sizes, args.seed)
    elif modality == "signature_global":
        points = sweeps.global_sffs_sweep(ds, sizes, args.seed)
    else:
        points = sweeps.local_sffs_sweep(ds, sizes, args.seed, args.window)
    if args.format == "json":
        text = json.dumps([{"size": p.size, "eer_percent": p.eer_percent, "seed": p.seed,
                            "subset": list(map(int, p.subset))} for p in points], indent=1)
    else:
        text = sweeps.write_sweep_csv(points)
    _emit(text, args.out)
    return EXIT_OK


# parser


def _nonneg_decimal(text: str) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value.is_finite() or value < 0:
        raise argparse.ArgumentTypeError(f"must be a finite number >= 0: {text!r}")
    return value


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--scheme", choices=KINDS, help="storage scheme (fixed when a store is created)")
    p.add_argument("--gas-price", type=_nonneg_decimal, default=Decimal(1), help="gas price in gwei (default 1)")
    p.add_argument("--eth-usd", type=_nonneg_decimal, default=Decimal(140), help="USD per ETH (default 140)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--store-dir", default="biochain-store")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", help="gas schedule file, one 'name = integer' per line")
    p.add_argument("--n-templates", type=int, help="template count for projections")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--occupied", action="store_true",
                   help="new store: price overwrites of occupied slots at the reset rate")
    p.add_argument("--batch", type=int, default=1, help="new Merkle store: re-anchor once per this many changes")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="biochain", description="Biometric template storage on a simulated chain.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("costs", parents=[common], help="cost table for every modality, operation and scheme")

    p = sub.add_parser("project", parents=[common], help="cost of storing many templates")
    p.add_argument("--operation", choices=("create", "modify", "delete"), default="create")

    for name, helptext in (("enroll", "store a template"), ("verify", "retrieve and check a template"),
                           ("remove", "delete a template")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--user", type=int, required=True)
        if name == "enroll":
            p.add_argument("--template", required=True, help="template file (raw bytes)")
            p.add_argument("--modality", default=None)

    sub.add_parser("flush", parents=[common], help="anchor pending Merkle changes now")

    p = sub.add_parser("sweep", parents=[common], help="template size versus EER on synthetic or stored data")
    p.add_argument("--modality", choices=tuple(DEFAULT_SWEEP_SIZES), default="face")
    p.add_argument("--dataset", help="dataset file (.json or .npz) instead of synthetic data")
    p.add_argument("--users", type=int, default=40)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--separation", type=float, default=1.5)
    p.add_argument("--sizes", help="comma-separated sizes (default depends on modality)")
    p.add_argument("--window", type=int, default=None, help="DTW band half-width")
    return parser


COMMANDS = {"costs": cmd_costs, "project": cmd_project, "enroll": cmd_enroll, "verify": cmd_verify,
            "remove": cmd_remove, "flush": cmd_flush, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except IntegrityViolation as exc:
        print(f"integrity violation: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotEnrolled as exc:
        print(f"not enrolled: {exc}", file=sys.stderr)
        return EXIT_NOT_ENROLLED
    except (BiochainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

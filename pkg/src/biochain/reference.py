"""Reference figures the cost model is calibrated and checked against.

Gas values are testnet measurements of the registry contract at a gas price
of 1 gwei and 1 ETH = $140. Dollar figures keep their original rounding.
"""

from decimal import Decimal

GAS_PRICE_GWEI = Decimal(1)
ETH_USD = Decimal(140)

# per-kilobyte raw storage cost
RAW_STORAGE_GAS_PER_KB = {"read": 6400, "write": 640000}
RAW_STORAGE_USD_PER_KB = {"read": Decimal("0.004"), "write": Decimal("0.448")}
RAW_STORAGE_ETH_PER_KB = {"read": Decimal("0.000032"), "write": Decimal("0.0032")}

DEPLOY_GAS = 498274

# modality -> (element count, bits per element)
TEMPLATE_SHAPES = {
    "signature_global": (30, 16),
    "signature_local": (3087, 16),
    "face": (100, 32),
}


def template_bytes(modality: str) -> int:
    count, bits = TEMPLATE_SHAPES[modality]
    return count * bits // 8


# (modality, operation) -> gas, full on-chain column
FULL_ON_CHAIN_GAS = {
    ("signature_global", "create"): 108844,
    ("signature_global", "delete"): 21378,
    ("signature_local", "create"): 4358990,
    ("signature_local", "delete"): 504322,
    ("face", "create"): 352912,
    ("face", "delete"): 49192,
}

# shared by the data hashing and Merkle columns
DIGEST_GAS = {"create": 86848, "delete": 18850}

# (gas, printed usd); the 108844 -> $0.014 entry is inconsistent with its own
# gas figure (it gives $0.0152) and is kept out of this list on purpose
TABLE2_FEES = [
    (498274, Decimal("0.06972")),
    (86848, Decimal("0.0122")),
    (4358990, Decimal("0.610")),
    (504322, Decimal("0.07")),
    (18850, Decimal("0.0026")),
    (352912, Decimal("0.049")),
    (49192, Decimal("0.0068")),
    (21378, Decimal("0.003")),
]
INCONSISTENT_FEE = (108844, Decimal("0.014"))

# measured confirmation times, seconds
TABLE2_LATENCY = {
    "deploy": 19.19,
    ("signature_global", "create"): 10.66,
    ("signature_global", "delete"): 11.55,
    ("signature_local", "create"): 12.61,
    ("signature_local", "delete"): 12.85,
    ("face", "create"): 10.53,
    ("face", "delete"): 16.38,
}

# one-million-template extrapolations, usd
PROJECTION_N = 1_000_000
PROJECTIONS_USD = {
    ("full_on_chain", "signature_global"): Decimal(14000),
    ("full_on_chain", "signature_local"): Decimal(610000),
    ("full_on_chain", "face"): Decimal(49000),
    ("data_hashing", None): Decimal(12200),
    ("merkle_anchor", None): Decimal("0.0122"),
}

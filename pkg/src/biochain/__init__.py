"""Cost and performance model for blockchain-backed biometric template storage."""

__version__ = "0.1.0"

"""Matching, EER evaluation, feature selection and template quantization."""

from ._kernels import BACKEND
from .eer import ScoreSet, compute_eer, error_rates
from .matching import (
    FeatureVector,
    TimeFunctionSet,
    UserModel,
    dtw_score,
    euclidean_score,
    mahalanobis_score,
    verify_local,
)
from .quantize import QuantizedTemplate, dequantize, quantize
from .selection import forward_selection, sffs_select
from .sweeps import (
    GlobalSignatureProtocol,
    LocalSignatureProtocol,
    SweepPoint,
    global_sffs_sweep,
    local_sffs_sweep,
    pairwise_scores,
    random_removal_sweep,
    write_sweep_csv,
)
from .synthetic import Dataset, generate_synthetic, load_dataset, save_dataset

__all__ = [
    "BACKEND", "ScoreSet", "compute_eer", "error_rates", "FeatureVector", "TimeFunctionSet", "UserModel",
    "dtw_score", "euclidean_score", "mahalanobis_score", "verify_local", "QuantizedTemplate", "dequantize",
    "quantize", "forward_selection", "sffs_select", "GlobalSignatureProtocol", "LocalSignatureProtocol",
    "SweepPoint", "global_sffs_sweep", "local_sffs_sweep", "pairwise_scores", "random_removal_sweep",
    "write_sweep_csv", "Dataset", "generate_synthetic", "load_dataset", "save_dataset",
]

"""Matchers: Euclidean (face embeddings), Mahalanobis (global signature
features against a user model) and DTW (local signature time functions)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import (ChannelMismatch, DegenerateModel, DimensionMismatch, EmptySequence,
                      LengthMismatch, NonFiniteInput, WrongEnrollmentCount)
from . import _kernels

FACE_MAX_DIM = 4096
GLOBAL_MAX_DIM = 100
MAX_CHANNELS = 21
ENROLLMENT_COUNT = 5
VARIANCE_FLOOR_FRACTION = 1e-6


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    modality: str = "face"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("feature vector must be 1-D")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput("feature vector has non-finite entries")
        limit = {"face": FACE_MAX_DIM, "signature_global": GLOBAL_MAX_DIM}.get(self.modality)
        if limit is None:
            raise ValueError(f"unknown modality {self.modality!r}")
        if v.size > limit:
            raise ValueError(f"{self.modality} vectors hold at most {limit} features, got {v.size}")
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class TimeFunctionSet:
    """Equal-length time functions stored as a ``(samples, channels)`` array."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2:
            raise ValueError("time functions must be a 2-D (samples, channels) array")
        if not 1 <= s.shape[1] <= MAX_CHANNELS:
            raise ValueError(f"channel count must be in [1, {MAX_CHANNELS}], got {s.shape[1]}")
        object.__setattr__(self, "samples", np.ascontiguousarray(s))

    @classmethod
    def from_channels(cls, channels: Sequence[Sequence[float]]) -> "TimeFunctionSet":
        lengths = {len(c) for c in channels}
        if len(lengths) > 1:
            raise LengthMismatch("all channels must have the same length")
        return cls(np.column_stack([np.asarray(c, dtype=float) for c in channels]))

    @property
    def channels(self) -> list[np.ndarray]:
        return [self.samples[:, c] for c in range(self.samples.shape[1])]

    @property
    def samples_per_channel(self) -> int:
        return self.samples.shape[0]

    def select(self, channels: Sequence[int]) -> "TimeFunctionSet":
        return TimeFunctionSet(self.samples[:, list(channels)])

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)


@dataclass(frozen=True)
class UserModel:
    mean: np.ndarray
    variance: np.ndarray
    training_count: int = ENROLLMENT_COUNT

    @classmethod
    def fit(cls, training: np.ndarray, global_variance: np.ndarray | None = None,
            floor_fraction: float = VARIANCE_FLOOR_FRACTION) -> "UserModel":
        """Diagonal-Gaussian model from enrollment samples (rows).

        Variances are floored at ``floor_fraction`` times the population
        variance of each feature, when given.
        """
        training = np.asarray(training, dtype=float)
        if training.ndim != 2 or training.shape[0] < 2:
            raise ValueError("need a 2-D array with at least two training samples")
        var = training.var(axis=0, ddof=1)
        if global_variance is not None:
            floor = floor_fraction * np.asarray(global_variance, dtype=float)
            floor = np.where(floor > 0, floor, np.finfo(float).tiny)
        else:
            floor = np.finfo(float).tiny
        return cls(training.mean(axis=0), np.maximum(var, floor), training.shape[0])


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).ravel()


def euclidean_score(a, b) -> float:
    a, b = _vec(a), _vec(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.size} vs {b.size}")
    d = a - b
    return float(np.sqrt(np.sum(d * d)))


def mahalanobis_score(model: UserModel, sample) -> float:
    x = _vec(sample)
    mu = np.asarray(model.mean, dtype=float)
    var = np.asarray(model.variance, dtype=float)
    if x.shape != mu.shape or var.shape != mu.shape:
        raise DimensionMismatch(f"sample has {x.size} features, model has {mu.size}")
    if np.any(var <= 0):
        raise DegenerateModel("model has non-positive variance; fit with a variance floor")
    z = x - mu
    return float(np.sqrt(np.sum(z * z / var)))


def _series(x) -> np.ndarray:
    s = np.asarray(x, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    return np.ascontiguousarray(s)


def dtw_score(a, b, window: int | None = None, normalize: bool = True) -> float:
    """Elastic-match distance between two multichannel time functions.

    Local cost is the Euclidean distance across channels; steps are
    (1, 0), (0, 1) and (1, 1) with unit weight. The cumulative cost is
    divided by ``len(a) + len(b)`` when ``normalize`` is set. ``window`` is
    an optional Sakoe-Chiba band half-width.
    """
    a, b = _series(a), _series(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptySequence("DTW needs non-empty sequences")
    if a.shape[1] != b.shape[1]:
        raise ChannelMismatch(f"channel counts differ: {a.shape[1]} vs {b.shape[1]}")
    cost = _kernels.dtw_cost(a, b, _kernels.band_width(a.shape[0], b.shape[0], window))
    return cost / (a.shape[0] + b.shape[0]) if normalize else cost


def verify_local(enrollments: Sequence, query, window: int | None = None) -> float:
    """Mean DTW distance from ``query`` to each of the five enrollment samples."""
    if len(enrollments) != ENROLLMENT_COUNT:
        raise WrongEnrollmentCount(f"expected {ENROLLMENT_COUNT} enrollment samples, got {len(enrollments)}")
    return float(np.mean([dtw_score(e, query, window) for e in enrollments]))

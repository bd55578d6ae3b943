"""Template-size versus EER sweeps.

Faces: random feature removal with all-pairs Euclidean scoring.
Signatures: SFFS over global features (Mahalanobis against a five-sample
user model) or over local time functions (mean DTW to five enrollment
samples). Selection runs on one half of the users and the reported EER on
the other half. Impostor attempts are zero-effort: each user is attacked
with one later-session sample of every other user.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import SizeExceedsDimension
from . import _kernels
from .eer import ScoreSet, compute_eer
from .matching import ENROLLMENT_COUNT, UserModel, dtw_score
from .selection import sffs_select
from .synthetic import Dataset


@dataclass(frozen=True)
class SweepPoint:
    size: int
    eer_percent: float
    seed: int
    subset: tuple = ()


def write_sweep_csv(points: Iterable[SweepPoint], out=None) -> str:
    """Render ``size,eer_percent,seed`` rows; also writes to ``out`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["size", "eer_percent", "seed"])
    for p in points:
        w.writerow([p.size, f"{p.eer_percent:.6f}", p.seed])
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", newline="") as fh:
                fh.write(text)
    return text


def pair_indices(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All unordered sample pairs and whether each pair is genuine."""
    left, right = np.triu_indices(labels.size, k=1)
    return left, right, labels[left] == labels[right]


def pairwise_scores(features: np.ndarray, labels: np.ndarray, columns: Sequence[int] | None = None) -> ScoreSet:
    x = np.asarray(features, dtype=float)
    if columns is not None:
        x = x[:, np.asarray(columns)]
    x = np.ascontiguousarray(x)
    left, right, genuine = pair_indices(np.asarray(labels))
    d = _kernels.pair_distances(x, left, right)
    return ScoreSet(d[genuine], d[~genuine], "distance")


def random_subset(dim: int, size: int, seed: int) -> np.ndarray:
    """Sorted uniform draw of ``size`` of ``dim`` feature indices, seeded per (seed, size)."""
    if size > dim:
        raise SizeExceedsDimension(f"size {size} exceeds embedding dimension {dim}")
    if size < 1:
        raise ValueError("size must be >= 1")
    rng = np.random.default_rng([seed, size])
    return np.sort(rng.choice(dim, size=size, replace=False))


def random_removal_sweep(features: np.ndarray, labels: np.ndarray, sizes: Iterable[int], seed: int = 0) -> list[SweepPoint]:
    features = np.asarray(features, dtype=float)
    dim = features.shape[1]
    sizes = list(sizes)
    for size in sizes:
        if size > dim:
            raise SizeExceedsDimension(f"size {size} exceeds embedding dimension {dim}")
    out = []
    for size in sizes:
        cols = random_subset(dim, size, seed)
        eer, _ = compute_eer(pairwise_scores(features, labels, cols))
        out.append(SweepPoint(size, eer, seed, tuple(int(c) for c in cols)))
    return out


def split_users(labels: np.ndarray, seed: int, fraction: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    users = np.unique(labels)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(users)
    k = int(round(fraction * users.size))
    return np.sort(perm[:k]), np.sort(perm[k:])


def _protocol_pairs(labels: np.ndarray, n_train: int = ENROLLMENT_COUNT):
    """Per user: training indices, genuine query indices, impostor query indices."""
    users = np.unique(labels)
    idx = {u: np.flatnonzero(labels == u) for u in users}
    for u in users:
        if idx[u].size <= n_train:
            raise ValueError(f"user {u} has {idx[u].size} samples; need more than {n_train}")
    plan = []
    for u in users:
        train = idx[u][:n_train]
        genuine = idx[u][n_train:]
        impostor = np.array([idx[v][n_train] for v in users if v != u], dtype=int)
        plan.append((u, train, genuine, impostor))
    return plan


class GlobalSignatureProtocol:
    """Mahalanobis scoring of global features, precomputed per feature.

    The squared, variance-normalized deviation of every query from its
    claimed model is stored per feature, so the score for any feature
    subset is the root of a column sum.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, n_train: int = ENROLLMENT_COUNT,
                 floor_fraction: float = 1e-6):
        x = np.asarray(features, dtype=float)
        labels = np.asarray(labels)
        global_var = x.var(axis=0)
        gen_rows, imp_rows = [], []
        for _, train, genuine, impostor in _protocol_pairs(labels, n_train):
            model = UserModel.fit(x[train], global_var, floor_fraction)
            gen_rows.append((x[genuine] - model.mean) ** 2 / model.variance)
            imp_rows.append((x[impostor] - model.mean) ** 2 / model.variance)
        self.genuine_terms = np.vstack(gen_rows)
        self.impostor_terms = np.vstack(imp_rows)
        self.dim = x.shape[1]

    def scores(self, subset: Sequence[int]) -> ScoreSet:
        cols = np.asarray(subset, dtype=int)
        return ScoreSet(np.sqrt(self.genuine_terms[:, cols].sum(axis=1)),
                        np.sqrt(self.impostor_terms[:, cols].sum(axis=1)), "distance")

    def eer(self, subset: Sequence[int]) -> float:
        return compute_eer(self.scores(subset))[0]


class LocalSignatureProtocol:
    """Mean-of-five DTW scoring over a subset of time functions."""

    def __init__(self, sequences: Sequence[np.ndarray], labels: np.ndarray, n_train: int = ENROLLMENT_COUNT,
                 window: int | None = None):
        self.sequences = [np.ascontiguousarray(s) for s in sequences]
        self.plan = _protocol_pairs(np.asarray(labels), n_train)
        self.window = window
        self.channels = self.sequences[0].shape[1]

    def _score(self, train, query, cols) -> float:
        q = np.ascontiguousarray(self.sequences[query][:, cols])
        return float(np.mean([dtw_score(np.ascontiguousarray(self.sequences[t][:, cols]), q, self.window)
                              for t in train]))

    def scores(self, subset: Sequence[int]) -> ScoreSet:
        cols = list(subset)
        gen, imp = [], []
        for _, train, genuine, impostor in self.plan:
            gen.extend(self._score(train, q, cols) for q in genuine)
            imp.extend(self._score(train, q, cols) for q in impostor)
        return ScoreSet(gen, imp, "distance")

    def eer(self, subset: Sequence[int]) -> float:
        return compute_eer(self.scores(subset))[0]


def sffs_sweep(dev_eer, eval_eer, pool: Sequence[int], sizes: Iterable[int], seed: int) -> list[SweepPoint]:
    """SFFS driven by ``-dev_eer``; each selected subset is reported with ``eval_eer``."""
    sizes = sorted(set(sizes))
    records = sffs_select(pool, lambda s: -dev_eer(s), sizes)
    return [SweepPoint(k, eval_eer(records[k][0]), seed, records[k][0]) for k in sizes]


def global_sffs_sweep(ds: Dataset, sizes: Iterable[int] | None = None, seed: int = 0) -> list[SweepPoint]:
    dev_users, eval_users = split_users(ds.labels, seed)
    dev = ds.subset_users(dev_users)
    ev = ds.subset_users(eval_users)
    dev_p = GlobalSignatureProtocol(dev.features, dev.labels)
    eval_p = GlobalSignatureProtocol(ev.features, ev.labels)
    dim = ds.features.shape[1]
    sizes = range(1, dim + 1) if sizes is None else sizes
    return sffs_sweep(dev_p.eer, eval_p.eer, range(dim), sizes, seed)


def local_sffs_sweep(ds: Dataset, sizes: Iterable[int] | None = None, seed: int = 0,
                     window: int | None = None) -> list[SweepPoint]:
    dev_users, eval_users = split_users(ds.labels, seed)
    dev = ds.subset_users(dev_users)
    ev = ds.subset_users(eval_users)
    dev_p = LocalSignatureProtocol(dev.sequences, dev.labels, window=window)
    eval_p = LocalSignatureProtocol(ev.sequences, ev.labels, window=window)
    channels = dev_p.channels
    sizes = range(1, channels + 1) if sizes is None else sizes
    return sffs_sweep(dev_p.eer, eval_p.eer, range(channels), sizes, seed)

"""Seeded synthetic stand-ins for face embeddings and online signatures.

* ``face``: per-user Gaussian clusters living in a shared low-rank subspace of
  a 4096-dimensional embedding space, plus small isotropic noise.
* ``signature_global``: 100 global features per signature. A minority carry
  user identity (with decreasing strength), a few are noisy copies of the
  strongest ones, and the rest is heavy-tailed noise. Later-session samples are noisier.
* ``signature_local``: per-user pen trajectories built from sums of
  sinusoids, resampled with per-sample timing jitter, from which 21 time
  functions are derived (7 base functions and their first and second
  differences).

Samples are ordered user-major; within a user the first five form the
enrollment session and the remainder a later session.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import NonFiniteInput

MODALITIES = ("face", "signature_global", "signature_local")
FACE_DIM = 4096
GLOBAL_DIM = 100
LOCAL_CHANNELS = 21
SESSION_SPLIT = 5

LOCAL_FUNCTION_NAMES = [
    f"{prefix}{base}"
    for prefix in ("", "d_", "dd_")
    for base in ("x", "y", "pressure", "angle", "speed", "log_radius", "acceleration")
]


@dataclass
class Dataset:
    modality: str
    labels: np.ndarray
    seed: int
    features: np.ndarray | None = None
    sequences: list[np.ndarray] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def users(self) -> int:
        return int(np.unique(self.labels).size)

    @property
    def samples_per_user(self) -> int:
        return int(self.labels.size // max(self.users, 1))

    @property
    def header(self) -> dict:
        h = {"modality": self.modality, "users": self.users, "samples": self.samples_per_user, "seed": self.seed}
        if self.features is not None:
            h["dim"] = int(self.features.shape[1])
        else:
            h["channels"] = int(self.sequences[0].shape[1]) if self.sequences else 0
        return h

    def user_indices(self, user) -> np.ndarray:
        return np.flatnonzero(self.labels == user)

    def subset_users(self, users) -> "Dataset":
        mask = np.isin(self.labels, list(users))
        idx = np.flatnonzero(mask)
        return Dataset(
            self.modality, self.labels[idx], self.seed,
            None if self.features is None else self.features[idx],
            [self.sequences[i] for i in idx] if self.sequences else [],
            dict(self.params),
        )


def generate_synthetic(modality: str, users: int, samples_per_user: int = 20, separation: float = 1.0,
                       seed: int = 0, **params) -> Dataset:
    """Generate a labeled dataset; identical arguments give identical arrays."""
    if modality not in MODALITIES:
        raise ValueError(f"modality must be one of {MODALITIES}")
    if separation < 0:
        raise ValueError("separation must be >= 0")
    if users < 1 or samples_per_user < 1:
        raise ValueError("need at least one user and one sample per user")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(users), samples_per_user)
    if modality == "face":
        feats, used = _face(rng, users, samples_per_user, separation, **params)
        return Dataset(modality, labels, seed, feats, params=used)
    if modality == "signature_global":
        feats, used = _global(rng, users, samples_per_user, separation, **params)
        return Dataset(modality, labels, seed, feats, params=used)
    seqs, used = _local(rng, users, samples_per_user, separation, **params)
    return Dataset(modality, labels, seed, None, seqs, used)


def _face(rng, users, spu, separation, dim=FACE_DIM, rank=50, within=1.0, ambient=0.05):
    basis = rng.standard_normal((dim, rank)) / np.sqrt(rank)
    centers = separation * rng.standard_normal((users, rank))
    latent = np.repeat(centers, spu, axis=0) + within * rng.standard_normal((users * spu, rank))
    x = latent @ basis.T + ambient * rng.standard_normal((users * spu, dim))
    return x, {"dim": dim, "rank": rank, "within": within, "ambient": ambient}


def _global(rng, users, spu, separation, dim=GLOBAL_DIM, informative=30, redundant=8,
            drift=0.6, tail_scale=1.0):
    n = users * spu
    strength = np.linspace(1.0, 0.25, informative)
    means = separation * rng.standard_normal((users, informative)) * strength
    session = np.where(np.arange(spu) < SESSION_SPLIT, 0.0, 1.0)
    x = np.empty((n, dim))
    inf = np.repeat(means, spu, axis=0) + rng.standard_normal((n, informative))
    # later-session samples pick up extra variability the enrollment session never saw
    shift = drift * rng.standard_normal((n, dim))
    x[:, :informative] = inf
    top = np.argsort(-strength)[:redundant]
    x[:, informative:informative + redundant] = inf[:, top] + 0.3 * rng.standard_normal((n, redundant))
    n_tail = dim - informative - redundant
    # heavy-tailed noise: variance estimates from five samples are poor
    x[:, informative + redundant:] = tail_scale * rng.standard_t(3, size=(n, n_tail))
    x += shift * np.tile(session, users)[:, None]
    perm = rng.permutation(dim)
    x = x[:, perm]
    return x, {"dim": dim, "informative": informative, "redundant": redundant, "drift": drift,
               "tail_scale": tail_scale, "informative_columns": sorted(int(np.flatnonzero(perm == k)[0])
                                                                      for k in range(informative))}


def _trajectory(rng, coeffs, length, jitter):
    """One signature: 2-D pen path and pressure sampled at ``length`` points."""
    amp, freq, phase = coeffs
    # per-sample time warp: cumulative sum of jittered unit steps
    steps = 1.0 + jitter * rng.standard_normal(length).clip(-2, 2)
    t = np.cumsum(np.maximum(steps, 0.05))
    t = (t - t[0]) / (t[-1] - t[0] + 1e-12)
    wobble = 0.05 * rng.standard_normal(amp.shape)
    a = amp * (1 + wobble)
    x = np.sum(a[0][:, None] * np.sin(2 * np.pi * freq[0][:, None] * t + phase[0][:, None]), axis=0)
    y = np.sum(a[1][:, None] * np.sin(2 * np.pi * freq[1][:, None] * t + phase[1][:, None]), axis=0)
    p = 0.5 + 0.5 * np.sin(2 * np.pi * freq[2][0] * t + phase[2][0]) * a[2][0]
    x = x + t * 3.0
    noise = 0.02 * rng.standard_normal((3, length))
    return x + noise[0], y + noise[1], p + noise[2]


def local_functions(x, y, p) -> np.ndarray:
    """21 time functions ``(samples, 21)`` from pen coordinates and pressure."""
    x = (x - x.mean()) / (x.std() + 1e-12)
    y = (y - y.mean()) / (y.std() + 1e-12)
    dx, dy = np.gradient(x), np.gradient(y)
    angle = np.unwrap(np.arctan2(dy, dx))
    speed = np.hypot(dx, dy)
    d_angle = np.gradient(angle)
    log_radius = np.log((speed + 1e-6) / (np.abs(d_angle) + 1e-3))
    accel = np.hypot(np.gradient(speed), speed * d_angle)
    base = np.column_stack([x, y, p, angle, speed, log_radius, accel])
    d1 = np.gradient(base, axis=0)
    d2 = np.gradient(d1, axis=0)
    out = np.hstack([base, d1, d2])
    # per-signature standardization keeps channels on comparable scales
    out = (out - out.mean(axis=0)) / (out.std(axis=0) + 1e-9)
    return out


def _local(rng, users, spu, separation, length=60, length_spread=0.1, jitter=0.3, harmonics=3):
    # separation blends a template common to all users with a user-specific one
    mix = separation / (1.0 + separation)
    common = (np.abs(rng.standard_normal((3, harmonics))) + 0.2,
              1.0 + np.abs(rng.standard_normal((3, harmonics))),
              rng.uniform(0, 2 * np.pi, (3, harmonics)))
    seqs = []
    for _ in range(users):
        own = (np.abs(rng.standard_normal((3, harmonics))) + 0.2,
               1.0 + 2.0 * np.abs(rng.standard_normal((3, harmonics))),
               rng.uniform(0, 2 * np.pi, (3, harmonics)))
        coeffs = tuple((1 - mix) * c + mix * o for c, o in zip(common, own))
        for _ in range(spu):
            n = int(round(length * (1 + length_spread * rng.uniform(-1, 1))))
            x, y, p = _trajectory(rng, coeffs, max(n, 4), jitter)
            seqs.append(local_functions(x, y, p))
    return seqs, {"length": length, "length_spread": length_spread, "jitter": jitter, "harmonics": harmonics}


# dataset files

def save_dataset(ds: Dataset, path):
    """Write ``.json`` (human-readable) or ``.npz`` (binary columnar)."""
    path = Path(path)
    header = ds.header | {"params": ds.params}
    if path.suffix == ".npz":
        arrays = {"labels": ds.labels}
        if ds.features is not None:
            arrays["features"] = ds.features
        else:
            arrays["lengths"] = np.array([s.shape[0] for s in ds.sequences])
            arrays["samples"] = np.concatenate(ds.sequences) if ds.sequences else np.empty((0, 0))
        np.savez(path, header=np.array(json.dumps(header)), **arrays)
        return
    body = {"header": header, "labels": ds.labels.tolist()}
    if ds.features is not None:
        body["features"] = ds.features.tolist()
    else:
        body["sequences"] = [s.tolist() for s in ds.sequences]
    path.write_text(json.dumps(body))


def load_dataset(path) -> Dataset:
    path = Path(path)
    if path.suffix == ".npz":
        with np.load(path) as z:
            header = json.loads(str(z["header"]))
            labels = z["labels"]
            if "features" in z:
                return Dataset(header["modality"], labels, header["seed"], z["features"],
                               params=header.get("params", {}))
            bounds = np.cumsum(z["lengths"])[:-1]
            seqs = np.split(z["samples"], bounds)
    else:
        body = json.loads(path.read_text())
        header = body["header"]
        labels = np.asarray(body["labels"])
        if "features" in body:
            feats = np.asarray(body["features"], dtype=float)
            if not np.all(np.isfinite(feats)):
                raise NonFiniteInput(f"{path} contains non-finite features")
            return Dataset(header["modality"], labels, header["seed"], feats, params=header.get("params", {}))
        seqs = [np.asarray(s, dtype=float) for s in body["sequences"]]
    return Dataset(header["modality"], labels, header["seed"], None, list(seqs), header.get("params", {}))

"""Equal error rate from genuine and impostor score sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyScores

POLARITIES = ("distance", "similarity")


@dataclass(frozen=True)
class ScoreSet:
    genuine: np.ndarray
    impostor: np.ndarray
    polarity: str = "distance"

    def __post_init__(self):
        if self.polarity not in POLARITIES:
            raise ValueError(f"polarity must be one of {POLARITIES}")
        object.__setattr__(self, "genuine", np.asarray(self.genuine, dtype=float).ravel())
        object.__setattr__(self, "impostor", np.asarray(self.impostor, dtype=float).ravel())

    def scaled(self, factor: float) -> "ScoreSet":
        return ScoreSet(self.genuine * factor, self.impostor * factor, self.polarity)


def _oriented(scores: ScoreSet):
    if scores.genuine.size == 0 or scores.impostor.size == 0:
        raise EmptyScores("both genuine and impostor scores are required")
    if scores.polarity == "similarity":
        return -scores.genuine, -scores.impostor, -1.0
    return scores.genuine, scores.impostor, 1.0


def error_rates(scores: ScoreSet, thresholds) -> tuple[np.ndarray, np.ndarray]:
    """FAR and FRR at each threshold.

    A distance score is accepted when ``score <= t``; a similarity score when
    ``score >= t``.
    """
    g, i, sign = _oriented(scores)
    t = sign * np.asarray(thresholds, dtype=float)
    far = np.searchsorted(np.sort(i), t, side="right") / i.size
    frr = (g.size - np.searchsorted(np.sort(g), t, side="right")) / g.size
    return far, frr


def compute_eer(scores: ScoreSet) -> tuple[float, float]:
    """Return ``(eer_percent, threshold)``.

    Thresholds sweep the merged score support. Where FAR equals FRR exactly
    the EER is read off directly (midpoint threshold over a tied run);
    otherwise both rates are interpolated linearly between the two
    thresholds that bracket the crossing.
    """
    g, i, sign = _oriented(scores)
    thr = np.unique(np.concatenate([g, i]))
    span = thr[-1] - thr[0]
    # the sentinel offset scales with the scores so thresholds scale too
    pad = span if span > 0 else (abs(thr[0]) or 1.0)
    # sentinel below the support: nothing accepted
    thr = np.concatenate([[thr[0] - pad], thr])
    accepted_impostors = np.searchsorted(np.sort(i), thr, side="right")
    rejected_genuine = g.size - np.searchsorted(np.sort(g), thr, side="right")
    far = accepted_impostors / i.size
    frr = rejected_genuine / g.size
    # sign of FRR - FAR in exact integer arithmetic
    d_int = rejected_genuine * i.size - accepted_impostors * g.size
    d = frr - far
    tied = np.flatnonzero(d_int == 0)
    if tied.size:
        lo, hi = tied[0], tied[-1]
        return 100.0 * float(far[lo]), sign * float((thr[lo] + thr[hi]) / 2)
    k = int(np.flatnonzero(d_int > 0)[-1])
    alpha = d[k] / (d[k] - d[k + 1])
    eer = far[k] + alpha * (far[k + 1] - far[k])
    threshold = thr[k] + alpha * (thr[k + 1] - thr[k])
    return 100.0 * float(eer), sign * float(threshold)

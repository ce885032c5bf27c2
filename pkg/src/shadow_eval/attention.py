"""Diagnostics for attention matrices exported from Seq2Seq conversion
systems: diagonality, weak/faded-row detection, and comparison against
DTW warping paths.

Matrices are ingested from FMX files (model inference happens
elsewhere); rows must be non-negative and sum to 1. Multi-head or
multi-layer attention should be reduced to a single matrix upstream,
e.g. by averaging over heads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .align import AlignmentPath
from .features import load_feature_matrix


class AttentionError(ValueError):
    """Invalid attention matrix or incompatible paths."""


@dataclass(frozen=True)
class AttentionMatrix:
    """Row-stochastic T_out x T_in attention weights."""

    weights: np.ndarray
    source_id: str = ""
    target_id: str = ""

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        if weights.ndim != 2 or weights.shape[0] < 1 or weights.shape[1] < 1:
            raise AttentionError(f"weights must be 2-D and non-empty, got {weights.shape}")
        if not np.isfinite(weights).all():
            raise AttentionError("weights contain non-finite values")
        if (weights < 0).any():
            raise AttentionError("weights must be non-negative")
        sums = weights.sum(axis=1)
        off = np.abs(sums - 1.0) > 1e-4
        if off.any():
            row = int(np.nonzero(off)[0][0])
            raise AttentionError(f"row {row} sums to {sums[row]:.6f}, expected 1")

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]


def load_attention(path, source_id: str = "", target_id: str = "") -> AttentionMatrix:
    """Read an attention matrix stored in an FMX container."""
    m = load_feature_matrix(path)
    return AttentionMatrix(m.frames.astype(np.float64), source_id, target_id)


def attention_path(att: AttentionMatrix) -> tuple[tuple[int, int], ...]:
    """Per output frame, the input frame with the highest weight (lowest
    index on ties). No monotonicity is imposed."""
    best = att.weights.argmax(axis=1)
    return tuple((int(i), int(j)) for i, j in enumerate(best))


def diagonality(att: AttentionMatrix) -> float:
    """Mean attention mass within a band around the ideal diagonal.

    The band half-width is max(1, ceil(0.05 * T_in)) and the ideal
    diagonal maps output frame i to j = i * (T_in - 1) / (T_out - 1).
    A single-output matrix counts as fully diagonal."""
    t_out, t_in = att.weights.shape
    if t_out == 1:
        return 1.0
    half = max(1, math.ceil(0.05 * t_in))
    ideal = np.arange(t_out) * (t_in - 1) / (t_out - 1)
    offsets = np.abs(np.arange(t_in)[None, :] - ideal[:, None])
    mass = np.where(offsets <= half, att.weights, 0.0).sum(axis=1)
    return float(mass.mean())


def failure_frames(
    att: AttentionMatrix,
    peak_threshold: float = 0.1,
    entropy_threshold: float = 0.8,
) -> list[tuple[int, int]]:
    """Output frames whose attention is weak or diffuse, as inclusive
    (start, end) ranges of consecutive frame indices.

    A frame fails when its row maximum is below peak_threshold or its
    normalized row entropy (entropy / log T_in) is above
    entropy_threshold."""
    w = att.weights
    peaks = w.max(axis=1)
    if att.n_in > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = w * np.log(w)
        entropy = -np.where(w > 0, terms, 0.0).sum(axis=1)
        norm_entropy = entropy / math.log(att.n_in)
    else:
        norm_entropy = np.zeros(att.n_out)
    failing = (peaks < peak_threshold) | (norm_entropy > entropy_threshold)
    ranges = []
    start = None
    for i, bad in enumerate(failing):
        if bad and start is None:
            start = i
        elif not bad and start is not None:
            ranges.append((start, i - 1))
            start = None
    if start is not None:
        ranges.append((start, att.n_out - 1))
    return ranges


@dataclass(frozen=True)
class PathDeviation:
    mean_abs_frames: float
    normalized: float
    n_in: int


def path_deviation(att_path, dtw_path, n_in: int | None = None) -> PathDeviation:
    """Mean absolute input-frame offset between an attention path and a
    DTW path.

    The DTW path is resampled to one input index per output frame by
    averaging the input indices incident on each i; both paths must then
    cover the same output length. The offset is also reported normalized
    by the input length (taken from the DTW path unless given)."""
    if isinstance(dtw_path, AlignmentPath):
        dtw_steps = dtw_path.steps
    else:
        dtw_steps = tuple((int(i), int(j)) for i, j in dtw_path)
    att_steps = tuple((int(i), int(j)) for i, j in att_path)
    if not att_steps or not dtw_steps:
        raise AttentionError("paths must be non-empty")
    by_i: dict[int, list[int]] = {}
    for i, j in dtw_steps:
        by_i.setdefault(i, []).append(j)
    n_out = max(by_i) + 1
    if sorted(by_i) != list(range(n_out)):
        raise AttentionError("DTW path does not cover a contiguous output range")
    if len(att_steps) != n_out or [i for i, _ in att_steps] != list(range(n_out)):
        raise AttentionError(
            f"length mismatch: attention path covers {len(att_steps)} output "
            f"frames, DTW path covers {n_out}"
        )
    dtw_j = np.array([np.mean(by_i[i]) for i in range(n_out)])
    att_j = np.array([j for _, j in att_steps], dtype=np.float64)
    mean_abs = float(np.mean(np.abs(att_j - dtw_j)))
    if n_in is None:
        n_in = max(j for _, j in dtw_steps) + 1
    return PathDeviation(mean_abs, mean_abs / n_in, int(n_in))

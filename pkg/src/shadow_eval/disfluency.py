"""Listening-breakdown detection from shadowing comparisons.

The pipeline aligns a rater's first-pass shadowing against their
script-shadowing of the same sentence, turns the warped local distances
into a per-frame profile over the script-shadowing timeline, projects
the profile onto word/syllable/phone segments, and flags segments whose
score is an outlier within the utterance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .align import dtw
from .corpus import TIERS, Triplet
from .features import FeatureMatrix, load_feature_matrix


class DisfluencyError(ValueError):
    """Missing or inconsistent inputs for breakdown detection."""


@dataclass(frozen=True)
class DistanceProfile:
    """Aggregated alignment cost per frame of the script-shadowing
    (reference) sequence."""

    values: np.ndarray
    frame_period: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) < 1:
            raise DisfluencyError("profile must be a non-empty 1-D sequence")
        if not np.isfinite(values).all() or (values < 0).any():
            raise DisfluencyError("profile values must be finite and non-negative")

    @property
    def duration_sec(self) -> float:
        return len(self.values) * self.frame_period / 1000.0


@dataclass(frozen=True)
class SegmentAnnotation:
    label: str
    tier: str
    start_sec: float
    end_sec: float
    score: float
    breakdown: bool

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "tier": self.tier,
            "start_sec": self.start_sec,
            "end_sec": self.end_sec,
            "score": self.score,
            "breakdown": self.breakdown,
        }


def distance_profile(
    s1: FeatureMatrix,
    ss: FeatureMatrix,
    distance: str = "cosine",
    band_radius: int | None = None,
) -> DistanceProfile:
    """Align `s1` (first shadowing) to `ss` (script-shadowing) and average
    the local path costs incident on each ss frame. DTW boundary and step
    rules guarantee every ss frame receives at least one step."""
    path = dtw(s1, ss, distance=distance, band_radius=band_radius)
    sums = np.zeros(ss.n_frames)
    counts = np.zeros(ss.n_frames)
    for (_, j), cost in zip(path.steps, path.local_costs):
        sums[j] += cost
        counts[j] += 1
    return DistanceProfile(sums / counts, ss.frame_period)


def annotate_segments(
    profile: DistanceProfile,
    segmentation,
    tier: str = "word",
    threshold_k: float = 1.0,
) -> list[SegmentAnnotation]:
    """Score segments by the mean profile value over frames whose midpoint
    falls inside [start_sec, end_sec), then flag breakdowns.

    A segment is flagged when its score exceeds mu + k*sigma, where mu and
    sigma are the mean and population standard deviation of all segment
    scores in the utterance. When sigma is 0 nothing is flagged. Segments
    containing no frame midpoint score 0."""
    if tier not in TIERS:
        raise DisfluencyError(f"unknown tier {tier!r}")
    segments = [s for s in segmentation if s.tier == tier]
    if not segments:
        raise DisfluencyError(f"no segments on tier {tier!r}")
    half_frame = profile.frame_period / 2000.0
    limit = profile.duration_sec + half_frame
    for seg in segments:
        if seg.end_sec > limit + 1e-9:
            raise DisfluencyError(
                f"segment {seg.label!r} ends at {seg.end_sec}s, outside the "
                f"profile range ({limit:.4f}s)"
            )
    mids = (np.arange(len(profile.values)) + 0.5) * profile.frame_period / 1000.0
    scores = np.empty(len(segments))
    for k, seg in enumerate(segments):
        mask = (mids >= seg.start_sec) & (mids < seg.end_sec)
        scores[k] = profile.values[mask].mean() if mask.any() else 0.0
    mu = float(scores.mean())
    sigma = float(scores.std())
    threshold = mu + threshold_k * sigma
    return [
        SegmentAnnotation(
            label=seg.label,
            tier=seg.tier,
            start_sec=seg.start_sec,
            end_sec=seg.end_sec,
            score=float(score),
            breakdown=bool(sigma > 0 and score > threshold),
        )
        for seg, score in zip(segments, scores)
    ]


def breakdown_report(
    triplet: Triplet,
    distance: str = "cosine",
    tiers=("word",),
    threshold_k: float = 1.0,
    feature_kind: str = "posteriorgram",
    band_radius: int | None = None,
) -> dict:
    """Full per-sentence breakdown record: distance profile plus segment
    annotations and summary counts for the requested tiers.

    Needs the requested feature kind on both shadowing utterances and a
    segmentation on the script-shadowing utterance."""
    for field_name in ("l1_s1", "l1_ss"):
        utt = triplet.utterance(field_name)
        if feature_kind not in utt.features:
            raise DisfluencyError(
                f"triplet {triplet.sentence_id!r}: {field_name} {feature_kind} "
                "feature required"
            )
    if triplet.l1_ss.segmentation is None:
        raise DisfluencyError(
            f"triplet {triplet.sentence_id!r}: l1_ss segmentation required"
        )
    s1 = load_feature_matrix(triplet.l1_s1.features[feature_kind])
    ss = load_feature_matrix(triplet.l1_ss.features[feature_kind])
    profile = distance_profile(s1, ss, distance=distance, band_radius=band_radius)
    record = {
        "sentence_id": triplet.sentence_id,
        "distance": distance,
        "threshold_k": threshold_k,
        "frame_period_ms": profile.frame_period,
        "profile": [float(v) for v in profile.values],
        "tiers": {},
        "summary": {},
    }
    for tier in tiers:
        annotations = annotate_segments(
            profile, triplet.l1_ss.segmentation, tier=tier, threshold_k=threshold_k
        )
        record["tiers"][tier] = [a.to_json_dict() for a in annotations]
        record["summary"][tier] = {
            "segments": len(annotations),
            "breakdowns": sum(a.breakdown for a in annotations),
            "flagged_labels": [a.label for a in annotations if a.breakdown],
        }
    return record

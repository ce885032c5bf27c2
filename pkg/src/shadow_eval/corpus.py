"""Triplet corpora: utterances, segmentations, audio, and manifests.

A corpus is described by a JSON manifest::

    {"triplets": [{"sentence_id": "s0001",
                   "l2_r":  {...}, "l1_s1": {...}, "l1_ss": {...}}]}

Each utterance object holds a "features" map from feature kind to file
path, plus optional "audio", "transcript", "hypothesis" and
"segmentation" paths. Paths are resolved relative to the manifest file.
Segmentation files are CTM-like text, one segment per line:
``label<TAB>tier<TAB>start_sec<TAB>end_sec``.

All loaders are pure functions of file content and return immutable
values, safe to share across threads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import KINDS

TIERS = ("word", "syllable", "phone")
ROLES = ("L2_R", "L1_S1", "L1_SS", "converted")
TRIPLET_FIELDS = (("l2_r", "L2_R"), ("l1_s1", "L1_S1"), ("l1_ss", "L1_SS"))

TARGET_SAMPLE_RATE = 16000


class SegmentationError(ValueError):
    """A segmentation file is malformed or violates ordering rules."""


class WavFormatError(ValueError):
    """A WAV file is unsupported or damaged."""


class ManifestError(ValueError):
    """A manifest is malformed or references bad data."""


@dataclass(frozen=True)
class Segment:
    label: str
    tier: str
    start_sec: float
    end_sec: float

    def __post_init__(self):
        if self.tier not in TIERS:
            raise SegmentationError(f"unknown tier {self.tier!r}")
        if not (0 <= self.start_sec < self.end_sec):
            raise SegmentationError(
                f"segment {self.label!r} has bad span "
                f"[{self.start_sec}, {self.end_sec})"
            )


@dataclass(frozen=True)
class Audio:
    """Mono waveform scaled to [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    @property
    def rate_mismatch(self) -> bool:
        return self.sample_rate != TARGET_SAMPLE_RATE

    @property
    def duration_sec(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class Utterance:
    id: str
    role: str
    features: dict[str, Path] = field(default_factory=dict)
    audio: Path | None = None
    transcript: tuple[str, ...] | None = None
    hypothesis: tuple[str, ...] | None = None
    segmentation: tuple[Segment, ...] | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ManifestError(f"unknown role {self.role!r}")
        for kind in self.features:
            if kind not in KINDS:
                raise ManifestError(f"unknown feature kind {kind!r} in {self.id}")

    def segments(self, tier: str) -> tuple[Segment, ...]:
        if self.segmentation is None:
            return ()
        return tuple(s for s in self.segmentation if s.tier == tier)


@dataclass(frozen=True)
class Triplet:
    sentence_id: str
    l2_r: Utterance
    l1_s1: Utterance
    l1_ss: Utterance

    def utterance(self, field_name: str) -> Utterance:
        if field_name not in ("l2_r", "l1_s1", "l1_ss"):
            raise ManifestError(f"unknown triplet field {field_name!r}")
        return getattr(self, field_name)


def parse_segmentation(path) -> tuple[Segment, ...]:
    """Parse a CTM-like segmentation file and validate per-tier ordering:
    segments must be sorted by start time and non-overlapping."""
    path = Path(path)
    segments = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 4:
            raise SegmentationError(
                f"{path}: line {lineno} has {len(parts)} fields, expected 4"
            )
        label, tier, start_s, end_s = parts
        try:
            start, end = float(start_s), float(end_s)
        except ValueError:
            raise SegmentationError(
                f"{path}: line {lineno} has unparseable times"
            ) from None
        try:
            segments.append(Segment(label, tier, start, end))
        except SegmentationError as exc:
            raise SegmentationError(f"{path}: line {lineno}: {exc}") from None
    for tier in TIERS:
        tiered = [s for s in segments if s.tier == tier]
        for prev, cur in zip(tiered, tiered[1:]):
            if cur.start_sec < prev.start_sec:
                raise SegmentationError(
                    f"{path}: {tier} tier not sorted at {cur.label!r}"
                )
            if cur.start_sec < prev.end_sec:
                raise SegmentationError(
                    f"{path}: {tier} segments {prev.label!r} and {cur.label!r} overlap"
                )
    return tuple(segments)


def load_wav(path) -> Audio:
    """Load a RIFF/WAVE file (16-bit PCM, mono). Samples are scaled to
    [-1, 1]; a rate other than 16 kHz is allowed but flagged via
    Audio.rate_mismatch."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    payload = None
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        if body_start + size > len(data):
            raise WavFormatError(
                f"{path}: chunk {chunk_id!r} at byte {pos} is truncated "
                f"(declares {size} bytes, {len(data) - body_start} remain)"
            )
        body = data[body_start : body_start + size]
        if chunk_id == b"fmt ":
            if size < 16:
                raise WavFormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body)
        elif chunk_id == b"data":
            payload = body
        pos = body_start + size + (size & 1)  # chunks are word-aligned
    if fmt is None:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if payload is None:
        raise WavFormatError(f"{path}: missing data chunk")
    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise WavFormatError(
            f"{path}: unsupported encoding (format tag {audio_format}, need PCM)"
        )
    if channels != 1:
        raise WavFormatError(f"{path}: {channels} channels, only mono is supported")
    if bits != 16:
        raise WavFormatError(f"{path}: {bits}-bit samples, only 16-bit is supported")
    if len(payload) % 2:
        raise WavFormatError(f"{path}: data chunk has a trailing odd byte")
    samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    return Audio(samples, int(rate))


def load_transcript(path) -> tuple[str, ...]:
    """Whitespace-tokenized transcript file."""
    return tuple(Path(path).read_text().split())


def load_manifest(path) -> list[Triplet]:
    """Load a manifest, check every referenced file exists, and build
    validated triplets."""
    path = Path(path)
    base = path.parent
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("triplets"), list):
        raise ManifestError(f'{path}: expected an object with a "triplets" list')
    triplets = []
    seen = set()
    for entry in doc["triplets"]:
        if not isinstance(entry, dict) or "sentence_id" not in entry:
            raise ManifestError(f"{path}: triplet entry without sentence_id")
        sid = entry["sentence_id"]
        if sid in seen:
            raise ManifestError(f"{path}: duplicate sentence_id {sid!r}")
        seen.add(sid)
        utts = {}
        for field_name, role in TRIPLET_FIELDS:
            if field_name not in entry:
                raise ManifestError(f"{path}: triplet {sid!r} missing {field_name!r}")
            utts[field_name] = _build_utterance(entry[field_name], sid, field_name, role, base)
        triplets.append(Triplet(sid, **utts))
    return triplets


def _build_utterance(obj, sid: str, field_name: str, role: str, base: Path) -> Utterance:
    if not isinstance(obj, dict):
        raise ManifestError(f"triplet {sid!r}: {field_name!r} is not an object")
    declared = obj.get("role")
    if declared is not None and declared != role:
        raise ManifestError(
            f"triplet {sid!r}: role mismatch, field {field_name!r} declares {declared!r}"
        )
    features = {}
    for kind, rel in obj.get("features", {}).items():
        features[kind] = _existing(base / rel, sid, f"{field_name} {kind} feature")
    audio = None
    if obj.get("audio"):
        audio = _existing(base / obj["audio"], sid, f"{field_name} audio")
    transcript = None
    if obj.get("transcript"):
        transcript = load_transcript(_existing(base / obj["transcript"], sid, f"{field_name} transcript"))
    hypothesis = None
    if obj.get("hypothesis"):
        hypothesis = load_transcript(_existing(base / obj["hypothesis"], sid, f"{field_name} hypothesis"))
    segmentation = None
    if obj.get("segmentation"):
        segmentation = parse_segmentation(
            _existing(base / obj["segmentation"], sid, f"{field_name} segmentation")
        )
    return Utterance(
        id=obj.get("id", f"{sid}:{role}"),
        role=role,
        features=features,
        audio=audio,
        transcript=transcript,
        hypothesis=hypothesis,
        segmentation=segmentation,
    )


def _existing(path: Path, sid: str, what: str) -> Path:
    if not path.is_file():
        raise ManifestError(f"triplet {sid!r}: missing {what} file {path}")
    return path

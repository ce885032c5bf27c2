"""Synthetic triplet generator with ground-truth disfluency labels.

Each sentence is a sequence of words; each word is a block of
near-one-hot posteriorgram frames around a word-specific peak dimension
plus additive noise. The script-shadowing rendition (l1_ss) is clean;
the first-pass shadowing (l1_s1) starts as a copy of it and receives the
requested disfluencies:

* stutter - the word block is preceded by 1/2/3 (mild/moderate/severe)
  corrupted repetitions of itself,
* smear  - the word's rows are mixed toward the uniform distribution by
  0.3/0.6/0.9,
* deletion - the block is removed.

The learner's reading (l2_r) is an independent rendition whose noise is
scaled by the accent parameter. Output is deterministic for a fixed
seed, including across worker counts, because every triplet draws from
its own pre-assigned seed.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Segment
from .features import FeatureMatrix, write_feature_matrix
from .util import atomic_write_text

DISFLUENCY_KINDS = ("stutter", "smear", "deletion")
SEVERITIES = ("mild", "moderate", "severe")

SMEAR_LAMBDA = {"mild": 0.3, "moderate": 0.6, "severe": 0.9}
STUTTER_REPS = {"mild": 1, "moderate": 2, "severe": 3}

_PEAK_MASS = 0.85
_STUTTER_NOISE = 0.06
_STUTTER_SMEAR = 0.5


class SynthesisError(ValueError):
    """Invalid synthesis parameters."""


@dataclass(frozen=True)
class Disfluency:
    word_index: int
    kind: str
    severity: str

    def __post_init__(self):
        if self.kind not in DISFLUENCY_KINDS:
            raise SynthesisError(f"unknown disfluency kind {self.kind!r}")
        if self.severity not in SEVERITIES:
            raise SynthesisError(f"unknown severity {self.severity!r}")

    def to_json_dict(self) -> dict:
        return {"word_index": self.word_index, "kind": self.kind, "severity": self.severity}


@dataclass(frozen=True)
class SynthesisSpec:
    seed: int
    n_words: int = 10
    frames_per_word: tuple[int, int] = (8, 14)
    dim: int = 144
    disfluencies: tuple[Disfluency, ...] = ()
    accent: float = 0.05
    clean_noise: float = 0.005
    frame_period: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "disfluencies", tuple(self.disfluencies))
        if self.n_words < 1:
            raise SynthesisError("need at least one word")
        lo, hi = self.frames_per_word
        if lo < 1 or hi < lo:
            raise SynthesisError(f"bad frames_per_word range {self.frames_per_word}")
        if self.dim < self.n_words:
            raise SynthesisError("dim must be at least n_words (distinct peak dims)")
        seen = set()
        for d in self.disfluencies:
            if not 0 <= d.word_index < self.n_words:
                raise SynthesisError(f"disfluency word index {d.word_index} out of range")
            if d.word_index in seen:
                raise SynthesisError(f"duplicate disfluency on word {d.word_index}")
            seen.add(d.word_index)
        deletions = sum(1 for d in self.disfluencies if d.kind == "deletion")
        if deletions >= self.n_words:
            raise SynthesisError("cannot delete every word")


@dataclass(frozen=True)
class SynthTriplet:
    sentence_id: str
    l2_r: FeatureMatrix
    l1_s1: FeatureMatrix
    l1_ss: FeatureMatrix
    l2_r_segments: tuple[Segment, ...]
    l1_s1_segments: tuple[Segment, ...]
    l1_ss_segments: tuple[Segment, ...]
    breakdown_words: frozenset[int]
    disfluencies: tuple[Disfluency, ...]


def smear_rows(rows: np.ndarray, lam: float) -> np.ndarray:
    """Mix simplex rows toward the uniform distribution by factor lam."""
    rows = np.asarray(rows, dtype=np.float64)
    return (1.0 - lam) * rows + lam / rows.shape[1]


def generate(spec: SynthesisSpec, sentence_id: str = "synth-000") -> SynthTriplet:
    """Build one triplet; output is fully determined by `spec.seed`."""
    rng = np.random.default_rng(spec.seed)
    peaks = rng.choice(spec.dim, size=spec.n_words, replace=False)
    lo, hi = spec.frames_per_word
    lengths = rng.integers(lo, hi + 1, size=spec.n_words)

    base = (1.0 - _PEAK_MASS) / (spec.dim - 1) if spec.dim > 1 else 0.0
    word_templates = []
    for w in range(spec.n_words):
        row = np.full(spec.dim, base)
        row[peaks[w]] = _PEAK_MASS if spec.dim > 1 else 1.0
        word_templates.append(np.tile(row, (lengths[w], 1)))

    ss_blocks = [_render(t, rng, spec.clean_noise) for t in word_templates]
    r_blocks = [_render(t, rng, spec.accent) for t in word_templates]

    s1_blocks: list[np.ndarray | None] = [b.copy() for b in ss_blocks]
    for d in sorted(spec.disfluencies, key=lambda d: d.word_index):
        block = s1_blocks[d.word_index]
        if d.kind == "smear":
            s1_blocks[d.word_index] = smear_rows(block, SMEAR_LAMBDA[d.severity])
        elif d.kind == "deletion":
            s1_blocks[d.word_index] = None
        else:  # stutter
            reps = [_corrupt(block, rng) for _ in range(STUTTER_REPS[d.severity])]
            s1_blocks[d.word_index] = np.vstack(reps + [block])

    labels = [f"w{w:03d}" for w in range(spec.n_words)]
    return SynthTriplet(
        sentence_id=sentence_id,
        l2_r=_matrix(r_blocks, spec),
        l1_s1=_matrix([b for b in s1_blocks if b is not None], spec),
        l1_ss=_matrix(ss_blocks, spec),
        l2_r_segments=_segments(r_blocks, labels, spec.frame_period),
        l1_s1_segments=_segments(
            [b for b in s1_blocks if b is not None],
            [l for l, b in zip(labels, s1_blocks) if b is not None],
            spec.frame_period,
        ),
        l1_ss_segments=_segments(ss_blocks, labels, spec.frame_period),
        breakdown_words=frozenset(d.word_index for d in spec.disfluencies),
        disfluencies=tuple(sorted(spec.disfluencies, key=lambda d: d.word_index)),
    )


def _render(template: np.ndarray, rng: np.random.Generator, sigma: float) -> np.ndarray:
    if sigma == 0:
        return template.copy()
    noisy = np.maximum(template + rng.normal(0.0, sigma, template.shape), 0.0)
    sums = noisy.sum(axis=1, keepdims=True)
    degenerate = sums[:, 0] == 0
    if degenerate.any():
        noisy[degenerate] = 1.0 / template.shape[1]
        sums = noisy.sum(axis=1, keepdims=True)
    return noisy / sums


def _corrupt(block: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return smear_rows(_render(block, rng, _STUTTER_NOISE), _STUTTER_SMEAR)


def _matrix(blocks, spec: SynthesisSpec) -> FeatureMatrix:
    rows = np.vstack(blocks)
    return FeatureMatrix(rows, spec.frame_period, "posteriorgram", normalized=False)


def _segments(blocks, labels, frame_period: float) -> tuple[Segment, ...]:
    segments = []
    start_frame = 0
    for label, block in zip(labels, blocks):
        end_frame = start_frame + len(block)
        segments.append(
            Segment(
                label,
                "word",
                start_frame * frame_period / 1000.0,
                end_frame * frame_period / 1000.0,
            )
        )
        start_frame = end_frame
    return tuple(segments)


def generate_corpus(
    out_dir,
    n: int,
    seed: int,
    disfluency_rate: float,
    severities=SEVERITIES,
    kinds=DISFLUENCY_KINDS,
    n_words: int = 10,
    frames_per_word: tuple[int, int] = (8, 14),
    dim: int = 144,
    jobs: int = 1,
) -> Path:
    """Write `n` triplets plus a loadable manifest under `out_dir`.

    `disfluency_rate` is the probability that a sentence contains one
    injected disfluency (word, kind and severity drawn uniformly).
    Ground truth goes to a per-sentence truth.json sidecar. Returns the
    manifest path. Output bytes depend only on the arguments, not on the
    worker count."""
    if n < 1:
        raise SynthesisError("need at least one triplet")
    if not 0 <= disfluency_rate <= 1:
        raise SynthesisError(f"rate must be in [0, 1], got {disfluency_rate}")
    severities = tuple(severities)
    kinds = tuple(kinds)
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    jobs = max(1, int(jobs))

    work = []
    for i in range(n):
        child_seed = int(rng.integers(0, 2**63))
        disfluencies = ()
        if rng.random() < disfluency_rate:
            disfluencies = (
                Disfluency(
                    word_index=int(rng.integers(0, n_words)),
                    kind=kinds[int(rng.integers(0, len(kinds)))],
                    severity=severities[int(rng.integers(0, len(severities)))],
                ),
            )
        spec = SynthesisSpec(
            seed=child_seed,
            n_words=n_words,
            frames_per_word=frames_per_word,
            dim=dim,
            disfluencies=disfluencies,
        )
        work.append((f"s{i:04d}", spec))

    def build(item):
        sid, spec = item
        triplet = generate(spec, sentence_id=sid)
        _write_triplet(out_dir, triplet, spec)
        return sid

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(build, work))
    else:
        for item in work:
            build(item)

    entries = []
    for sid, _spec in work:
        entry = {"sentence_id": sid}
        for field_name, role in (("l2_r", "L2_R"), ("l1_s1", "L1_S1"), ("l1_ss", "L1_SS")):
            entry[field_name] = {
                "role": role,
                "features": {"posteriorgram": f"{sid}/{field_name}.fmx"},
                "transcript": f"{sid}/{field_name}.txt",
                "hypothesis": f"{sid}/{field_name}.hyp.txt",
                "segmentation": f"{sid}/{field_name}.seg",
            }
        entries.append(entry)
    manifest_path = out_dir / "manifest.json"
    atomic_write_text(manifest_path, json.dumps({"triplets": entries}, indent=2) + "\n")
    return manifest_path


def _write_triplet(out_dir: Path, triplet: SynthTriplet, spec: SynthesisSpec) -> None:
    folder = out_dir / triplet.sentence_id
    deleted = {d.word_index for d in triplet.disfluencies if d.kind == "deletion"}
    stutters = {
        d.word_index: STUTTER_REPS[d.severity]
        for d in triplet.disfluencies
        if d.kind == "stutter"
    }
    labels = [f"w{w:03d}" for w in range(spec.n_words)]
    s1_tokens = []
    for w, label in enumerate(labels):
        if w in deleted:
            continue
        s1_tokens.extend([label] * (stutters.get(w, 0) + 1))

    parts = {
        "l2_r": (triplet.l2_r, triplet.l2_r_segments, labels),
        "l1_s1": (triplet.l1_s1, triplet.l1_s1_segments, s1_tokens),
        "l1_ss": (triplet.l1_ss, triplet.l1_ss_segments, labels),
    }
    for field_name, (matrix, segments, tokens) in parts.items():
        write_feature_matrix(matrix, folder / f"{field_name}.fmx")
        seg_lines = [
            f"{s.label}\tword\t{s.start_sec:.6f}\t{s.end_sec:.6f}" for s in segments
        ]
        atomic_write_text(folder / f"{field_name}.seg", "\n".join(seg_lines) + "\n")
        text = " ".join(tokens) + "\n"
        atomic_write_text(folder / f"{field_name}.txt", text)
        # stand-in for an external recognizer: hypotheses mirror what was said
        atomic_write_text(folder / f"{field_name}.hyp.txt", text)
    truth = {
        "sentence_id": triplet.sentence_id,
        "breakdown_words": sorted(triplet.breakdown_words),
        "disfluencies": [d.to_json_dict() for d in triplet.disfluencies],
    }
    atomic_write_text(folder / "truth.json", json.dumps(truth, indent=2) + "\n")

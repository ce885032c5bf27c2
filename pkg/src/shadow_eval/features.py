"""Framewise feature matrices and their on-disk interchange formats.

A :class:`FeatureMatrix` is a T x D array of float32 values plus the
metadata needed to interpret it: frame period in milliseconds, feature
kind, and whether the values were standardized per dimension.

Two formats are supported:

* FMX, a little-endian binary format. Header (exactly 18 bytes): magic
  ``FMX1``, kind code u8 (0=posteriorgram, 1=melcepstrum,
  2=melspectrogram, 3=f0track), normalized u8 (0/1), frame period f32 in
  ms, T u32, D u32. Payload: T*D f32 values, row-major. A 1x1 file is
  22 bytes. Round-trips are bit-exact.
* CSV, one frame per line of comma-separated decimals. The text format
  carries no header, so kind and frame period must be supplied by the
  caller (the CLI passes them as flags).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .util import atomic_write_bytes, atomic_write_text

KINDS = ("posteriorgram", "melcepstrum", "melspectrogram", "f0track")
KIND_CODES = {kind: code for code, kind in enumerate(KINDS)}

MAGIC = b"FMX1"
_HEADER = struct.Struct("<4sBBfII")
HEADER_SIZE = _HEADER.size  # 18

ROW_SUM_TOLERANCE = 1e-4


class FeatureFormatError(ValueError):
    """A feature file violates the FMX or CSV format."""


class MalformedHeaderError(FeatureFormatError):
    """Unreadable FMX header; the message names the byte offset."""


class NonFiniteValueError(FeatureFormatError):
    """A NaN or infinity in the payload; the message names where."""


class RowLengthMismatchError(FeatureFormatError):
    """A row (or the binary payload) has the wrong number of values."""


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """A T x D feature sequence with a fixed frame period in ms.

    Frames are stored as float32 so binary round-trips are exact.
    Unnormalized posteriorgrams must have simplex rows (non-negative,
    summing to 1 within ROW_SUM_TOLERANCE). F0 tracks are a single
    non-negative column where 0 encodes unvoiced.
    """

    frames: np.ndarray
    frame_period: float
    kind: str
    normalized: bool = False

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        if frames.ndim != 2:
            raise ValueError(f"frames must be 2-D, got shape {frames.shape}")
        if frames.shape[0] < 1 or frames.shape[1] < 1:
            raise ValueError(f"frames must be at least 1x1, got {frames.shape}")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_period", float(self.frame_period))
        object.__setattr__(self, "normalized", bool(self.normalized))
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if not np.isfinite(self.frame_period) or self.frame_period <= 0:
            raise ValueError(f"frame_period must be positive, got {self.frame_period}")
        if not np.isfinite(frames).all():
            bad = int(np.flatnonzero(~np.isfinite(frames))[0])
            raise ValueError(
                f"non-finite value at row {bad // frames.shape[1]}, "
                f"column {bad % frames.shape[1]}"
            )
        if self.kind == "posteriorgram" and not self.normalized:
            if (frames < 0).any():
                row = int(np.nonzero((frames < 0).any(axis=1))[0][0])
                raise ValueError(f"posteriorgram row {row} has negative entries")
            sums = frames.astype(np.float64).sum(axis=1)
            off = np.abs(sums - 1.0) > ROW_SUM_TOLERANCE
            if off.any():
                row = int(np.nonzero(off)[0][0])
                raise ValueError(
                    f"posteriorgram row {row} sums to {sums[row]:.6f}, expected 1"
                )
        if self.kind == "f0track":
            if frames.shape[1] != 1:
                raise ValueError(f"f0track must have D=1, got D={frames.shape[1]}")
            if (frames < 0).any():
                row = int(np.nonzero(frames[:, 0] < 0)[0][0])
                raise ValueError(f"f0track value at frame {row} is negative")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def duration_sec(self) -> float:
        return self.n_frames * self.frame_period / 1000.0


def standardize(m: FeatureMatrix) -> FeatureMatrix:
    """Zero-mean/unit-variance per dimension; constant dimensions are only
    centered. The result carries normalized=True."""
    x = m.frames.astype(np.float64)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    return FeatureMatrix((x - mu) / sd, m.frame_period, m.kind, normalized=True)


def write_feature_matrix(m: FeatureMatrix, path) -> None:
    """Write `m` to `path`: FMX binary unless the path ends in .csv."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        lines = []
        for row in m.frames:
            lines.append(",".join(_format_value(v) for v in row))
        atomic_write_text(path, "\n".join(lines) + "\n")
        return
    header = _HEADER.pack(
        MAGIC,
        KIND_CODES[m.kind],
        1 if m.normalized else 0,
        m.frame_period,
        m.frames.shape[0],
        m.frames.shape[1],
    )
    atomic_write_bytes(path, header + m.frames.astype("<f4").tobytes(order="C"))


def _format_value(v) -> str:
    # shortest decimal that parses back to the same float32
    return np.format_float_positional(np.float32(v), unique=True, trim="0")


def load_feature_matrix(
    path,
    kind: str | None = None,
    frame_period: float | None = None,
    normalized: bool = False,
) -> FeatureMatrix:
    """Load an FMX or CSV feature file.

    FMX files are detected by their magic bytes and carry kind and frame
    period in the header. CSV files require `kind` and `frame_period`
    arguments.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        return _load_fmx(data, path)
    return _load_csv(data, path, kind, frame_period, normalized)


def _load_fmx(data: bytes, path: Path) -> FeatureMatrix:
    if len(data) < HEADER_SIZE:
        raise MalformedHeaderError(
            f"{path}: truncated header, file ends at byte {len(data)} "
            f"(need {HEADER_SIZE})"
        )
    magic, kind_code, norm_code, period, n_frames, dim = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic at byte 0")
    if kind_code >= len(KINDS):
        raise MalformedHeaderError(f"{path}: unknown kind code {kind_code} at byte 4")
    if norm_code not in (0, 1):
        raise MalformedHeaderError(f"{path}: bad normalized flag {norm_code} at byte 5")
    if not np.isfinite(period) or period <= 0:
        raise MalformedHeaderError(f"{path}: bad frame period {period} at byte 6")
    if n_frames < 1 or dim < 1:
        raise MalformedHeaderError(
            f"{path}: zero dimension in header (T={n_frames}, D={dim}) at byte 10"
        )
    expected = n_frames * dim * 4
    payload = data[HEADER_SIZE:]
    if len(payload) != expected:
        raise RowLengthMismatchError(
            f"{path}: payload is {len(payload)} bytes at byte {HEADER_SIZE}, "
            f"expected {expected} for {n_frames}x{dim}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(n_frames, dim)
    finite = np.isfinite(values)
    if not finite.all():
        idx = int(np.flatnonzero(~finite)[0])
        raise NonFiniteValueError(
            f"{path}: non-finite value at byte {HEADER_SIZE + 4 * idx} "
            f"(row {idx // dim}, column {idx % dim})"
        )
    return FeatureMatrix(values, float(period), KINDS[kind_code], bool(norm_code))


def _load_csv(
    data: bytes,
    path: Path,
    kind: str | None,
    frame_period: float | None,
    normalized: bool,
) -> FeatureMatrix:
    if kind is None or frame_period is None:
        raise FeatureFormatError(
            f"{path}: CSV input needs an explicit feature kind and frame period"
        )
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FeatureFormatError(f"{path}: not valid UTF-8 text ({exc})") from None
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            row = [float(c) for c in cells]
        except ValueError:
            raise FeatureFormatError(
                f"{path}: unparseable number on line {lineno}"
            ) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise RowLengthMismatchError(
                f"{path}: line {lineno} has {len(row)} values, expected {width}"
            )
        for col, v in enumerate(row):
            if not np.isfinite(v):
                raise NonFiniteValueError(
                    f"{path}: non-finite value on line {lineno}, column {col}"
                )
        rows.append(row)
    if not rows:
        raise FeatureFormatError(f"{path}: no data rows")
    return FeatureMatrix(np.array(rows, dtype=np.float32), frame_period, kind, normalized)

"""Shared fixture builders for the test suite."""

from __future__ import annotations

import struct

import numpy as np


def make_wav_bytes(
    samples: np.ndarray,
    rate: int = 16000,
    channels: int = 1,
    audio_format: int = 1,
    bits: int = 16,
    truncate_data_by: int = 0,
) -> bytes:
    """Assemble a RIFF/WAVE byte string from int16 samples.

    truncate_data_by removes bytes from the end of the data payload
    while keeping the declared chunk size, producing a truncated file.
    """
    payload = np.asarray(samples, dtype="<i2").tobytes()
    declared = len(payload)
    if truncate_data_by:
        payload = payload[:-truncate_data_by]
    block_align = channels * bits // 8
    fmt = struct.pack(
        "<HHIIHH", audio_format, channels, rate, rate * block_align, block_align, bits
    )
    body = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", declared) + payload
    return b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body


def simplex_matrix(rng: np.random.Generator, n_frames: int, dim: int) -> np.ndarray:
    """Random rows on the probability simplex."""
    raw = rng.random((n_frames, dim)) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)

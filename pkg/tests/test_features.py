import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadow_eval.features import (
    HEADER_SIZE,
    KINDS,
    FeatureFormatError,
    FeatureMatrix,
    MalformedHeaderError,
    NonFiniteValueError,
    RowLengthMismatchError,
    load_feature_matrix,
    standardize,
    write_feature_matrix,
)


def test_header_is_18_bytes_and_1x1_file_is_22(tmp_path):
    path = tmp_path / "one.fmx"
    write_feature_matrix(FeatureMatrix([[0.0]], 10.0, "melcepstrum"), path)
    assert HEADER_SIZE == 18
    assert path.stat().st_size == 22


def test_binary_round_trip_simple(tmp_path):
    m = FeatureMatrix(
        np.arange(6, dtype=np.float32).reshape(3, 2), 10.0, "melcepstrum"
    )
    path = tmp_path / "m.fmx"
    write_feature_matrix(m, path)
    loaded = load_feature_matrix(path)
    assert loaded.kind == "melcepstrum"
    assert loaded.frame_period == 10.0
    assert loaded.normalized is False
    assert np.array_equal(loaded.frames, m.frames)


@settings(max_examples=60, deadline=None)
@given(
    n_frames=st.integers(1, 12),
    dim=st.integers(1, 8),
    kind_idx=st.integers(0, len(KINDS) - 1),
    period=st.floats(0.5, 100.0, allow_nan=False),
    seed=st.integers(0, 2**32 - 1),
)
def test_binary_round_trip_property(tmp_path_factory, n_frames, dim, kind_idx, period, seed):
    rng = np.random.default_rng(seed)
    kind = KINDS[kind_idx]
    if kind == "f0track":
        dim = 1
        frames = np.abs(rng.normal(100, 50, (n_frames, 1))).astype(np.float32)
    elif kind == "posteriorgram":
        raw = rng.random((n_frames, dim)) + 1e-3
        frames = (raw / raw.sum(axis=1, keepdims=True)).astype(np.float32)
    else:
        frames = rng.normal(0, 3, (n_frames, dim)).astype(np.float32)
    m = FeatureMatrix(frames, period, kind)
    path = tmp_path_factory.mktemp("fmx") / "m.fmx"
    write_feature_matrix(m, path)
    loaded = load_feature_matrix(path)
    assert np.array_equal(loaded.frames, m.frames)
    assert loaded.kind == m.kind
    assert loaded.normalized == m.normalized
    assert np.float32(loaded.frame_period) == np.float32(m.frame_period)


def test_csv_round_trip(tmp_path):
    m = FeatureMatrix(np.array([[0.125, -3.5], [7.25, 0.0]]), 5.0, "melspectrogram")
    path = tmp_path / "m.csv"
    write_feature_matrix(m, path)
    loaded = load_feature_matrix(path, kind="melspectrogram", frame_period=5.0)
    assert np.array_equal(loaded.frames, m.frames)


def test_csv_posteriorgram_simplex_rows(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("0.5,0.5\n1.0,0.0\n")
    m = load_feature_matrix(path, kind="posteriorgram", frame_period=10.0)
    assert m.frames.shape == (2, 2)
    assert np.allclose(m.frames.sum(axis=1), 1.0)


def test_csv_nan_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.5,NaN\n")
    with pytest.raises(NonFiniteValueError, match="line 1"):
        load_feature_matrix(path, kind="melcepstrum", frame_period=10.0)


def test_csv_row_length_mismatch_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3,4,5\n")
    with pytest.raises(RowLengthMismatchError, match="line 2"):
        load_feature_matrix(path, kind="melcepstrum", frame_period=10.0)


def test_csv_requires_kind_and_period(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n")
    with pytest.raises(FeatureFormatError):
        load_feature_matrix(path)


def test_fmx_truncated_header(tmp_path):
    path = tmp_path / "short.fmx"
    path.write_bytes(b"FMX1\x00")
    with pytest.raises(MalformedHeaderError, match="byte 5"):
        load_feature_matrix(path)


def test_fmx_bad_kind_code(tmp_path):
    good = tmp_path / "good.fmx"
    write_feature_matrix(FeatureMatrix([[1.0]], 10.0, "melcepstrum"), good)
    data = bytearray(good.read_bytes())
    data[4] = 200
    bad = tmp_path / "bad.fmx"
    bad.write_bytes(bytes(data))
    with pytest.raises(MalformedHeaderError, match="byte 4"):
        load_feature_matrix(bad)


def test_fmx_payload_size_mismatch(tmp_path):
    good = tmp_path / "good.fmx"
    write_feature_matrix(FeatureMatrix([[1.0, 2.0]], 10.0, "melcepstrum"), good)
    bad = tmp_path / "bad.fmx"
    bad.write_bytes(good.read_bytes()[:-4])
    with pytest.raises(RowLengthMismatchError):
        load_feature_matrix(bad)


def test_fmx_nonfinite_payload_reports_offset(tmp_path):
    good = tmp_path / "good.fmx"
    write_feature_matrix(FeatureMatrix([[1.0], [2.0]], 10.0, "melcepstrum"), good)
    data = bytearray(good.read_bytes())
    data[HEADER_SIZE + 4 : HEADER_SIZE + 8] = np.float32(np.nan).tobytes()
    bad = tmp_path / "bad.fmx"
    bad.write_bytes(bytes(data))
    with pytest.raises(NonFiniteValueError, match=f"byte {HEADER_SIZE + 4}"):
        load_feature_matrix(bad)


def test_unnormalized_posteriorgram_row_sum_enforced(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("0.6,0.5\n")
    with pytest.raises(ValueError, match="sums to"):
        load_feature_matrix(path, kind="posteriorgram", frame_period=10.0)


def test_posteriorgram_row_sum_tolerance_boundary():
    FeatureMatrix([[0.5, 0.50005]], 10.0, "posteriorgram")  # within 1e-4
    with pytest.raises(ValueError):
        FeatureMatrix([[0.5, 0.51]], 10.0, "posteriorgram")


def test_normalized_posteriorgram_skips_simplex_check():
    FeatureMatrix([[-1.2, 0.8]], 10.0, "posteriorgram", normalized=True)


def test_f0track_constraints():
    FeatureMatrix([[0.0], [120.0]], 10.0, "f0track")
    with pytest.raises(ValueError, match="D=1"):
        FeatureMatrix([[1.0, 2.0]], 10.0, "f0track")
    with pytest.raises(ValueError, match="negative"):
        FeatureMatrix([[-5.0]], 10.0, "f0track")


def test_matrix_invariants():
    with pytest.raises(ValueError):
        FeatureMatrix(np.zeros((0, 3)), 10.0, "melcepstrum")
    with pytest.raises(ValueError, match="non-finite"):
        FeatureMatrix([[np.inf]], 10.0, "melcepstrum")
    with pytest.raises(ValueError, match="frame_period"):
        FeatureMatrix([[1.0]], 0.0, "melcepstrum")
    with pytest.raises(ValueError, match="kind"):
        FeatureMatrix([[1.0]], 10.0, "spectrogram")


def test_standardize_marks_normalized():
    m = FeatureMatrix(np.array([[0.9, 0.1], [0.1, 0.9]]), 10.0, "posteriorgram")
    z = standardize(m)
    assert z.normalized is True
    assert np.allclose(z.frames.mean(axis=0), 0.0, atol=1e-6)
    assert np.allclose(z.frames.std(axis=0), 1.0, atol=1e-6)


def test_write_into_file_as_directory_fails(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    with pytest.raises(OSError):
        write_feature_matrix(
            FeatureMatrix([[1.0]], 10.0, "melcepstrum"), blocker / "m.fmx"
        )


def test_duration():
    m = FeatureMatrix(np.zeros((50, 2), dtype=np.float32) + 1.0, 10.0, "melcepstrum")
    assert m.duration_sec == pytest.approx(0.5)

"""Objective metrics for shadowing-based evaluation.

Linguistic metrics: WER/CER against a script reference, plus S1-WER and
S1-CER, the same edit-distance numerator divided by the token count of
the first-pass-shadowing ASR hypothesis instead of the script. Acoustic
metrics: mel-cepstral distortion over DTW-aligned frames, F0 RMSE and
Pearson correlation over aligned voiced frames, and relative duration
difference. A basic autocorrelation F0 extractor is included so corpora
without precomputed pitch tracks can still be compared.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .align import EditOps, dtw_over_costs, edit_distance, pairwise_distances
from .corpus import Triplet, load_wav
from .features import FeatureMatrix, load_feature_matrix

DEFAULT_METRICS = ("cer", "wer", "s1_cer", "s1_wer", "mcd", "f0rmse", "f0corr", "durr")

_MCD_SCALE = (10.0 / math.log(10.0)) * math.sqrt(2.0)


class MetricError(ValueError):
    """Invalid inputs for a metric."""


class MetricSkip(Exception):
    """A metric is undefined for this utterance; carries the reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def wer(ref, hyp) -> tuple[float, EditOps]:
    """(S + I + D) / N_ref with minimal edit operations."""
    ref = list(ref)
    if not ref:
        raise MetricError("empty reference")
    ops = edit_distance(ref, list(hyp))
    return ops.distance / len(ref), ops


def cer(ref, hyp) -> tuple[float, EditOps]:
    """Character variant of wer: tokens are joined and whitespace removed."""
    return wer(_chars(ref), _chars(hyp))


def s1_wer(s1_hyp, conv_hyp) -> tuple[float, EditOps]:
    """Word errors of the converted/evaluated speech against the ASR
    hypothesis of the first-pass shadowing; the denominator is the
    shadowing hypothesis length."""
    s1_hyp = list(s1_hyp)
    if not s1_hyp:
        raise MetricError("empty first-pass shadowing hypothesis")
    ops = edit_distance(s1_hyp, list(conv_hyp))
    return ops.distance / len(s1_hyp), ops


def s1_cer(s1_hyp, conv_hyp) -> tuple[float, EditOps]:
    return s1_wer(_chars(s1_hyp), _chars(conv_hyp))


def _chars(tokens) -> list[str]:
    text = tokens if isinstance(tokens, str) else " ".join(tokens)
    return [c for c in text if not c.isspace()]


def mcd(
    ref_mc: FeatureMatrix,
    hyp_mc: FeatureMatrix,
    exclude_c0: bool = True,
    band_radius: int | None = None,
) -> float:
    """Mel-cepstral distortion in dB: DTW-align (euclidean) the cepstra,
    then average (10/ln 10) * sqrt(2 * sum_d diff_d^2) over path steps.
    c0 (the energy coefficient) is excluded by default."""
    for name, m in (("ref", ref_mc), ("hyp", hyp_mc)):
        if m.kind != "melcepstrum":
            raise MetricError(f"{name} has kind {m.kind!r}, expected melcepstrum")
    if ref_mc.dim != hyp_mc.dim:
        raise MetricError(f"dimension mismatch: {ref_mc.dim} vs {hyp_mc.dim}")
    lo = 1 if exclude_c0 else 0
    if ref_mc.dim - lo < 1:
        raise MetricError("need at least 2 coefficients when excluding c0")
    a = ref_mc.frames[:, lo:].astype(np.float64)
    b = hyp_mc.frames[:, lo:].astype(np.float64)
    path = dtw_over_costs(pairwise_distances(a, b, "euclidean"), band_radius)
    return _MCD_SCALE * float(np.mean(path.local_costs))


def extract_f0(
    samples,
    sample_rate: int,
    fmin: float = 50.0,
    fmax: float = 500.0,
    frame_ms: float = 25.0,
    hop_ms: float = 10.0,
    clarity_threshold: float = 0.3,
) -> FeatureMatrix:
    """Per-frame F0 in Hz via normalized autocorrelation peak-picking.

    Frames whose best in-range peak has clarity below the threshold are
    marked unvoiced (0). Among near-tied peaks the smallest lag wins,
    which resolves subharmonic ambiguity; a parabolic fit refines the lag.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise MetricError("samples must be mono (1-D)")
    if not (0 < fmin < fmax < sample_rate / 2):
        raise MetricError(
            f"need 0 < fmin < fmax < rate/2, got {fmin}, {fmax}, {sample_rate}"
        )
    frame_len = int(round(sample_rate * frame_ms / 1000.0))
    hop = int(round(sample_rate * hop_ms / 1000.0))
    if len(x) < frame_len:
        raise MetricError(
            f"audio of {len(x)} samples is shorter than one frame ({frame_len})"
        )
    lag_min = max(1, int(math.floor(sample_rate / fmax)))
    lag_max = min(frame_len - 2, int(math.ceil(sample_rate / fmin)))
    if lag_max < lag_min:
        raise MetricError(
            f"frame of {frame_len} samples cannot hold lags for "
            f"[{fmin}, {fmax}] Hz at {sample_rate} Hz"
        )
    n_frames = 1 + (len(x) - frame_len) // hop
    offsets = np.arange(n_frames) * hop
    frames = x[offsets[:, None] + np.arange(frame_len)[None, :]]
    frames = frames - frames.mean(axis=1, keepdims=True)

    # full autocorrelation of every frame in one batch of FFTs
    nfft = 1 << int(math.ceil(math.log2(2 * frame_len)))
    spec = np.fft.rfft(frames, n=nfft, axis=1)
    acf = np.fft.irfft(spec * np.conj(spec), n=nfft, axis=1)[:, :frame_len]

    # normalized cross-correlation denominators from cumulative energies:
    # head[tau] = sum(x[:N-tau]^2), tail[tau] = sum(x[tau:]^2)
    sq = frames * frames
    csum = np.concatenate([np.zeros((n_frames, 1)), np.cumsum(sq, axis=1)], axis=1)
    total = csum[:, -1]
    lags = np.arange(frame_len)
    head = csum[:, frame_len - lags]
    tail = total[:, None] - csum[:, lags]
    denom = np.sqrt(head * tail)
    with np.errstate(divide="ignore", invalid="ignore"):
        nccf = np.where(denom > 0, acf / denom, 0.0)

    f0 = np.zeros(n_frames)
    for k in range(n_frames):
        if total[k] <= 0:
            continue
        window = nccf[k, lag_min : lag_max + 1]
        clarity = float(window.max())
        if clarity < clarity_threshold:
            continue
        # local maxima within the admissible lag range
        inner = window[1:-1]
        peaks = np.nonzero((inner >= window[:-2]) & (inner >= window[2:]))[0] + 1
        good = peaks[window[peaks] >= clarity - 0.02] if len(peaks) else peaks
        if len(good) == 0:
            good = np.array([int(window.argmax())])  # max sits on a range boundary
        lag = float(lag_min + int(good[0]))
        li = int(lag)
        if 1 <= li < frame_len - 1:
            y0, y1, y2 = nccf[k, li - 1], nccf[k, li], nccf[k, li + 1]
            denom_p = y0 - 2 * y1 + y2
            if denom_p < 0:
                delta = 0.5 * (y0 - y2) / denom_p
                if abs(delta) <= 1:
                    lag = li + delta
        f0[k] = sample_rate / lag
    return FeatureMatrix(f0[:, None], hop_ms, "f0track")


@dataclass(frozen=True)
class F0Comparison:
    f0rmse: float
    f0corr: float | None
    voiced_overlap: float
    note: str | None = None


def f0_metrics(ref_f0: FeatureMatrix, hyp_f0: FeatureMatrix, log_rmse: bool = False) -> F0Comparison:
    """DTW-align two F0 tracks and compare them over both-voiced steps.

    Alignment cost is |log f_ref - log f_hyp| when both frames are voiced
    and a fixed penalty of 1 otherwise. F0RMSE is reported in Hz (or in
    log space with log_rmse=True) and F0CORR is the Pearson correlation;
    both use only path steps where both frames are voiced."""
    for name, m in (("ref", ref_f0), ("hyp", hyp_f0)):
        if m.kind != "f0track":
            raise MetricError(f"{name} has kind {m.kind!r}, expected f0track")
    r = ref_f0.frames[:, 0].astype(np.float64)
    h = hyp_f0.frames[:, 0].astype(np.float64)
    voiced_r = r > 0
    voiced_h = h > 0
    log_r = np.where(voiced_r, np.log(np.where(voiced_r, r, 1.0)), 0.0)
    log_h = np.where(voiced_h, np.log(np.where(voiced_h, h, 1.0)), 0.0)
    both = voiced_r[:, None] & voiced_h[None, :]
    costs = np.where(both, np.abs(log_r[:, None] - log_h[None, :]), 1.0)
    path = dtw_over_costs(costs)
    ii = np.fromiter((i for i, _ in path.steps), dtype=np.intp)
    jj = np.fromiter((j for _, j in path.steps), dtype=np.intp)
    mask = voiced_r[ii] & voiced_h[jj]
    n_voiced = int(mask.sum())
    if n_voiced < 2:
        raise MetricSkip("fewer than 2 aligned voiced frames")
    rv = r[ii[mask]]
    hv = h[jj[mask]]
    if log_rmse:
        rmse = float(np.sqrt(np.mean((np.log(rv) - np.log(hv)) ** 2)))
    else:
        rmse = float(np.sqrt(np.mean((rv - hv) ** 2)))
    overlap = n_voiced / len(path.steps)
    if rv.std() == 0 or hv.std() == 0:
        return F0Comparison(rmse, None, overlap, note="constant F0 track")
    corr = float(np.clip(np.corrcoef(rv, hv)[0, 1], -1.0, 1.0))
    return F0Comparison(rmse, corr, overlap)


def durr(ref_dur: float, hyp_dur: float, relative: bool = True) -> float:
    """Absolute duration difference, by default relative to the reference."""
    if ref_dur <= 0 or hyp_dur <= 0:
        raise MetricError(f"durations must be positive, got {ref_dur} and {hyp_dur}")
    diff = abs(hyp_dur - ref_dur)
    return diff / ref_dur if relative else diff


@dataclass
class MetricsReport:
    """Per-utterance metric values plus corpus aggregates.

    Error rates aggregate as pooled counts (total edit operations over
    total reference tokens); all other metrics aggregate as the mean over
    utterances where they were computed."""

    metrics: tuple[str, ...]
    per_utterance: dict[str, dict[str, float]] = field(default_factory=dict)
    aggregates: dict[str, float] = field(default_factory=dict)
    skipped: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    n_utterances: int = 0

    def skipped_counts(self) -> dict[str, int]:
        return {m: len(v) for m, v in self.skipped.items()}

    def to_json_dict(self) -> dict:
        return {
            "n_utterances": self.n_utterances,
            "metrics": list(self.metrics),
            "per_utterance": self.per_utterance,
            "aggregates": self.aggregates,
            "skipped": {
                m: [{"utterance_id": u, "reason": r} for u, r in pairs]
                for m, pairs in self.skipped.items()
            },
            "skipped_counts": self.skipped_counts(),
        }

    def to_csv_text(self) -> str:
        lines = ["utterance_id,metric,value,skipped_reason"]
        skip_index = {
            (uid, m): reason for m, pairs in self.skipped.items() for uid, reason in pairs
        }
        for uid, values in self.per_utterance.items():
            for metric in self.metrics:
                if metric in values:
                    lines.append(f"{uid},{metric},{values[metric]:.10g},")
                elif (uid, metric) in skip_index:
                    lines.append(f"{uid},{metric},,{skip_index[(uid, metric)]}")
        for metric in self.metrics:
            if metric in self.aggregates:
                lines.append(f"corpus,{metric},{self.aggregates[metric]:.10g},")
        return "\n".join(lines) + "\n"


_RATE_METRICS = ("cer", "wer", "s1_cer", "s1_wer")


def evaluate_corpus(
    triplets: list[Triplet],
    metrics=DEFAULT_METRICS,
    test_role: str = "l1_ss",
    reference_role: str = "l1_s1",
    script_role: str = "l2_r",
    jobs: int = 1,
) -> MetricsReport:
    """Compute the requested metrics for every triplet.

    The utterance under test is `test_role`. WER/CER compare its ASR
    hypothesis against the script (the transcript of `script_role`);
    S1-WER/S1-CER against the hypothesis of `reference_role`. Acoustic
    metrics compare the test utterance to `reference_role`. Utterances
    missing an input are skipped for that metric and counted."""
    if not triplets:
        raise MetricError("empty manifest")
    metrics = tuple(metrics)
    for m in metrics:
        if m not in DEFAULT_METRICS:
            raise MetricError(f"unknown metric {m!r}")

    def one(triplet: Triplet):
        values: dict[str, float] = {}
        skips: dict[str, str] = {}
        pooled: dict[str, tuple[int, int]] = {}
        f0_done = False
        test = triplet.utterance(test_role)
        ref = triplet.utterance(reference_role)
        script = triplet.utterance(script_role)

        def rate_metric(name, fn, ref_tokens, hyp_tokens, missing):
            if missing:
                skips[name] = missing
                return
            try:
                rate, ops = fn(ref_tokens, hyp_tokens)
            except MetricError as exc:
                skips[name] = str(exc)
                return
            values[name] = rate
            pooled[name] = (ops.distance, ops.n_ref)

        for name in metrics:
            if name in ("cer", "wer"):
                missing = None
                if script.transcript is None:
                    missing = "missing script transcript"
                elif test.hypothesis is None:
                    missing = "missing hypothesis transcript"
                fn = cer if name == "cer" else wer
                rate_metric(
                    name,
                    fn,
                    script.transcript or (),
                    test.hypothesis or (),
                    missing,
                )
            elif name in ("s1_cer", "s1_wer"):
                missing = None
                if ref.hypothesis is None:
                    missing = "missing first-pass shadowing hypothesis"
                elif test.hypothesis is None:
                    missing = "missing hypothesis transcript"
                fn = s1_cer if name == "s1_cer" else s1_wer
                rate_metric(name, fn, ref.hypothesis or (), test.hypothesis or (), missing)
            elif name == "mcd":
                if "melcepstrum" not in ref.features or "melcepstrum" not in test.features:
                    skips[name] = "missing melcepstrum feature"
                    continue
                values[name] = mcd(
                    load_feature_matrix(ref.features["melcepstrum"]),
                    load_feature_matrix(test.features["melcepstrum"]),
                )
            elif name in ("f0rmse", "f0corr"):
                if f0_done:
                    continue  # one alignment covers both names
                f0_done = True
                try:
                    comparison = _f0_for(ref, test)
                except MetricSkip as exc:
                    skips["f0rmse"] = exc.reason
                    skips["f0corr"] = exc.reason
                    continue
                if "f0rmse" in metrics:
                    values["f0rmse"] = comparison.f0rmse
                if "f0corr" in metrics:
                    if comparison.f0corr is None:
                        skips["f0corr"] = comparison.note or "correlation undefined"
                    else:
                        values["f0corr"] = comparison.f0corr
            elif name == "durr":
                ref_dur = _duration_of(ref)
                test_dur = _duration_of(test)
                if ref_dur is None or test_dur is None:
                    skips[name] = "missing audio and features for duration"
                    continue
                values[name] = durr(ref_dur, test_dur)
        return triplet.sentence_id, values, skips, pooled

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, triplets))
    else:
        results = [one(t) for t in triplets]

    report = MetricsReport(metrics=metrics, n_utterances=len(triplets))
    pooled_totals: dict[str, list[int]] = {m: [0, 0] for m in _RATE_METRICS}
    sums: dict[str, list[float]] = {}
    for sid, values, skips, pooled in results:
        report.per_utterance[sid] = {m: float(v) for m, v in values.items()}
        for m, reason in skips.items():
            if m in metrics:
                report.skipped.setdefault(m, []).append((sid, reason))
        for m, (errors, denominator) in pooled.items():
            pooled_totals[m][0] += errors
            pooled_totals[m][1] += denominator
        for m, v in values.items():
            sums.setdefault(m, []).append(float(v))
    for m in metrics:
        if m in _RATE_METRICS:
            errors, denominator = pooled_totals[m]
            if denominator > 0:
                report.aggregates[m] = errors / denominator
        elif m in sums:
            report.aggregates[m] = float(np.mean(sums[m]))
    return report


def _f0_for(ref, test) -> F0Comparison:
    ref_track = _f0_track(ref)
    test_track = _f0_track(test)
    if ref_track is None or test_track is None:
        raise MetricSkip("missing f0 track and audio")
    return f0_metrics(ref_track, test_track)


def _f0_track(utt) -> FeatureMatrix | None:
    if "f0track" in utt.features:
        return load_feature_matrix(utt.features["f0track"])
    if utt.audio is not None:
        audio = load_wav(utt.audio)
        return extract_f0(audio.samples, audio.sample_rate)
    return None


def _duration_of(utt) -> float | None:
    if utt.audio is not None:
        return load_wav(utt.audio).duration_sec
    for kind in ("posteriorgram", "melcepstrum", "melspectrogram", "f0track"):
        if kind in utt.features:
            return load_feature_matrix(utt.features[kind]).duration_sec
    return None

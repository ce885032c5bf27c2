"""Alignment engines: DTW over frame sequences and Levenshtein edit
distance with backtrace over token sequences.

DTW uses the symmetric step pattern {(1,0), (0,1), (1,1)} with unit step
weights: the cost of a path is the plain sum of the local distances at
every visited cell. Backtrace ties are broken by preferring (1,1) over
(1,0) over (0,1), so paths are reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureMatrix

DISTANCES = ("euclidean", "cosine", "js_divergence")

_SIMPLEX_TOLERANCE = 1e-4


class AlignmentError(ValueError):
    """Invalid inputs for an alignment (dimension mismatch, bad metric,
    band too narrow, ...)."""


@dataclass(frozen=True)
class AlignmentPath:
    """A monotone warping path.

    steps[k] = (i, j) indexes into sequence A and B; the first step is
    (0, 0) and the last (T_A-1, T_B-1). local_costs holds the distance at
    each visited cell, total_cost their sum, and normalized_cost the
    total divided by the path length.
    """

    steps: tuple[tuple[int, int], ...]
    local_costs: tuple[float, ...]
    total_cost: float
    normalized_cost: float

    def to_json_dict(self) -> dict:
        return {
            "steps": [[i, j] for i, j in self.steps],
            "local_costs": list(self.local_costs),
            "total_cost": self.total_cost,
            "normalized_cost": self.normalized_cost,
        }


def path_from_json_dict(doc: dict) -> AlignmentPath:
    try:
        steps = tuple((int(i), int(j)) for i, j in doc["steps"])
        local = tuple(float(c) for c in doc["local_costs"])
        total = float(doc["total_cost"])
        norm = float(doc["normalized_cost"])
    except (KeyError, TypeError, ValueError) as exc:
        raise AlignmentError(f"bad alignment path document: {exc}") from None
    if len(steps) != len(local):
        raise AlignmentError("steps and local_costs differ in length")
    return AlignmentPath(steps, local, total, norm)


def frame_distance(x, y, distance: str = "cosine") -> float:
    """Distance between two frame vectors.

    euclidean: L2 norm of the difference. cosine: 1 - cos similarity,
    defined as 0 when both vectors are zero and 1 when exactly one is.
    js_divergence: Jensen-Shannon divergence, base 2, in [0, 1]; inputs
    must be simplex vectors.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise AlignmentError("frame vectors must be 1-D")
    if x.shape != y.shape:
        raise AlignmentError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if distance == "js_divergence":
        for name, v in (("x", x), ("y", y)):
            if (v < 0).any() or abs(v.sum() - 1.0) > _SIMPLEX_TOLERANCE:
                raise AlignmentError(f"js_divergence needs simplex input, {name} is not")
    return float(pairwise_distances(x[None, :], y[None, :], distance)[0, 0])


def pairwise_distances(a: np.ndarray, b: np.ndarray, distance: str = "cosine") -> np.ndarray:
    """T_A x T_B matrix of frame distances between the rows of a and b."""
    if distance not in DISTANCES:
        raise AlignmentError(f"unknown distance {distance!r}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise AlignmentError(
            f"dimension mismatch: {a.shape} vs {b.shape}"
        )
    if distance == "euclidean":
        diff = a[:, None, :] - b[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))
    if distance == "cosine":
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        denom = na[:, None] * nb[None, :]
        sim = np.divide(a @ b.T, denom, out=np.zeros_like(denom), where=denom > 0)
        dist = 1.0 - sim
        zero_a = na == 0
        zero_b = nb == 0
        if zero_a.any() or zero_b.any():
            either = zero_a[:, None] | zero_b[None, :]
            both = zero_a[:, None] & zero_b[None, :]
            dist = np.where(either, 1.0, dist)
            dist = np.where(both, 0.0, dist)
        return np.maximum(dist, 0.0)
    # js_divergence: rows are treated as distributions after renormalization
    p = a / a.sum(axis=1, keepdims=True)
    q = b / b.sum(axis=1, keepdims=True)
    pp = p[:, None, :]
    qq = q[None, :, :]
    mid = 0.5 * (pp + qq)
    jsd = 0.5 * _kl_bits(pp, mid) + 0.5 * _kl_bits(qq, mid)
    return np.minimum(np.maximum(jsd, 0.0), 1.0)


def _kl_bits(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    # 0 * log(0/m) = 0; m > 0 wherever p > 0 since m >= p/2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = p * np.log2(p / m)
    return np.where(p > 0, terms, 0.0).sum(axis=2)


def dtw(
    a: FeatureMatrix,
    b: FeatureMatrix,
    distance: str = "cosine",
    band_radius: int | None = None,
) -> AlignmentPath:
    """Minimum-cost monotone alignment of two feature matrices.

    js_divergence is only valid for raw (unnormalized) posteriorgrams.
    band_radius, when given, restricts the search to |i - j| <= radius
    (Sakoe-Chiba band) and must be at least |T_A - T_B|.
    """
    if a.dim != b.dim:
        raise AlignmentError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if distance == "js_divergence":
        for name, m in (("a", a), ("b", b)):
            if m.kind != "posteriorgram" or m.normalized:
                raise AlignmentError(
                    f"js_divergence needs raw posteriorgrams, {name} is "
                    f"{m.kind} (normalized={m.normalized})"
                )
    costs = pairwise_distances(a.frames, b.frames, distance)
    return dtw_over_costs(costs, band_radius)


def dtw_over_costs(costs: np.ndarray, band_radius: int | None = None) -> AlignmentPath:
    """DTW over a precomputed local-cost matrix.

    The accumulation runs over anti-diagonals so the inner loop is
    vectorized; the backtrace walks cell preferences (diagonal, then
    advance-in-A, then advance-in-B) for deterministic tie-breaking.
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2 or costs.shape[0] < 1 or costs.shape[1] < 1:
        raise AlignmentError(f"cost matrix must be 2-D and non-empty, got {costs.shape}")
    n_a, n_b = costs.shape
    if band_radius is not None:
        band_radius = int(band_radius)
        if band_radius < abs(n_a - n_b):
            raise AlignmentError(
                f"band radius {band_radius} too narrow for lengths {n_a} and {n_b}"
            )
    # acc is padded by one inf row/column so predecessors never need guards
    acc = np.full((n_a + 1, n_b + 1), np.inf)
    acc[0, 0] = 0.0
    for d in range(n_a + n_b - 1):
        lo = max(0, d - n_b + 1)
        hi = min(n_a - 1, d)
        if band_radius is not None:
            lo = max(lo, (d - band_radius + 1) // 2)
            hi = min(hi, (d + band_radius) // 2)
        if lo > hi:
            continue
        ii = np.arange(lo, hi + 1)
        jj = d - ii
        best = np.minimum(np.minimum(acc[ii, jj], acc[ii, jj + 1]), acc[ii + 1, jj])
        acc[ii + 1, jj + 1] = costs[ii, jj] + best
    if not np.isfinite(acc[n_a, n_b]):
        raise AlignmentError("no admissible path (band too narrow)")

    i, j = n_a - 1, n_b - 1
    rev = [(i, j)]
    while (i, j) != (0, 0):
        diag = acc[i, j]
        up = acc[i, j + 1]
        left = acc[i + 1, j]
        if diag <= up and diag <= left:
            i, j = i - 1, j - 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
        rev.append((i, j))
    rev.reverse()
    total = 0.0
    local = []
    for i, j in rev:
        c = float(costs[i, j])
        local.append(c)
        total += c
    return AlignmentPath(tuple(rev), tuple(local), total, total / len(rev))


@dataclass(frozen=True)
class EditOps:
    """Minimal Levenshtein alignment between a reference and a hypothesis.

    op_trace is an ordered list of (op, ref_index, hyp_index) with op in
    {"match", "sub", "del", "ins"}; absent indices are None. Replaying
    the trace on the reference reproduces the hypothesis.
    """

    substitutions: int
    insertions: int
    deletions: int
    n_ref: int
    op_trace: tuple[tuple[str, int | None, int | None], ...]

    @property
    def distance(self) -> int:
        return self.substitutions + self.insertions + self.deletions


def edit_distance(ref, hyp) -> EditOps:
    """Levenshtein alignment with unit costs. Backtrace ties prefer
    match > substitution > deletion > insertion."""
    ref = list(ref)
    hyp = list(hyp)
    n_ref, n_hyp = len(ref), len(hyp)
    dp = [[0] * (n_hyp + 1) for _ in range(n_ref + 1)]
    for i in range(1, n_ref + 1):
        dp[i][0] = i
    for j in range(1, n_hyp + 1):
        dp[0][j] = j
    for i in range(1, n_ref + 1):
        row = dp[i]
        prev = dp[i - 1]
        r = ref[i - 1]
        for j in range(1, n_hyp + 1):
            sub = prev[j - 1] + (0 if r == hyp[j - 1] else 1)
            dele = prev[j] + 1
            ins = row[j - 1] + 1
            row[j] = min(sub, dele, ins)

    trace = []
    i, j = n_ref, n_hyp
    subs = ins_count = dels = 0
    while i > 0 or j > 0:
        here = dp[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dp[i - 1][j - 1] == here:
            trace.append(("match", i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and dp[i - 1][j - 1] + 1 == here:
            trace.append(("sub", i - 1, j - 1))
            subs += 1
            i -= 1
            j -= 1
        elif i > 0 and dp[i - 1][j] + 1 == here:
            trace.append(("del", i - 1, None))
            dels += 1
            i -= 1
        else:
            trace.append(("ins", None, j - 1))
            ins_count += 1
            j -= 1
    trace.reverse()
    return EditOps(subs, ins_count, dels, n_ref, tuple(trace))


def replay_edits(ref, hyp, ops: EditOps) -> list:
    """Apply the op trace to the reference; the result must equal the
    hypothesis (used to validate traces)."""
    ref = list(ref)
    hyp = list(hyp)
    out = []
    for op, ri, hj in ops.op_trace:
        if op == "match":
            if ref[ri] != hyp[hj]:
                raise AlignmentError(f"trace marks a non-match at ref[{ri}]")
            out.append(ref[ri])
        elif op == "sub":
            out.append(hyp[hj])
        elif op == "ins":
            out.append(hyp[hj])
        elif op == "del":
            pass
        else:
            raise AlignmentError(f"unknown op {op!r}")
    return out

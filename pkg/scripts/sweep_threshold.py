#!/usr/bin/env python3
"""Sweep the breakdown threshold k and tabulate precision/recall.

The flagging rule marks a word when its profile score exceeds
mu + k*sigma within the sentence; this script shows how the operating
point moves with k on a synthetic corpus.

Usage:
    python scripts/sweep_threshold.py --n 100 --seed 7 --rate 0.3
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from shadow_eval.corpus import load_manifest
from shadow_eval.disfluency import annotate_segments, distance_profile
from shadow_eval.features import load_feature_matrix
from shadow_eval.synth import generate_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--rate", type=float, default=0.3)
    parser.add_argument("--distance", default="js_divergence",
                        choices=("euclidean", "cosine", "js_divergence"))
    parser.add_argument("--k-values", default="0.0,0.5,1.0,1.5,2.0,3.0")
    args = parser.parse_args()

    ks = [float(v) for v in args.k_values.split(",")]
    workdir = Path(tempfile.mkdtemp(prefix="shadow-eval-sweep-"))
    manifest = generate_corpus(
        workdir / "corpus", n=args.n, seed=args.seed, disfluency_rate=args.rate
    )
    triplets = load_manifest(manifest)

    # profiles are independent of k, so compute them once
    cached = []
    for triplet in triplets:
        truth = json.loads((manifest.parent / triplet.sentence_id / "truth.json").read_text())
        s1 = load_feature_matrix(triplet.l1_s1.features["posteriorgram"])
        ss = load_feature_matrix(triplet.l1_ss.features["posteriorgram"])
        profile = distance_profile(s1, ss, args.distance)
        true_words = {f"w{w:03d}" for w in truth["breakdown_words"]}
        cached.append((profile, triplet.l1_ss.segmentation, true_words))

    print(f"n={args.n} rate={args.rate} distance={args.distance}")
    print("k     precision  recall   flagged")
    for k in ks:
        tp = fp = fn = flagged_total = 0
        for profile, segmentation, true_words in cached:
            annotations = annotate_segments(profile, segmentation, "word", k)
            flagged = {a.label for a in annotations if a.breakdown}
            flagged_total += len(flagged)
            tp += len(flagged & true_words)
            fp += len(flagged - true_words)
            fn += len(true_words - flagged)
        precision = tp / (tp + fp) if tp + fp else float("nan")
        recall = tp / (tp + fn) if tp + fn else float("nan")
        print(f"{k:<5.2f} {precision:<10.3f} {recall:<8.3f} {flagged_total}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

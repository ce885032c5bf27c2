#!/usr/bin/env python3
"""End-to-end breakdown-detection benchmark on a synthetic corpus.

Generates a triplet corpus with known disfluency labels, runs the
first-pass vs. script-shadowing comparison pipeline, and reports
word-level precision/recall plus argmax localization accuracy on the
single-disfluency sentences.

Usage:
    python scripts/run_synthetic_benchmark.py --n 200 --seed 424242 --rate 0.2
"""

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from shadow_eval.corpus import load_manifest
from shadow_eval.disfluency import breakdown_report
from shadow_eval.synth import generate_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--seed", type=int, default=424242)
    parser.add_argument("--rate", type=float, default=0.2)
    parser.add_argument("--severities", default="moderate,severe")
    parser.add_argument("--distance", default="js_divergence",
                        choices=("euclidean", "cosine", "js_divergence"))
    parser.add_argument("--threshold-k", type=float, default=1.0)
    parser.add_argument("--corpus-dir", default=None,
                        help="keep the generated corpus here (default: temp dir)")
    args = parser.parse_args()

    workdir = args.corpus_dir or tempfile.mkdtemp(prefix="shadow-eval-bench-")
    start = time.perf_counter()
    manifest = generate_corpus(
        Path(workdir) / "corpus",
        n=args.n,
        seed=args.seed,
        disfluency_rate=args.rate,
        severities=tuple(s.strip() for s in args.severities.split(",")),
    )
    generated = time.perf_counter()
    triplets = load_manifest(manifest)

    tp = fp = fn = 0
    loc_total = loc_hit = 0
    per_kind: dict[str, list[int]] = {}
    for triplet in triplets:
        truth = json.loads((manifest.parent / triplet.sentence_id / "truth.json").read_text())
        true_words = {f"w{w:03d}" for w in truth["breakdown_words"]}
        record = breakdown_report(
            triplet,
            distance=args.distance,
            tiers=("word",),
            threshold_k=args.threshold_k,
        )
        flagged = set(record["summary"]["word"]["flagged_labels"])
        tp += len(flagged & true_words)
        fp += len(flagged - true_words)
        fn += len(true_words - flagged)
        for d in truth["disfluencies"]:
            hit = f"w{d['word_index']:03d}" in flagged
            per_kind.setdefault(d["kind"], []).append(int(hit))
        if len(truth["breakdown_words"]) == 1:
            loc_total += 1
            best = max(record["tiers"]["word"], key=lambda a: a["score"])["label"]
            loc_hit += best in true_words
    done = time.perf_counter()

    precision = tp / (tp + fp) if tp + fp else float("nan")
    recall = tp / (tp + fn) if tp + fn else float("nan")
    print(f"corpus: n={args.n} rate={args.rate} seed={args.seed} -> {manifest}")
    print(f"generation: {generated - start:.1f}s  detection: {done - generated:.1f}s")
    print(f"distance={args.distance} k={args.threshold_k}")
    print(f"word-level precision: {precision:.3f}  (tp={tp} fp={fp})")
    print(f"word-level recall:    {recall:.3f}  (fn={fn})")
    if loc_total:
        print(f"argmax localization:  {loc_hit / loc_total:.3f}  ({loc_hit}/{loc_total})")
    for kind, hits in sorted(per_kind.items()):
        print(f"  recall[{kind}]: {sum(hits) / len(hits):.3f}  ({sum(hits)}/{len(hits)})")
    return 0


if __name__ == "__main__":
    sys.exit(main())

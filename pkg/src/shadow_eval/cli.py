"""Command-line interface.

Subcommands: align, profile, metrics, attention, synth, report. Exit
codes: 0 on success, 1 on input validation errors, 2 on unexpected
runtime errors. Results go to --out (written atomically) or stdout;
diagnostics go to stderr. The SHADOW_EVAL_THREADS environment variable
overrides --jobs wherever per-utterance parallelism applies.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .align import dtw, path_from_json_dict
from .attention import attention_path, diagonality, failure_frames, load_attention, path_deviation
from .corpus import load_manifest
from .disfluency import breakdown_report
from .features import load_feature_matrix
from .metrics import DEFAULT_METRICS, evaluate_corpus
from .report import LAYOUTS, render_table
from .synth import DISFLUENCY_KINDS, SEVERITIES, generate_corpus
from .util import atomic_write_text, resolve_jobs

_METRIC_ALIASES = {"s1wer": "s1_wer", "s1cer": "s1_cer"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> _Parser:
    parser = _Parser(prog="shadow-eval", description=__doc__)
    parser.add_argument("--version", action="version", version=f"shadow-eval {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("align", help="DTW-align two feature files")
    p.add_argument("--a", required=True, help="first feature file (FMX or CSV)")
    p.add_argument("--b", required=True, help="second feature file (FMX or CSV)")
    p.add_argument("--distance", default="cosine", choices=("euclidean", "cosine", "js_divergence"))
    p.add_argument("--band-radius", type=int, default=None)
    p.add_argument("--kind", default=None, help="feature kind for CSV inputs")
    p.add_argument("--frame-period", type=float, default=None, help="frame period in ms for CSV inputs")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("profile", help="listening-breakdown profiles for a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--tier", default="word", help="comma-separated tiers to annotate")
    p.add_argument("--distance", default="cosine", choices=("euclidean", "cosine", "js_divergence"))
    p.add_argument("--threshold-k", type=float, default=1.0)
    p.add_argument("--feature-kind", default="posteriorgram")
    p.add_argument("--band-radius", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("metrics", help="objective metrics over a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--metrics", default=",".join(DEFAULT_METRICS))
    p.add_argument("--test-role", default="l1_ss", choices=("l2_r", "l1_s1", "l1_ss"))
    p.add_argument("--reference-role", default="l1_s1", choices=("l2_r", "l1_s1", "l1_ss"))
    p.add_argument("--script-role", default="l2_r", choices=("l2_r", "l1_s1", "l1_ss"))
    p.add_argument("--format", default=None, choices=("json", "csv"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("attention", help="attention-alignment diagnostics")
    p.add_argument("--att", required=True, help="attention matrix (FMX)")
    p.add_argument("--dtw", default=None, help="DTW path JSON to compare against")
    p.add_argument("--peak-threshold", type=float, default=0.1)
    p.add_argument("--entropy-threshold", type=float, default=0.8)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_attention)

    p = sub.add_parser("synth", help="generate a synthetic triplet corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rate", type=float, default=0.2)
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--n-words", type=int, default=10)
    p.add_argument("--min-frames", type=int, default=8)
    p.add_argument("--max-frames", type=int, default=14)
    p.add_argument("--dim", type=int, default=144)
    p.add_argument("--severities", default=",".join(SEVERITIES))
    p.add_argument("--kinds", default=",".join(DISFLUENCY_KINDS))
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("report", help="render a metrics report as a text table")
    p.add_argument("--in", dest="input", required=True, help="report JSON (rows or metrics report)")
    p.add_argument("--layout", required=True, choices=sorted(LAYOUTS))
    p.add_argument("--source", default=None)
    p.add_argument("--target", default=None)
    p.add_argument("--testset", default=None)
    p.add_argument("--reference", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _emit_json(doc, out: str | None) -> None:
    _emit(json.dumps(doc, indent=2) + "\n", out)


def _cmd_align(args) -> int:
    a = load_feature_matrix(args.a, kind=args.kind, frame_period=args.frame_period)
    b = load_feature_matrix(args.b, kind=args.kind, frame_period=args.frame_period)
    path = dtw(a, b, distance=args.distance, band_radius=args.band_radius)
    _emit_json(path.to_json_dict(), args.out)
    return 0


def _cmd_profile(args) -> int:
    triplets = load_manifest(args.manifest)
    tiers = tuple(t.strip() for t in args.tier.split(",") if t.strip())
    jobs = resolve_jobs(args.jobs)

    def one(triplet):
        return breakdown_report(
            triplet,
            distance=args.distance,
            tiers=tiers,
            threshold_k=args.threshold_k,
            feature_kind=args.feature_kind,
            band_radius=args.band_radius,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(one, triplets))
    else:
        reports = [one(t) for t in triplets]
    _emit_json({"reports": reports}, args.out)
    return 0


def _cmd_metrics(args) -> int:
    triplets = load_manifest(args.manifest)
    names = []
    for raw in args.metrics.split(","):
        raw = raw.strip()
        if not raw:
            continue
        if raw == "f0":
            expanded = ["f0rmse", "f0corr"]
        else:
            expanded = [_METRIC_ALIASES.get(raw, raw)]
        for name in expanded:
            if name not in names:
                names.append(name)
    report = evaluate_corpus(
        triplets,
        metrics=names,
        test_role=args.test_role,
        reference_role=args.reference_role,
        script_role=args.script_role,
        jobs=resolve_jobs(args.jobs),
    )
    fmt = args.format
    if fmt is None:
        fmt = "csv" if args.out and args.out.lower().endswith(".csv") else "json"
    if fmt == "csv":
        _emit(report.to_csv_text(), args.out)
    else:
        _emit_json(report.to_json_dict(), args.out)
    return 0


def _cmd_attention(args) -> int:
    att = load_attention(args.att)
    doc = {
        "diagonality": diagonality(att),
        "failure_ranges": [[s, e] for s, e in failure_frames(
            att,
            peak_threshold=args.peak_threshold,
            entropy_threshold=args.entropy_threshold,
        )],
    }
    if args.dtw:
        dtw_doc = json.loads(Path(args.dtw).read_text())
        deviation = path_deviation(attention_path(att), path_from_json_dict(dtw_doc))
        doc["deviation"] = {
            "mean_abs_frames": deviation.mean_abs_frames,
            "normalized": deviation.normalized,
            "n_in": deviation.n_in,
        }
    _emit_json(doc, args.out)
    return 0


def _cmd_synth(args) -> int:
    manifest = generate_corpus(
        args.out,
        n=args.n,
        seed=args.seed,
        disfluency_rate=args.rate,
        severities=tuple(s.strip() for s in args.severities.split(",") if s.strip()),
        kinds=tuple(k.strip() for k in args.kinds.split(",") if k.strip()),
        n_words=args.n_words,
        frames_per_word=(args.min_frames, args.max_frames),
        dim=args.dim,
        jobs=resolve_jobs(args.jobs),
    )
    print(manifest)
    return 0


def _cmd_report(args) -> int:
    doc = json.loads(Path(args.input).read_text())
    if isinstance(doc, dict) and "rows" in doc:
        rows = doc["rows"]
    elif isinstance(doc, dict) and "aggregates" in doc:
        row = {
            "source": args.source,
            "target": args.target,
            "testset": args.testset,
            "reference": args.reference,
        }
        row.update(doc["aggregates"])
        rows = [row]
    else:
        raise ValueError(f'{args.input}: expected a "rows" list or a metrics report')
    _emit(render_table(rows, args.layout), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

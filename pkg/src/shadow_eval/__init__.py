"""shadow-eval: measurement toolkit for shadowing-based L2
intelligibility assessment.

Core pieces: DTW alignment of framewise features (phonetic
posteriorgrams, mel-cepstra, F0 tracks), listening-breakdown detection
from first-pass vs. script-shadowing comparisons, edit-distance error
rates including the shadowing-referenced S1-WER/S1-CER variants,
acoustic similarity metrics (MCD, F0RMSE, F0CORR, DURR), attention
diagnostics, and a deterministic synthetic-corpus generator for
end-to-end validation.
"""

__version__ = "0.1.0"

from .align import (
    AlignmentError,
    AlignmentPath,
    EditOps,
    dtw,
    dtw_over_costs,
    edit_distance,
    frame_distance,
    pairwise_distances,
)
from .attention import (
    AttentionMatrix,
    attention_path,
    diagonality,
    failure_frames,
    load_attention,
    path_deviation,
)
from .corpus import (
    Audio,
    Segment,
    Triplet,
    Utterance,
    load_manifest,
    load_wav,
    parse_segmentation,
)
from .disfluency import (
    DistanceProfile,
    SegmentAnnotation,
    annotate_segments,
    breakdown_report,
    distance_profile,
)
from .features import (
    FeatureMatrix,
    FeatureFormatError,
    load_feature_matrix,
    standardize,
    write_feature_matrix,
)
from .metrics import (
    F0Comparison,
    MetricsReport,
    cer,
    durr,
    evaluate_corpus,
    extract_f0,
    f0_metrics,
    mcd,
    s1_cer,
    s1_wer,
    wer,
)
from .report import render_table
from .synth import (
    Disfluency,
    SynthesisSpec,
    SynthTriplet,
    generate,
    generate_corpus,
)

__all__ = [
    "__version__",
    "AlignmentError",
    "AlignmentPath",
    "Audio",
    "AttentionMatrix",
    "Disfluency",
    "DistanceProfile",
    "EditOps",
    "F0Comparison",
    "FeatureFormatError",
    "FeatureMatrix",
    "MetricsReport",
    "Segment",
    "SegmentAnnotation",
    "SynthTriplet",
    "SynthesisSpec",
    "Triplet",
    "Utterance",
    "annotate_segments",
    "attention_path",
    "breakdown_report",
    "cer",
    "diagonality",
    "distance_profile",
    "dtw",
    "dtw_over_costs",
    "durr",
    "edit_distance",
    "evaluate_corpus",
    "extract_f0",
    "f0_metrics",
    "failure_frames",
    "frame_distance",
    "generate",
    "generate_corpus",
    "load_attention",
    "load_feature_matrix",
    "load_manifest",
    "load_wav",
    "mcd",
    "pairwise_distances",
    "parse_segmentation",
    "path_deviation",
    "render_table",
    "s1_cer",
    "s1_wer",
    "standardize",
    "wer",
    "write_feature_matrix",
]

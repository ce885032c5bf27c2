"""Text-table rendering of metric reports.

Two layouts are supported. ``linguistic`` has the columns Source,
Target, Testset, CER, WER, S1-CER, S1-WER; ``acoustic`` has Testset,
Reference, MCD, F0RMSE, F0CORR, DURR. Error rates are stored as
fractions but rendered as percentages (x100). All numeric cells use
two-decimal fixed formatting except F0CORR, which uses three. Missing
cells render as "-". Cells are left-justified to the column width and
joined by two spaces; a dashed separator follows the header.
"""

from __future__ import annotations

from .metrics import MetricsReport

LAYOUTS = {
    "linguistic": (
        ("source", "Source"),
        ("target", "Target"),
        ("testset", "Testset"),
        ("cer", "CER"),
        ("wer", "WER"),
        ("s1_cer", "S1-CER"),
        ("s1_wer", "S1-WER"),
    ),
    "acoustic": (
        ("testset", "Testset"),
        ("reference", "Reference"),
        ("mcd", "MCD"),
        ("f0rmse", "F0RMSE"),
        ("f0corr", "F0CORR"),
        ("durr", "DURR"),
    ),
}

_PERCENT_KEYS = {"cer", "wer", "s1_cer", "s1_wer"}
_THREE_DECIMALS = {"f0corr"}
_TEXT_KEYS = {"source", "target", "testset", "reference"}


class ReportError(ValueError):
    """Bad layout name or malformed report rows."""


def format_cell(key: str, value) -> str:
    if value is None:
        return "-"
    if key in _TEXT_KEYS:
        return str(value)
    value = float(value)
    if key in _PERCENT_KEYS:
        return f"{value * 100:.2f}"
    if key in _THREE_DECIMALS:
        return f"{value:.3f}"
    return f"{value:.2f}"


def render_table(report, layout: str) -> str:
    """Render rows (list of mappings) or a MetricsReport as a text table.

    A MetricsReport contributes a single row built from its corpus
    aggregates."""
    if layout not in LAYOUTS:
        raise ReportError(f"unknown layout {layout!r}, expected one of {sorted(LAYOUTS)}")
    if isinstance(report, MetricsReport):
        rows = [aggregate_row(report)]
    else:
        rows = list(report)
    columns = LAYOUTS[layout]
    cells = []
    for row in rows:
        if not isinstance(row, dict):
            raise ReportError("rows must be mappings")
        cells.append([format_cell(key, row.get(key)) for key, _ in columns])
    widths = [
        max(len(header), *(len(r[k]) for r in cells)) if cells else len(header)
        for k, (_, header) in enumerate(columns)
    ]
    lines = [
        "  ".join(header.ljust(w) for (_, header), w in zip(columns, widths)).rstrip(),
        "  ".join("-" * w for w in widths).rstrip(),
    ]
    for row_cells in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row_cells, widths)).rstrip())
    return "\n".join(lines) + "\n"


def aggregate_row(
    report: MetricsReport,
    source: str | None = None,
    target: str | None = None,
    testset: str | None = None,
    reference: str | None = None,
) -> dict:
    """One table row from the corpus aggregates of a MetricsReport."""
    row: dict = {
        "source": source,
        "target": target,
        "testset": testset,
        "reference": reference,
    }
    row.update(report.aggregates)
    return row

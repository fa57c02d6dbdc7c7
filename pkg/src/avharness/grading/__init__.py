from .grade import (
    VOTE_ROUNDS,
    Verdict,
    clean_letter,
    failed_verdict,
    grade,
    majority,
    verdict_from_dict,
    verdict_to_dict,
)
from .report import (
    DIMENSIONS,
    ReportCell,
    ReportTable,
    aggregate,
    build_tables,
    emit_report,
    render_csv,
    render_markdown,
)

__all__ = [
    "DIMENSIONS",
    "ReportCell",
    "ReportTable",
    "VOTE_ROUNDS",
    "Verdict",
    "aggregate",
    "build_tables",
    "clean_letter",
    "emit_report",
    "failed_verdict",
    "grade",
    "majority",
    "render_csv",
    "render_markdown",
    "verdict_from_dict",
    "verdict_to_dict",
]

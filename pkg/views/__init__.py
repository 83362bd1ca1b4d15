from .summary_view import (
    build_extraction_summary,
    build_extraction_text,
    build_headway_fit_text,
    build_report_text,
    build_selftest_text,
    build_training_text,
)

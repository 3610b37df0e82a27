# Run logs and summaries
from .export import format_report, read_log_csv, write_log_csv, write_metrics

__all__ = ["format_report", "read_log_csv", "write_log_csv", "write_metrics"]

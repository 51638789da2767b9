from dataclasses import asdict, is_dataclass
from typing import Any, Iterable
import numpy as np
import pandas as pd
from utils.files import write_csv_atomic


def _format_value(value: Any) -> str:
    if isinstance(value, np.ndarray):
        return np.array2string(value, precision=6, separator=', ', max_line_width=10_000)
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    if isinstance(value, (list, tuple)):
        return '[' + ', '.join(_format_value(v) for v in value) + ']'
    return str(value)


def report_dict(report) -> dict:
    if is_dataclass(report):
        return {key: getattr(report, key) for key in asdict(report)}
    return dict(report)


def format_report(report) -> str:
    """key: value lines for a report dataclass or mapping"""
    return '\n'.join(f"{key}: {_format_value(value)}" for key, value in report_dict(report).items())


def reports_to_frame(reports: Iterable) -> pd.DataFrame:
    """One row per report; array fields are flattened to text"""
    rows = []
    for report in reports:
        rows.append({key: _format_value(v) if isinstance(v, (np.ndarray, list, tuple)) else v
                     for key, v in report_dict(report).items()})
    return pd.DataFrame(rows)


def write_reports_csv(reports: Iterable, path: str) -> str:
    return write_csv_atomic(reports_to_frame(reports), path)

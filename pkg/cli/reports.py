"""Report emission: key=value text and CSV, formatted so reruns are byte-identical."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from core.models import TestReport
from experiments.studies import MonteCarloReport, ProbeSummary


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def format_report(report: TestReport) -> str:
    lines = [f"{key}={format_value(value)}" for key, value in report.to_dict().items()]
    lines += [f"warning.{i}={message}" for i, message in enumerate(report.warnings, start=1)]
    return "\n".join(lines) + "\n"


def report_frame(report: TestReport) -> pd.DataFrame:
    row = {key: format_value(value) for key, value in report.to_dict().items()}
    return pd.DataFrame([row])


def companion_path(out: Path, suffix: str) -> Path:
    """``report.txt`` -> ``report<suffix>``, keeping the directory."""
    return out.with_name(out.stem + suffix)


def write_test_report(report: TestReport, out: Optional[str | Path]) -> List[Path]:
    """Text report to ``out`` (stdout when None) plus a one-row CSV beside it."""
    text = format_report(report)
    if out is None:
        print(text, end="")
        return []
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    csv_path = companion_path(out, ".csv") if out.suffix != ".csv" else companion_path(out, "_row.csv")
    report_frame(report).to_csv(csv_path, index=False)
    return [out, csv_path]


def write_study_report(report: MonteCarloReport, out: Optional[str | Path]) -> List[Path]:
    """Study CSV to ``out`` (stdout when None) plus the plot-data CSV beside it."""
    if out is None:
        print(report.to_frame().to_csv(index=False), end="")
        return []
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.to_csv(out)
    plot_path = companion_path(out, "_plot.csv")
    report.plot_csv(plot_path)
    return [out, plot_path]


def probe_frame(summaries: Iterable[ProbeSummary]) -> pd.DataFrame:
    return pd.DataFrame([s.to_dict() for s in summaries])


def write_probe_report(summaries: Iterable[ProbeSummary], out: Optional[str | Path]) -> List[Path]:
    text = probe_frame(summaries).to_csv(index=False)
    if out is None:
        print(text, end="")
        return []
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    return [out]

"""
Rendering of reports to CSV, JSON and plain text, and flat-file writers.

Floats are written with repr(), which round-trips exactly.
"""
import csv
import io
import json
import logging
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel

from api.models import (
    ProtocolReportModel,
    RobustnessRowModel,
    SampleReportModel,
    SweepRecordModel,
    ThresholdModel,
)

logger = logging.getLogger(__name__)


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


SWEEP_COLUMNS = ("vA", "vB", "d", "r", "x_sep", "x_th", "x_used", "nu", "sigma_step2", "sigma_step3", "status")
ROBUSTNESS_COLUMNS = ("epsilon", "nu", "sigma_step2", "sigma_step3", "status")
THRESHOLD_COLUMNS = ("step", "d", "r", "u", "v", "x_th")


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header: Optional[Sequence[str]], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def _flatten(prefix: str, value: Any) -> List[Tuple[str, Any]]:
    if isinstance(value, dict):
        items = []
        for key, inner in value.items():
            items.extend(_flatten(f"{prefix}.{key}" if prefix else key, inner))
        return items
    if isinstance(value, list):
        items = []
        for i, inner in enumerate(value):
            items.extend(_flatten(f"{prefix}[{i}]", inner))
        return items
    return [(prefix, value)]


def key_value_csv(model: BaseModel) -> str:
    """Flatten a nested report into key,value rows; matrices become name[i][j]."""
    return _csv_text(("key", "value"), _flatten("", model.model_dump()))


def to_json(payload: Union[BaseModel, Sequence[BaseModel]]) -> str:
    if isinstance(payload, BaseModel):
        data = payload.model_dump()
    else:
        data = [item.model_dump() for item in payload]
    return json.dumps(data, indent=2) + "\n"


def sweep_csv(records: Sequence[SweepRecordModel]) -> str:
    return _csv_text(SWEEP_COLUMNS, ([getattr(rec, c) for c in SWEEP_COLUMNS] for rec in records))


def robustness_csv(rows: Sequence[RobustnessRowModel]) -> str:
    return _csv_text(ROBUSTNESS_COLUMNS, ([getattr(row, c) for c in ROBUSTNESS_COLUMNS] for row in rows))


def threshold_csv(fit: ThresholdModel) -> str:
    return _csv_text(THRESHOLD_COLUMNS, [[getattr(fit, c) for c in THRESHOLD_COLUMNS]])


def render(payload: Any, fmt: OutputFormat) -> str:
    """Machine-readable rendering of any CLI result."""
    if fmt == OutputFormat.JSON:
        return to_json(payload)
    if isinstance(payload, ThresholdModel):
        return threshold_csv(payload)
    if isinstance(payload, (ProtocolReportModel, SampleReportModel)):
        return key_value_csv(payload)
    rows = list(payload)
    if rows and isinstance(rows[0], RobustnessRowModel):
        return robustness_csv(rows)
    return sweep_csv(rows)


def protocol_summary(report: ProtocolReportModel) -> str:
    """Human-readable protocol summary."""
    p = report.params
    lines = [
        f"Protocol at d={p.d:.6f} r={p.r:.6f} (vA={p.vA:.6g}, vB={p.vB:.6g}), x={p.x:.6g}",
        f"  x_sep = {p.x_sep:.6f}   x_th = {'none' if report.x_th is None else f'{report.x_th:.6f}'}",
        f"  local states: e^-2s = {report.local_states.squeezing_factor:.6f}, "
        f"theta = {report.local_states.theta_degrees:.4f} deg",
        f"  nu (A|B, step 3) = {report.nu:.6f}",
    ]
    if report.nu_m is not None:
        lines.append(f"  nu_m (after homodyne on C) = {report.nu_m:.6f}")
    lines.append(f"  Sigma_C step 2 = {report.sigma_step2:.6f}   step 3 = {report.sigma_step3:.6f}")
    lines.append("  verdicts:")
    for v in report.verdicts:
        lines.append(
            f"    step {v.step} {v.partition:<5} {v.criterion:<12} {v.statistic: .6e}  separable={v.separable}"
        )
    for flag in report.flags:
        lines.append(f"  WARNING: {flag}")
    return "\n".join(lines) + "\n"


def write_output(text: str, out: Optional[Path] = None) -> None:
    """Write to `out`, or to stdout when no path is given. OSError propagates."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info(f"Wrote {len(text)} bytes to {path}")

from __future__ import annotations

import csv
import math
from pathlib import Path

from pydantic import BaseModel
from rich.table import Table

from pce_toolkit.integrations.filesystem_adapter import is_json_path
from pce_toolkit.models.reports import APReport, ReconstructionReport, SweepTable


def ap_header(thresholds: list[float]) -> list[str]:
    """Column names of an AP row: value, AP@0.50 ... AP@0.95, meanAP."""

    return ["value", *(f"AP@{thr:.2f}" for thr in thresholds), "meanAP"]


def _cell(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def ap_report_rows(report: APReport) -> list[list[str]]:
    """One row per class plus an ``all`` row averaged over applicable classes."""

    rows = [[row.class_name, *(_cell(ap) for ap in row.ap), _cell(row.mean_ap)] for row in report.classes]
    rows.append(["all", *(_cell(ap) for ap in report.ap_by_threshold), _cell(report.map)])
    return rows


def sweep_rows(table: SweepTable) -> tuple[list[str], list[list[str]]]:
    """CSV header and rows; AP columns when scored, encoding stats otherwise."""

    scored = any(row.ap is not None for row in table.rows)
    if scored:
        header = ap_header(table.thresholds)
        body = [
            [str(row.value), *(_cell(ap) for ap in (row.ap or [None] * len(table.thresholds))), _cell(row.mean_ap)]
            for row in table.rows
        ]
        return header, body
    header = ["value", "compression", "bump", "coded_frames", "payload_ratio", "mean_entropy_bits", "naive_psnr_db"]
    body = []
    for row in table.rows:
        stats = row.stats
        body.append(
            [
                str(row.value),
                str(row.compression),
                str(row.bump),
                str(stats.coded_frames) if stats else "",
                _cell(stats.payload_ratio) if stats else "",
                _cell(stats.mean_entropy_bits) if stats else "",
                _cell(stats.naive_psnr_db) if stats else "",
            ]
        )
    return header, body


def write_json(model: BaseModel, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
    return path


def write_csv(header: list[str], rows: list[list[str]], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_ap_report(report: APReport, path: Path) -> Path:
    """JSON for a ``.json`` suffix, CSV otherwise."""

    if is_json_path(path):
        return write_json(report, path)
    return write_csv(ap_header(report.thresholds), ap_report_rows(report), path)


def write_sweep_table(table: SweepTable, path: Path) -> Path:
    if is_json_path(path):
        return write_json(table, path)
    header, rows = sweep_rows(table)
    return write_csv(header, rows, path)


def _rich_table(title: str, header: list[str], rows: list[list[str]]) -> Table:
    table = Table(title=title)
    for pos, name in enumerate(header):
        table.add_column(name, justify="left" if pos == 0 else "right")
    for row in rows:
        table.add_row(*(cell or "-" for cell in row))
    return table


def ap_table(report: APReport) -> Table:
    """Rich table of per-class AP rows."""

    return _rich_table(f"AP by IoU threshold (mAP {report.map:.4f})", ap_header(report.thresholds), ap_report_rows(report))


def sweep_view(table: SweepTable) -> Table:
    header, rows = sweep_rows(table)
    return _rich_table(f"Sweep over {table.axis.value}", header, rows)


def _db(value: float | None) -> str:
    if value is None:
        return "-"
    return "inf" if math.isinf(value) else f"{value:.2f}"


def timing_table(report: ReconstructionReport) -> Table:
    """Per coded frame wall time, solver effort and PSNR."""

    table = Table(
        title=f"Reconstruction time (total {report.total_seconds:.3f}s)",
        caption=f"mean {report.mean_seconds:.3f}s per coded frame",
    )
    for name in ("chunk", "seconds", "patches", "mean iterations", "rank-deficient", "PSNR dB"):
        table.add_column(name, justify="right")
    for item in report.frames:
        table.add_row(
            str(item.chunk_index),
            f"{item.seconds:.3f}",
            str(item.patches),
            f"{item.mean_iterations:.2f}",
            str(item.rank_deficient_patches),
            _db(item.psnr_db),
        )
    return table

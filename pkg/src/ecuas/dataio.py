"""Dataset readers, validation, and report serialization.

Two CSV layouts are accepted: posterior files with header
``label,q_0,...,q_{K-1}`` and generative files with header
``id,correct,confidence``. Reports are written as CSV (metric,value rows) or
JSON (metrics plus full configuration and warning counters); floats are
serialized with round-trip precision so read-back is bit-exact.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import (
    SIMPLEX_ATOL,
    CategoricalDistribution,
    ConfidenceOnly,
    FullPosterior,
    UARecord,
)
from .baselines import ScoredSample

# Rows whose probabilities miss the simplex by at most this much are
# renormalized; larger violations reject the row.
ROW_SUM_TOLERANCE = 1e-6


class CsvFormatError(ValueError):
    """Malformed dataset file; message carries the offending row number."""


@dataclass
class Dataset:
    """Homogeneous list of evaluation records plus source metadata."""

    kind: str  # "posterior" | "generative"
    records: List[UARecord]
    k: Optional[int] = None
    source: str = ""
    ids: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.kind not in ("posterior", "generative"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")

    def __len__(self) -> int:
        return len(self.records)

    def labels(self) -> List[int]:
        if self.kind != "posterior":
            raise ValueError("labels available only for posterior datasets")
        return [rec.label for rec in self.records]

    def scored_samples(self) -> List[ScoredSample]:
        """Confidence/correctness view: for posteriors, the argmax candidate
        and its probability; for generative records, the stored pair."""
        samples = []
        for rec in self.records:
            if isinstance(rec, FullPosterior):
                candidate = int(np.argmax(rec.q.probs))
                samples.append(
                    ScoredSample(float(rec.q.probs[candidate]), candidate == rec.label)
                )
            else:
                samples.append(ScoredSample(rec.q_e, rec.correct))
        return samples


def read_posterior_csv(path: str) -> Dataset:
    """Read and validate a posterior score file.

    Rows whose probabilities sum to 1 within ``ROW_SUM_TOLERANCE`` are
    renormalized; worse rows are rejected with their row number.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        k = len(header) - 1
        expected = ["label"] + [f"q_{i}" for i in range(k)]
        if k < 2 or header != expected:
            raise CsvFormatError(
                f"{path}: malformed header {header!r}; expected label,q_0,...,q_{{K-1}}"
            )
        records: List[UARecord] = []
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != k + 1:
                raise CsvFormatError(f"{path}:{row_num}: expected {k + 1} cells, got {len(row)}")
            try:
                label = int(row[0])
                probs = np.array([float(cell) for cell in row[1:]], dtype=np.float64)
            except ValueError as exc:
                raise CsvFormatError(f"{path}:{row_num}: non-numeric cell ({exc})") from None
            if not (0 <= label < k):
                raise CsvFormatError(f"{path}:{row_num}: label {label} out of range for K={k}")
            if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
                raise CsvFormatError(f"{path}:{row_num}: invalid probability")
            total = float(probs.sum())
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                raise CsvFormatError(
                    f"{path}:{row_num}: probabilities sum to {total!r}, "
                    f"outside tolerance {ROW_SUM_TOLERANCE}"
                )
            if abs(total - 1.0) > SIMPLEX_ATOL:
                # renormalize only rows that would fail validation, so rows
                # written from valid distributions survive round trips bit-exactly
                probs = probs / total
            records.append(FullPosterior(label, CategoricalDistribution(probs)))
    return Dataset("posterior", records, k=k, source=path)


def read_generative_csv(path: str) -> Dataset:
    """Read a correctness/confidence file with header ``id,correct,confidence``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        if header != ["id", "correct", "confidence"]:
            raise CsvFormatError(
                f"{path}: malformed header {header!r}; expected id,correct,confidence"
            )
        records: List[UARecord] = []
        ids: List[str] = []
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise CsvFormatError(f"{path}:{row_num}: expected 3 cells, got {len(row)}")
            rec_id, correct_cell, conf_cell = row
            if correct_cell not in ("0", "1"):
                raise CsvFormatError(
                    f"{path}:{row_num}: correctness must be 0 or 1, got {correct_cell!r}"
                )
            try:
                confidence = float(conf_cell)
            except ValueError:
                raise CsvFormatError(f"{path}:{row_num}: non-numeric confidence") from None
            if not (0.0 <= confidence <= 1.0):
                raise CsvFormatError(
                    f"{path}:{row_num}: confidence {confidence} outside [0, 1]"
                )
            ids.append(rec_id)
            records.append(ConfidenceOnly(correct_cell == "1", confidence))
    return Dataset("generative", records, source=path, ids=ids)


def write_posterior_csv(path: str, records: Sequence[FullPosterior]) -> None:
    """Write posterior records in the layout ``read_posterior_csv`` accepts."""
    if not records:
        raise ValueError("empty input")
    k = records[0].q.k
    rows = [["label"] + [f"q_{i}" for i in range(k)]]
    for rec in records:
        rows.append([str(rec.label)] + [repr(float(p)) for p in rec.q.probs])
    _atomic_write_text(path, "".join(",".join(row) + "\n" for row in rows))


@dataclass
class EvaluationReport:
    """Named metric values plus the configuration that produced them."""

    metrics: Dict[str, float]
    config: Dict[str, object] = field(default_factory=dict)
    warnings: Dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"metrics": self.metrics, "config": self.config, "warnings": self.warnings}


def write_report(report: EvaluationReport, path: str, format: str = "json") -> None:
    """Serialize a report with deterministic field order.

    CSV keeps one metric,value row per metric; JSON additionally carries the
    configuration and warning counters. Written atomically (temp file plus
    rename).
    """
    if format == "json":
        payload = json.dumps(report.as_dict(), indent=2) + "\n"
    elif format == "csv":
        lines = ["metric,value"]
        lines += [f"{name},{value!r}" for name, value in report.metrics.items()]
        payload = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {format!r}")
    _atomic_write_text(path, payload)


def read_report(path: str) -> EvaluationReport:
    """Read back a report written by ``write_report`` (either format)."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return EvaluationReport(
            metrics=data["metrics"],
            config=data.get("config", {}),
            warnings=data.get("warnings", {}),
        )
    metrics: Dict[str, float] = {}
    lines = text.splitlines()
    if not lines or lines[0] != "metric,value":
        raise CsvFormatError(f"{path}: not a metric report")
    for line in lines[1:]:
        if not line:
            continue
        name, value = line.split(",", 1)
        metrics[name] = float(value)
    return EvaluationReport(metrics=metrics)


def write_table(
    path: str,
    rows: Sequence[Dict[str, object]],
    format: str = "csv",
    meta: Optional[Dict[str, object]] = None,
) -> None:
    """Write a list of homogeneous dict rows as CSV or JSON, atomically.

    When ``meta`` is given, the producing configuration is written next to
    the table as ``<path>.meta.json``.
    """
    if not rows:
        raise ValueError("empty table")
    columns = list(rows[0].keys())
    if format == "json":
        payload = json.dumps(list(rows), indent=2) + "\n"
    elif format == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_cell(row[col]) for col in columns))
        payload = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown table format {format!r}")
    _atomic_write_text(path, payload)
    if meta is not None:
        write_json(path + ".meta.json", meta)


def write_json(path: str, payload: Dict[str, object]) -> None:
    """Serialize a dict as pretty JSON, atomically."""
    _atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def _cell(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _atomic_write_text(path: str, payload: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

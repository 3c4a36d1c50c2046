"""Parsing of results CSVs into per-(strategy, metric) series."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

HEADER = ("strategy", "stage", "metric", "value", "stderr")


class SchemaError(ValueError):
    """The CSV does not match the results schema."""


@dataclass(frozen=True)
class MetricSeries:
    """One metric curve for one strategy: values by stage plus standard errors."""

    strategy: str
    metric: str
    stages: np.ndarray
    values: np.ndarray
    stderrs: np.ndarray

    def __post_init__(self):
        if not (len(self.stages) == len(self.values) == len(self.stderrs)):
            raise SchemaError(
                f"series {self.strategy}/{self.metric}: stage, value and stderr "
                "columns must have equal length"
            )
        if np.any(np.diff(self.stages) <= 0):
            raise SchemaError(
                f"series {self.strategy}/{self.metric}: stages must be strictly increasing"
            )


def load_results(csv_path) -> list[MetricSeries]:
    """Read a results CSV into one series per (strategy, metric).

    Values are carried through as written.  A malformed header, row width,
    or cell raises :class:`SchemaError` naming the offending column or row.
    """
    groups: dict[tuple[str, str], list[tuple[int, float, float]]] = {}
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{csv_path}: empty file, expected header {','.join(HEADER)}")
        if tuple(header) != HEADER:
            raise SchemaError(
                f"{csv_path}: bad header {header!r}, expected {list(HEADER)}"
            )
        for i, row in enumerate(reader, start=2):
            if len(row) != len(HEADER):
                raise SchemaError(f"{csv_path}: row {i} has {len(row)} fields, expected 5")
            strategy, stage_text, metric, value_text, stderr_text = row
            try:
                stage = int(stage_text)
            except ValueError:
                raise SchemaError(f"{csv_path}: row {i}, column 'stage': {stage_text!r}") from None
            try:
                value = float(value_text)
                stderr = float(stderr_text)
            except ValueError:
                raise SchemaError(
                    f"{csv_path}: row {i}, column 'value'/'stderr': "
                    f"{value_text!r}, {stderr_text!r}"
                ) from None
            groups.setdefault((strategy, metric), []).append((stage, value, stderr))

    out = []
    for (strategy, metric), rows in groups.items():
        rows.sort(key=lambda r: r[0])
        stages, values, stderrs = (np.array(col) for col in zip(*rows))
        out.append(
            MetricSeries(strategy=strategy, metric=metric, stages=stages,
                         values=values, stderrs=stderrs)
        )
    return out

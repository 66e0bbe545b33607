"""Report containers, deterministic emission, and point-cloud ingestion.

CSV is the primary artifact: one file per table, floats at 17 significant
digits, so a re-run under the same seed is byte-identical.  JSON mirrors the
full report structure and round-trips losslessly.  SVG output renders each
declared (x, y) series pair to a line figure via matplotlib; figures are a
convenience view, not part of the byte-identity contract.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import DomainError, IngestError
from .fields import PointCloud

__all__ = [
    "Table",
    "SeriesSpec",
    "ExperimentReport",
    "emit_report",
    "report_from_json",
    "ingest_pointcloud",
]


@dataclass
class Table:
    columns: list[str]
    rows: list[list]

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


@dataclass
class SeriesSpec:
    table: str
    x: str
    y: str


@dataclass
class ExperimentReport:
    kind: str
    parameters: dict
    tables: dict[str, Table]
    stats: dict
    provenance: dict
    series: list[SeriesSpec] = dc_field(default_factory=list)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _tables_of(obj) -> tuple[str, dict[str, Table], list[SeriesSpec]]:
    """Normalize any emittable object to (basename, tables, series)."""
    if isinstance(obj, ExperimentReport):
        return obj.kind, obj.tables, obj.series

    from .riccati import RiccatiTrace
    from .sampler import TrajectoryRecord

    if isinstance(obj, RiccatiTrace):
        rows = [
            [t, th, lj]
            for t, th, lj in zip(obj.times, obj.theta, obj.logJ)
        ]
        table = Table(columns=["t", "theta", "logJ"], rows=rows)
        return "riccati_trace", {"trace": table}, [SeriesSpec("trace", "t", "theta")]

    if isinstance(obj, TrajectoryRecord):
        dim = obj.states.shape[1]
        cols = ["t"] + [f"x{i}" for i in range(dim)] + ["divergence_estimate", "epsilon", "logJ"]
        eps = list(obj.epsilon_schedule) + [None]  # per-step value, none at final node
        rows = [
            [obj.times[k]]
            + [obj.states[k, i] for i in range(dim)]
            + [obj.divergence_estimates[k], eps[k], obj.logJ[k]]
            for k in range(len(obj.times))
        ]
        table = Table(columns=cols, rows=rows)
        return "trajectory", {"path": table}, [SeriesSpec("path", "t", "logJ")]

    raise DomainError(f"cannot emit object of type {type(obj).__name__}")


def _report_dict(obj) -> dict:
    if isinstance(obj, ExperimentReport):
        return {
            "kind": obj.kind,
            "parameters": _jsonable(obj.parameters),
            "tables": {
                name: {"columns": t.columns, "rows": _jsonable(t.rows)}
                for name, t in obj.tables.items()
            },
            "stats": _jsonable(obj.stats),
            "provenance": _jsonable(obj.provenance),
            "series": [asdict(s) for s in obj.series],
        }
    basename, tables, series = _tables_of(obj)
    return {
        "kind": basename,
        "tables": {
            name: {"columns": t.columns, "rows": _jsonable(t.rows)}
            for name, t in tables.items()
        },
        "series": [asdict(s) for s in series],
    }


def report_from_json(source) -> ExperimentReport:
    """Rebuild an ExperimentReport from a JSON file path or parsed dict."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            source = json.load(fh)
    return ExperimentReport(
        kind=source["kind"],
        parameters=source.get("parameters", {}),
        tables={
            name: Table(columns=list(t["columns"]), rows=[list(r) for r in t["rows"]])
            for name, t in source["tables"].items()
        },
        stats=source.get("stats", {}),
        provenance=source.get("provenance", {}),
        series=[SeriesSpec(**s) for s in source.get("series", [])],
    )


def _write_svg(path: Path, xs, ys, xlabel: str, ylabel: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "causal-horizon"}):
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        ax.plot(xs, ys, marker="o", lw=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def emit_report(obj, out_dir, formats=("csv", "json"), basename: str | None = None) -> list[Path]:
    """Write the object's tables under out_dir; returns the file manifest.

    formats is a subset of {csv, json, svg}.  Every written file appears in
    the returned manifest and nothing else is written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    formats = tuple(formats)
    unknown = set(formats) - {"csv", "json", "svg"}
    if unknown:
        raise DomainError(f"unknown format(s): {sorted(unknown)}")

    name, tables, series = _tables_of(obj)
    if basename is not None:
        name = basename
    manifest: list[Path] = []

    if "csv" in formats:
        for tname, table in tables.items():
            path = out_dir / f"{name}_{tname}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(table.columns)
                for row in table.rows:
                    writer.writerow([_fmt(v) for v in row])
            manifest.append(path)

    if "json" in formats:
        path = out_dir / f"{name}.json"
        with open(path, "w") as fh:
            json.dump(_report_dict(obj), fh, indent=1, sort_keys=True)
            fh.write("\n")
        manifest.append(path)

    if "svg" in formats:
        for s in series:
            table = tables[s.table]
            pairs = [
                (x, y)
                for x, y in zip(table.column(s.x), table.column(s.y))
                if x is not None and y is not None
            ]
            path = out_dir / f"{name}_{s.y}_vs_{s.x}.svg"
            xs = [p[0] for p in pairs]
            ys = [p[1] for p in pairs]
            _write_svg(path, xs, ys, s.x, s.y, f"{name}: {s.y} vs {s.x}")
            manifest.append(path)

    return manifest


def ingest_pointcloud(path, dim: int = 2, bandwidth: float | None = None) -> PointCloud:
    """Read a delimited point cloud with header x0..x{dim-1}[,label].

    Non-finite or malformed rows abort the ingest with an error naming the
    offending 1-based data row numbers.
    """
    path = Path(path)
    expected = [f"x{i}" for i in range(dim)]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        has_label = header == expected + ["label"]
        if not has_label and header != expected:
            raise IngestError(
                f"{path}: bad header {header!r}; expected {expected} with optional label"
            )
        points = []
        labels = [] if has_label else None
        bad = []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            want = dim + (1 if has_label else 0)
            if len(row) != want:
                bad.append(row_no)
                continue
            try:
                coords = [float(v) for v in row[:dim]]
            except ValueError:
                bad.append(row_no)
                continue
            if not all(math.isfinite(c) for c in coords):
                bad.append(row_no)
                continue
            points.append(coords)
            if has_label:
                labels.append(row[dim].strip())
        if bad:
            raise IngestError(
                f"{path}: {len(bad)} malformed or non-finite row(s): {bad}", bad_rows=bad
            )
        if not points:
            raise IngestError(f"{path}: no data rows")
    return PointCloud(np.asarray(points), bandwidth=bandwidth, labels=labels)

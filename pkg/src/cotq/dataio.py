"""Dataset ingestion and result serialization (CSV, JSON, SVG).

The CSV dialect is fixed: comma-separated, UTF-8, '.' decimal point,
header row required.  Rows with a missing value in a selected column
are dropped (and counted); any other non-numeric cell is an error.
Floats are serialized with ``repr``, which round-trips exactly, so
re-serializing a dataset reproduces it bit for bit and identical runs
produce byte-identical files.

JSON documents carry a ``"schema": "cotq/1"`` marker.  SVG plots are a
plotting convenience for the m=1, d=2 case; the numeric CSV/JSON files
are the authoritative outputs.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .quantile_map import ContourSet
from .regression import Tube
from .validate import CoverageReport, HausdorffReport

SCHEMA = "cotq/1"

#: Stroke colours per contour order, cycled; the median is drawn in red.
_TAU_COLORS = ("#000000", "#1a9641", "#e6b800", "#2b83ba", "#7b3294", "#d7191c")


@dataclass(frozen=True)
class Dataset:
    """Numeric regression sample with named columns."""

    X: np.ndarray
    Y: np.ndarray
    x_columns: tuple[str, ...]
    y_columns: tuple[str, ...]
    dropped_rows: int = 0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def d(self) -> int:
        return self.Y.shape[1]


def load_csv(path, x_columns, y_columns) -> Dataset:
    """Read the selected columns of a headed CSV file into a Dataset.

    Rows with an empty cell in a selected column are dropped and
    counted; non-numeric cells raise :class:`DataError` with the row
    number.
    """
    path = Path(path)
    x_columns = tuple(x_columns)
    y_columns = tuple(y_columns)
    if not x_columns or not y_columns:
        raise DataError("at least one covariate and one response column are required")
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty; a header row is required") from None
        header = [h.strip() for h in header]
        positions = {}
        for name in x_columns + y_columns:
            if name not in header:
                raise DataError(f"column {name!r} not found in {path} (header: {header})")
            positions[name] = header.index(name)
        xs, ys = [], []
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            cells = []
            missing = False
            for name in x_columns + y_columns:
                pos = positions[name]
                raw = row[pos].strip() if pos < len(row) else ""
                if raw == "":
                    missing = True
                    break
                try:
                    cells.append(float(raw))
                except ValueError:
                    raise DataError(
                        f"{path}, row {lineno}: cell {raw!r} in column {name!r} "
                        "is not numeric"
                    ) from None
            if missing:
                dropped += 1
                continue
            xs.append(cells[: len(x_columns)])
            ys.append(cells[len(x_columns):])
    if not xs:
        raise DataError(f"{path}: no complete rows in the selected columns")
    return Dataset(
        X=np.asarray(xs, dtype=float),
        Y=np.asarray(ys, dtype=float),
        x_columns=x_columns,
        y_columns=y_columns,
        dropped_rows=dropped,
    )


def write_dataset_csv(dataset: Dataset, path) -> None:
    """Serialize a dataset back to CSV (exact float round-trip)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(dataset.x_columns) + list(dataset.y_columns))
        for xrow, yrow in zip(dataset.X, dataset.Y):
            writer.writerow([repr(float(v)) for v in xrow] + [repr(float(v)) for v in yrow])


# ----------------------------------------------------------------------
# results
# ----------------------------------------------------------------------


def contour_json(x: np.ndarray, cs: ContourSet, median=None) -> dict:
    doc = {
        "query": [float(v) for v in np.atleast_1d(x)],
        "tau": cs.tau,
        "closed": cs.closed,
        "vertices": [[float(v) for v in row] for row in cs.vertices],
        "rays": [int(r) for r in cs.ray_index],
    }
    if median is not None:
        doc["median"] = [float(v) for v in median]
    return doc


def write_contours(tubes: list[Tube], out_dir, medians=None, extra=None) -> list[str]:
    """Write per-(query, tau) CSV files, a combined JSON document, and,
    for univariate covariates with planar responses, one SVG per query.

    Returns the list of written file paths (relative to ``out_dir``).
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise DataError(f"output directory {out} is not writable: {exc}") from exc

    median_for = {}
    if medians is not None:
        for q, point in medians:
            median_for[_query_key(q)] = np.asarray(point, dtype=float)

    written = []
    results = []
    queries: list[np.ndarray] = []
    for tube_obj in tubes:
        for qi, (q, cs) in enumerate(tube_obj.slices):
            if qi >= len(queries):
                queries.append(np.atleast_1d(q))
            name = f"contour_q{qi:03d}_tau{cs.tau:g}.csv"
            _write_contour_csv(out / name, q, cs)
            written.append(name)
            results.append(contour_json(q, cs, median_for.get(_query_key(q))))

    doc = {"schema": SCHEMA, "results": results}
    if medians is not None:
        doc["medians"] = [
            {"query": [float(v) for v in np.atleast_1d(q)], "point": [float(v) for v in p]}
            for q, p in medians
        ]
    if extra:
        doc.update(extra)
    json_name = "contours.json"
    _write_json(out / json_name, doc)
    written.append(json_name)

    # SVG convenience plot: scalar covariate, planar response
    if tubes and tubes[0].slices and tubes[0].slices[0][1].d == 2:
        if all(np.atleast_1d(q).size == 1 for q in queries):
            for qi, q in enumerate(queries):
                slices = [
                    (t.tau, t.slices[qi][1]) for t in tubes
                ]
                name = f"contours_q{qi:03d}.svg"
                med = median_for.get(_query_key(q))
                svg = render_contour_svg(slices, median=med,
                                         title=f"x = {float(np.atleast_1d(q)[0]):g}")
                (out / name).write_text(svg, encoding="utf-8")
                written.append(name)
    return written


def _query_key(q) -> tuple:
    return tuple(repr(float(v)) for v in np.atleast_1d(q))


def _write_contour_csv(path, q, cs: ContourSet) -> None:
    q = np.atleast_1d(q)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [f"x{j+1}" for j in range(q.size)]
            + ["tau", "ray"]
            + [f"y{j+1}" for j in range(cs.d)]
        )
        for ray, vertex in zip(cs.ray_index, cs.vertices):
            writer.writerow(
                [repr(float(v)) for v in q]
                + [repr(float(cs.tau)), str(int(ray))]
                + [repr(float(v)) for v in vertex]
            )


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=1, sort_keys=True)
        handle.write("\n")


def read_contours_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("schema") != SCHEMA:
        raise DataError(f"{path}: unexpected schema {doc.get('schema')!r}")
    return doc


def write_coverage_report(report: CoverageReport, out_dir) -> list[str]:
    """Coverage table as CSV plus a JSON summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_name = "coverage.csv"
    with open(out / csv_name, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "tau", "coverage", "abs_error", "mc"])
        for r in report.rows:
            writer.writerow(
                [repr(r.x), repr(r.tau), repr(r.coverage), repr(r.abs_error), r.mc]
            )
    doc = {
        "schema": SCHEMA,
        "suite": "coverage",
        "model": report.model_id,
        "n": report.n,
        "N": report.N,
        "seed": report.seed,
        "worst_error": report.worst_error(),
        "rows": [
            {"x": r.x, "tau": r.tau, "coverage": r.coverage, "mc": r.mc}
            for r in report.rows
        ],
    }
    json_name = "coverage.json"
    _write_json(out / json_name, doc)
    return [csv_name, json_name]


def write_hausdorff_report(report: HausdorffReport, out_dir) -> list[str]:
    """Consistency-curve table as CSV plus a JSON summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_name = "consistency.csv"
    with open(out / csv_name, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "tau", "n", "seed", "hausdorff"])
        for r in report.rows:
            writer.writerow([repr(r.x), repr(r.tau), r.n, r.seed, repr(r.distance)])
    doc = {
        "schema": SCHEMA,
        "suite": "consistency",
        "model": report.model_id,
        "median_by_n": {str(k): v for k, v in report.median_by_n().items()},
        "decreasing": report.is_decreasing(),
    }
    json_name = "consistency.json"
    _write_json(out / json_name, doc)
    return [csv_name, json_name]


# ----------------------------------------------------------------------
# SVG rendering (hand-rolled, deterministic)
# ----------------------------------------------------------------------


def render_contour_svg(
    slices: list[tuple[float, ContourSet]],
    median=None,
    title: str = "",
    size: int = 480,
    pad: int = 40,
) -> str:
    """Render contours of one conditional distribution as an SVG string.

    Contours are coloured by order (darkest = smallest), the median
    point, when given, is highlighted in red.
    """
    pts = np.vstack([cs.vertices for _, cs in slices])
    if median is not None:
        pts = np.vstack([pts, np.asarray(median, dtype=float)[None, :]])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    scale = (size - 2 * pad) / span.max()

    def to_screen(p):
        sx = pad + (p[0] - lo[0]) * scale
        sy = size - pad - (p[1] - lo[1]) * scale
        return sx, sy

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{size - 2 * pad}" height="{size - 2 * pad}" '
        'fill="none" stroke="#888888" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{size // 2}" y="{pad - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    for rank_idx, (tau, cs) in enumerate(sorted(slices, key=lambda s: s[0])):
        color = _TAU_COLORS[rank_idx % len(_TAU_COLORS)]
        coords = " ".join(
            f"{sx:.2f},{sy:.2f}" for sx, sy in (to_screen(v) for v in cs.vertices)
        )
        tag = "polygon" if cs.closed else "polyline"
        body = coords if not cs.closed else " ".join(coords.split(" ")[:-1])
        parts.append(
            f'<{tag} points="{body}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        lx, ly = to_screen(cs.vertices[0])
        parts.append(
            f'<text x="{lx + 4:.2f}" y="{ly - 4:.2f}" font-family="sans-serif" '
            f'font-size="11" fill="{color}">{tau:g}</text>'
        )
    if median is not None:
        mx, my = to_screen(np.asarray(median, dtype=float))
        parts.append(f'<circle cx="{mx:.2f}" cy="{my:.2f}" r="3.5" fill="#d7191c"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def default_output_dir() -> str:
    """Output directory: $COTQ_OUTDIR or ./cotq-output."""
    return os.environ.get("COTQ_OUTDIR", "cotq-output")

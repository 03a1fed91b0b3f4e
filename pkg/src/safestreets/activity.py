"""Hourly cell-grid population counts -> per-district activity metrics.

Metrics per district over a 24h window: density of people per km^2,
fraction of females, fraction under 30 and fraction over 50.
"""

import csv
import json
import warnings
from dataclasses import dataclass, field
from functools import reduce

from shapely.geometry import Polygon

from . import geometry
from .errors import InvalidInputError

GENDERS = ("male", "female")
AGE_BANDS = ("<30", "30-50", ">50")


@dataclass
class CdrCell:
    cell_id: str
    rings: list
    # (gender, age_band) -> people in the reduced 24h window
    counts: dict = field(default_factory=dict)

    def total(self):
        return sum(self.counts.values())


@dataclass
class ActivityMetrics:
    R_p: float
    R_f: float
    R_young: float
    R_old: float
    window: str = "24h"


@dataclass
class AllocationReport:
    # district id -> {(gender, band): people}
    tables: dict
    unallocated: float
    total_input: float


def shapely_of_rings(rings):
    """Even-odd region of a ring list as a shapely geometry (xor of rings)."""
    polys = [Polygon(r) for r in rings if len(r) >= 3]
    if not polys:
        return Polygon()
    return reduce(lambda a, b: a.symmetric_difference(b), polys)


def read_cells(geojson_path, csv_path, window="daily_mean"):
    """Load cell polygons plus long-format hourly counts, reduced to 24h.

    window "daily_mean": sum counts within each calendar day, then average
    across all days observed anywhere in the file. "sum": plain total.
    """
    with open(geojson_path) as fh:
        collection = json.load(fh)
    cells = {}
    for feature in collection.get("features", []):
        props = feature.get("properties") or {}
        cell_id = str(props.get("cell_id", props.get("id", feature.get("id"))))
        geom = feature["geometry"]
        if geom["type"] == "Polygon":
            parts = [geom["coordinates"]]
        elif geom["type"] == "MultiPolygon":
            parts = geom["coordinates"]
        else:
            raise InvalidInputError(f"cell {cell_id}: unsupported geometry")
        rings = []
        for part in parts:
            for ring in part:
                pts = [tuple(p[:2]) for p in ring]
                if len(pts) > 1 and pts[0] == pts[-1]:
                    pts = pts[:-1]
                rings.append(pts)
        cells[cell_id] = CdrCell(cell_id=cell_id, rings=rings)

    per_day = {}  # (cell, gender, band, day) -> count
    days = set()
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"cell_id", "timestamp", "gender", "age_band", "count"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise InvalidInputError(
                f"{csv_path}: expected header cell_id,timestamp,gender,age_band,count"
            )
        for lineno, row in enumerate(reader, start=2):
            if row["cell_id"] not in cells:
                raise InvalidInputError(
                    f"{csv_path}:{lineno}: unknown cell {row['cell_id']!r}"
                )
            if row["gender"] not in GENDERS:
                raise InvalidInputError(f"{csv_path}:{lineno}: bad gender {row['gender']!r}")
            if row["age_band"] not in AGE_BANDS:
                raise InvalidInputError(f"{csv_path}:{lineno}: bad age band {row['age_band']!r}")
            count = float(row["count"])
            if count < 0:
                raise InvalidInputError(f"{csv_path}:{lineno}: negative count")
            day = row["timestamp"][:10]
            days.add(day)
            key = (row["cell_id"], row["gender"], row["age_band"], day)
            per_day[key] = per_day.get(key, 0.0) + count

    n_days = max(1, len(days))
    for (cell_id, gender, band, _day), count in per_day.items():
        key = (gender, band)
        cell = cells[cell_id]
        cell.counts[key] = cell.counts.get(key, 0.0) + count
    if window == "daily_mean":
        for cell in cells.values():
            cell.counts = {k: v / n_days for k, v in cell.counts.items()}
    elif window != "sum":
        raise InvalidInputError(f"unknown window rule {window!r}")
    return list(cells.values())


def district_counts(cells, districts):
    """Allocate each cell's counts to districts by intersection area."""
    district_shapes = [(d.id, shapely_of_rings(d.rings)) for d in districts]
    tables = {d.id: {} for d in districts}
    unallocated = 0.0
    total_input = 0.0

    for cell in cells:
        cell_total = cell.total()
        total_input += cell_total
        shape = shapely_of_rings(cell.rings)
        if shape.area == 0.0:
            warnings.warn(f"cell {cell.cell_id} has zero area; skipped")
            unallocated += cell_total
            continue
        inter = [(did, shape.intersection(dshape).area) for did, dshape in district_shapes]
        covered = sum(a for _, a in inter)
        denom = max(shape.area, covered)
        allocated_fraction = 0.0
        for did, area in inter:
            if area == 0.0:
                continue
            frac = area / denom
            allocated_fraction += frac
            table = tables[did]
            for key, count in cell.counts.items():
                table[key] = table.get(key, 0.0) + count * frac
        unallocated += cell_total * (1.0 - allocated_fraction)

    return AllocationReport(tables=tables, unallocated=unallocated, total_input=total_input)


def compute_metrics(report, districts):
    """Count tables -> ActivityMetrics; districts with no people are omitted."""
    by_id = {d.id: d for d in districts}
    metrics = {}
    for did, table in report.tables.items():
        district = by_id.get(did)
        if district is None or district.area_i is None or district.area_i <= 0:
            raise InvalidInputError(f"district {did}: missing positive area_i")
        people = sum(table.values())
        if people <= 0.0:
            continue  # flagged missing, not NaN
        females = sum(v for (g, _b), v in table.items() if g == "female")
        young = sum(v for (_g, b), v in table.items() if b == "<30")
        old = sum(v for (_g, b), v in table.items() if b == ">50")
        metrics[did] = ActivityMetrics(
            R_p=people / district.area_i,
            R_f=females / people,
            R_young=young / people,
            R_old=old / people,
        )
    return metrics


def urban_filter(districts):
    """Keep districts whose surface is majority urban (strict > 0.5)."""
    kept = []
    for d in districts:
        if d.urban_fraction is None:
            warnings.warn(f"district {d.id}: missing urban_fraction; excluded")
            continue
        if d.urban_fraction > 0.5:
            kept.append(d)
    return kept


def write_metrics_csv(path, metrics):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["district_id", "R_p", "R_f", "R_young", "R_old", "window"])
        for did in sorted(metrics):
            m = metrics[did]
            writer.writerow([did, repr(m.R_p), repr(m.R_f), repr(m.R_young), repr(m.R_old), m.window])


def read_metrics_csv(path):
    metrics = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            metrics[row["district_id"]] = ActivityMetrics(
                R_p=float(row["R_p"]),
                R_f=float(row["R_f"]),
                R_young=float(row["R_young"]),
                R_old=float(row["R_old"]),
                window=row.get("window", "24h"),
            )
    return metrics

"""District polygons, sampling grids, spatial joins and score aggregation."""

import csv
import json
import math
from dataclasses import dataclass, field

from . import geometry
from .errors import InvalidInputError

CARDINAL_HEADINGS = (0.0, 90.0, 180.0, 270.0)

# GeoJSON property names for the census covariates, in ingestion order.
CENSUS_FIELDS = (
    "population",
    "employees",
    "deprivation",
    "pct_women",
    "pct_young",
    "pct_elderly",
    "dist_centre",
    "urban_fraction",
    "area_i",
)


@dataclass
class District:
    """Regression unit: polygon plus census covariates.

    `rings` is a list of (lon, lat) vertex rings; holes and multi-part
    geometries are handled by even-odd semantics.
    """

    id: str
    rings: list
    population: float = 0.0
    employees: float = 0.0
    deprivation: float = 0.0
    pct_women: float = 0.0
    pct_young: float = 0.0
    pct_elderly: float = 0.0
    dist_centre: float = 0.0
    urban_fraction: float = None
    area_i: float = 0.0
    safety_score: float = None
    n_images: int = 0
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.area_i is not None and self.area_i < 0:
            raise InvalidInputError(f"district {self.id}: negative area")

    def planar_area_km2(self):
        return geometry.rings_area_km2(self.rings)

    def contains(self, lon, lat):
        pt = (lon, lat)
        return geometry.point_in_rings(pt, self.rings) or geometry.point_on_rings(
            pt, self.rings
        )


@dataclass(frozen=True)
class SamplePoint:
    lat: float
    lon: float
    headings: tuple = CARDINAL_HEADINGS

    def __post_init__(self):
        if len(self.headings) != 4:
            raise InvalidInputError("sample point needs exactly four headings")


@dataclass(frozen=True)
class ScoreRecord:
    image_id: str
    lat: float
    lon: float
    heading: float
    score: float


def generate_grid(rings, density):
    """Uniform lattice over `rings` with `density` points per km^2.

    Spacing is 1000/sqrt(density) meters on a local equirectangular frame
    anchored at the region's bounding box; each retained point carries the
    four cardinal headings.
    """
    if density <= 0:
        raise InvalidInputError("density must be positive")
    if not rings or all(len(r) < 3 for r in rings):
        return []
    min_lon, min_lat, max_lon, max_lat = geometry.bounding_box(rings)
    if min_lon == max_lon or min_lat == max_lat:
        return []

    spacing_m = 1000.0 / math.sqrt(density)
    mean_lat = 0.5 * (min_lat + max_lat)
    m_lon, m_lat = geometry.meters_per_degree(mean_lat)
    width_m = (max_lon - min_lon) * m_lon
    height_m = (max_lat - min_lat) * m_lat

    points = []
    ny = int(height_m / spacing_m + 0.5)
    nx = int(width_m / spacing_m + 0.5)
    for iy in range(ny):
        lat = min_lat + (iy + 0.5) * spacing_m / m_lat
        for ix in range(nx):
            lon = min_lon + (ix + 0.5) * spacing_m / m_lon
            if geometry.point_in_rings((lon, lat), rings):
                points.append(SamplePoint(lat=lat, lon=lon))
    return points


def assign_points(points, districts):
    """Point-in-polygon join: list of (lat, lon) -> list of district id or None.

    A point claimed by several districts (shared boundaries, tolerated
    overlap) goes to the one with the smallest planar area; remaining ties
    go to the earliest district in input order.
    """
    areas = [d.planar_area_km2() for d in districts]
    assignments = []
    for lat, lon in points:
        best = None
        for idx, district in enumerate(districts):
            if district.contains(lon, lat):
                if best is None or areas[idx] < areas[best]:
                    best = idx
        assignments.append(districts[best].id if best is not None else None)
    return assignments


@dataclass
class AggregationReport:
    """Per-district safety means plus bookkeeping on dropped records."""

    scores: dict  # district id -> (mean score, n locations)
    unassigned_locations: int = 0


def aggregate_scores(records, districts):
    """Two-stage mean: per-location over headings, then per-district.

    Records outside every district are dropped and counted. Scores outside
    [0, 10] are rejected outright.
    """
    for i, rec in enumerate(records):
        if not 0.0 <= rec.score <= 10.0:
            raise InvalidInputError(
                f"record {i} ({rec.image_id}): score {rec.score} outside [0, 10]"
            )

    by_location = {}
    for rec in records:
        by_location.setdefault((rec.lat, rec.lon), []).append(rec.score)

    locations = sorted(by_location)
    assignment = assign_points(locations, districts)

    sums = {}
    counts = {}
    unassigned = 0
    for loc, district_id in zip(locations, assignment):
        if district_id is None:
            unassigned += 1
            continue
        loc_score = sum(by_location[loc]) / len(by_location[loc])
        sums[district_id] = sums.get(district_id, 0.0) + loc_score
        counts[district_id] = counts.get(district_id, 0) + 1

    scores = {
        did: (sums[did] / counts[did], counts[did]) for did in sums
    }
    return AggregationReport(scores=scores, unassigned_locations=unassigned)


# --- GeoJSON / CSV ingestion -------------------------------------------------


def _geojson_rings(geom):
    gtype = geom.get("type")
    if gtype == "Polygon":
        parts = [geom["coordinates"]]
    elif gtype == "MultiPolygon":
        parts = geom["coordinates"]
    else:
        raise InvalidInputError(f"unsupported geometry type {gtype!r}")
    rings = []
    for part in parts:
        for ring in part:
            pts = [tuple(pt[:2]) for pt in ring]
            if len(pts) > 1 and pts[0] == pts[-1]:
                pts = pts[:-1]
            rings.append(pts)
    return rings


def read_districts_geojson(path):
    with open(path) as fh:
        collection = json.load(fh)
    if collection.get("type") != "FeatureCollection":
        raise InvalidInputError(f"{path}: expected a GeoJSON FeatureCollection")
    districts = []
    for i, feature in enumerate(collection.get("features", [])):
        props = feature.get("properties") or {}
        district_id = props.get("id", feature.get("id"))
        if district_id is None:
            raise InvalidInputError(f"{path}: feature {i} lacks an id")
        kwargs = {}
        for name in CENSUS_FIELDS:
            if name in props and props[name] is not None:
                kwargs[name] = float(props[name])
        if props.get("safety_score") is not None:
            kwargs["safety_score"] = float(props["safety_score"])
            kwargs["n_images"] = int(props.get("n_images", 0))
        districts.append(
            District(
                id=str(district_id),
                rings=_geojson_rings(feature["geometry"]),
                **kwargs,
            )
        )
    return districts


def _rings_to_geojson(rings):
    coords = [[list(pt) for pt in ring] + [list(ring[0])] for ring in rings]
    return {"type": "Polygon", "coordinates": coords}


def write_districts_geojson(path, districts):
    features = []
    for d in districts:
        props = {"id": d.id}
        for name in CENSUS_FIELDS:
            value = getattr(d, name)
            if value is not None:
                props[name] = value
        if d.safety_score is not None:
            props["safety_score"] = d.safety_score
            props["n_images"] = d.n_images
        for key, value in d.metrics.items():
            props[key] = value
        features.append(
            {
                "type": "Feature",
                "geometry": _rings_to_geojson(d.rings),
                "properties": props,
            }
        )
    with open(path, "w") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh)


def read_score_records_csv(path):
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"image_id", "lat", "lon", "heading", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise InvalidInputError(
                f"{path}: expected CSV header image_id,lat,lon,heading,score"
            )
        for row in reader:
            records.append(
                ScoreRecord(
                    image_id=row["image_id"],
                    lat=float(row["lat"]),
                    lon=float(row["lon"]),
                    heading=float(row["heading"]),
                    score=float(row["score"]),
                )
            )
    return records


def write_score_records_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "lat", "lon", "heading", "score"])
        for rec in records:
            writer.writerow(
                [rec.image_id, repr(rec.lat), repr(rec.lon), rec.heading, repr(rec.score)]
            )


def write_sample_points_csv(path, points):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lat", "lon", "headings"])
        for pt in points:
            writer.writerow(
                [repr(pt.lat), repr(pt.lon), ";".join(str(int(h)) for h in pt.headings)]
            )


def read_sample_points_csv(path):
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            headings = tuple(float(h) for h in row["headings"].split(";"))
            points.append(SamplePoint(lat=float(row["lat"]), lon=float(row["lon"]), headings=headings))
    return points

"""Planar geometry helpers on WGS84 coordinates.

Coordinates are (lon, lat) in degrees. Metric computations use a local
equirectangular projection at the region's mean latitude, which is accurate
to well under 0.5% for city-scale extents (< 1 degree of latitude).
"""

import math

EARTH_RADIUS_M = 6371008.8
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0

# Snapping grid for vertex identity tests, in degrees (~0.1 mm).
SNAP_DEG = 1e-9


def meters_per_degree(lat_deg):
    """Return (meters per degree of longitude, meters per degree of latitude)."""
    return METERS_PER_DEG_LAT * math.cos(math.radians(lat_deg)), METERS_PER_DEG_LAT


def snap(coord):
    """Snap one coordinate value to the global tolerance grid."""
    return round(coord / SNAP_DEG)


def snap_point(pt):
    return (snap(pt[0]), snap(pt[1]))


def ring_vertices(rings):
    """Snapped vertex set of a ring list (closing vertex deduplicated)."""
    verts = set()
    for ring in rings:
        for pt in ring:
            verts.add(snap_point(pt))
    return verts


def point_in_ring(pt, ring):
    """Even-odd crossing test against one ring. Boundary points are unreliable
    here; use `point_on_rings` to detect them first."""
    x, y = pt
    inside = False
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def point_in_rings(pt, rings):
    """Even-odd test over a set of rings (handles holes and multi-parts)."""
    crossings_odd = False
    for ring in rings:
        if point_in_ring(pt, ring):
            crossings_odd = not crossings_odd
    return crossings_odd


def point_on_rings(pt, rings, tol=1e-12):
    """True if `pt` lies on any ring segment, within `tol` degrees."""
    x, y = pt
    for ring in rings:
        n = len(ring)
        for i in range(n):
            x1, y1 = ring[i]
            x2, y2 = ring[(i + 1) % n]
            dx, dy = x2 - x1, y2 - y1
            seg_len2 = dx * dx + dy * dy
            if seg_len2 == 0.0:
                if abs(x - x1) <= tol and abs(y - y1) <= tol:
                    return True
                continue
            t = ((x - x1) * dx + (y - y1) * dy) / seg_len2
            t = min(1.0, max(0.0, t))
            px, py = x1 + t * dx, y1 + t * dy
            if abs(x - px) <= tol and abs(y - py) <= tol:
                return True
    return False


def ring_area_deg2(ring):
    """Signed shoelace area of a ring in square degrees."""
    area = 0.0
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return area / 2.0


def rings_area_km2(rings, mean_lat=None):
    """Unsigned area of a ring set in km^2 via equirectangular projection.

    Holes carry opposite winding in well-formed input; we sum absolute ring
    areas minus nothing here because even-odd semantics are approximated by
    summing signed areas and taking the absolute value at the end.
    """
    if not rings:
        return 0.0
    if mean_lat is None:
        lats = [pt[1] for ring in rings for pt in ring]
        mean_lat = sum(lats) / len(lats)
    mx, my = meters_per_degree(mean_lat)
    total = 0.0
    for ring in rings:
        total += ring_area_deg2(ring)
    return abs(total) * mx * my / 1e6


def bounding_box(rings):
    """(min_lon, min_lat, max_lon, max_lat) over all ring vertices."""
    xs = [pt[0] for ring in rings for pt in ring]
    ys = [pt[1] for ring in rings for pt in ring]
    return min(xs), min(ys), max(xs), max(ys)

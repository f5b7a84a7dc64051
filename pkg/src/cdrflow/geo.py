"""Geographic primitives: tower sectors, pseudo-location sampling, region assignment.

Cell identifiers carry no exact coordinates, so events are placed at
deterministic pseudo-locations inside the serving antenna's sector wedge.
All distances are great-circle meters on a sphere of radius 6,371,000 m.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import ClippingExhausted
from .timefmt import from_iso, to_iso

EARTH_RADIUS_M = 6_371_000.0

# Rejection-sampling budget for land clipping.
DEFAULT_CLIP_ATTEMPTS = 64

# Tiny insets keep re-measured distance/bearing of sampled points strictly
# inside the sector predicate under floating-point recomputation.
_RADIAL_FRACTION_MIN = 1e-3
_RADIAL_FRACTION_MAX = 1.0 - 1e-9
_BEARING_MARGIN_DEG = 1e-6


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """WGS84 coordinate pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class TowerSector:
    """Antenna coverage wedge: center, azimuth, beamwidth, radius.

    A zero radius is accepted as the degenerate sector that maps every
    event onto its center.
    """

    cell_id: str
    center: GeoPoint
    azimuth_deg: float
    beamwidth_deg: float
    radius_m: float

    def __post_init__(self) -> None:
        if self.radius_m < 0:
            raise ValueError(f"sector radius must be >= 0, got {self.radius_m}")
        if not (0.0 < self.beamwidth_deg <= 360.0):
            raise ValueError(f"beamwidth must be in (0, 360], got {self.beamwidth_deg}")
        object.__setattr__(self, "azimuth_deg", self.azimuth_deg % 360.0)


@dataclass(frozen=True)
class Region:
    """Administrative area with one exterior ring and optional holes per polygon."""

    region_id: str
    name: str
    level: str  # "parish" | "municipality"
    parent_id: Optional[str]
    polygons: tuple  # tuple of polygons; polygon = tuple of rings; ring = tuple of GeoPoint

    def __post_init__(self) -> None:
        if self.level not in ("parish", "municipality"):
            raise ValueError(f"unknown region level: {self.level}")
        for polygon in self.polygons:
            for ring in polygon:
                if len(ring) < 4 or ring[0] != ring[-1]:
                    raise ValueError(
                        f"region {self.region_id}: ring must be closed (first == last)"
                    )


@dataclass(frozen=True, slots=True)
class CdrEvent:
    """Raw telecom observation: who, when, which serving cell."""

    user_id: str
    timestamp: float
    cell_id: str


@dataclass(frozen=True, slots=True)
class PositionedEvent:
    """CDR event with a pseudo-location inside its sector."""

    user_id: str
    timestamp: float
    cell_id: str
    location: GeoPoint

    def __post_init__(self) -> None:
        if not math.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth from a to b, degrees clockwise from north in [0, 360)."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dlam = math.radians(b.lon - a.lon)
    y = math.sin(dlam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    return math.degrees(math.atan2(y, x)) % 360.0


def destination_point(start: GeoPoint, bearing_deg: float, distance_m: float) -> GeoPoint:
    """Point reached from start after distance_m along the given bearing."""
    delta = distance_m / EARTH_RADIUS_M
    theta = math.radians(bearing_deg)
    phi1 = math.radians(start.lat)
    lam1 = math.radians(start.lon)
    sin_phi2 = math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    phi2 = math.asin(max(-1.0, min(1.0, sin_phi2)))
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * sin_phi2,
    )
    lon = (math.degrees(lam2) + 180.0) % 360.0 - 180.0
    return GeoPoint(lat=math.degrees(phi2), lon=lon)


def bearing_within_wedge(bearing_deg: float, azimuth_deg: float, beamwidth_deg: float) -> bool:
    """Wrap-aware test that a bearing lies inside [azimuth - bw/2, azimuth + bw/2]."""
    diff = (bearing_deg - azimuth_deg + 180.0) % 360.0 - 180.0
    return abs(diff) <= beamwidth_deg / 2.0


def _splitmix64(state: int) -> tuple[int, int]:
    # Stable 64-bit generator; pure integer ops, identical on every platform.
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return state, z ^ (z >> 31)


def event_seed(cell_id: str, user_id: str, timestamp: float) -> int:
    """Stable 64-bit sampling seed for one event, reproducible across runs."""
    ts = repr(int(timestamp)) if float(timestamp).is_integer() else repr(float(timestamp))
    payload = "\x1f".join((cell_id, user_id, ts)).encode("utf-8")
    return int.from_bytes(blake2b(payload, digest_size=8).digest(), "big")


class _SectorSampler:
    """Precomputed wedge geometry for fast repeated sampling of one sector."""

    __slots__ = (
        "radius", "lo_bearing", "span", "phi1", "lam1", "sin_phi1", "cos_phi1",
    )

    def __init__(self, sector: TowerSector):
        self.radius = sector.radius_m
        half = sector.beamwidth_deg / 2.0
        margin = max(_BEARING_MARGIN_DEG * sector.beamwidth_deg, _BEARING_MARGIN_DEG)
        self.lo_bearing = sector.azimuth_deg - half + margin
        self.span = max(sector.beamwidth_deg - 2.0 * margin, 0.0)
        self.phi1 = math.radians(sector.center.lat)
        self.lam1 = math.radians(sector.center.lon)
        self.sin_phi1 = math.sin(self.phi1)
        self.cos_phi1 = math.cos(self.phi1)

    def raw_draw(self, u: float, v: float) -> tuple[float, float]:
        """(lat, lon) degrees for unit draws u (radial) and v (angular)."""
        sin, cos, asin, atan2, sqrt = math.sin, math.cos, math.asin, math.atan2, math.sqrt
        fraction = min(max(sqrt(u), _RADIAL_FRACTION_MIN), _RADIAL_FRACTION_MAX)
        theta = math.radians((self.lo_bearing + v * self.span) % 360.0)
        sin_theta, cos_theta = sin(theta), cos(theta)
        while True:
            delta = fraction * self.radius / EARTH_RADIUS_M
            sin_delta, cos_delta = sin(delta), cos(delta)
            sin_phi2 = self.sin_phi1 * cos_delta + self.cos_phi1 * sin_delta * cos_theta
            sin_phi2 = max(-1.0, min(1.0, sin_phi2))
            phi2 = asin(sin_phi2)
            lam2 = self.lam1 + atan2(
                sin_theta * sin_delta * self.cos_phi1, cos_delta - self.sin_phi1 * sin_phi2
            )
            # re-measure; shrink on the (practically unreachable) overshoot
            h = (
                sin((phi2 - self.phi1) / 2.0) ** 2
                + self.cos_phi1 * cos(phi2) * sin((lam2 - self.lam1) / 2.0) ** 2
            )
            if 2.0 * EARTH_RADIUS_M * asin(min(1.0, sqrt(h))) <= self.radius:
                break
            fraction *= 0.999999
        lon = (math.degrees(lam2) + 180.0) % 360.0 - 180.0
        return math.degrees(phi2), lon


def sample_sector_point(
    sector: TowerSector,
    seed: int,
    land: Sequence[Region] = (),
    max_attempts: int = DEFAULT_CLIP_ATTEMPTS,
) -> GeoPoint:
    """Deterministic pseudo-location inside the sector wedge.

    The point is uniform over the wedge area (radial fraction sqrt(u)) and is
    a pure function of (sector, seed, land).  When land regions are given the
    draw is rejection-resampled until it falls inside one of them; after
    max_attempts the sector center is used if it is itself on land, otherwise
    ClippingExhausted is raised.
    """
    if sector.radius_m == 0.0:
        return sector.center

    sampler = _SectorSampler(sector)
    state = seed & 0xFFFFFFFFFFFFFFFF
    attempts = max(1, max_attempts) if land else 1
    for _ in range(attempts):
        state, z1 = _splitmix64(state)
        state, z2 = _splitmix64(state)
        u = (z1 >> 11) / float(1 << 53)
        v = (z2 >> 11) / float(1 << 53)
        lat, lon = sampler.raw_draw(u, v)
        point = GeoPoint(lat=lat, lon=lon)
        if not land or any(region_contains(r, point) for r in land):
            return point

    if any(region_contains(r, sector.center) for r in land):
        return sector.center
    raise ClippingExhausted(
        f"no land point found for sector {sector.cell_id} after {max_attempts} attempts"
    )


# --- point-in-polygon -------------------------------------------------------

_BOUNDARY_EPS_DEG = 1e-12


def _on_segment(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> bool:
    if not (min(ax, bx) - _BOUNDARY_EPS_DEG <= px <= max(ax, bx) + _BOUNDARY_EPS_DEG):
        return False
    if not (min(ay, by) - _BOUNDARY_EPS_DEG <= py <= max(ay, by) + _BOUNDARY_EPS_DEG):
        return False
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    span = max(abs(bx - ax), abs(by - ay), 1.0)
    return abs(cross) <= _BOUNDARY_EPS_DEG * span


def _ray_cast(px: float, py: float, ring: Sequence[GeoPoint]) -> bool:
    inside = False
    n = len(ring) - 1  # closed ring: last vertex repeats the first
    for i in range(n):
        ax, ay = ring[i].lon, ring[i].lat
        bx, by = ring[i + 1].lon, ring[i + 1].lat
        if (ay > py) != (by > py):
            x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < x_cross:
                inside = not inside
    return inside


def _ring_boundary(px: float, py: float, ring: Sequence[GeoPoint]) -> bool:
    n = len(ring) - 1
    for i in range(n):
        a, b = ring[i], ring[i + 1]
        if _on_segment(px, py, a.lon, a.lat, b.lon, b.lat):
            return True
    return False


def region_contains(region: Region, p: GeoPoint) -> bool:
    """Containment test; boundary points count as inside."""
    px, py = p.lon, p.lat
    for polygon in region.polygons:
        exterior = polygon[0]
        if _ring_boundary(px, py, exterior):
            return True
        if not _ray_cast(px, py, exterior):
            continue
        in_hole = False
        for hole in polygon[1:]:
            if _ring_boundary(px, py, hole):
                return True  # hole boundary still belongs to the region
            if _ray_cast(px, py, hole):
                in_hole = True
                break
        if not in_hole:
            return True
    return False


class RegionIndex:
    """Immutable region lookup with a bounding-box prefilter per region."""

    def __init__(self, regions: Iterable[Region]):
        self._by_level: dict[str, list[tuple[tuple[float, float, float, float], Region]]] = {}
        self._by_id: dict[str, Region] = {}
        for region in regions:
            if region.region_id in self._by_id:
                raise ValueError(f"duplicate region_id: {region.region_id}")
            self._by_id[region.region_id] = region
            bbox = self._bbox(region)
            self._by_level.setdefault(region.level, []).append((bbox, region))
        for entries in self._by_level.values():
            entries.sort(key=lambda e: e[1].region_id)
        for region in self._by_id.values():
            if region.level == "parish" and (
                region.parent_id is None or region.parent_id not in self._by_id
            ):
                raise ValueError(
                    f"parish {region.region_id} must reference an existing municipality parent"
                )

    @staticmethod
    def _bbox(region: Region) -> tuple[float, float, float, float]:
        pts = [pt for polygon in region.polygons for ring in polygon for pt in ring]
        eps = 1e-9
        return (
            min(p.lon for p in pts) - eps,
            min(p.lat for p in pts) - eps,
            max(p.lon for p in pts) + eps,
            max(p.lat for p in pts) + eps,
        )

    def get(self, region_id: str) -> Region:
        return self._by_id[region_id]

    def regions(self, level: Optional[str] = None) -> list[Region]:
        if level is None:
            return sorted(self._by_id.values(), key=lambda r: r.region_id)
        return [r for _, r in self._by_level.get(level, [])]

    def assign(self, p: GeoPoint, level: str) -> Optional[str]:
        """Id of the region at `level` containing p, or None.

        Ties on shared boundaries resolve to the lexicographically smallest
        region_id (entries are pre-sorted, so the first hit wins).
        """
        for (minx, miny, maxx, maxy), region in self._by_level.get(level, []):
            if not (minx <= p.lon <= maxx and miny <= p.lat <= maxy):
                continue
            if region_contains(region, p):
                return region.region_id
        return None


def assign_region(p: GeoPoint, regions: RegionIndex, level: str) -> Optional[str]:
    """Functional wrapper over RegionIndex.assign."""
    return regions.assign(p, level)


def position_events(
    events: Iterable[CdrEvent],
    towers: dict[str, TowerSector],
    land: Sequence[Region] = (),
) -> list[PositionedEvent]:
    """Attach a deterministic pseudo-location to every CDR event.

    Equivalent to calling sample_sector_point per event; the land-free path
    reuses one precomputed sampler per sector.
    """
    out = []
    if land:
        for ev in events:
            sector = towers.get(ev.cell_id)
            if sector is None:
                raise ValueError(f"event references unknown cell_id {ev.cell_id!r}")
            point = sample_sector_point(
                sector, event_seed(ev.cell_id, ev.user_id, ev.timestamp), land
            )
            out.append(
                PositionedEvent(
                    user_id=ev.user_id, timestamp=ev.timestamp, cell_id=ev.cell_id, location=point
                )
            )
        return out

    samplers: dict[str, Optional[_SectorSampler]] = {}
    prefixes: dict[tuple[str, str], bytes] = {}
    two_53 = float(1 << 53)
    for ev in events:
        sector = towers.get(ev.cell_id)
        if sector is None:
            raise ValueError(f"event references unknown cell_id {ev.cell_id!r}")
        sampler = samplers.get(ev.cell_id)
        if sampler is None and ev.cell_id not in samplers:
            sampler = _SectorSampler(sector) if sector.radius_m > 0.0 else None
            samplers[ev.cell_id] = sampler
        if sampler is None:
            point = sector.center
        else:
            key = (ev.cell_id, ev.user_id)
            prefix = prefixes.get(key)
            if prefix is None:
                prefix = f"{ev.cell_id}\x1f{ev.user_id}\x1f".encode("utf-8")
                prefixes[key] = prefix
            ts = ev.timestamp
            ts_repr = repr(int(ts)) if ts.is_integer() else repr(ts)
            seed = int.from_bytes(
                blake2b(prefix + ts_repr.encode("utf-8"), digest_size=8).digest(), "big"
            )
            state, z1 = _splitmix64(seed)
            state, z2 = _splitmix64(state)
            lat, lon = sampler.raw_draw((z1 >> 11) / two_53, (z2 >> 11) / two_53)
            point = GeoPoint(lat=lat, lon=lon)
        out.append(
            PositionedEvent(
                user_id=ev.user_id, timestamp=ev.timestamp, cell_id=ev.cell_id, location=point
            )
        )
    return out


# --- file formats -----------------------------------------------------------

TOWERS_HEADER = ["cell_id", "lat", "lon", "azimuth_deg", "beamwidth_deg", "radius_m"]


def load_towers_csv(path: str | Path) -> dict[str, TowerSector]:
    towers: dict[str, TowerSector] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != TOWERS_HEADER:
            raise ValueError(f"towers file {path}: expected header {','.join(TOWERS_HEADER)}")
        for row in reader:
            sector = TowerSector(
                cell_id=row["cell_id"],
                center=GeoPoint(lat=float(row["lat"]), lon=float(row["lon"])),
                azimuth_deg=float(row["azimuth_deg"]),
                beamwidth_deg=float(row["beamwidth_deg"]),
                radius_m=float(row["radius_m"]),
            )
            if sector.cell_id in towers:
                raise ValueError(f"duplicate cell_id {sector.cell_id!r} in {path}")
            towers[sector.cell_id] = sector
    return towers


def write_towers_csv(towers: Iterable[TowerSector], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(TOWERS_HEADER)
        for t in sorted(towers, key=lambda t: t.cell_id):
            writer.writerow(
                [t.cell_id, repr(t.center.lat), repr(t.center.lon), repr(t.azimuth_deg),
                 repr(t.beamwidth_deg), repr(t.radius_m)]
            )


CDR_HEADER = ["user_id", "timestamp", "cell_id"]
POSITIONED_HEADER = ["user_id", "timestamp", "cell_id", "lat", "lon"]


def load_cdr_csv(path: str | Path) -> list[CdrEvent]:
    events = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CDR_HEADER:
            raise ValueError(f"cdr file {path}: expected header {','.join(CDR_HEADER)}")
        for row in reader:
            events.append(
                CdrEvent(
                    user_id=row["user_id"],
                    timestamp=from_iso(row["timestamp"]),
                    cell_id=row["cell_id"],
                )
            )
    return events


def write_cdr_csv(events: Iterable[CdrEvent], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(CDR_HEADER)
        for ev in events:
            writer.writerow([ev.user_id, to_iso(ev.timestamp), ev.cell_id])


def load_positioned_csv(path: str | Path) -> list[PositionedEvent]:
    events = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != POSITIONED_HEADER:
            raise ValueError(f"positioned file {path}: expected header {','.join(POSITIONED_HEADER)}")
        for row in reader:
            events.append(
                PositionedEvent(
                    user_id=row["user_id"],
                    timestamp=from_iso(row["timestamp"]),
                    cell_id=row["cell_id"],
                    location=GeoPoint(lat=float(row["lat"]), lon=float(row["lon"])),
                )
            )
    return events


def write_positioned_csv(events: Iterable[PositionedEvent], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(POSITIONED_HEADER)
        for ev in events:
            writer.writerow(
                [ev.user_id, to_iso(ev.timestamp), ev.cell_id,
                 repr(ev.location.lat), repr(ev.location.lon)]
            )


def _rings_to_coords(polygons: tuple) -> list:
    return [
        [[[pt.lon, pt.lat] for pt in ring] for ring in polygon]
        for polygon in polygons
    ]


def _coords_to_polygon(coords) -> tuple:
    return tuple(
        tuple(GeoPoint(lat=float(pt[1]), lon=float(pt[0])) for pt in ring) for ring in coords
    )


def load_regions_geojson(path: str | Path) -> RegionIndex:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("type") != "FeatureCollection":
        raise ValueError(f"regions file {path}: expected a GeoJSON FeatureCollection")
    regions = []
    for feature in doc.get("features", []):
        props = feature.get("properties", {})
        geom = feature.get("geometry", {})
        gtype = geom.get("type")
        if gtype == "Polygon":
            polygons = (_coords_to_polygon(geom["coordinates"]),)
        elif gtype == "MultiPolygon":
            polygons = tuple(_coords_to_polygon(c) for c in geom["coordinates"])
        else:
            raise ValueError(f"region {props.get('region_id')}: unsupported geometry {gtype}")
        regions.append(
            Region(
                region_id=str(props["region_id"]),
                name=str(props.get("name", props["region_id"])),
                level=str(props["level"]),
                parent_id=props.get("parent_id"),
                polygons=polygons,
            )
        )
    return RegionIndex(regions)


def write_regions_geojson(regions: Iterable[Region], path: str | Path) -> None:
    features = []
    for r in sorted(regions, key=lambda r: r.region_id):
        coords = _rings_to_coords(r.polygons)
        geometry = (
            {"type": "Polygon", "coordinates": coords[0]}
            if len(coords) == 1
            else {"type": "MultiPolygon", "coordinates": coords}
        )
        features.append(
            {
                "type": "Feature",
                "properties": {
                    "region_id": r.region_id,
                    "name": r.name,
                    "level": r.level,
                    "parent_id": r.parent_id,
                },
                "geometry": geometry,
            }
        )
    doc = {"type": "FeatureCollection", "features": features}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")

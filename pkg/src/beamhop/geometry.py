"""Spherical-Earth geometry: satellite ground track, hexagonal beam grid, sink placement.

All latitudes/longitudes are in degrees, distances in meters.  The Earth is
modeled as a sphere of radius 6371 km; at the footprint scales involved
(tens of km) the spherical treatment keeps pairwise distances accurate to
about a meter, which is far below the beam footprint radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EARTH_RADIUS_M = 6371.0e3
GM_EARTH = 3.986004418e14  # m^3/s^2


@dataclass(frozen=True)
class GeoPoint:
    """A point on the (spherical) Earth surface."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat_deg}")
        if not math.isfinite(self.lon_deg):
            raise ValueError(f"longitude not finite: {self.lon_deg}")


@dataclass(frozen=True)
class OrbitState:
    """Ground-track description of a single LEO satellite.

    The track is a great circle through ``start`` with initial azimuth
    ``track_azimuth_deg`` (0 = due north), traversed at constant
    ``ground_speed_mps`` (speed of the subsatellite point over the surface).
    """

    altitude_m: float
    start: GeoPoint
    ground_speed_mps: float
    track_azimuth_deg: float = 0.0

    def __post_init__(self):
        if self.altitude_m <= 0:
            raise ValueError("altitude must be positive")
        if self.ground_speed_mps < 0:
            raise ValueError("ground speed must be non-negative")


def circular_orbit_ground_speed(altitude_m: float) -> float:
    """Subsatellite-point speed for a circular orbit at the given altitude.

    Orbital speed sqrt(GM/(R+h)) projected to the surface by R/(R+h).
    At 508 km this comes out to about 7050 m/s.
    """
    r = EARTH_RADIUS_M + altitude_m
    return math.sqrt(GM_EARTH / r) * EARTH_RADIUS_M / r


def geo_to_ecef(point: GeoPoint, altitude_m: float = 0.0) -> np.ndarray:
    """Earth-centered cartesian coordinates (meters) of a geographic point."""
    lat = math.radians(point.lat_deg)
    lon = math.radians(point.lon_deg)
    r = EARTH_RADIUS_M + altitude_m
    return np.array([
        r * math.cos(lat) * math.cos(lon),
        r * math.cos(lat) * math.sin(lon),
        r * math.sin(lat),
    ])


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Surface distance in meters between two points (haversine form)."""
    lat1, lat2 = math.radians(a.lat_deg), math.radians(b.lat_deg)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon_deg - a.lon_deg)
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def great_circle_destination(start: GeoPoint, azimuth_deg: float, distance_m: float) -> GeoPoint:
    """Point reached by travelling ``distance_m`` along the great circle
    leaving ``start`` with the given initial azimuth (degrees from north).
    """
    delta = distance_m / EARTH_RADIUS_M
    theta = math.radians(azimuth_deg)
    lat1 = math.radians(start.lat_deg)
    lon1 = math.radians(start.lon_deg)
    sin_lat2 = math.sin(lat1) * math.cos(delta) + math.cos(lat1) * math.sin(delta) * math.cos(theta)
    sin_lat2 = max(-1.0, min(1.0, sin_lat2))
    lat2 = math.asin(sin_lat2)
    lon2 = lon1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(lat1),
        math.cos(delta) - math.sin(lat1) * sin_lat2,
    )
    lon2_deg = math.degrees(lon2)
    # keep longitudes in [-180, 180) so round trips stay comparable
    lon2_deg = (lon2_deg + 180.0) % 360.0 - 180.0
    return GeoPoint(math.degrees(lat2), lon2_deg)


def subsatellite_at(orbit: OrbitState, t: float) -> GeoPoint:
    """Subsatellite point at time t (seconds from the start of the run)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    return great_circle_destination(orbit.start, orbit.track_azimuth_deg,
                                    orbit.ground_speed_mps * t)


def _offset_to_point(center: GeoPoint, east_m: float, north_m: float) -> GeoPoint:
    """Map a local tangent-plane offset at ``center`` onto the sphere.

    Azimuth/distance of the offset are preserved exactly (azimuthal
    equidistant mapping), which keeps radial distances from the center
    exact and distorts distances between off-center points by at most
    ~(extent/R)^2/6, about a meter at 100 km extent.
    """
    d = math.hypot(east_m, north_m)
    if d == 0.0:
        return center
    az = math.degrees(math.atan2(east_m, north_m))
    return great_circle_destination(center, az, d)


# axial-coordinate unit steps for walking a hexagonal ring, in the order
# that produces a counterclockwise walk starting from the eastern corner
_HEX_DIRECTIONS = [(-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)]


@dataclass
class BeamGrid:
    """Fixed hexagonal lattice of beam positions on the ground.

    Positions are indexed in construction order: index 0 is the central
    position, then ring 1 (6 positions), ring 2 (12), and so on.  Adjacent
    centers are sqrt(3) * footprint_radius_m apart so that circular
    footprints of the given radius tile with slight overlap.
    """

    center: GeoPoint
    rings: int
    footprint_radius_m: float
    centers: list[GeoPoint] = field(default_factory=list)

    @property
    def n_positions(self) -> int:
        return len(self.centers)

    @property
    def spacing_m(self) -> float:
        return math.sqrt(3.0) * self.footprint_radius_m


def build_grid(center: GeoPoint, rings: int, footprint_radius_m: float) -> BeamGrid:
    """Build the hexagonal beam-position grid around ``center``.

    Args:
        center: geographic location of the central beam position.
        rings: number of hexagonal rings around the center; the grid holds
            3*rings*(rings+1) + 1 positions (rings=4 gives 61).
        footprint_radius_m: beam footprint radius on the ground.

    Returns:
        BeamGrid with centers in deterministic spiral order.
    """
    if rings < 0:
        raise ValueError("rings must be >= 0")
    if footprint_radius_m <= 0:
        raise ValueError("footprint radius must be positive")
    spacing = math.sqrt(3.0) * footprint_radius_m
    grid = BeamGrid(center=center, rings=rings, footprint_radius_m=footprint_radius_m)
    grid.centers.append(center)
    for ring in range(1, rings + 1):
        # start each ring due east of the center, then walk the six edges
        q, r = ring, 0
        for dq, dr in _HEX_DIRECTIONS:
            for _ in range(ring):
                east = spacing * (q + 0.5 * r)
                north = spacing * (math.sqrt(3.0) / 2.0) * r
                grid.centers.append(_offset_to_point(center, east, north))
                q += dq
                r += dr
    expected = 3 * rings * (rings + 1) + 1
    assert len(grid.centers) == expected
    return grid


@dataclass(frozen=True)
class SinkNode:
    """A ground receiver. ``id`` is unique across the whole system."""

    id: int
    position_index: int
    location: GeoPoint


def sample_sinks(grid: BeamGrid, density_per_m2: float,
                 rng: np.random.Generator) -> list[SinkNode]:
    """Scatter sink nodes over each beam footprint.

    Counts are Poisson with mean density * pi * r^2 per position,
    locations uniform over the footprint disk.  A position that draws zero
    sinks gets a single node at its center so every position can receive.

    Sink ids are assigned sequentially in position order, so a fixed rng
    seed reproduces the same placement exactly.
    """
    if density_per_m2 < 0:
        raise ValueError("density must be non-negative")
    r_fp = grid.footprint_radius_m
    mean_count = density_per_m2 * math.pi * r_fp * r_fp
    sinks: list[SinkNode] = []
    next_id = 0
    for pos_idx, c in enumerate(grid.centers):
        count = int(rng.poisson(mean_count))
        if count == 0:
            sinks.append(SinkNode(next_id, pos_idx, c))
            next_id += 1
            continue
        radii = r_fp * np.sqrt(rng.random(count))
        angles = 2.0 * math.pi * rng.random(count)
        for rho, phi in zip(radii, angles):
            east = rho * math.sin(phi)
            north = rho * math.cos(phi)
            sinks.append(SinkNode(next_id, pos_idx, _offset_to_point(c, east, north)))
            next_id += 1
    return sinks


def off_axis_angle(apex_ecef: np.ndarray, to_a_ecef: np.ndarray,
                   to_b_ecef: np.ndarray) -> float:
    """Angle in degrees at ``apex`` between directions to two targets.

    Uses atan2 of cross/dot, which stays accurate for very small angles
    where acos of a clipped dot product loses digits.
    """
    u = np.asarray(to_a_ecef, dtype=float) - apex_ecef
    v = np.asarray(to_b_ecef, dtype=float) - apex_ecef
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("target coincides with apex; angle undefined")
    cross = np.linalg.norm(np.cross(u, v))
    dot = float(np.dot(u, v))
    return math.degrees(math.atan2(cross, dot))


def slant_range(sat_ecef: np.ndarray, ground_ecef: np.ndarray) -> float:
    """Straight-line distance in meters."""
    return float(np.linalg.norm(np.asarray(sat_ecef, dtype=float) - ground_ecef))

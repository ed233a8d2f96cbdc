"""Scenario geometry: circular-orbit satellite motion, node placement,
distances and angle pairs.

The scenario frame is Earth-centered. The satellite flies a circular orbit in
the x-z plane, starting on the +z axis at t = 0 and moving toward +x. The
ground node (GN) and its companion surface (IRS-1) sit near the +z pole; the
satellite-side surface (IRS-2) rides at a fixed offset from the satellite.

All four arrays share one default orientation basis whose plane is the orbital
x-z plane (local x = global x, local y = global z, normal = -y). Under that
choice every link of the default scenario is exactly in-plane: the elevation
angle phi is zero for all nodes at all times, and the azimuth theta evolves
smoothly with the orbit, which is what the 1-D angle tracking mode assumes.
(An orientation with the array normal along zenith/nadir would put the t = 0
link direction at the phi = +-pi/2 pole where theta is undefined, so it is
deliberately not the default; custom bases can be passed to ArrayGeometry
directly.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .arrays import ArrayGeometry
from .util import db_to_linear, wrap_angle

NODES = ("gn", "irs1", "sat", "irs2")

# Local x axis, local y axis, outward normal (rows). Spans the orbital plane.
IN_PLANE_BASIS = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])


@dataclass(frozen=True)
class AoAPair:
    """Azimuth/elevation angle pair (radians), both wrapped to [-pi, pi)."""

    theta_rad: float
    phi_rad: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_rad", wrap_angle(float(self.theta_rad)))
        object.__setattr__(self, "phi_rad", wrap_angle(float(self.phi_rad)))

    def unit_direction(self) -> NDArray[np.float64]:
        """Unit vector (in the local array basis) toward the source."""
        ct, st = math.cos(self.theta_rad), math.sin(self.theta_rad)
        cp, sp = math.cos(self.phi_rad), math.sin(self.phi_rad)
        return np.array([cp * ct, cp * st, sp])


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """Full description of one simulation scenario.

    Distances are meters, powers are dB/dBm, angles radians. ``None`` for the
    GN / IRS-1 positions selects the default placement 100 m (GN) and 95 m
    with a 5 m sideways offset (IRS-1) above the Earth radius on the +z axis.
    Element counts may be zero on the IRS entries, meaning that surface is
    absent.
    """

    earth_radius_m: float = 6.37e6
    orbit_altitude_m: float = 6.0e5
    orbit_speed_mps: float = 7.5665e3
    gn_position_m: Optional[tuple[float, float, float]] = None
    irs1_position_m: Optional[tuple[float, float, float]] = None
    sat_offset_m: tuple[float, float, float] = (3.0, 0.0, 3.0)
    wavelength_m: float = 2.0
    spacing_m: float = 0.25
    ref_path_gain_db: float = -30.0
    noise_power_dbm: float = -90.0
    tx_power_dbm: float = 30.0
    rician_factor_db: float = 10.0
    rng_seed: int = 0
    n1x: int = 5
    n1y: int = 5
    n2x: int = 5
    n2y: int = 5
    m1x: int = 25
    m1y: int = 20
    m2x: int = 25
    m2y: int = 20
    short_link_model: str = "rank_one"
    consistent_gains: bool = True

    def __post_init__(self) -> None:
        if self.orbit_altitude_m <= 0 or self.earth_radius_m <= 0:
            raise ValueError("earth radius and orbit altitude must be positive")
        if self.orbit_speed_mps <= 0:
            raise ValueError("orbit speed must be positive")
        if self.wavelength_m <= 0 or self.spacing_m <= 0:
            raise ValueError("wavelength and spacing must be positive")
        for name in ("n1x", "n1y", "n2x", "n2y"):
            if getattr(self, name) < 1:
                raise ValueError(f"antenna count {name} must be >= 1")
        for name in ("m1x", "m1y", "m2x", "m2y"):
            if getattr(self, name) < 0:
                raise ValueError(f"element count {name} must be >= 0")
        if self.short_link_model not in ("rank_one", "near_field"):
            raise ValueError("short_link_model must be 'rank_one' or 'near_field'")
        for name in ("gn_position_m", "irs1_position_m", "sat_offset_m"):
            value = getattr(self, name)
            if value is not None and not np.all(np.isfinite(value)):
                raise ValueError(f"{name} has non-finite components")

    # -- derived quantities -------------------------------------------------

    @property
    def orbit_radius_m(self) -> float:
        return self.earth_radius_m + self.orbit_altitude_m

    @property
    def beta_linear(self) -> float:
        return db_to_linear(self.ref_path_gain_db)

    @property
    def kappa_linear(self) -> float:
        if math.isinf(self.rician_factor_db):
            return math.inf
        return db_to_linear(self.rician_factor_db)

    @property
    def noise_var(self) -> float:
        """Noise power normalized by the transmit power (both from dBm)."""
        return db_to_linear(self.noise_power_dbm - self.tx_power_dbm)

    @property
    def n1(self) -> int:
        return self.n1x * self.n1y

    @property
    def n2(self) -> int:
        return self.n2x * self.n2y

    @property
    def m1(self) -> int:
        return self.m1x * self.m1y

    @property
    def m2(self) -> int:
        return self.m2x * self.m2y

    @property
    def gn_position(self) -> NDArray[np.float64]:
        if self.gn_position_m is not None:
            return np.asarray(self.gn_position_m, dtype=float)
        return np.array([0.0, 0.0, self.earth_radius_m + 100.0])

    @property
    def irs1_position(self) -> NDArray[np.float64]:
        if self.irs1_position_m is not None:
            return np.asarray(self.irs1_position_m, dtype=float)
        return np.array([5.0, 0.0, self.earth_radius_m + 95.0])


def satellite_position(cfg: ScenarioConfig, t: float) -> NDArray[np.float64]:
    """Satellite position at time t (seconds) on the circular x-z orbit."""
    if t < 0:
        raise ValueError("time must be non-negative")
    radius = cfg.orbit_radius_m
    angle = cfg.orbit_speed_mps * t / radius
    return np.array([radius * math.sin(angle), 0.0, radius * math.cos(angle)])


def irs2_position(cfg: ScenarioConfig, t: float) -> NDArray[np.float64]:
    """IRS-2 position: rigid offset from the satellite reference point."""
    return satellite_position(cfg, t) + np.asarray(cfg.sat_offset_m, dtype=float)


def node_position(cfg: ScenarioConfig, node: str, t: float) -> NDArray[np.float64]:
    if node == "gn":
        return cfg.gn_position
    if node == "irs1":
        return cfg.irs1_position
    if node == "sat":
        return satellite_position(cfg, t)
    if node == "irs2":
        return irs2_position(cfg, t)
    raise ValueError(f"unknown node {node!r}")


def orbital_period(cfg: ScenarioConfig) -> float:
    """Orbital period 2 pi L_O / V in seconds."""
    return 2.0 * math.pi * cfg.orbit_radius_m / cfg.orbit_speed_mps


def distance(p: NDArray[np.float64], q: NDArray[np.float64]) -> float:
    """Euclidean distance between two points."""
    return float(np.linalg.norm(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)))


def sat_gn_distance(cfg: ScenarioConfig, t: float) -> float:
    return distance(satellite_position(cfg, t), cfg.gn_position)


_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy<2 fallback


def mean_distance(cfg: ScenarioConfig, t0: float, t1: float, rel_tol: float = 1e-6) -> float:
    """Time-averaged satellite-GN distance over [t0, t1].

    Iterated trapezoid rule with interval doubling until the estimate moves by
    less than ``rel_tol`` relatively. The degenerate interval t1 == t0 returns
    the instantaneous distance.
    """
    if t1 < t0:
        raise ValueError("need t1 >= t0")
    if t1 == t0:
        return sat_gn_distance(cfg, t0)
    n = 8
    ts = np.linspace(t0, t1, n + 1)
    ds = np.array([sat_gn_distance(cfg, t) for t in ts])
    estimate = _trapezoid(ds, ts) / (t1 - t0)
    while n < 2**20:
        n *= 2
        ts = np.linspace(t0, t1, n + 1)
        ds = np.array([sat_gn_distance(cfg, t) for t in ts])
        refined = _trapezoid(ds, ts) / (t1 - t0)
        if abs(refined - estimate) <= rel_tol * abs(refined):
            return float(refined)
        estimate = refined
    return float(estimate)


_POLE_TOL = 1e-12


def aoa_pair(observer: ArrayGeometry, source: NDArray[np.float64]) -> AoAPair:
    """Angle pair of ``source`` as seen from ``observer``'s reference point.

    The pair (theta, phi) satisfies: unit direction toward the source in the
    observer basis = (cos phi cos theta, cos phi sin theta, sin phi). At the
    poles (phi = +-pi/2) theta is undefined and returned as 0 by convention.
    """
    direction = np.asarray(source, dtype=float) - observer.origin
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise ValueError("source coincides with the observer reference point")
    local = observer.basis @ (direction / norm)
    phi = math.asin(min(1.0, max(-1.0, local[2])))
    if math.hypot(local[0], local[1]) < _POLE_TOL:
        theta = 0.0
    else:
        theta = math.atan2(local[1], local[0])
    return AoAPair(theta, phi)


_NODE_SIZES = {"gn": ("n1x", "n1y"), "sat": ("n2x", "n2y"), "irs1": ("m1x", "m1y"), "irs2": ("m2x", "m2y")}


def scenario_array(cfg: ScenarioConfig, node: str, t: float = 0.0) -> Optional[ArrayGeometry]:
    """ArrayGeometry of one node at time t, or None for an absent (0-element) IRS."""
    try:
        fx, fy = _NODE_SIZES[node]
    except KeyError:
        raise ValueError(f"unknown node {node!r}") from None
    nx, ny = getattr(cfg, fx), getattr(cfg, fy)
    if nx * ny == 0:
        return None
    return ArrayGeometry(
        nx=nx,
        ny=ny,
        spacing_m=cfg.spacing_m,
        origin=node_position(cfg, node, t),
        basis=IN_PLANE_BASIS.copy(),
    )

"""Deployment scenario: RSU sites, the common sensing area and shared settings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .antenna import ArrayGeometry, build_array
from .budget import LinkBudget, NoiseClutterParams, db_to_linear, dbm_to_watts
from .errors import InputError
from .geometry import CartesianCoord, CsaPlane, RsuSite, tilted_normal

DEFAULT_WAVELENGTH = 0.0125


@dataclass(frozen=True)
class CsaRegion:
    """Rectangular common sensing area on a possibly tilted plane.

    ``width`` runs along ``axes[0]`` (the plane direction closest to +x)
    and ``height`` along ``axes[1]``. The plane normal leans by ``tilt``
    toward the horizontal azimuth ``tilt_azimuth``.
    """

    center: CartesianCoord
    width: float
    height: float
    tilt: float = 0.0
    tilt_azimuth: float = 0.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InputError("CSA side lengths must be positive")
        if not 0 <= self.tilt < math.pi / 2:
            raise InputError("CSA tilt must lie in [0, 90) degrees")

    @property
    def normal(self) -> np.ndarray:
        return tilted_normal(self.tilt, self.tilt_azimuth)

    @property
    def plane(self) -> CsaPlane:
        return CsaPlane.tilted(self.center.as_array(), self.tilt, self.tilt_azimuth)

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.normal
        e1 = np.array([1.0, 0.0, 0.0]) - n[0] * n
        e1 /= np.linalg.norm(e1)
        return e1, np.cross(n, e1)

    def to_plane(self, points) -> np.ndarray:
        """In-plane coordinates ``(u, v)`` of 3-D points relative to the centre."""
        p = np.asarray(points, dtype=float).reshape(-1, 3) - self.center.as_array()
        e1, e2 = self.axes
        return np.column_stack([p @ e1, p @ e2])

    def from_plane(self, uv) -> np.ndarray:
        uv = np.asarray(uv, dtype=float).reshape(-1, 2)
        e1, e2 = self.axes
        return self.center.as_array() + uv[:, :1] * e1 + uv[:, 1:] * e2

    def in_plane_angle(self, azimuth: float) -> float:
        """Angle in ``(u, v)`` of the horizontal direction ``azimuth`` projected onto the plane."""
        d = np.array([math.cos(azimuth), math.sin(azimuth), 0.0])
        e1, e2 = self.axes
        return math.atan2(d @ e2, d @ e1)

    def contains(self, point, tol: float = 1e-6) -> bool:
        p = np.asarray(point, dtype=float)
        if abs((p - self.center.as_array()) @ self.normal) > tol:
            return False
        u, v = self.to_plane(p)[0]
        return abs(u) <= self.width / 2 + tol and abs(v) <= self.height / 2 + tol

    def vertices(self) -> np.ndarray:
        hw, hh = self.width / 2, self.height / 2
        return self.from_plane([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)])


@dataclass(frozen=True)
class Scenario:
    """RSUs cooperating on one CSA.

    ``link`` is a template: ``g_r`` and ``range_r_t`` are replaced per RSU
    by the planner, ``unit_radius`` by the requested sensing-unit radius.
    """

    rsus: tuple[RsuSite, ...]
    csa: CsaRegion
    target: CartesianCoord
    array: ArrayGeometry
    link: LinkBudget
    noise: NoiseClutterParams = field(default_factory=lambda: NoiseClutterParams.from_dbm(-94.0, -110.0))

    def __post_init__(self):
        object.__setattr__(self, "rsus", tuple(self.rsus))
        if not self.rsus:
            raise InputError("a scenario needs at least one RSU")
        if not self.csa.contains(self.target.as_array()):
            raise InputError("target must lie inside the CSA")

    @property
    def wavelength(self) -> float:
        return self.array.wavelength


def default_link(wavelength: float = DEFAULT_WAVELENGTH) -> LinkBudget:
    """Link template with the reference values (20 dBm EIRP, 54.2 dB processing gain, rho 0.1, r_s 4 m)."""
    return LinkBudget(
        pt_gt=float(dbm_to_watts(20.0)),
        g_p=float(db_to_linear(54.2)),
        g_r=1.0,
        wavelength=wavelength,
        unit_radius=4.0,
        echo_prob=0.1,
        range_r_t=1.0,
    )


def four_rsu_scenario(array: ArrayGeometry | None = None, height: float = 10.0) -> Scenario:
    """Four RSUs along y = 0 at x = -150, -50, 50, 150 m watching a 20 m square centred at (0, 100)."""
    rsus = tuple(RsuSite(CartesianCoord(x, 0.0, height)) for x in (-150.0, -50.0, 50.0, 150.0))
    csa = CsaRegion(CartesianCoord(0.0, 100.0, 0.0), 20.0, 20.0)
    if array is None:
        array = build_array(33, 5, wavelength=DEFAULT_WAVELENGTH)
    return Scenario(rsus, csa, csa.center, array, default_link(array.wavelength))

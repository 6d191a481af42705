"""Coordinates, CSA planes and sensing-unit ellipses.

Angles are radians throughout. ``theta`` in :class:`SphericalCoord` is the
polar angle from +z, while the pointing angle ``theta_r`` of a
:class:`BeamSpec` is measured from nadir (the beam looks down).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolated, DegenerateGeometry, InputError, NoIntersection, ZeroVector

TWO_PI = 2.0 * math.pi


def _finite(*values):
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class SphericalCoord:
    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not _finite(self.r, self.theta, self.phi):
            raise InputError("spherical coordinate must be finite")
        if self.r < 0:
            raise InputError(f"r must be non-negative, got {self.r}")
        if not 0.0 <= self.theta <= math.pi:
            raise InputError(f"theta must lie in [0, pi], got {self.theta}")
        phi = math.fmod(self.phi, TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        object.__setattr__(self, "phi", phi)


@dataclass(frozen=True)
class CartesianCoord:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not _finite(self.x, self.y, self.z):
            raise InputError("cartesian coordinate must be finite")

    @classmethod
    def from_array(cls, v) -> "CartesianCoord":
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class CsaPlane:
    """Plane ``a*x + b*y + c*z + e = 0`` holding the common sensing area.

    ``tilt_theta_t`` is informational; the geometry is fully described by
    the coefficients. Use :meth:`horizontal` or :meth:`tilted` to build one.
    """

    a: float
    b: float
    c: float
    e: float
    tilt_theta_t: float = 0.0

    def __post_init__(self):
        if not _finite(self.a, self.b, self.c, self.e, self.tilt_theta_t):
            raise InputError("plane coefficients must be finite")
        if self.a == 0 and self.b == 0 and self.c == 0:
            raise DegenerateGeometry("plane normal (a, b, c) is zero")

    @classmethod
    def horizontal(cls, z: float = 0.0) -> "CsaPlane":
        return cls(0.0, 0.0, 1.0, -z, 0.0)

    @classmethod
    def tilted(cls, point, tilt: float, toward_azimuth: float) -> "CsaPlane":
        """Plane through ``point`` whose normal leans by ``tilt`` toward ``toward_azimuth``."""
        n = tilted_normal(tilt, toward_azimuth)
        p = np.asarray(point, dtype=float)
        return cls(float(n[0]), float(n[1]), float(n[2]), float(-n @ p), float(tilt))

    @property
    def normal(self) -> np.ndarray:
        n = np.array([self.a, self.b, self.c])
        return n / np.linalg.norm(n)

    def offset(self, point) -> float:
        """Signed distance of ``point`` from the plane along :attr:`normal`."""
        n = np.array([self.a, self.b, self.c])
        return float((n @ np.asarray(point, dtype=float) + self.e) / np.linalg.norm(n))


def tilted_normal(tilt: float, toward_azimuth: float) -> np.ndarray:
    s = math.sin(tilt)
    return np.array([s * math.cos(toward_azimuth), s * math.sin(toward_azimuth), math.cos(tilt)])


@dataclass(frozen=True)
class BeamSpec:
    """Pointing direction (nadir angle, azimuth) and full beamwidths."""

    theta_r: float
    phi_r: float
    delta_theta: float
    delta_phi: float

    def __post_init__(self):
        if not _finite(self.theta_r, self.phi_r, self.delta_theta, self.delta_phi):
            raise InputError("beam parameters must be finite")
        if not 0.0 < self.delta_theta < math.pi:
            raise InputError(f"delta_theta must lie in (0, pi), got {self.delta_theta}")
        if not 0.0 < self.delta_phi < math.pi:
            raise InputError(f"delta_phi must lie in (0, pi), got {self.delta_phi}")
        if not 0.0 <= self.theta_r < math.pi / 2:
            raise InputError(f"theta_r must lie in [0, pi/2), got {self.theta_r}")

    @classmethod
    def from_degrees(cls, theta_r, phi_r, delta_theta, delta_phi) -> "BeamSpec":
        return cls(*(math.radians(v) for v in (theta_r, phi_r, delta_theta, delta_phi)))

    @property
    def axis(self) -> np.ndarray:
        """Unit vector along the beam, pointing away from the array."""
        st = math.sin(self.theta_r)
        return np.array([st * math.cos(self.phi_r), st * math.sin(self.phi_r), -math.cos(self.theta_r)])


@dataclass(frozen=True)
class SensingUnit:
    """Beam footprint on the CSA.

    ``r_major`` is the semiaxis along the ground-projected beam azimuth
    ``orientation`` (the range direction) and ``r_minor`` the cross-range
    semiaxis. Off-circular units may have ``r_major < r_minor``.
    """

    center: CartesianCoord
    r_major: float
    r_minor: float
    orientation: float

    def __post_init__(self):
        if not (self.r_major > 0 and self.r_minor > 0):
            raise InputError("sensing-unit semiaxes must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.r_major * self.r_minor


@dataclass(frozen=True)
class RsuSite:
    position: CartesianCoord

    def __post_init__(self):
        if not self.position.z > 0:
            raise InputError(f"RSU height must be positive, got {self.position.z}")

    @property
    def height_h(self) -> float:
        return self.position.z


class Detection(enum.Enum):
    BOTH = "both"
    ONLY1 = "only1"
    ONLY2 = "only2"


def spherical_to_cartesian(s: SphericalCoord) -> CartesianCoord:
    st = math.sin(s.theta)
    return CartesianCoord(s.r * st * math.cos(s.phi), s.r * st * math.sin(s.phi), s.r * math.cos(s.theta))


def cartesian_to_spherical(c: CartesianCoord) -> SphericalCoord:
    r = math.sqrt(c.x * c.x + c.y * c.y + c.z * c.z)
    if r == 0.0:
        raise ZeroVector("cannot convert the origin to spherical coordinates")
    # atan2 stays accurate near the poles where acos(z/r) loses digits
    theta = math.atan2(math.hypot(c.x, c.y), c.z)
    phi = math.atan2(c.y, c.x)
    return SphericalCoord(r, theta, phi)


def pointing_to(site: RsuSite, point) -> tuple[float, float, float]:
    """Range, nadir angle and azimuth of ``point`` seen from ``site``."""
    d = np.asarray(point, dtype=float) - site.position.as_array()
    s = cartesian_to_spherical(CartesianCoord.from_array(d))
    return s.r, math.pi - s.theta, s.phi


def incidence_cosine(beam: BeamSpec, site: RsuSite, plane: CsaPlane) -> float:
    """Cosine of the angle between the beam axis and the plane normal.

    Zero or negative when the beam runs parallel to or away from the plane.
    """
    side = plane.offset(site.position.as_array())
    if side == 0:
        raise NoIntersection("RSU lies on the CSA plane")
    n = plane.normal if side > 0 else -plane.normal
    return -float(beam.axis @ n)


def sensing_unit(beam: BeamSpec, range_r_t: float, site: RsuSite, plane: CsaPlane) -> SensingUnit:
    """Elliptical footprint of ``beam`` on ``plane`` at slant range ``range_r_t``.

    The beam is treated as a cylinder of the width it has at the target
    range. On a horizontal plane the along-range semiaxis is stretched by
    ``1/cos(theta_r)``; on a tilted plane the stretch uses the actual angle
    of incidence, which is ``theta_r - theta_t`` when the tilt faces the RSU.

    Raises
    ------
    NoIntersection
        If the beam runs parallel to or away from the plane.
    """
    if not range_r_t > 0:
        raise InputError(f"range_r_t must be positive, got {range_r_t}")
    cos_inc = incidence_cosine(beam, site, plane)
    if cos_inc <= 1e-12:
        raise NoIntersection("beam axis does not reach the CSA plane")
    p0 = site.position.as_array()
    t = abs(plane.offset(p0)) / cos_inc
    center = CartesianCoord.from_array(p0 + t * beam.axis)
    r_major = range_r_t * math.tan(beam.delta_theta / 2) / cos_inc
    r_minor = range_r_t * math.tan(beam.delta_phi / 2)
    return SensingUnit(center, r_major, r_minor, beam.phi_r)


def solve_pitch_width(theta_r: float, delta_phi: float, tilt_theta_t: float = 0.0) -> float:
    """Pitch beamwidth that makes the footprint circular.

    Returns ``2*atan(cos(theta_r - tilt_theta_t) * tan(delta_phi/2))``.
    """
    c = math.cos(theta_r - tilt_theta_t)
    if c <= 0:
        raise DegenerateGeometry("beam is parallel to or facing away from the CSA")
    if not 0 < delta_phi < math.pi:
        raise InputError(f"delta_phi must lie in (0, pi), got {delta_phi}")
    return 2.0 * math.atan(c * math.tan(delta_phi / 2))


def equalize_azimuth_width(range_r_i: float, range_r_p: float, delta_phi_p: float) -> float:
    """Azimuth width at range ``range_r_i`` giving the same cross-range size as the reference."""
    if not (range_r_i > 0 and range_r_p > 0 and delta_phi_p > 0):
        raise InputError("ranges and width must be positive")
    return 2.0 * math.atan(range_r_p * math.tan(delta_phi_p / 2) / range_r_i)


def angular_resolution_cases(unit1: SensingUnit, unit2: SensingUnit, detection: Detection):
    """Effective resolution cell of a two-RSU pair before and after registration.

    Returns ``(before, after)``, each an ``(r_a, r_b)`` pair. ``before``
    depends on which RSUs see the target; ``after`` is the common circle
    whose radius is the largest semiaxis.
    """
    ra1, rb1 = unit1.r_major, unit1.r_minor
    ra2, rb2 = unit2.r_major, unit2.r_minor
    if rb1 < ra2 or rb2 < ra1:
        raise AssumptionViolated("requires r_b1 >= r_a2 and r_b2 >= r_a1")
    detection = Detection(detection)
    if detection is Detection.BOTH:
        before = (min(ra1, rb2), min(ra2, rb1))
    elif detection is Detection.ONLY1:
        before = (abs(rb1 - ra2), abs(rb2 - ra1))
    else:
        before = (abs(rb2 - ra1), abs(rb1 - ra2))
    r = max(ra1, rb1, ra2, rb2)
    return before, (r, r)

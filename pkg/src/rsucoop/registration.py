"""Beam registration across RSUs, footprint overlap and CSA power maps."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .antenna import array_response
from .beamforming import BabaConfig, baba
from .budget import LinkBudget, echo_amplitude, receive_gain
from .errors import InputError, NoVisibility
from .geometry import (
    BeamSpec,
    SensingUnit,
    equalize_azimuth_width,
    incidence_cosine,
    pointing_to,
    sensing_unit,
    solve_pitch_width,
)
from .scenario import CsaRegion, Scenario


class PatternMode(enum.Enum):
    IDEAL = "ideal"
    REALIZED = "realized"


@dataclass(frozen=True)
class PlannedBeam:
    rsu: int
    range_r_t: float
    beam: BeamSpec


@dataclass(frozen=True)
class BeamPlan:
    """Per-RSU beams; ``reference`` is the RSU index whose beam sets the unit size."""

    beams: tuple[PlannedBeam, ...]
    reference: int

    @property
    def reference_beam(self) -> PlannedBeam:
        return next(b for b in self.beams if b.rsu == self.reference)

    @property
    def unit_radius(self) -> float:
        ref = self.reference_beam
        return ref.range_r_t * math.tan(ref.beam.delta_phi / 2)

    def units(self, scenario: Scenario) -> list[SensingUnit]:
        plane = scenario.csa.plane
        return [sensing_unit(b.beam, b.range_r_t, scenario.rsus[b.rsu], plane) for b in self.beams]

    def to_dict(self) -> dict:
        return {
            "reference": self.reference,
            "unit_radius_m": self.unit_radius,
            "beams": [
                {
                    "rsu": b.rsu,
                    "range_m": b.range_r_t,
                    "theta_deg": math.degrees(b.beam.theta_r),
                    "phi_deg": math.degrees(b.beam.phi_r),
                    "delta_theta_deg": math.degrees(b.beam.delta_theta),
                    "delta_phi_deg": math.degrees(b.beam.delta_phi),
                }
                for b in self.beams
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BeamPlan":
        beams = tuple(
            PlannedBeam(
                int(b["rsu"]),
                float(b["range_m"]),
                BeamSpec.from_degrees(b["theta_deg"], b["phi_deg"], b["delta_theta_deg"], b["delta_phi_deg"]),
            )
            for b in d["beams"]
        )
        return cls(beams, int(d["reference"]))


def _look(scenario: Scenario):
    """Range, nadir angle, azimuth and incidence angle from every RSU to the target."""
    plane = scenario.csa.plane
    out = []
    for i, site in enumerate(scenario.rsus):
        r, theta, phi = pointing_to(site, scenario.target.as_array())
        if not theta < math.pi / 2:
            raise NoVisibility(f"RSU {i} does not look down on the target")
        probe = BeamSpec(theta, phi, 1e-3, 1e-3)
        c = incidence_cosine(probe, site, plane)
        if not c > 1e-9:
            raise NoVisibility(f"RSU {i} sees the CSA edge-on or from behind")
        out.append((r, theta, phi, math.acos(min(1.0, c))))
    return out


def reference_index(ranges) -> int:
    """Middle element of the RSUs sorted by range (index ceil(k/2), ties to the lower RSU)."""
    order = sorted(range(len(ranges)), key=lambda i: (ranges[i], i))
    return order[math.ceil(len(order) / 2) - 1]


def plan_absra(scenario: Scenario, base_delta_phi: float) -> BeamPlan:
    """Choose per-RSU beamwidths so every footprint is the same circle.

    The reference RSU keeps azimuth width ``base_delta_phi``. Every other
    RSU scales its azimuth width to the same cross-range size at its own
    range, then each pitch width is solved to make the footprint circular.
    """
    if not 0 < base_delta_phi < math.pi:
        raise InputError("base_delta_phi must lie in (0, pi)")
    look = _look(scenario)
    ranges = [v[0] for v in look]
    ref = reference_index(ranges)
    r_p = ranges[ref]
    beams = []
    for i, (r, theta, phi, inc) in enumerate(look):
        d_phi = equalize_azimuth_width(r, r_p, base_delta_phi)
        d_theta = solve_pitch_width(theta, d_phi, theta - inc)
        beams.append(PlannedBeam(i, r, BeamSpec(theta, phi, d_theta, d_phi)))
    return BeamPlan(tuple(beams), ref)


def plan_for_radius(scenario: Scenario, unit_radius: float) -> BeamPlan:
    """Registered plan whose common footprint has radius ``unit_radius``."""
    if not unit_radius > 0:
        raise InputError("unit_radius must be positive")
    ranges = [v[0] for v in _look(scenario)]
    r_p = ranges[reference_index(ranges)]
    return plan_absra(scenario, 2 * math.atan(unit_radius / r_p))


def fixed_width_plan(scenario: Scenario, delta_theta: float, delta_phi: float) -> BeamPlan:
    """Unregistered plan: every RSU uses the same widths."""
    look = _look(scenario)
    beams = tuple(PlannedBeam(i, r, BeamSpec(t, p, delta_theta, delta_phi)) for i, (r, t, p, _) in enumerate(look))
    return BeamPlan(beams, reference_index([v[0] for v in look]))


# overlap --------------------------------------------------------------------

@dataclass(frozen=True)
class OverlapResult:
    areas: tuple[float, ...]
    common_area: float
    p_dfc: float

    def to_dict(self) -> dict:
        return {"areas": list(self.areas), "common_area": self.common_area, "p_dfc": self.p_dfc}

    @classmethod
    def from_dict(cls, d: dict) -> "OverlapResult":
        return cls(tuple(float(a) for a in d["areas"]), float(d["common_area"]), float(d["p_dfc"]))


def _ellipse_mask(u, v, cu, cv, a, b, angle):
    c, s = math.cos(angle), math.sin(angle)
    du, dv = u - cu, v - cv
    along = du * c + dv * s
    across = -du * s + dv * c
    return (along / a) ** 2 + (across / b) ** 2 <= 1.0


def _half_extent(a, b, angle):
    c, s = math.cos(angle), math.sin(angle)
    return math.sqrt((a * c) ** 2 + (b * s) ** 2), math.sqrt((a * s) ** 2 + (b * c) ** 2)


def unit_overlap(units, csa: CsaRegion | None = None, cell: float | None = None, resolution: int = 400) -> OverlapResult:
    """Areas, common area and matching degree ``N * S_o / sum(S_i)``.

    Unit areas are exact ellipse areas; the common area is rasterized on
    the CSA plane (the horizontal plane when ``csa`` is omitted) with cells
    counted by their centres. The raster covers the intersection of the
    units' bounding boxes. With ``cell=None`` it is refined once around the
    cells actually shared, using ``resolution`` cells per side each pass, so
    the relative error stays small even for thin lenses.
    """
    units = list(units)
    if not units:
        raise InputError("at least one sensing unit is required")
    if cell is not None and not cell > 0:
        raise InputError("cell must be positive")
    if resolution < 2:
        raise InputError("resolution must be at least 2")
    if csa is None:
        centers = np.array([[u.center.x, u.center.y] for u in units])
        angles = [u.orientation for u in units]
    else:
        centers = csa.to_plane([u.center.as_array() for u in units])
        angles = [csa.in_plane_angle(u.orientation) for u in units]
    areas = tuple(u.area for u in units)
    lo = np.full(2, -np.inf)
    hi = np.full(2, np.inf)
    for unit, c, ang in zip(units, centers, angles):
        h = np.array(_half_extent(unit.r_major, unit.r_minor, ang))
        lo = np.maximum(lo, c - h)
        hi = np.minimum(hi, c + h)

    def count(lo, hi, nu, nv):
        du, dv = (hi[0] - lo[0]) / nu, (hi[1] - lo[1]) / nv
        U, V = np.meshgrid(lo[0] + (np.arange(nu) + 0.5) * du, lo[1] + (np.arange(nv) + 0.5) * dv)
        mask = np.ones(U.shape, dtype=bool)
        for unit, (cu, cv), ang in zip(units, centers, angles):
            mask &= _ellipse_mask(U, V, cu, cv, unit.r_major, unit.r_minor, ang)
        return mask, du, dv

    if np.any(hi <= lo):
        common = 0.0
    elif cell is not None:
        nu, nv = (max(1, int(math.ceil(x / cell))) for x in hi - lo)
        mid = (lo + hi) / 2
        half = np.array([nu, nv]) * cell / 2
        mask, du, dv = count(mid - half, mid + half, nu, nv)
        common = float(np.count_nonzero(mask)) * du * dv
    else:
        mask, du, dv = count(lo, hi, resolution, resolution)
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        if rows.size:
            # one spare cell on each side catches boundary cells the coarse pass missed
            lo2 = np.maximum(lo, [lo[0] + (cols[0] - 1) * du, lo[1] + (rows[0] - 1) * dv])
            hi2 = np.minimum(hi, [lo[0] + (cols[-1] + 2) * du, lo[1] + (rows[-1] + 2) * dv])
            mask, du, dv = count(lo2, hi2, resolution, resolution)
        common = float(np.count_nonzero(mask)) * du * dv
    common = min(common, min(areas))
    p_dfc = min(1.0, len(units) * common / sum(areas))
    return OverlapResult(areas, common, p_dfc)


# power maps -------------------------------------------------------------------

@dataclass(frozen=True)
class PowerMap:
    """Accumulated echo power on CSA raster cells, flattened row-major (v outer, u inner)."""

    x: np.ndarray
    y: np.ndarray
    power: np.ndarray
    shape: tuple[int, int] | None = None
    cell: float | None = None

    def grid(self) -> np.ndarray:
        if self.shape is None:
            raise InputError("raster shape unknown")
        return self.power.reshape(self.shape)


def csa_raster(csa: CsaRegion, cell: float):
    """Cell-centre coordinates covering the CSA: ``(uv, xyz, shape)``."""
    if not cell > 0:
        raise InputError("cell must be positive")
    nu = max(1, int(round(csa.width / cell)))
    nv = max(1, int(round(csa.height / cell)))
    u = (np.arange(nu) + 0.5) * (csa.width / nu) - csa.width / 2
    v = (np.arange(nv) + 0.5) * (csa.height / nv) - csa.height / 2
    U, V = np.meshgrid(u, v)
    uv = np.column_stack([U.ravel(), V.ravel()])
    return uv, csa.from_plane(uv), (nv, nu), (csa.width / nu) * (csa.height / nv)


def echo_powers(scenario: Scenario, plan: BeamPlan) -> np.ndarray:
    """Per-RSU echo power ``A_i**2`` with receive gain from the planned widths."""
    link = scenario.link
    out = []
    for b in plan.beams:
        g_r = receive_gain(math.degrees(b.beam.delta_theta), math.degrees(b.beam.delta_phi))
        lb = LinkBudget(link.pt_gt, link.g_p, g_r, link.wavelength, plan.unit_radius, link.echo_prob, b.range_r_t)
        out.append(echo_amplitude(lb) ** 2)
    return np.array(out)


def realized_gains(scenario: Scenario, plan: BeamPlan, xyz, cfg: BabaConfig = BabaConfig()) -> np.ndarray:
    """Per-RSU synthesized power gain at each point, normalized to its maximum over the points.

    Shape ``(n_rsu, n_points)``.
    """
    xyz = np.asarray(xyz, dtype=float)
    gains = []
    for b in plan.beams:
        w = baba(b.beam, scenario.array, None, cfg)
        d = xyz - scenario.rsus[b.rsu].position.as_array()
        rng = np.linalg.norm(d, axis=1)
        nadir = np.arccos(np.clip(-d[:, 2] / rng, -1.0, 1.0))
        phi = np.arctan2(d[:, 1], d[:, 0])
        g = np.abs(array_response(w, scenario.array, np.column_stack([phi, nadir]))) ** 2
        gains.append(g / g.max())
    return np.array(gains)


def ideal_masks(scenario: Scenario, plan: BeamPlan, uv) -> np.ndarray:
    csa = scenario.csa
    units = plan.units(scenario)
    centers = csa.to_plane([u.center.as_array() for u in units])
    return np.array(
        [
            _ellipse_mask(uv[:, 0], uv[:, 1], c[0], c[1], u.r_major, u.r_minor, csa.in_plane_angle(u.orientation))
            for u, c in zip(units, centers)
        ]
    )


def power_map(
    scenario: Scenario,
    plan: BeamPlan,
    mode: PatternMode = PatternMode.IDEAL,
    cell: float = 0.05,
    cfg: BabaConfig = BabaConfig(),
) -> PowerMap:
    """Noncoherent sum of per-RSU echo power over the CSA raster.

    ``IDEAL`` paints each elliptical footprint with its RSU's echo power;
    ``REALIZED`` weights the echo power by the synthesized beam gain at
    every cell.
    """
    mode = PatternMode(mode)
    uv, xyz, shape, _ = csa_raster(scenario.csa, cell)
    p = echo_powers(scenario, plan)
    if mode is PatternMode.IDEAL:
        weight = ideal_masks(scenario, plan, uv).astype(float)
    else:
        weight = realized_gains(scenario, plan, xyz, cfg)
    total = p @ weight
    return PowerMap(xyz[:, 0].copy(), xyz[:, 1].copy(), total, shape, cell)


def p_dfc_realized(
    scenario: Scenario,
    plan: BeamPlan,
    mode: PatternMode = PatternMode.REALIZED,
    cell: float = 0.05,
    cfg: BabaConfig = BabaConfig(),
) -> float:
    """Matching degree of the footprints actually produced on the CSA.

    ``IDEAL`` uses the planned ellipses; ``REALIZED`` takes each beam's
    half-power region on the CSA raster as its footprint.
    """
    mode = PatternMode(mode)
    if mode is PatternMode.IDEAL:
        return unit_overlap(plan.units(scenario), scenario.csa, cell).p_dfc
    _, xyz, _, _ = csa_raster(scenario.csa, cell)
    masks = realized_gains(scenario, plan, xyz, cfg) >= 0.5
    return footprint_p_dfc(masks)


def footprint_p_dfc(masks) -> float:
    """``N * |intersection| / sum |F_i|`` for boolean footprint rasters."""
    masks = np.asarray(masks, dtype=bool)
    sizes = masks.reshape(len(masks), -1).sum(axis=1)
    if sizes.sum() == 0:
        return 0.0
    common = np.logical_and.reduce(masks, axis=0).sum()
    return float(len(masks) * common / sizes.sum())

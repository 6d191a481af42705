"""YAML run configuration.

Angles are given in degrees, powers in dBm or dB and distances in meters.
Every mapping is closed: unknown keys are rejected with the offending path.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .antenna import ArrayGeometry
from .beamforming import BabaConfig
from .budget import LinkBudget, NoiseClutterParams, db_to_linear, dbm_to_watts
from .errors import InputError, ParseError, ValidationError
from .geometry import BeamSpec, CartesianCoord, RsuSite
from .scenario import DEFAULT_WAVELENGTH, CsaRegion, Scenario

SPEED_OF_LIGHT = 299_792_458.0


class _StrictLoader(yaml.SafeLoader):
    pass


def _mapping_no_duplicates(loader, node, deep=False):
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            mark = key_node.start_mark
            raise ParseError(f"duplicate key {key!r}", mark.line + 1, mark.column + 1)
        seen.add(key)
    return loader.construct_mapping(node, deep=True)


_StrictLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _mapping_no_duplicates)


def parse_yaml(text: str):
    try:
        return yaml.load(text, Loader=_StrictLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ParseError(exc.problem or str(exc), line, col) from exc
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from exc


class _Section:
    """Typed access to one mapping; ``done()`` rejects keys nobody asked for."""

    def __init__(self, data, path: str):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ValidationError(path, "expected a mapping")
        self.data = data
        self.path = path
        self.used: set[str] = set()

    def _field(self, key):
        return f"{self.path}.{key}" if self.path else key

    def raw(self, key, default=None):
        self.used.add(key)
        return self.data.get(key, default)

    def has(self, key) -> bool:
        return key in self.data

    def number(self, key, default=None, *, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if default is None:
                raise ValidationError(self._field(key), "is required")
            return default
        return _check_number(self.data[key], self._field(key), lo, hi, lo_open, hi_open, integer)

    def numbers(self, key, default=None, *, length=None, nonempty=True, **bounds):
        self.used.add(key)
        value = self.data.get(key, default)
        if value is None:
            raise ValidationError(self._field(key), "is required")
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, (list, tuple)):
            raise ValidationError(self._field(key), "expected a list of numbers")
        if length is not None and len(value) != length:
            raise ValidationError(self._field(key), f"expected {length} values, got {len(value)}")
        if nonempty and not value:
            raise ValidationError(self._field(key), "must not be empty")
        return [_check_number(v, f"{self._field(key)}[{i}]", integer=bounds.get("integer", False),
                              lo=bounds.get("lo"), hi=bounds.get("hi"),
                              lo_open=bounds.get("lo_open", False), hi_open=bounds.get("hi_open", False))
                for i, v in enumerate(value)]

    def choice(self, key, options, default):
        self.used.add(key)
        value = self.data.get(key, default)
        if value not in options:
            raise ValidationError(self._field(key), f"must be one of {sorted(options)}, got {value!r}")
        return value

    def section(self, key) -> "_Section":
        self.used.add(key)
        return _Section(self.data.get(key), self._field(key))

    def items(self, key):
        self.used.add(key)
        value = self.data.get(key)
        if value is None:
            return []
        if not isinstance(value, list):
            raise ValidationError(self._field(key), "expected a list")
        return [(v, f"{self._field(key)}[{i}]") for i, v in enumerate(value)]

    def done(self):
        for key in self.data:
            if key not in self.used:
                raise ValidationError(self._field(str(key)), "unknown key")
        return self


def _check_number(value, path, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(path, "must be finite")
    if integer and int(value) != value:
        raise ValidationError(path, "must be an integer")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        raise ValidationError(path, f"must be {'>' if lo_open else '>='} {lo}, got {value}")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        raise ValidationError(path, f"must be {'<' if hi_open else '<='} {hi}, got {value}")
    return int(value) if integer else float(value)


# command options ------------------------------------------------------------------

@dataclass(frozen=True)
class BeampatternOptions:
    beams: tuple[BeamSpec, ...] = (BeamSpec.from_degrees(45.0, 60.0, 6.0, 12.0),)
    sweep_direction: BeamSpec | None = None
    sweep_widths_deg: tuple[float, ...] = ()
    sweep_aspect: float = 2.0
    margin: float = 1.5
    cells_per_width: int = 40
    hbf_rf_chains: tuple[int, ...] = ()


@dataclass(frozen=True)
class RegisterOptions:
    unit_radii_m: tuple[float, ...] = (4.0, 5.0)
    sweep_radii_m: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
    modes: tuple[str, ...] = ("ideal",)
    cell_m: float = 0.05
    realized_cell_m: float = 0.1


@dataclass(frozen=True)
class RocOptions:
    p_i_dbm: tuple[float, ...] = (-110.0, -70.0)
    unit_radius_m: float = 4.0
    p_dfc: float = 1.0
    trials: int = 1_000_000
    partitions: int = 1
    points: int = 200
    methods: tuple[str, ...] = ("numeric", "case1", "case2", "monte_carlo")


@dataclass(frozen=True)
class SweepOptions:
    echo_probs: tuple[float, ...] = (0.05, 0.1)
    p_f: float = 0.1
    radii_m: tuple[float, ...] = tuple(0.5 * k for k in range(2, 21))
    p_dfc: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    baba: BabaConfig = field(default_factory=BabaConfig)
    interferers: tuple = ()
    noise_floor: float = 1.0
    beampattern: BeampatternOptions = field(default_factory=BeampatternOptions)
    register: RegisterOptions = field(default_factory=RegisterOptions)
    roc: RocOptions = field(default_factory=RocOptions)
    sweep: SweepOptions = field(default_factory=SweepOptions)
    config_hash: str = ""
    source: str = ""


# parsing ---------------------------------------------------------------------

def _point(value, path, dims=(2, 3)):
    if not isinstance(value, (list, tuple)) or len(value) not in dims:
        raise ValidationError(path, f"expected a list of {' or '.join(map(str, dims))} numbers")
    vals = [_check_number(v, f"{path}[{i}]") for i, v in enumerate(value)]
    return vals + [0.0] * (3 - len(vals))


def _scenario(root: _Section) -> Scenario:
    if root.has("wavelength_m") and root.has("carrier_ghz"):
        raise ValidationError("carrier_ghz", "give either wavelength_m or carrier_ghz, not both")
    if root.has("carrier_ghz"):
        wavelength = SPEED_OF_LIGHT / (root.number("carrier_ghz", lo=0, lo_open=True) * 1e9)
    else:
        wavelength = root.number("wavelength_m", DEFAULT_WAVELENGTH, lo=0, lo_open=True)

    rsus = []
    entries = root.items("rsus")
    if not entries:
        raise ValidationError("rsus", "at least one RSU is required")
    for item, path in entries:
        s = _Section(item, path)
        x = s.number("x")
        y = s.number("y")
        h = s.number("height_h", 10.0)
        s.done()
        if not h > 0:
            raise ValidationError(f"{path}.height_h", f"must be > 0, got {h}")
        rsus.append(RsuSite(CartesianCoord(x, y, h)))

    c = root.section("csa")
    center = _point(c.raw("center", [0.0, 100.0]), f"{c.path}.center")
    size = c.numbers("size_m", [20.0, 20.0], lo=0, lo_open=True)
    if len(size) == 1:
        size = size * 2
    if len(size) != 2:
        raise ValidationError(f"{c.path}.size_m", "expected one or two side lengths")
    tilt = c.number("tilt_deg", 0.0, lo=0, hi=90, hi_open=True)
    tilt_az = c.number("tilt_azimuth_deg", 0.0)
    c.done()
    csa = CsaRegion(CartesianCoord(*center), size[0], size[1], math.radians(tilt), math.radians(tilt_az))

    if root.has("target"):
        tv = _point(root.raw("target"), "target")
        if len(root.data["target"]) == 2:
            # height on the CSA plane below (x, y)
            n = csa.normal
            p0 = csa.center.as_array()
            tv[2] = p0[2] - (n[0] * (tv[0] - p0[0]) + n[1] * (tv[1] - p0[1])) / n[2]
        target = CartesianCoord(*tv)
        if not csa.contains(target.as_array()):
            raise ValidationError("target", "must lie inside the CSA")
    else:
        root.used.add("target")
        target = csa.center

    a = root.section("array")
    layers = a.number("layers", 33, lo=1, integer=True)
    per_layer = a.number("per_layer", 32, lo=1, integer=True)
    if per_layer & (per_layer - 1):
        raise ValidationError(f"{a.path}.per_layer", "must be a power of two")
    spacing = a.raw("spacing_m")
    spacing = wavelength / 2 if spacing is None else _check_number(spacing, f"{a.path}.spacing_m", lo=0, lo_open=True)
    a.done()
    try:
        array = ArrayGeometry(layers, per_layer, spacing, wavelength)
    except InputError as exc:
        raise ValidationError("array", str(exc)) from exc

    lk = root.section("link")
    link = LinkBudget(
        pt_gt=float(dbm_to_watts(lk.number("pt_gt_dbm", 20.0))),
        g_p=float(db_to_linear(lk.number("processing_gain_db", 54.2))),
        g_r=1.0,
        wavelength=wavelength,
        unit_radius=lk.number("unit_radius_m", 4.0, lo=0, lo_open=True),
        echo_prob=lk.number("echo_prob", 0.1, lo=0, hi=1),
        range_r_t=1.0,
    )
    lk.done()

    nz = root.section("noise")
    p_i = nz.raw("p_i_dbm", -110.0)
    p_i = None if p_i is None else _check_number(p_i, f"{nz.path}.p_i_dbm")
    if nz.has("thermal"):
        if nz.has("p_n_dbm"):
            raise ValidationError(f"{nz.path}.thermal", "give either p_n_dbm or thermal, not both")
        th = nz.section("thermal")
        noise = NoiseClutterParams.from_thermal(
            p_i,
            th.number("temperature_k", 290.0, lo=0, lo_open=True),
            th.number("bandwidth_hz", 100e6, lo=0, lo_open=True),
            th.number("noise_figure_db", 6.0),
        )
        th.done()
    else:
        noise = NoiseClutterParams.from_dbm(nz.number("p_n_dbm", -94.0), p_i)
    nz.done()
    try:
        return Scenario(tuple(rsus), csa, target, array, link, noise)
    except InputError as exc:
        raise ValidationError("scenario", str(exc)) from exc


def _beam(item, path) -> BeamSpec:
    s = _Section(item, path)
    phi, theta = s.numbers("direction_deg", length=2)
    d_phi, d_theta = s.numbers("width_deg", length=2, lo=0, lo_open=True, hi=180, hi_open=True)
    s.done()
    try:
        return BeamSpec.from_degrees(theta, phi, d_theta, d_phi)
    except InputError as exc:
        raise ValidationError(path, str(exc)) from exc


def _baba(root: _Section):
    s = root.section("beamforming")
    step = s.raw("grid_step_deg")
    cfg = BabaConfig(
        beta=s.number("beta", 1e-2, lo=0),
        grid_step=None if step is None else math.radians(_check_number(step, f"{s.path}.grid_step_deg", lo=0, lo_open=True)),
        eval_grid_step=math.radians(s.number("eval_grid_step_deg", 0.25, lo=0, lo_open=True)),
        max_points=s.number("max_points", 25, lo=1, integer=True),
    )
    interferers = []
    for item, path in s.items("interferers"):
        it = _Section(item, path)
        phi, theta = it.numbers("direction_deg", length=2)
        interferers.append((math.radians(phi), math.radians(theta), float(db_to_linear(it.number("power_db")))))
        it.done()
    noise_floor = s.number("noise_floor", 1.0, lo=0, lo_open=True)
    s.done()
    return cfg, tuple(interferers), noise_floor


def _beampattern(root: _Section) -> BeampatternOptions:
    s = root.section("beampattern")
    defaults = BeampatternOptions()
    beams = tuple(_beam(item, path) for item, path in s.items("beams")) if s.has("beams") else defaults.beams
    sweep_dir = None
    widths: tuple[float, ...] = ()
    aspect = 2.0
    if s.has("width_sweep"):
        w = s.section("width_sweep")
        phi, theta = w.numbers("direction_deg", [60.0, 45.0], length=2)
        widths = tuple(w.numbers("widths_deg", lo=0, lo_open=True, hi=90, hi_open=True))
        aspect = w.number("aspect", 2.0, lo=0, lo_open=True)
        w.done()
        sweep_dir = BeamSpec.from_degrees(theta, phi, 1.0, 1.0)
    opts = BeampatternOptions(
        beams=beams,
        sweep_direction=sweep_dir,
        sweep_widths_deg=widths,
        sweep_aspect=aspect,
        margin=s.number("margin", 1.5, lo=1.5),
        cells_per_width=s.number("cells_per_width", 40, lo=4, integer=True),
        hbf_rf_chains=tuple(s.numbers("hbf_rf_chains", [], nonempty=False, lo=1, integer=True)),
    )
    s.done()
    return opts


def _register(root: _Section) -> RegisterOptions:
    s = root.section("register")
    d = RegisterOptions()
    modes = s.raw("modes", list(d.modes))
    if not isinstance(modes, list) or not modes or any(m not in ("ideal", "realized") for m in modes):
        raise ValidationError(f"{s.path}.modes", "must be a non-empty list drawn from ['ideal', 'realized']")
    opts = RegisterOptions(
        unit_radii_m=tuple(s.numbers("unit_radii_m", list(d.unit_radii_m), nonempty=False, lo=0, lo_open=True)),
        sweep_radii_m=tuple(s.numbers("sweep_radii_m", list(d.sweep_radii_m), nonempty=False, lo=0, lo_open=True)),
        modes=tuple(dict.fromkeys(modes)),
        cell_m=s.number("cell_m", d.cell_m, lo=0, lo_open=True),
        realized_cell_m=s.number("realized_cell_m", d.realized_cell_m, lo=0, lo_open=True),
    )
    s.done()
    return opts


def _roc(root: _Section) -> RocOptions:
    s = root.section("roc")
    d = RocOptions()
    methods = s.raw("methods", list(d.methods))
    allowed = set(d.methods)
    if not isinstance(methods, list) or not methods or any(m not in allowed for m in methods):
        raise ValidationError(f"{s.path}.methods", f"must be a non-empty list drawn from {sorted(allowed)}")
    opts = RocOptions(
        p_i_dbm=tuple(s.numbers("p_i_dbm", list(d.p_i_dbm))),
        unit_radius_m=s.number("unit_radius_m", d.unit_radius_m, lo=0, lo_open=True),
        p_dfc=s.number("p_dfc", d.p_dfc, lo=0, hi=1),
        trials=s.number("trials", d.trials, lo=10_000, integer=True),
        partitions=s.number("partitions", d.partitions, lo=1, integer=True),
        points=s.number("points", d.points, lo=2, integer=True),
        methods=tuple(dict.fromkeys(methods)),
    )
    s.done()
    return opts


def _sweep(root: _Section) -> SweepOptions:
    s = root.section("sweep")
    d = SweepOptions()
    opts = SweepOptions(
        echo_probs=tuple(s.numbers("echo_probs", list(d.echo_probs), lo=0, lo_open=True, hi=1)),
        p_f=s.number("p_f", d.p_f, lo=0, hi=1, lo_open=True, hi_open=True),
        radii_m=tuple(s.numbers("radii_m", list(d.radii_m), lo=0, lo_open=True)),
        p_dfc=s.number("p_dfc", d.p_dfc, lo=0, hi=1),
    )
    s.done()
    return opts


def parse_config(data, source: str = "", config_hash: str = "") -> RunConfig:
    root = _Section(data, "")
    scenario = _scenario(root)
    baba_cfg, interferers, noise_floor = _baba(root)
    cfg = RunConfig(
        scenario=scenario,
        baba=baba_cfg,
        interferers=interferers,
        noise_floor=noise_floor,
        beampattern=_beampattern(root),
        register=_register(root),
        roc=_roc(root),
        sweep=_sweep(root),
        config_hash=config_hash,
        source=source,
    )
    root.done()
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ValidationError("config", f"cannot read {path}: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("config is not valid UTF-8") from exc
    data = parse_yaml(text)
    return parse_config(data, str(path), hashlib.sha256(raw).hexdigest())


def load_scenario(path) -> Scenario:
    """Read and validate the scenario part of a configuration file."""
    return load_config(path).scenario

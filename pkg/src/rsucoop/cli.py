"""Command-line entry point.

Each subcommand reads one YAML configuration, writes its results into the
``--out`` directory and records a ``manifest.json`` next to them. Result
files depend only on the configuration bytes and ``--seed``.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import export
from .beamforming import baba, beampattern, beamwidth_error, covariance_from_sources, pattern_axes
from .budget import NoiseClutterParams, dbm_to_watts
from .config import RunConfig, load_config
from .detection import (
    FusionSignal,
    RocMethod,
    default_thresholds,
    fused_amplitudes,
    pd_vs_unit_radius,
    roc_case1,
    roc_case2,
    roc_monte_carlo,
    roc_numeric_at,
)
from .errors import InputError, NumericError, ParseError, ValidationError
from .geometry import BeamSpec
from .hbf import hbf_sweep
from .registration import PatternMode, p_dfc_realized, plan_for_radius, power_map, reference_index, unit_overlap

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
U64_MAX = 2**64 - 1


def _tag(x: float) -> str:
    """Filename-safe label for a number: ``4`` or ``4p5`` or ``m110``."""
    s = f"{x:g}".replace("-", "m").replace(".", "p")
    return s


class _Output:
    def __init__(self, root: Path, fmt: str):
        self.root = Path(root)
        self.fmt = fmt
        self.files: dict[str, str] = {}

    def text(self, name: str, text: str):
        export.write_text(self.root / name, text)
        self.files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    def table(self, stem: str, header, rows):
        """CSV or JSON records depending on ``--format``."""
        rows = list(rows)
        if self.fmt == "csv":
            self.text(f"{stem}.csv", export.table_to_csv(header, rows))
        else:
            self.text(f"{stem}.json", export.to_json([dict(zip(header, r)) for r in rows]))

    def csv_or_json(self, stem: str, csv_text: str, header):
        if self.fmt == "csv":
            self.text(f"{stem}.csv", csv_text)
        else:
            rows = export.read_rows(csv_text, header)
            recs = [{h: (v if h == "method" else float(v)) for h, v in zip(header, r)} for r in rows]
            self.text(f"{stem}.json", export.to_json(recs))


# beampattern ------------------------------------------------------------------------

def cmd_beampattern(cfg: RunConfig, out: _Output, seed: int):
    sc = cfg.scenario
    geom = sc.array
    opts = cfg.beampattern
    R = None
    if cfg.interferers:
        dirs = [(phi, theta) for phi, theta, _ in cfg.interferers]
        R = covariance_from_sources(geom, dirs, [p for *_, p in cfg.interferers], cfg.noise_floor)

    summary = {"resolution_limit_deg": math.degrees(geom.resolution_limit), "element_count": geom.element_count, "beams": []}
    weights = []
    for k, beam in enumerate(opts.beams):
        w = baba(beam, geom, R, cfg.baba)
        weights.append(w)
        pat = beampattern(w, geom, pattern_axes(beam, opts.margin, opts.cells_per_width))
        out.csv_or_json(f"pattern_{k}", export.pattern_to_csv(pat), export.PATTERN_HEADER)
        eb = beamwidth_error(pat, beam)
        summary["beams"].append(
            {
                "index": k,
                "direction_deg": [math.degrees(beam.phi_r), math.degrees(beam.theta_r)],
                "width_deg": [math.degrees(beam.delta_phi), math.degrees(beam.delta_theta)],
                "e_b": eb.e_b,
                "beam_area_deg2": eb.beam_area,
                "missing_area_deg2": eb.missing_area,
                "excess_area_deg2": eb.excess_area,
            }
        )

    if opts.sweep_direction is not None:
        d = opts.sweep_direction
        rows = []
        for width in opts.sweep_widths_deg:
            beam = BeamSpec(d.theta_r, d.phi_r, math.radians(width), math.radians(width * opts.sweep_aspect))
            w = baba(beam, geom, R, cfg.baba)
            pat = beampattern(w, geom, pattern_axes(beam, opts.margin, opts.cells_per_width))
            rows.append((float(width), float(width * opts.sweep_aspect), beamwidth_error(pat, beam).e_b))
        out.table("eb_vs_width", ("delta_theta_deg", "delta_phi_deg", "e_b"), rows)

    if opts.hbf_rf_chains:
        target = np.column_stack(weights)
        factors = hbf_sweep(target, opts.hbf_rf_chains)
        out.table("hbf_residual", ("n_rf", "residual"), [(f.n_rf_chains, f.residual) for f in factors])

    out.text("eb_summary.json", export.to_json(summary))


# register ------------------------------------------------------------------------------

def cmd_register(cfg: RunConfig, out: _Output, seed: int):
    sc = cfg.scenario
    opts = cfg.register
    for r_s in opts.unit_radii_m:
        plan = plan_for_radius(sc, r_s)
        tag = _tag(r_s)
        out.text(f"plan_r{tag}.json", export.plan_to_json(plan))
        out.text(f"overlap_r{tag}.json", export.overlap_to_json(unit_overlap(plan.units(sc), sc.csa)))
        for mode in opts.modes:
            cell = opts.cell_m if mode == "ideal" else opts.realized_cell_m
            pm = power_map(sc, plan, PatternMode(mode), cell, cfg.baba)
            out.csv_or_json(f"powermap_{mode}_r{tag}", export.power_map_to_csv(pm), export.POWER_HEADER)

    if opts.sweep_radii_m:
        rows = []
        for mode in opts.modes:
            cell = opts.cell_m if mode == "ideal" else opts.realized_cell_m
            for r_s in opts.sweep_radii_m:
                plan = plan_for_radius(sc, r_s)
                rows.append((float(r_s), mode, p_dfc_realized(sc, plan, PatternMode(mode), cell, cfg.baba)))
        out.table("p_dfc_vs_radius", ("unit_radius_m", "mode", "p_dfc"), rows)


# roc ---------------------------------------------------------------------------------------

def _pd_at(curve, pf_grid):
    """Detection probability interpolated at the requested false-alarm rates."""
    order = np.argsort(curve.p_f, kind="stable")
    return np.interp(pf_grid, curve.p_f[order], curve.p_d[order])


def cmd_roc(cfg: RunConfig, out: _Output, seed: int):
    sc = cfg.scenario
    opts = cfg.roc
    amps = fused_amplitudes(sc, opts.unit_radius_m)
    ref = reference_index([float(np.linalg.norm(sc.target.as_array() - s.position.as_array())) for s in sc.rsus])
    signals = {
        "single": FusionSignal((float(amps[ref]),), 1.0),
        "fused": FusionSignal(tuple(float(a) for a in amps), opts.p_dfc),
    }
    pf_grid = np.geomspace(1e-4, 0.999, opts.points)
    summary = {"amplitudes_v": amps, "reference_rsu": ref, "p_dfc": opts.p_dfc, "regimes": []}
    for i, p_i in enumerate(opts.p_i_dbm):
        nc = NoiseClutterParams.from_powers(sc.noise.p_n, float(dbm_to_watts(p_i)))
        curves = {}
        for j, (name, sig) in enumerate(signals.items()):
            thresholds = default_thresholds(sig, nc, opts.points)
            for method in opts.methods:
                m = RocMethod(method)
                if m is RocMethod.NUMERIC:
                    c = roc_numeric_at(sig, nc, pf_grid)
                elif m is RocMethod.CASE1:
                    c = roc_case1(sig, nc, pf_grid)
                elif m is RocMethod.CASE2:
                    c = roc_case2(sig, nc, pf_grid)
                else:
                    c = roc_monte_carlo(sig, nc, thresholds, opts.trials, [seed, i, j], opts.partitions)
                curves[(name, method)] = c
                out.csv_or_json(f"roc_pi{_tag(p_i)}_{name}_{method}", export.roc_to_csv(c), export.ROC_HEADER)
        dominance = {}
        for method in opts.methods:
            fused = _pd_at(curves[("fused", method)], pf_grid)
            single = _pd_at(curves[("single", method)], pf_grid)
            dominance[method] = bool(np.all(fused >= single - 1e-12))
        summary["regimes"].append(
            {"p_i_dbm": p_i, "sigma_n_v": nc.sigma_n, "sigma_i_v": nc.sigma_i, "fused_dominates": dominance}
        )
    out.text("roc_summary.json", export.to_json(summary))


# sweep ---------------------------------------------------------------------------------------

def cmd_sweep(cfg: RunConfig, out: _Output, seed: int):
    sc = cfg.scenario
    opts = cfg.sweep
    rows = []
    summary = {"p_f": opts.p_f, "p_dfc": opts.p_dfc, "argmax_m": {}}
    for rho in opts.echo_probs:
        res = pd_vs_unit_radius(sc, opts.p_f, rho, opts.radii_m, opts.p_dfc)
        best = int(np.argmax(res.p_d))
        summary["argmax_m"][repr(float(rho))] = res.argmax
        for k, (r, pd) in enumerate(zip(res.unit_radius, res.p_d)):
            rows.append((float(r), float(rho), float(pd), int(k == best)))
    out.table("pd_vs_radius", ("unit_radius_m", "echo_prob", "p_d", "argmax"), rows)
    out.text("sweep_summary.json", export.to_json(summary))


COMMANDS = {
    "beampattern": cmd_beampattern,
    "register": cmd_register,
    "roc": cmd_roc,
    "sweep": cmd_sweep,
}


# plumbing ---------------------------------------------------------------------------------

def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _started_at() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None and epoch.strip().isdigit():
        t = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc)
    else:
        t = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0)
    return t.isoformat().replace("+00:00", "Z")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsucoop", description="Cooperative roadside radar sensing simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "beampattern": "synthesize beams and report pattern files and beamwidth error",
        "register": "plan registered beams and write overlap results and CSA power maps",
        "roc": "detection ROC curves for single and fused RSUs",
        "sweep": "detection probability versus sensing-unit radius",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="YAML configuration file")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--seed", type=_seed, default=0, help="unsigned 64-bit seed (default 0)")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
        p.add_argument("--error-json", action="store_true", help="report failures as JSON on stderr")
    return parser


def _fail(args, exc: Exception, code: int) -> int:
    if getattr(args, "error_json", False):
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        if isinstance(exc, ValidationError):
            payload["field"] = exc.field
        if isinstance(exc, ParseError):
            payload["line"], payload["column"] = exc.line, exc.column
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"rsucoop: error: {exc}\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = _Output(args.out, args.format)
        COMMANDS[args.command](cfg, out, args.seed)
        manifest = {
            "command": args.command,
            "config": str(args.config),
            "config_hash": cfg.config_hash,
            "format": args.format,
            "outputs": dict(sorted(out.files.items())),
            "seed": args.seed,
            "started_at": _started_at(),
            "version": __version__,
        }
        export.write_text(out.root / "manifest.json", export.to_json(manifest))
    except InputError as exc:
        return _fail(args, exc, EXIT_VALIDATION)
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(args, exc, EXIT_NUMERIC)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: one JSON config per run, CSV/SVG/JSON artifacts out.

Config schema::

    {
      "command": "monodromy" | "rear-tracks" | "sweep" | "bisect" | "finn" | "linkage",
      "curve": {"variant": "circle", "radius": 2.0, "density": 256},
      "bike": {"ell": 1.0, "step": null},
      "sweep": {"scales": [...]} or {"start": 0.5, "stop": 2.0, "num": 7},
      "bisect": {"bracket": [0.9, 1.1]},
      "finn": {"k_max": 4},
      "linkage": {"N": 6, "duration": 1.0, "base_x": 0.3, "step": 0.001, "order": 4},
      "seed": 0
    }

Exit status: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import geom, mobius
from .bikeflow import BikeConfig, closed_rear_tracks, monodromy_2d, monodromy_nd
from .errors import CurveSpecError, TrackError
from .experiments import bisect_parabolic, default_bracket, scale_sweep
from .finn import iterate_track, jet_from_linkage, linkage_from_track, simulate_linkage
from .mobius import MobiusKind
from .svg import Figure, finn_figure, tracks_figure

log = logging.getLogger("bicycle_tracks")

COMMANDS = ("monodromy", "rear-tracks", "sweep", "bisect", "finn", "linkage")

VARIANTS = {
    "circle": geom.Circle,
    "ellipse": geom.Ellipse,
    "polar_oval": geom.PolarOval,
    "shamrock": geom.shamrock,
    "support_oval": geom.SupportOval,
    "rounded_square": geom.rounded_square,
    "poly_graph": geom.PolyGraph,
    "finn_seed": geom.finn_seed,
    "bump_graph": geom.BumpGraph,
    "torus_knot": geom.TorusKnot,
    "polyline": geom.Polyline,
    "samples": geom.Samples,
}


class ConfigError(ValueError):
    pass


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


def curve_spec(cfg: dict):
    """Curve spec object from its config record (``variant`` plus constructor arguments)."""
    if not isinstance(cfg, dict) or "variant" not in cfg:
        raise ConfigError("curve needs a 'variant'")
    name = cfg["variant"]
    if name not in VARIANTS:
        raise ConfigError(f"unknown curve variant {name!r}; choose from {sorted(VARIANTS)}")
    params = {k: _tuplify(v) for k, v in cfg.items() if k not in ("variant", "density")}
    try:
        spec = VARIANTS[name](**params)
        spec.validate()
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from exc
    return spec


def _positive(section: dict, key: str, default, kind=float):
    v = section.get(key, default)
    if v is None:
        return None
    try:
        v = kind(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} must be a number") from exc
    if not v > 0:
        raise ConfigError(f"{key} must be positive")
    return v


@dataclass
class RunConfig:
    command: str
    curve: Any
    density: int
    bike: BikeConfig
    section: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - {"command", "curve", "bike", "seed", "sweep", "bisect", "finn", "linkage", "rear_tracks", "monodromy"}
        if unknown:
            log.warning("ignoring unknown config keys: %s", ", ".join(sorted(unknown)))
        command = raw.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}")
        curve_cfg = raw.get("curve", {"variant": "finn_seed"} if command in ("finn", "linkage") else None)
        if curve_cfg is None:
            raise ConfigError("missing 'curve' section")
        spec = curve_spec(curve_cfg)
        density = _positive(curve_cfg, "density", 256, int)
        if density < geom.MIN_DENSITY:
            raise ConfigError(f"density must be >= {geom.MIN_DENSITY}")
        bike = raw.get("bike", {})
        try:
            bcfg = BikeConfig(ell=_positive(bike, "ell", 1.0), step=_positive(bike, "step", None))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        key = command.replace("-", "_")
        section = raw.get(key, {})
        if not isinstance(section, dict):
            raise ConfigError(f"'{key}' section must be an object")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        return cls(command, spec, density, bcfg, section, seed)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (MobiusKind,)) or hasattr(v, "value"):
        return str(v)
    return v


def write_summary(path: str, summary: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _front(rc: RunConfig):
    return geom.build_curve(rc.curve, rc.density)


def cmd_monodromy(rc: RunConfig, out: str) -> dict:
    front = _front(rc)
    if not front.planar:
        m = monodromy_nd(front, rc.bike)
        write_csv(os.path.join(out, "monodromy.csv"), ["row"] + [f"c{j}" for j in range(m.matrix.shape[1])],
                  [[i] + list(r) for i, r in enumerate(m.matrix)])
        return {"dimension": front.dim, "lorentz_defect": m.defect(), "matrix": m.matrix}
    mono = monodromy_2d(front, rc.bike)
    typ = mobius.classify(mono, rc.bike.eps_par)
    fps = [] if typ.kind is MobiusKind.IDENTITY else mobius.fixed_points(mono, rc.bike.eps_par)
    write_csv(os.path.join(out, "fixed_points.csv"), ["alpha", "multiplier"], [[f.alpha, f.multiplier] for f in fps])
    return {
        "classification": typ.kind,
        "trace": mono.trace,
        "abs_trace": typ.abs_trace,
        "matrix": mono.matrix,
        "perimeter": front.total_length,
        "fixed_points": [{"alpha": f.alpha, "multiplier": f.multiplier} for f in fps],
    }


def cmd_rear_tracks(rc: RunConfig, out: str) -> dict:
    front = _front(rc)
    mono = monodromy_2d(front, rc.bike)
    typ = mobius.classify(mono, rc.bike.eps_par)
    rears = closed_rear_tracks(front, rc.bike)
    rows, recs = [], []
    for i, r in enumerate(rears):
        wf = r.wavefront
        rows.append([i, r.alpha0, str(r.stability), r.multiplier, wf.signed_length, wf.signed_area, wf.cusp_count, wf.maslov, wf.rotation])
        recs.append({"alpha0": r.alpha0, "stability": r.stability, "multiplier": r.multiplier,
                     "signed_length": wf.signed_length, "signed_area": wf.signed_area,
                     "cusps": wf.cusp_count, "maslov": wf.maslov})
        write_csv(os.path.join(out, f"rear_{i}.csv"), ["x", "px", "py", "alpha"],
                  [[x, p[0], p[1], a] for x, p, a in zip(wf.x, wf.points, wf.alpha)])
    write_csv(os.path.join(out, "rear_tracks.csv"),
              ["index", "alpha0", "stability", "multiplier", "signed_length", "signed_area", "cusps", "maslov", "rotation"], rows)
    fig = tracks_figure(front, [(r.wavefront, str(r.stability) == "Stable") for r in rears], "rear tracks")
    fig.save(os.path.join(out, "tracks.svg"))
    return {"classification": typ.kind, "trace": mono.trace, "abs_trace": typ.abs_trace, "rears": recs}


def _scales(section: dict) -> list:
    if "scales" in section:
        scales = [float(s) for s in section["scales"]]
    elif {"start", "stop"} <= set(section):
        scales = list(np.linspace(float(section["start"]), float(section["stop"]), int(section.get("num", 16))))
    else:
        raise ConfigError("sweep needs 'scales' or 'start'/'stop'")
    if not scales or min(scales) <= 0:
        raise ConfigError("sweep scales must be positive")
    return scales


def cmd_sweep(rc: RunConfig, out: str) -> dict:
    try:
        scales = _scales(rc.section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    res = scale_sweep(rc.curve, scales, rc.bike, rc.density)
    write_csv(os.path.join(out, "sweep.csv"), ["scale", "area", "kind", "abs_trace", "margin", "signed_length", "multiplier"],
              [[r.scale, r.area, str(r.kind), r.abs_trace, r.margin, r.signed_length, r.multiplier] for r in res.rows])
    transitions = [
        {"from": str(a.kind), "to": str(b.kind), "scale": b.scale}
        for a, b in zip(res.rows, res.rows[1:]) if a.kind is not b.kind
    ]
    return {"convex": res.convex, "inconclusive": res.inconclusive, "transitions": transitions,
            "monotonicity_violations": res.monotonicity_violations, "rows": len(res.rows)}


def cmd_bisect(rc: RunConfig, out: str) -> dict:
    base = _front(rc)
    bracket = rc.section.get("bracket")
    if bracket is None:
        bracket = default_bracket(base, rc.bike.ell)
    elif len(bracket) != 2 or not 0 < bracket[0] < bracket[1]:
        raise ConfigError("bracket must be [lo, hi] with 0 < lo < hi")
    rep = bisect_parabolic(base, tuple(float(b) for b in bracket), rc.bike, rc.density)
    wf = rep.wavefront
    write_csv(os.path.join(out, "parabolic_rear.csv"), ["x", "px", "py", "alpha"],
              [[x, p[0], p[1], a] for x, p, a in zip(wf.x, wf.points, wf.alpha)])
    tracks_figure(base.scaled(rep.scale), [(wf, True)], "parabolic rear").save(os.path.join(out, "tracks.svg"))
    return {"scale": rep.scale, "area": rep.area, "perimeter": rep.perimeter, "signed_length": rep.signed_length,
            "signed_area": rep.signed_area, "cusps": rep.cusp_count, "maslov": rep.maslov,
            "bracket_width": rep.bracket_width, "degenerate": rep.degenerate}


def _track(rc: RunConfig, k_max: int):
    if not isinstance(rc.curve, (geom.PolyGraph, geom.BumpGraph)):
        raise ConfigError("finn and linkage need a poly_graph, finn_seed or bump_graph curve")
    return iterate_track(rc.curve, k_max, rc.bike.ell, rc.density)


def cmd_finn(rc: RunConfig, out: str) -> dict:
    k_max = _positive(rc.section, "k_max", 4, int)
    track = _track(rc, k_max)
    write_csv(os.path.join(out, "finn.csv"), ["k", "length", "Z", "E", "max_abs_y", "max_abs_kappa"],
              [[m.k, m.length, m.zeros, m.extrema, m.max_abs_y, m.max_abs_kappa] for m in track.metrics])
    finn_figure(track, "unicycle track").save(os.path.join(out, "finn.svg"))
    return {"requested": k_max, "achieved": track.achieved, "diagnostic": track.diagnostic,
            "zeros": track.zeros(), "extrema": track.extrema(), "length_residuals": track.length_residuals()}


def cmd_linkage(rc: RunConfig, out: str) -> dict:
    s = rc.section
    n = _positive(s, "N", 4, int)
    duration = float(s.get("duration", 1.0))
    step = _positive(s, "step", 1e-3)
    base_x = float(s.get("base_x", 0.3))
    order = _positive(s, "order", max(1, n - 2), int)
    track = _track(rc, n)
    if track.achieved < n:
        raise ConfigError(f"track supports only {track.achieved} links, asked for {n}")
    link = linkage_from_track(track, base_x, n)
    jet = jet_from_linkage(link, order) if n >= order + 2 else []
    traj = simulate_linkage(link, duration, step)
    rows = []
    for t, x in zip(traj.times, traj.vertices):
        lengths = np.linalg.norm(np.diff(x, axis=0), axis=1)
        rows.append([t] + list(x.ravel()) + [float(np.max(np.abs(lengths - 1)))])
    header = ["t"] + [f"{c}{i}" for i in range(n + 1) for c in ("x", "y")] + ["link_drift"]
    write_csv(os.path.join(out, "linkage.csv"), header, rows)
    fig = Figure(title="linkage")
    fig.polyline(traj.vertices[:, 0], "#1f77b4", 1.0, label="base")
    fig.polyline(traj.vertices[0], "#000000", 1.5, label="start")
    fig.polyline(traj.vertices[-1], "#d62728", 1.5, label="end")
    fig.save(os.path.join(out, "linkage.svg"))
    return {"vertices": link.vertices, "speeds": link.speeds, "cascade_residual": link.cascade_residual(),
            "max_link_drift": traj.max_link_drift(), "jet": [list(v) for v in jet]}


HANDLERS = {
    "monodromy": cmd_monodromy,
    "rear-tracks": cmd_rear_tracks,
    "sweep": cmd_sweep,
    "bisect": cmd_bisect,
    "finn": cmd_finn,
    "linkage": cmd_linkage,
}


def run(raw: dict, out: str) -> tuple[int, Optional[dict]]:
    """Execute one config; returns ``(exit status, JSON-ready summary)``."""
    try:
        rc = RunConfig.from_dict(raw)
        os.makedirs(out, exist_ok=True)
    except (ConfigError, CurveSpecError, TypeError, KeyError, ValueError, OSError) as exc:
        log.error("config error: %s", exc)
        return 1, None
    np.random.seed(rc.seed)
    try:
        summary = HANDLERS[rc.command](rc, out)
    except (ConfigError, CurveSpecError) as exc:
        log.error("config error: %s", exc)
        return 1, None
    except (TrackError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return 2, None
    summary = _jsonable({"command": rc.command, "seed": rc.seed, **summary})
    write_summary(os.path.join(out, "summary.json"), summary)
    return 0, summary


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="bicycle-tracks", description="Bicycle track geometry runs from a JSON config.")
    ap.add_argument("config", help="JSON config file")
    ap.add_argument("-o", "--output", default="out", help="output directory")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        log.error("cannot read config: %s", exc)
        return 1
    status, _ = run(raw, args.output)
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Scenario configuration, beam geometry helpers and the end-to-end pipeline.

A scenario is a YAML document with the blocks ``geometry``, ``orbit``,
``beams``, ``constraints``, ``ga`` and ``output`` (plus optional ``sampling``
and ``subbands``). Unknown keys are rejected so that a typo cannot silently
change the physics.

The array frame is north-east-down: x points north, y east and boresight
(z) to nadir, so a beam's ``phi0`` is its bearing seen from the sub-satellite
point.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import networkx as nx
import numpy as np
import yaml

from . import ga
from .array_model import AngularGrid, ArrayGeometry, WeightTensor
from .errors import ConfigError, InfeasibleConstraintsError
from .evaluation import Sampling
from .metrics import (EARTH_RADIUS_KM, FieldOfView, dbm_to_watts, eirp, measure_beam,
                      watts_to_dbw)
from .objective import BeamSpec, ConstraintSet, activation_counts

log = logging.getLogger(__name__)

UNLIMITED = "unlimited"
CORE_FILES = ("report.json", "beams.csv", "activation_map.csv",
              "activation_histogram.csv", "history.csv")


# -- geometry -----------------------------------------------------------------

def latlon_to_scan(lat: float, lon: float, sub_lat: float, sub_lon: float,
                   altitude_km: float,
                   earth_radius_km: float = EARTH_RADIUS_KM) -> tuple[float, float]:
    """Scan angles (theta0, phi0) in degrees of a ground point seen from a nadir-pointing array."""
    if altitude_km <= 0:
        raise ValueError("altitude must be positive")
    la1, lo1, la2, lo2 = np.deg2rad([sub_lat, sub_lon, lat, lon])
    dlon = lo2 - lo1
    hav = (np.sin((la2 - la1) / 2) ** 2
           + np.cos(la1) * np.cos(la2) * np.sin(dlon / 2) ** 2)
    delta = 2.0 * np.arcsin(np.sqrt(min(hav, 1.0)))
    limb = np.arccos(earth_radius_km / (earth_radius_km + altitude_km))
    if delta >= limb - 1e-12:
        raise ValueError("beam center not visible")
    theta0 = np.arctan2(np.sin(delta), 1.0 + altitude_km / earth_radius_km - np.cos(delta))
    if delta == 0.0:
        return 0.0, 0.0
    azimuth = np.arctan2(np.sin(dlon) * np.cos(la2),
                         np.cos(la1) * np.sin(la2) - np.sin(la1) * np.cos(la2) * np.cos(dlon))
    return float(np.rad2deg(theta0)), float(np.mod(np.rad2deg(azimuth), 360.0))


def angular_separation(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Angle in degrees between two (theta, phi) directions."""
    t1, p1, t2, p2 = np.deg2rad([a[0], a[1], b[0], b[1]])
    c = np.cos(t1) * np.cos(t2) + np.sin(t1) * np.sin(t2) * np.cos(p1 - p2)
    return float(np.rad2deg(np.arccos(np.clip(c, -1.0, 1.0))))


def interference_graph(specs: Sequence[BeamSpec], guard: float = 1.0) -> nx.Graph:
    """Beams are adjacent when their centres sit closer than the mean beamwidth plus ``guard``."""
    g = nx.Graph()
    g.add_nodes_from(range(len(specs)))
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            reach = 0.5 * (specs[i].beamwidth + specs[j].beamwidth) + guard
            if angular_separation(specs[i].direction, specs[j].direction) < reach:
                g.add_edge(i, j)
    return g


def assign_subbands(specs: Sequence[BeamSpec], guard: float = 1.0) -> tuple[list[int], int]:
    """Greedy largest-degree-first colouring; returns (colour per beam, number of colours)."""
    if not specs:
        return [], 0
    coloring = nx.greedy_color(interference_graph(specs, guard), strategy="largest_first")
    colors = [int(coloring[b]) for b in range(len(specs))]
    return colors, max(colors) + 1


# -- configuration ------------------------------------------------------------

def _number(value, where: str, positive: bool = False, allow_zero: bool = True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if positive and (value < 0 or (value == 0 and not allow_zero)):
        raise ConfigError(f"{where}: must be {'positive' if not allow_zero else 'non-negative'}")
    return value


def _integer(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be at least {minimum}")
    return int(value)


def _block(raw, name: str, allowed: Sequence[str], required: Sequence[str] = ()) -> dict:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping")
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(map(str, unknown))}")
    missing = [k for k in required if k not in raw]
    if missing:
        raise ConfigError(f"{name}: missing key(s) {', '.join(missing)}")
    return raw


@dataclass(frozen=True)
class BeamEntry:
    """One requested beam: centre as scan angles or as a ground point."""

    beamwidth: float
    sll: float = 16.0
    theta0: float | None = None
    phi0: float | None = None
    lat: float | None = None
    lon: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class OutputOptions:
    directory: str = "runs/scenario"
    theta_step: float = 0.1
    phi_step: float = 1.0
    cuts: int = 4
    fov: float | str = "earth_limb"
    refine_step: float = 0.02


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    rows: int
    cols: int
    spacing_x: float
    spacing_y: float
    aperture_radius: float
    frequency_hz: float
    altitude_km: float
    beams: tuple[BeamEntry, ...]
    subsatellite_lat: float = 0.0
    subsatellite_lon: float = 0.0
    p_max_dbm: float = 40.0
    activation_limit: int | str = UNLIMITED
    per_element_power_w: float | None = None
    ga: ga.GAConfig = field(default_factory=ga.GAConfig)
    output: OutputOptions = field(default_factory=OutputOptions)
    sampling: Sampling = field(default_factory=Sampling)
    guard_deg: float = 1.0

    # derived views
    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry.from_frequency(self.frequency_hz, rows=self.rows, cols=self.cols,
                                            spacing_x=self.spacing_x, spacing_y=self.spacing_y,
                                            aperture_radius=self.aperture_radius)

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def fov(self) -> FieldOfView:
        if self.output.fov == "earth_limb":
            return FieldOfView.earth_limb(self.altitude_km)
        return FieldOfView(float(self.output.fov))

    def constraints(self) -> ConstraintSet:
        n_beams = len(self.beams)
        limit = n_beams if self.activation_limit == UNLIMITED else int(self.activation_limit)
        pe = self.per_element_power_w
        if pe is None:
            pe = self.p_max_w / (self.rows * self.cols * n_beams)
        return ConstraintSet.uniform((self.rows, self.cols), min(limit, n_beams),
                                     self.p_max_w, pe)

    def beam_specs(self) -> list[BeamSpec]:
        specs = []
        for i, b in enumerate(self.beams):
            if b.theta0 is not None:
                theta0, phi0 = b.theta0, b.phi0
            else:
                try:
                    theta0, phi0 = latlon_to_scan(b.lat, b.lon, self.subsatellite_lat,
                                                  self.subsatellite_lon, self.altitude_km)
                except ValueError as exc:
                    raise ConfigError(f"beams[{i}]: {exc}") from exc
            specs.append(BeamSpec(theta0=theta0, phi0=phi0, beamwidth=b.beamwidth, sll=b.sll))
        return specs

    # serialisation
    def to_dict(self) -> dict:
        gcfg = asdict(self.ga)
        return {
            "name": self.name,
            "geometry": {"rows": self.rows, "cols": self.cols,
                         "spacing_x": self.spacing_x, "spacing_y": self.spacing_y,
                         "aperture_radius": self.aperture_radius,
                         "frequency_hz": self.frequency_hz},
            "orbit": {"altitude_km": self.altitude_km,
                      "subsatellite_lat": self.subsatellite_lat,
                      "subsatellite_lon": self.subsatellite_lon},
            "beams": [b.to_dict() for b in self.beams],
            "constraints": {"p_max_dbm": self.p_max_dbm,
                            "activation_limit": self.activation_limit,
                            "per_element_power_w": self.per_element_power_w},
            "ga": gcfg,
            "output": asdict(self.output),
            "sampling": {k: v for k, v in asdict(self.sampling).items() if k != "cuts"},
            "subbands": {"guard_deg": self.guard_deg},
        }

    def echo(self) -> dict:
        """Config as recorded in reports: everything that can change the results."""
        d = self.to_dict()
        d["ga"].pop("workers")
        d["output"].pop("directory")
        return d

    @classmethod
    def from_dict(cls, raw: Any) -> "ScenarioConfig":
        top = _block(raw, "config", ("name", "geometry", "orbit", "beams", "constraints",
                                     "ga", "output", "sampling", "subbands"),
                     ("geometry", "orbit", "beams"))
        name = top.get("name", "scenario")
        if not isinstance(name, str) or not name:
            raise ConfigError("name: expected a non-empty string")

        geo = _block(top["geometry"], "geometry",
                     ("rows", "cols", "spacing_x", "spacing_y", "aperture_radius", "frequency_hz"),
                     ("rows", "cols", "frequency_hz"))
        rows = _integer(geo["rows"], "geometry.rows", 1)
        cols = _integer(geo["cols"], "geometry.cols", 1)
        spacing_x = _number(geo.get("spacing_x", 0.6), "geometry.spacing_x", True, False)
        spacing_y = _number(geo.get("spacing_y", 0.6), "geometry.spacing_y", True, False)
        radius = _number(geo.get("aperture_radius", 0.3), "geometry.aperture_radius", True, False)
        freq = _number(geo["frequency_hz"], "geometry.frequency_hz")
        if freq <= 0:
            raise ConfigError("geometry.frequency_hz: must be positive")

        orbit = _block(top["orbit"], "orbit",
                       ("altitude_km", "subsatellite_lat", "subsatellite_lon"), ("altitude_km",))
        altitude = _number(orbit["altitude_km"], "orbit.altitude_km")
        if altitude <= 0:
            raise ConfigError("orbit.altitude_km: must be positive")
        sub_lat = _number(orbit.get("subsatellite_lat", 0.0), "orbit.subsatellite_lat")
        sub_lon = _number(orbit.get("subsatellite_lon", 0.0), "orbit.subsatellite_lon")

        raw_beams = top["beams"]
        if not isinstance(raw_beams, list) or not raw_beams:
            raise ConfigError("beams: expected a non-empty list")
        beams = tuple(_parse_beam(b, f"beams[{i}]") for i, b in enumerate(raw_beams))

        con = _block(top.get("constraints"), "constraints",
                     ("p_max_dbm", "activation_limit", "per_element_power_w"))
        p_max_dbm = _number(con.get("p_max_dbm", 40.0), "constraints.p_max_dbm")
        limit = con.get("activation_limit", UNLIMITED)
        if limit != UNLIMITED:
            limit = _integer(limit, "constraints.activation_limit", 0)
        pe = con.get("per_element_power_w")
        if pe is not None:
            pe = _number(pe, "constraints.per_element_power_w", True)

        ga_raw = _block(top.get("ga"), "ga", [f.name for f in fields(ga.GAConfig)])
        ga_kwargs = {}
        for f in fields(ga.GAConfig):
            if f.name not in ga_raw:
                continue
            v = ga_raw[f.name]
            if f.name in ("population", "max_generations", "elitism", "seed",
                          "stagnation_generations", "workers"):
                v = _integer(v, f"ga.{f.name}")
            elif not (f.name == "mutation_rate" and v is None):
                v = _number(v, f"ga.{f.name}")
            ga_kwargs[f.name] = v
        try:
            ga_cfg = ga.GAConfig(**ga_kwargs)
        except ValueError as exc:
            raise ConfigError(f"ga: {exc}") from exc

        out = _block(top.get("output"), "output", [f.name for f in fields(OutputOptions)])
        directory = out.get("directory", f"runs/{name}")
        if not isinstance(directory, str) or not directory:
            raise ConfigError("output.directory: expected a path string")
        fov = out.get("fov", "earth_limb")
        if fov != "earth_limb":
            fov = _number(fov, "output.fov")
            if not 0 < fov <= 90:
                raise ConfigError("output.fov: must lie in (0, 90] degrees or be 'earth_limb'")
        output = OutputOptions(
            directory=directory,
            theta_step=_number(out.get("theta_step", 0.1), "output.theta_step", True, False),
            phi_step=_number(out.get("phi_step", 1.0), "output.phi_step", True, False),
            cuts=_integer(out.get("cuts", 4), "output.cuts", 1),
            fov=fov,
            refine_step=_number(out.get("refine_step", 0.02), "output.refine_step", True, False),
        )

        samp = _block(top.get("sampling"), "sampling", ("cut_step", "uv_step", "min_cut_span"))
        sampling = Sampling(
            cuts=output.cuts,
            cut_step=_number(samp.get("cut_step", 0.1), "sampling.cut_step", True, False),
            uv_step=_number(samp.get("uv_step", 0.01), "sampling.uv_step", True, False),
            min_cut_span=_number(samp.get("min_cut_span", 6.0), "sampling.min_cut_span", True, False),
        )
        sub = _block(top.get("subbands"), "subbands", ("guard_deg",))
        guard = _number(sub.get("guard_deg", 1.0), "subbands.guard_deg", True)

        cfg = cls(name=name, rows=rows, cols=cols, spacing_x=spacing_x, spacing_y=spacing_y,
                  aperture_radius=radius, frequency_hz=freq, altitude_km=altitude, beams=beams,
                  subsatellite_lat=sub_lat, subsatellite_lon=sub_lon, p_max_dbm=p_max_dbm,
                  activation_limit=limit, per_element_power_w=pe, ga=ga_cfg, output=output,
                  sampling=sampling, guard_deg=guard)
        cfg.beam_specs()  # surfaces invisible ground points early
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ScenarioConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
        return cls.from_dict(raw)


def _parse_beam(raw, where: str) -> BeamEntry:
    b = _block(raw, where, ("beamwidth", "sll", "theta0", "phi0", "lat", "lon"), ("beamwidth",))
    has_scan = "theta0" in b or "phi0" in b
    has_ground = "lat" in b or "lon" in b
    if has_scan == has_ground:
        raise ConfigError(f"{where}: give either theta0/phi0 or lat/lon")
    width = _number(b["beamwidth"], f"{where}.beamwidth")
    sll = _number(b.get("sll", 16.0), f"{where}.sll")
    if width <= 0 or sll <= 0:
        raise ConfigError(f"{where}: beamwidth and sll must be positive")
    if has_scan:
        theta0 = _number(b.get("theta0", 0.0), f"{where}.theta0")
        phi0 = _number(b.get("phi0", 0.0), f"{where}.phi0")
        if not 0 <= theta0 < 90:
            raise ConfigError(f"{where}.theta0: must lie in [0, 90) degrees")
        return BeamEntry(beamwidth=width, sll=sll, theta0=theta0, phi0=phi0)
    if "lat" not in b or "lon" not in b:
        raise ConfigError(f"{where}: both lat and lon are required")
    lat = _number(b["lat"], f"{where}.lat")
    lon = _number(b["lon"], f"{where}.lon")
    if not -90 <= lat <= 90:
        raise ConfigError(f"{where}.lat: must lie in [-90, 90]")
    return BeamEntry(beamwidth=width, sll=sll, lat=lat, lon=lon)


# -- presets ------------------------------------------------------------------

_RING_TARGETS = [4.7, 5.5, 6.0, 6.5, 5.8, 5.0, 7.0]


def _seven_beam(name: str, limit: int | str) -> dict:
    beams = [{"theta0": 0.0, "phi0": 0.0, "beamwidth": _RING_TARGETS[0], "sll": 16.0}]
    beams += [{"theta0": 10.0, "phi0": 60.0 * i, "beamwidth": w, "sll": 16.0}
              for i, w in enumerate(_RING_TARGETS[1:])]
    return {
        "name": name,
        "geometry": {"rows": 16, "cols": 16, "spacing_x": 0.6, "spacing_y": 0.6,
                     "aperture_radius": 0.3, "frequency_hz": 28e9},
        "orbit": {"altitude_km": 500.0},
        "beams": beams,
        "constraints": {"p_max_dbm": 40.0, "activation_limit": limit},
    }


PRESETS: dict[str, tuple[str, dict]] = {
    "scenario1": ("7 beams on a 16x16 array at 28 GHz, at most 5 activations per element",
                  _seven_beam("scenario1", 5)),
    "scenario2": ("7 beams on a 16x16 array at 28 GHz, at most 6 activations per element",
                  _seven_beam("scenario2", 6)),
    "scenario3": ("7 beams on a 16x16 array at 28 GHz, no activation limit",
                  _seven_beam("scenario3", UNLIMITED)),
    "smoke": ("single broadside beam on an 8x8 array, short run for plumbing checks", {
        "name": "smoke",
        "geometry": {"rows": 8, "cols": 8, "spacing_x": 0.6, "spacing_y": 0.6,
                     "aperture_radius": 0.3, "frequency_hz": 28e9},
        "orbit": {"altitude_km": 500.0},
        "beams": [{"theta0": 0.0, "phi0": 0.0, "beamwidth": 12.0, "sll": 13.0}],
        "ga": {"population": 16, "max_generations": 10},
        "output": {"theta_step": 0.2, "phi_step": 2.0},
    }),
}


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return ScenarioConfig.from_dict(copy.deepcopy(PRESETS[name][1]))


# -- running ------------------------------------------------------------------

@dataclass
class BeamRow:
    """One table row; ``search_*`` are the values seen on the optimiser's sampling."""

    beam: int
    theta0: float
    phi0: float
    subband: int
    target_beamwidth: float
    achieved_beamwidth: float
    error_pct: float
    sll_db: float
    active_elements: int
    directivity_dbi: float
    eirp_dbw: float
    cut_beamwidths: list[float]
    search_beamwidth: float
    search_sll_db: float


def beamwidth_error_pct(achieved: float, target: float) -> float:
    return float(100.0 * abs(achieved - target) / target)


def activation_histogram(activation_map: np.ndarray, n_beams: int) -> list[tuple[int, int]]:
    """(k, number of elements used by exactly k beams) for k = 1..n_beams."""
    counts = np.bincount(np.asarray(activation_map).ravel(), minlength=n_beams + 1)
    return [(k, int(counts[k])) for k in range(1, n_beams + 1)]


@dataclass
class RunReport:
    name: str
    seed: int
    beams: list[BeamRow]
    activation_map: np.ndarray
    histogram: list[tuple[int, int]]
    history: list[dict]
    config: dict
    generations: int
    stop_reason: str
    best_cost: float
    z1: float
    z2: float
    subbands: int
    weights: WeightTensor | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "ga": {"generations": self.generations, "stop_reason": self.stop_reason,
                   "best_cost": self.best_cost, "z1": self.z1, "z2": self.z2},
            "subbands": self.subbands,
            "beams": [asdict(r) for r in self.beams],
            "activation_map": self.activation_map.tolist(),
            "activation_histogram": [{"activations": k, "elements": n} for k, n in self.histogram],
            "history": self.history,
            "config": self.config,
        }


def run_scenario(config: ScenarioConfig, write: bool = True, plots: bool = False,
                 progress: Callable[[dict], None] | None = None) -> RunReport:
    """Full pipeline: scan angles, sub-bands, GA, fine-grid metrics, output files."""
    geometry = config.geometry
    specs = config.beam_specs()
    colors, n_colors = assign_subbands(specs, config.guard_deg)
    specs = [replace(s, color=c) for s, c in zip(specs, colors)]
    constraints = config.constraints()
    if constraints.max_activations < len(specs) or constraints.activation_limit.sum() < len(specs):
        raise InfeasibleConstraintsError("constraints unsatisfiable: budget below one element per beam")
    fov = config.fov

    result = ga.run(specs, geometry, constraints, config.ga, fov, config.sampling, progress)

    grid = AngularGrid.uniform(config.output.theta_step, config.output.phi_step)
    tx_dbw = watts_to_dbw(config.p_max_w)
    rows = []
    for b, spec in enumerate(specs):
        m = measure_beam(result.weights.weights[b], geometry, grid, fov,
                         cuts=config.output.cuts, refine_step=config.output.refine_step,
                         peak_hint=spec.direction)
        rows.append(BeamRow(
            beam=b + 1, theta0=float(spec.theta0), phi0=float(spec.phi0), subband=spec.color,
            target_beamwidth=float(spec.beamwidth), achieved_beamwidth=m.beamwidth,
            error_pct=beamwidth_error_pct(m.beamwidth, spec.beamwidth), sll_db=m.sll,
            active_elements=m.active_elements, directivity_dbi=m.directivity,
            eirp_dbw=eirp(m.directivity, tx_dbw), cut_beamwidths=m.cut_beamwidths,
            search_beamwidth=float(result.score.cut_widths[b].mean()),
            search_sll_db=float(result.score.sll[b])))

    amap = activation_counts(result.masks)
    cost = result.score.cost
    report = RunReport(
        name=config.name, seed=config.ga.seed, beams=rows, activation_map=amap,
        histogram=activation_histogram(amap, len(specs)),
        history=[dict(r) for r in result.history], config=config.echo(),
        generations=result.generations, stop_reason=result.stop_reason,
        best_cost=cost.total, z1=cost.z1, z2=cost.z2, subbands=n_colors,
        weights=result.weights)
    if write:
        emit_outputs(report, config, plots=plots)
    return report


# -- output files -------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def dump_json(obj) -> str:
    """Canonical JSON used for every JSON output (stable key order, trailing newline)."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def atomic_write(path: Path, data: str | bytes) -> None:
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


BEAM_COLUMNS = ("beam", "theta0_deg", "phi0_deg", "subband", "target_beamwidth_deg",
                "achieved_beamwidth_deg", "error_pct", "sll_db", "active_elements",
                "directivity_dbi", "eirp_dbw")


def weights_document(weights: WeightTensor, specs_rows: Sequence[BeamRow],
                     geometry: ArrayGeometry) -> dict:
    return {
        "shape": list(weights.weights.shape),
        "geometry": asdict(geometry),
        "beams": [{"theta0": r.theta0, "phi0": r.phi0,
                   "mask": weights.masks[i].astype(int).tolist(),
                   "phase": weights.phases[i].tolist()}
                  for i, r in enumerate(specs_rows)],
    }


def load_weights(path: str | os.PathLike) -> tuple[WeightTensor, list[tuple[float, float]]]:
    """Read a ``weights.json`` file back into a weight tensor and its scan directions."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        mask = np.array([b["mask"] for b in doc["beams"]], dtype=float)
        phase = np.array([b["phase"] for b in doc["beams"]], dtype=float)
        dirs = [(float(b["theta0"]), float(b["phi0"])) for b in doc["beams"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed weights file ({exc})") from exc
    return WeightTensor(mask * np.exp(1j * phase)), dirs


def emit_outputs(report: RunReport, config: ScenarioConfig, plots: bool = False) -> Path:
    """Write the report, tables, matrices and (optionally) pattern-cut plots."""
    out = Path(config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")

    atomic_write(out / "report.json", dump_json(report.to_dict()))
    atomic_write(out / "beams.csv", csv_text(BEAM_COLUMNS, [
        (r.beam, r.theta0, r.phi0, r.subband, r.target_beamwidth, r.achieved_beamwidth,
         r.error_pct, r.sll_db, r.active_elements, r.directivity_dbi, r.eirp_dbw)
        for r in report.beams]))
    amap = report.activation_map
    atomic_write(out / "activation_map.csv",
                 csv_text([str(j) for j in range(amap.shape[1])], amap.tolist()))
    atomic_write(out / "activation_histogram.csv",
                 csv_text(("activations", "elements"), report.histogram))
    atomic_write(out / "history.csv", csv_text(
        ("generation", "best_cost", "z1", "z2", "feasible_count"),
        [(h["generation"], h["best_cost"], h["z1"], h["z2"], h["feasible_count"])
         for h in report.history]))
    if report.weights is not None:
        atomic_write(out / "weights.json",
                     dump_json(weights_document(report.weights, report.beams, config.geometry)))
    if plots:
        from .plots import plot_beam_cuts
        for r in report.beams:
            plot_beam_cuts(report.weights.weights[r.beam - 1], config.geometry,
                           (r.theta0, r.phi0), out / f"beam{r.beam}_cuts.png",
                           title=f"beam {r.beam}")
    return out

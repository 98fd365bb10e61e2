"""``synth`` command line: run scenarios, list presets, verify stored weights."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, InfeasibleConstraintsError
from .array_model import AngularGrid
from .metrics import eirp, measure_beam, watts_to_dbw
from .objective import check_constraints
from .scenario import (BEAM_COLUMNS, CORE_FILES, PRESETS, ScenarioConfig, assign_subbands,
                       beamwidth_error_pct, csv_text, load_weights, preset, run_scenario)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _load(source: str) -> ScenarioConfig:
    path = Path(source)
    if path.is_file():
        return ScenarioConfig.load(path)
    if source in PRESETS:
        return preset(source)
    raise ConfigError(f"{source!r} is neither a config file nor a preset name")


def _override(cfg: ScenarioConfig, args) -> ScenarioConfig:
    ga_changes = {}
    if args.seed is not None:
        ga_changes["seed"] = args.seed
    if args.workers is not None:
        ga_changes["workers"] = args.workers
    if args.generations is not None:
        ga_changes["max_generations"] = args.generations
    try:
        if ga_changes:
            cfg = dataclasses.replace(cfg, ga=dataclasses.replace(cfg.ga, **ga_changes))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, directory=args.out))
    return cfg


def cmd_run(args) -> int:
    cfg = _override(_load(args.config), args)
    progress = None
    if args.progress:
        def progress(rec):
            print(json.dumps(rec), file=sys.stderr, flush=True)
    report = run_scenario(cfg, write=True, plots=args.plots, progress=progress)
    print(f"{cfg.name}: {report.stop_reason} after {report.generations} generations, "
          f"best cost {report.best_cost:.6g}")
    print(f"outputs in {cfg.output.directory}: {', '.join(CORE_FILES)}")
    for r in report.beams:
        print(f"  beam {r.beam}: {r.achieved_beamwidth:.4f} deg (target {r.target_beamwidth:g}, "
              f"error {r.error_pct:.3f}%), SLL {r.sll_db:.3f} dB, {r.active_elements} elements, "
              f"D {r.directivity_dbi:.3f} dBi")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name, (desc, _) in PRESETS.items():
        print(f"{name:10s} {desc}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load(args.config)
    weights, dirs = load_weights(args.weights)
    geometry = cfg.geometry
    specs = cfg.beam_specs()
    if weights.weights.shape != (len(specs),) + geometry.shape:
        raise ConfigError("weights do not match the config's beams and array shape")
    colors, _ = assign_subbands(specs, cfg.guard_deg)
    grid = AngularGrid.uniform(cfg.output.theta_step, cfg.output.phi_step)
    tx_dbw = watts_to_dbw(cfg.p_max_w)
    rows = []
    for b, spec in enumerate(specs):
        m = measure_beam(weights.weights[b], geometry, grid, cfg.fov, cuts=cfg.output.cuts,
                         refine_step=cfg.output.refine_step, peak_hint=dirs[b])
        rows.append((b + 1, dirs[b][0], dirs[b][1], colors[b], spec.beamwidth, m.beamwidth,
                     beamwidth_error_pct(m.beamwidth, spec.beamwidth), m.sll,
                     m.active_elements, m.directivity, eirp(m.directivity, tx_dbw)))
    sys.stdout.write(csv_text(BEAM_COLUMNS, rows))
    report = check_constraints(weights.masks, cfg.constraints())
    print(f"activation limit {'ok' if report.activation_ok else 'VIOLATED'}, "
          f"power {report.total_power:.6g} W of {cfg.p_max_w:.6g} W "
          f"{'ok' if report.power_ok else 'VIOLATED'}")
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="synth",
                                 description="Thinned multi-beam synthesis for planar arrays")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a YAML config or preset name")
    run.add_argument("config", help="config file path or preset name")
    run.add_argument("--seed", type=int, help="override ga.seed")
    run.add_argument("--plots", action="store_true", help="write pattern-cut images per beam")
    run.add_argument("--out", help="override output.directory")
    run.add_argument("--workers", type=int, help="threads for chromosome evaluation")
    run.add_argument("--generations", type=int, help="override ga.max_generations")
    run.add_argument("--progress", action="store_true",
                     help="emit one JSON progress record per generation on stderr")
    run.set_defaults(func=cmd_run)

    presets = sub.add_parser("presets", help="built-in scenarios")
    presets_sub = presets.add_subparsers(dest="action", required=True)
    presets_sub.add_parser("list", help="list preset names").set_defaults(func=cmd_presets)

    verify = sub.add_parser("verify", help="measure a stored weights.json against a config")
    verify.add_argument("weights")
    verify.add_argument("config", help="config file path or preset name")
    verify.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleConstraintsError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

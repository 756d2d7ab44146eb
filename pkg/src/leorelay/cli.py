"""Command-line front end: every command reads a scenario file and writes one CSV.

    leorelay contact --config multi_ntn_400 --out results/
    leorelay sweep --config single_ntn_2000 --axis n_s --values 1:50
    leorelay verify --out results/

``--config`` takes a path or the stem of a bundled scenario.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from leorelay import __version__, kpi, oracle
from leorelay.orbital import DegenerateOrbitError, ntn_distance
from leorelay.scenario import (
    ScenarioConfig,
    ScenarioParseError,
    ScenarioValidationError,
    bundled_scenarios,
    config_digest,
    load_scenario,
    resolve_scenario,
)
from leorelay.visibility import NtnDistanceCdf, min_distance_multi_gs

SWEEP_METRICS = ("Q", "gamma_bits", "eta_bits_per_joule", "gamma_limit_bits")
CDF_SUP_TOL = 0.005
CAPACITY_CDF_TOL = 0.01


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, columns, rows, cfg: ScenarioConfig, command: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# leorelay {__version__} command={command} scenario={cfg.name} "
                 f"config_sha256={config_digest(cfg)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _num(v) for v in row])
    return path


def _times(cfg: ScenarioConfig, scenario, step: float | None) -> np.ndarray:
    period = kpi.scenario_period(scenario)
    return np.arange(0.0, period, step or cfg.t_res)


def cmd_distance(cfg, args):
    sc = cfg.to_scenario()
    t = _times(cfg, sc, args.grid_step)
    if cfg.is_ntn:
        geom = sc.geometry
        d = ntn_distance(geom, t)
        vis = d <= geom.d_visible
    else:
        d, idx = min_distance_multi_gs(cfg.cubesat, cfg.stations, t)
        vis = idx >= 0
    return ("t_s", "d_m", "visible"), zip(t, d, vis)


def cmd_cdf(cfg, args):
    sc = cfg.to_scenario()
    if args.quantity == "capacity":
        cdf = kpi.capacity_cdf(sc)
        x = np.linspace(0.0, cdf.c_max, args.points)
    else:
        cdf = NtnDistanceCdf(sc.geometry) if cfg.is_ntn else kpi.gs_distance_cdf(sc)
        lo, hi = cdf.support
        x = np.linspace(lo, hi, args.points)
    return ("x", "F"), zip(x, np.atleast_1d(cdf(x)))


def cmd_contact(cfg, args):
    sc = cfg.to_scenario()
    q = kpi.contact_probability(sc)
    period = kpi.scenario_period(sc)
    return ("Q", "T_s", "Tc_s"), [(q, period, q * period)]


def cmd_capacity(cfg, args):
    sc = cfg.to_scenario()
    t = _times(cfg, sc, args.grid_step)
    return ("t_s", "c_bps"), zip(t, kpi.capacity_trace(sc, t))


def cmd_download(cfg, args):
    sc = cfg.to_scenario()
    limit = None
    if args.limit:
        if not cfg.is_ntn:
            raise ValueError("the download bound is only defined for relay scenarios")
        limit = kpi.download_capacity_limit(sc.geometry, cfg.radio, cfg.constants)
    return ("gamma_bits", "gamma_limit_bits"), [(kpi.download_capacity(sc), limit)]


def cmd_energy(cfg, args):
    return ("eta_bits_per_joule",), [(kpi.energy_efficiency(cfg.to_scenario()),)]


def _parse_values(axis: str, text: str):
    if axis == "preset":
        return [v.strip() for v in text.split(",") if v.strip()]
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        if step <= 0:
            raise ValueError("sweep step must be positive")
        vals = list(np.round(np.arange(start, stop + step / 2, step), 9))
    else:
        vals = [float(v) for v in text.split(",") if v.strip()]
    if axis == "n_s":
        vals = [int(v) for v in vals]
    if not vals:
        raise ValueError("empty sweep range")
    return vals


def _apply(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "h_cs":
        return cfg.with_altitude(value * 1e3)
    if axis == "n_s":
        return cfg.with_relays(int(value))
    return cfg.with_radio(value)


def sweep_point(job):
    """Metrics for one sweep grid point; NaN marks a degenerate geometry."""
    cfg, metrics = job
    sc = cfg.to_scenario()
    try:
        out = {}
        q = kpi.contact_probability(sc) if {"Q", "eta_bits_per_joule"} & set(metrics) else None
        gamma = kpi.download_capacity(sc) if {"gamma_bits", "eta_bits_per_joule"} & set(metrics) else None
        for m in metrics:
            if m == "Q":
                out[m] = q
            elif m == "gamma_bits":
                out[m] = gamma
            elif m == "eta_bits_per_joule":
                out[m] = kpi.energy_efficiency_from(gamma, q, cfg.radio, cfg.constants) if q > 0 else math.nan
            elif m == "gamma_limit_bits":
                out[m] = kpi.download_capacity_limit(sc.geometry, cfg.radio, cfg.constants) if cfg.is_ntn else math.nan
        return out
    except (DegenerateOrbitError, kpi.UnboundedCapacityError):
        return {m: math.nan for m in metrics}


def cmd_sweep(cfg, args):
    values = _parse_values(args.axis, args.values)
    metrics = [m.strip() for m in args.metrics.split(",")] if args.metrics else [
        m for m in SWEEP_METRICS if cfg.is_ntn or m != "gamma_limit_bits"
    ]
    unknown = set(metrics) - set(SWEEP_METRICS)
    if unknown:
        raise ValueError(f"unknown sweep metrics {sorted(unknown)}")
    jobs = [(_apply(cfg, args.axis, v), metrics) for v in values]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(sweep_point, jobs))
    else:
        results = [sweep_point(j) for j in jobs]
    rows = []
    for v, res in zip(values, results):
        for m in metrics:
            rows.append((args.axis, v if isinstance(v, str) else _num(v), m, res[m]))
    return ("axis", "value", "metric", "result"), rows


def verify_config(cfg: ScenarioConfig, step: float | None = None, tolerance: float | None = None, workers: int = 1):
    """Analytic KPIs and CDFs against the brute-force simulator for one scenario."""
    sc = cfg.to_scenario()
    period = kpi.scenario_period(sc)
    grid = oracle.SimulationGrid.over_period(period, step or cfg.grid_step)
    trace = oracle.propagate(sc, grid, workers=workers)
    empirical = oracle.empirical_kpis(trace, period)
    analytic = kpi.evaluate(sc)
    tols = oracle.DEFAULT_TOLERANCES
    if tolerance is not None:
        tols = {k: (kind, tolerance) for k, (kind, _) in tols.items()}
    rows = [(r.metric, r.analytic, r.empirical, r.rel_err, r.passed) for r in oracle.compare_report(analytic, empirical, tols)]

    dist_cdf = NtnDistanceCdf(sc.geometry) if cfg.is_ntn else kpi.gs_distance_cdf(sc)
    lo, hi = dist_cdf.support
    sup = oracle.sup_distance(dist_cdf, oracle.empirical_cdf(trace, "distance"), np.linspace(lo, hi, 2001))
    rows.append(("distance_cdf_sup", 0.0, sup, sup, sup <= (tolerance or CDF_SUP_TOL)))
    cap_cdf = analytic.capacity_cdf
    grid_c = np.quantile(trace.capacity[trace.capacity > 0], np.linspace(0.025, 0.975, 20)) if trace.los.any() else [0.0]
    sup_c = oracle.sup_distance(cap_cdf, oracle.empirical_cdf(trace, "capacity"), grid_c)
    rows.append(("capacity_cdf_sup", 0.0, sup_c, sup_c, sup_c <= (tolerance or CAPACITY_CDF_TOL)))
    return rows


def cmd_verify(cfg, args):
    return ("metric", "analytic", "empirical", "rel_err", "pass"), verify_config(
        cfg, args.grid_step, args.tolerance, args.workers
    )


COMMANDS = {
    "distance": (cmd_distance, "distance to the serving receiver over one period"),
    "cdf": (cmd_cdf, "analytic distance or capacity CDF"),
    "contact": (cmd_contact, "contact probability and contact time"),
    "capacity": (cmd_capacity, "instantaneous capacity over one period"),
    "download": (cmd_download, "daily download volume (and its bound with --limit)"),
    "energy": (cmd_energy, "energy efficiency in bits per joule"),
    "sweep": (cmd_sweep, "sweep altitude, relay count or radio preset"),
    "verify": (cmd_verify, "compare analytic results with the time-stepped simulator"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", help="scenario file or bundled scenario name (repeatable)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
    common.add_argument("--workers", type=int, default=1, help="parallel workers for sweep/verify")
    common.add_argument("--grid-step", type=float, default=None, help="sampling step in seconds")
    common.add_argument("--tolerance", type=float, default=None, help="override every verify tolerance")

    ap = argparse.ArgumentParser(prog="leorelay", description="CubeSat downlink KPIs for ground and relay scenarios.")
    ap.add_argument("--version", action="version", version=f"leorelay {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "cdf":
            p.add_argument("--quantity", choices=("distance", "capacity"), default="distance")
            p.add_argument("--points", type=int, default=201)
        if name == "download":
            p.add_argument("--limit", action="store_true", help="also report the permanent-contact bound")
        if name == "sweep":
            p.add_argument("--axis", choices=("h_cs", "n_s", "preset"), required=True)
            p.add_argument("--values", required=True,
                           help="start:stop[:step] or a comma list (km for h_cs, names for preset)")
            p.add_argument("--metrics", default=None, help=f"comma list from {', '.join(SWEEP_METRICS)}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    refs = args.config
    if not refs:
        if args.command != "verify":
            print("error: --config is required", file=sys.stderr)
            return 2
        refs = [str(p) for p in bundled_scenarios()]
    fn = COMMANDS[args.command][0]
    failed = False
    for ref in refs:
        name = ref
        try:
            cfg = load_scenario(resolve_scenario(ref))
            name = cfg.name
            columns, rows = fn(cfg, args)
            rows = list(rows)
            suffix = f"sweep_{args.axis}" if args.command == "sweep" else args.command
            path = write_csv(args.out / f"{cfg.name}_{suffix}.csv", columns, rows, cfg, args.command)
        except (ScenarioParseError, ScenarioValidationError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except (ValueError, ArithmeticError, KeyError) as exc:
            print(f"error: [{name}] {exc}", file=sys.stderr)
            return 1
        if args.command == "verify":
            bad = [r[0] for r in rows if not r[4]]
            failed |= bool(bad)
            status = "FAIL " + ",".join(bad) if bad else "pass"
            print(f"{cfg.name}: {status}", file=sys.stderr)
        print(path)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

"""Brute-force time-stepped simulator used to cross-check the analytic results.

Geometry here is rebuilt from scratch with axis-angle rotations, explicit
segment-sphere occlusion tests and a direct elevation computation. Nothing
in this module calls the closed-form distance, blockage or CDF code, so
agreement between the two is meaningful.
"""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from leorelay.kpi import GsScenario, KpiReport, NtnScenario, Scenario, slant_absorption
from leorelay.linkbudget import RadioConfig

CHUNK = 100_000


class GridCoverageWarning(UserWarning):
    """The simulated span is not a whole number of repetition periods."""


@dataclass(frozen=True)
class SimulationGrid:
    t_start: float
    t_end: float
    step: float = 1.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.t_end < self.t_start:
            raise ValueError("t_end must not precede t_start")

    @classmethod
    def over_period(cls, period: float, step: float = 1.0, periods: int = 1) -> "SimulationGrid":
        """Half-open grid ``[0, periods * period)`` so every instant is counted once."""
        n = max(1, round(periods * period / step))
        return cls(0.0, (n - 1) * step, step)

    @property
    def count(self) -> int:
        return int(math.floor((self.t_end - self.t_start) / self.step + 1e-9)) + 1

    @property
    def span(self) -> float:
        return self.count * self.step

    def times(self) -> np.ndarray:
        return self.t_start + self.step * np.arange(self.count)


@dataclass(frozen=True, eq=False)
class TraceSet:
    t: np.ndarray
    link_distance: np.ndarray  # (n_links, n)
    link_los: np.ndarray       # (n_links, n)
    receiver_index: np.ndarray  # -1 where nothing is in view
    distance: np.ndarray       # selected receiver, or nearest link when none is in view
    los: np.ndarray
    snr: np.ndarray
    capacity: np.ndarray
    step: float
    day_length: float
    tx_power: float

    @property
    def nearest_distance(self) -> np.ndarray:
        return self.link_distance.min(axis=0)

    def __len__(self):
        return len(self.t)


def rotate(v: np.ndarray, axis: np.ndarray, angle) -> np.ndarray:
    """Rodrigues rotation of vectors ``v`` (..., 3) about a unit ``axis`` by ``angle``."""
    angle = np.asarray(angle, dtype=float)[..., None]
    k = np.asarray(axis, dtype=float)
    v = np.broadcast_to(v, np.broadcast_shapes(v.shape, angle.shape[:-1] + (3,)))
    cos, sin = np.cos(angle), np.sin(angle)
    return v * cos + np.cross(k, v) * sin + k * (v @ k)[..., None] * (1 - cos)


X, Y, Z = np.eye(3)


def orbit_positions(orbit, t, extra_phase: float = 0.0) -> np.ndarray:
    c = orbit.constants
    radius = c.earth_radius + orbit.altitude
    rate = math.sqrt(c.gravitational_parameter / radius**3)
    u = rate * np.asarray(t, dtype=float) + orbit.initial_phase + extra_phase
    p = rotate(np.array([radius, 0.0, 0.0]), Z, u)
    p = rotate(p, X, np.full(np.shape(u), orbit.inclination))
    return rotate(p, Z, np.full(np.shape(u), orbit.raan))


def station_positions(gs, t) -> np.ndarray:
    c = gs.constants
    spin = 2 * math.pi / c.earth_rotation_period
    base = rotate(np.array([c.earth_radius, 0.0, 0.0]), Y, -gs.latitude)
    return rotate(base, Z, gs.longitude + spin * np.asarray(t, dtype=float) - gs.earth_phase_at_epoch)


def segment_clears_sphere(p: np.ndarray, q: np.ndarray, radius: float) -> np.ndarray:
    """True where the segment ``p -> q`` stays outside the sphere (touching counts as clear)."""
    seg = q - p
    length2 = np.einsum("...i,...i->...", seg, seg)
    s = np.clip(-np.einsum("...i,...i->...", p, seg) / np.where(length2 > 0, length2, 1.0), 0.0, 1.0)
    closest = p + s[..., None] * seg
    return np.sqrt(np.einsum("...i,...i->...", closest, closest)) >= radius * (1 - 1e-12)


def elevation(station: np.ndarray, target: np.ndarray) -> np.ndarray:
    los = target - station
    up = station / np.linalg.norm(station, axis=-1, keepdims=True)
    return np.arcsin(np.clip(np.einsum("...i,...i->...", los, up) / np.linalg.norm(los, axis=-1), -1, 1))


def _noise_power(radio: RadioConfig, boltzmann: float) -> float:
    t_sys = radio.antenna_temperature + radio.reference_temperature * (10 ** (radio.noise_figure / 10) - 1)
    return boltzmann * t_sys * radio.bandwidth


def link_snr(radio: RadioConfig, d, absorption=1.0, speed_of_light: float = 2.998e8, boltzmann: float = 1.380649e-23):
    """SNR from first principles: EIRP, receive gain, free-space and absorption losses."""
    d = np.asarray(d, dtype=float)
    free_space = (4 * math.pi * d * radio.carrier / speed_of_light) ** 2
    rx = radio.tx_power * radio.tx_gain * radio.rx_gain / (free_space * absorption)
    return rx / _noise_power(radio, boltzmann)


def _chunk(scenario: Scenario, t: np.ndarray):
    c = scenario.constants
    cs = orbit_positions(scenario.cubesat, t)
    if isinstance(scenario, NtnScenario):
        ring = scenario.constellation
        others = np.stack([orbit_positions(ring.relay_orbit, t, 2 * math.pi * j / ring.count)
                           for j in range(ring.count)])
        los = segment_clears_sphere(cs[None], others, c.earth_radius)
        el = None
    else:
        others = np.stack([station_positions(gs, t) for gs in scenario.stations])
        el = np.stack([elevation(others[k], cs) for k in range(len(scenario.stations))])
        mask = np.array([gs.min_elevation for gs in scenario.stations])[:, None]
        los = (el >= mask) & segment_clears_sphere(others, cs[None], c.earth_radius)
    diff = others - cs[None]
    dist = np.sqrt(np.einsum("kni,kni->kn", diff, diff))
    return dist, los, el


def propagate(scenario: Scenario, grid: SimulationGrid, workers: int = 1) -> TraceSet:
    """Sample every link on ``grid`` and route to the nearest receiver in view."""
    t = grid.times()
    parts = [t[i:i + CHUNK] for i in range(0, len(t), CHUNK)]
    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda p: _chunk(scenario, p), parts))
    else:
        results = [_chunk(scenario, p) for p in parts]
    dist = np.concatenate([r[0] for r in results], axis=1)
    los = np.concatenate([r[1] for r in results], axis=1)

    masked = np.where(los, dist, np.inf)
    idx = np.argmin(masked, axis=0)
    any_los = los.any(axis=0)
    chosen = np.take_along_axis(dist, idx[None], 0)[0]
    selected = np.where(any_los, chosen, dist.min(axis=0))
    idx = np.where(any_los, idx, -1)

    absorption = np.ones(len(t))
    c = scenario.constants
    if isinstance(scenario, GsScenario) and scenario.absorption:
        el = np.concatenate([r[2] for r in results], axis=1)
        el_sel = np.take_along_axis(el, np.clip(idx, 0, None)[None], 0)[0]
        table = slant_absorption(scenario.radio.carrier, c, True)
        absorption = np.where(any_los, table.loss(np.clip(el_sel, 0.0, None)), 1.0)
    snr = np.where(any_los, link_snr(scenario.radio, selected, absorption, c.speed_of_light, c.boltzmann), 0.0)
    capacity = scenario.radio.bandwidth * np.log2(1 + snr)
    return TraceSet(t, dist, los, idx, selected, any_los, snr, capacity, grid.step, c.day_length,
                    scenario.radio.tx_power)


class EmpiricalCdf:
    """Right-continuous step CDF of a sample."""

    def __init__(self, values):
        self.values = np.sort(np.asarray(values, dtype=float).ravel())
        if len(self.values) == 0:
            raise ValueError("empirical CDF needs at least one sample")

    def __call__(self, x):
        out = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / len(self.values)
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, p):
        return np.quantile(self.values, p)


def empirical_cdf(trace: TraceSet, quantity: str = "distance") -> EmpiricalCdf:
    """Step CDF of ``distance`` (nearest link, occlusion ignored), ``capacity`` or ``snr``."""
    series = {
        "distance": trace.nearest_distance,
        "capacity": trace.capacity,
        "snr": trace.snr,
    }
    if quantity not in series:
        raise KeyError(f"unknown quantity {quantity!r}; choose from {sorted(series)}")
    return EmpiricalCdf(series[quantity])


def empirical_kpis(trace: TraceSet, period: float | None = None) -> KpiReport:
    """Time-average estimators: LOS fraction, Riemann-sum volume, bits per joule."""
    if period is not None:
        ratio = len(trace) * trace.step / period
        # a half-open grid can only match the period to within one step
        if abs(ratio - round(ratio)) * period > trace.step or round(ratio) == 0:
            warnings.warn(f"grid spans {ratio:.4f} repetition periods, not a whole number",
                          GridCoverageWarning, stacklevel=2)
    q = float(trace.los.mean())
    gamma = float(trace.capacity.mean()) * trace.day_length
    eta = gamma / (trace.tx_power * q * trace.day_length) if q > 0 else None
    span = len(trace) * trace.step
    return KpiReport(q, span, q * span, gamma, None, eta, (trace.t, trace.capacity), None)


@dataclass(frozen=True)
class MetricComparison:
    metric: str
    analytic: float
    empirical: float
    abs_err: float
    rel_err: float
    passed: bool


DEFAULT_TOLERANCES = {"Q": ("abs", 0.005), "gamma_bits": ("rel", 0.01), "eta_bits_per_joule": ("rel", 0.01)}


def compare_report(analytic: KpiReport, empirical: KpiReport,
                   tolerances: dict | None = None) -> list[MetricComparison]:
    """Per-metric absolute and relative error with pass/fail flags."""
    tolerances = DEFAULT_TOLERANCES if tolerances is None else tolerances
    a_m, e_m = analytic.metrics(), empirical.metrics()
    rows = []
    for name, (kind, tol) in tolerances.items():
        if name not in a_m or name not in e_m:
            continue
        a, e = a_m[name], e_m[name]
        abs_err = abs(a - e)
        rel_err = abs_err / abs(a) if a else (0.0 if e == 0 else math.inf)
        rows.append(MetricComparison(name, a, e, abs_err, rel_err, (abs_err if kind == "abs" else rel_err) <= tol))
    return rows


def sup_distance(f, g, grid) -> float:
    """Largest vertical gap between two CDFs evaluated on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    return float(np.max(np.abs(np.asarray(f(grid)) - np.asarray(g(grid)))))


def export_trace(trace: TraceSet, path, header: Sequence[str] = ()) -> None:
    """Write the trace as CSV; ``header`` lines are emitted as ``#`` comments first."""
    snr_db = np.full(len(trace), -np.inf)
    pos = trace.snr > 0
    snr_db[pos] = 10 * np.log10(trace.snr[pos])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "distance_m", "los", "snr_db", "capacity_bps", "receiver_index"])
        for row in zip(trace.t, trace.distance, trace.los, snr_db, trace.capacity, trace.receiver_index):
            w.writerow([f"{row[0]:.6f}", f"{row[1]:.6f}", int(row[2]), f"{row[3]:.6f}", f"{row[4]:.6f}", int(row[5])])

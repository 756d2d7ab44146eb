"""Visibility windows, repetition periods and link-distance CDFs.

Ground-station distances have no closed-form level crossings, so every
time-measure here comes from sign changes on a ``t_res`` sampling grid
refined by bisection. The relay case is closed form.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from leorelay.orbital import (
    GroundStation,
    NtnGeometry,
    OrbitSpec,
    distance_gs,
    gs_blockage_distance,
    gs_distance_bounds,
)

DEFAULT_T_RES = 60.0


class SamplingError(RuntimeError):
    """The sampling grid is too coarse to isolate every root."""


class NonSimpleRootWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray
    derivative_signs: np.ndarray

    def __len__(self):
        return len(self.roots)


@dataclass(frozen=True)
class VisibilityWindows:
    period: float
    windows: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        w = np.asarray(self.windows, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "windows", w)

    @property
    def total_contact(self) -> float:
        return float(np.sum(self.windows[:, 1] - self.windows[:, 0]))

    @property
    def contact_fraction(self) -> float:
        return self.total_contact / self.period

    @property
    def durations(self) -> np.ndarray:
        return self.windows[:, 1] - self.windows[:, 0]

    def indicator(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if len(self.windows) == 0:
            return np.zeros(t.shape, dtype=bool)
        k = np.searchsorted(self.windows[:, 0], t, side="right") - 1
        kk = np.clip(k, 0, None)
        return (k >= 0) & (t <= self.windows[kk, 1])


def merge_windows(period: float, *window_sets: np.ndarray) -> VisibilityWindows:
    """Union of interval sets on ``[0, period]``."""
    parts = [np.asarray(w, dtype=float).reshape(-1, 2) for w in window_sets]
    allw = np.concatenate(parts) if parts else np.empty((0, 2))
    if len(allw) == 0:
        return VisibilityWindows(period)
    allw = allw[np.argsort(allw[:, 0], kind="stable")]
    merged = [list(allw[0])]
    for a, b in allw[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return VisibilityWindows(period, np.array(merged))


def scenario_period_gs(orbit: OrbitSpec, t_res: float = DEFAULT_T_RES) -> float:
    """Ground scenario repetition period: LCM of day and orbit on the ``t_res`` grid."""
    if not t_res > 0:
        raise ValueError("t_res must be positive")
    t_day = orbit.constants.earth_rotation_period
    n_day = math.floor(t_day / t_res)
    n_orb = math.floor(orbit.period / t_res)
    return t_res * math.lcm(n_day, n_orb)


def sample_times(period: float, t_res: float) -> np.ndarray:
    n = max(1, math.ceil(period / t_res - 1e-9))
    return np.linspace(0.0, period, n + 1)


def find_simple_roots(
    g: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    t_res: float,
    *,
    samples: np.ndarray | None = None,
    times: np.ndarray | None = None,
    xtol: float = 1e-6,
    derivative_tol: float = 1e-9,
) -> RootSet:
    """Locate the sign changes of a vectorised ``g`` on ``interval``.

    ``g`` is sampled every ``t_res`` (or ``samples`` given at ``times`` are
    reused), each sign-change cell is bisected down to ``xtol``, and the
    derivative at every root is checked by central differences.
    """
    t0, t1 = interval
    if times is None:
        times = t0 + sample_times(t1 - t0, t_res)
    if samples is None:
        samples = g(times)
    pos = samples > 0
    idx = np.flatnonzero(pos[:-1] != pos[1:])
    if len(idx) == 0:
        return RootSet(np.empty(0), np.empty(0))

    a, b = times[idx].copy(), times[idx + 1].copy()
    left_pos = pos[idx]
    while np.max(b - a) > xtol:
        m = 0.5 * (a + b)
        same = (g(m) > 0) == left_pos
        a = np.where(same, m, a)
        b = np.where(same, b, m)
    roots = 0.5 * (a + b)
    signs = np.where(left_pos, -1.0, 1.0)

    h = min(1e-3 * t_res, 1.0)
    slope = (g(roots + h) - g(roots - h)) / (2 * h)
    flat = np.abs(slope) < derivative_tol
    if np.any(flat):
        warnings.warn(
            f"{int(flat.sum())} root(s) with |g'| < {derivative_tol:g}; crossings may not be simple",
            NonSimpleRootWarning,
            stacklevel=2,
        )
    # slopes below this are indistinguishable from round-off in g
    noise = max(1e3 * derivative_tol, 1e-6 * float(np.ptp(samples)) / t_res)
    wrong = (~flat) & (np.sign(slope) != signs) & (np.abs(slope) > noise)
    if np.any(wrong):
        raise SamplingError(
            f"derivative sign disagrees with the sampled crossing at t={roots[wrong][0]:.3f} s; "
            f"t_res={t_res} s is too coarse"
        )
    return RootSet(roots, signs)


def _illinois(fn, a, b, fa, fb, target, xtol, max_iter=100):
    """Bracketed false position with the Illinois down-weighting, vectorised."""
    a, b, fa, fb = a.copy(), b.copy(), fa.copy(), fb.copy()
    active = np.ones(len(a), dtype=bool)
    side = np.zeros(len(a), dtype=int)
    for _ in range(max_iter):
        if not np.any(active):
            break
        k = np.flatnonzero(active)
        ak, bk, fak, fbk = a[k], b[k], fa[k], fb[k]
        denom = fbk - fak
        m = np.where(denom != 0, bk - fbk * (bk - ak) / np.where(denom != 0, denom, 1.0), 0.5 * (ak + bk))
        # keep the iterate strictly inside the bracket
        m = np.clip(m, ak + 0.25 * xtol, bk - 0.25 * xtol)
        fm = fn(m) - target[k]
        left = np.sign(fm) == np.sign(fak)
        # replace the endpoint on the side of fm; halve the stale one if it repeats
        na = np.where(left, m, ak)
        nfa = np.where(left, fm, np.where(side[k] == -1, 0.5 * fak, fak))
        nb = np.where(left, bk, m)
        nfb = np.where(left, np.where(side[k] == 1, 0.5 * fbk, fbk), fm)
        side[k] = np.where(left, 1, -1)
        a[k], b[k], fa[k], fb[k] = na, nb, nfa, nfb
        active[k] = ((nb - na) > xtol) & (fm != 0)
        done_exact = fm == 0
        a[k[done_exact]] = b[k[done_exact]] = m[done_exact]
    return 0.5 * (a + b)


def level_crossings(
    fn: Callable[[np.ndarray], np.ndarray],
    times: np.ndarray,
    samples: np.ndarray,
    levels: np.ndarray,
    xtol: float = 1e-6,
    max_cells: int = 4_000_000,
):
    """Crossings of ``fn(t) = level`` for many levels in one bisection sweep.

    Returns ``(level_index, root, sign)`` sorted by level then time; ``sign``
    is +1 where ``fn`` rises through the level. Unlike
    :func:`find_simple_roots` there is no derivative check, so use it for
    bulk CDF evaluation on a grid already validated by the scalar path.
    """
    levels = np.asarray(levels, dtype=float)
    chunk = max(1, max_cells // max(len(samples), 1))
    idx_out, root_out, sign_out = [], [], []
    for start in range(0, len(levels), chunk):
        lv = levels[start:start + chunk]
        pos = samples[None, :] > lv[:, None]
        li, ci = np.nonzero(pos[:, :-1] != pos[:, 1:])
        if len(li) == 0:
            continue
        target = lv[li]
        left_pos = pos[li, ci]
        idx_out.append(li + start)
        root_out.append(_illinois(fn, times[ci], times[ci + 1], samples[ci] - target,
                                  samples[ci + 1] - target, target, xtol))
        sign_out.append(np.where(left_pos, -1.0, 1.0))
    if not idx_out:
        return np.empty(0, dtype=int), np.empty(0), np.empty(0)
    return np.concatenate(idx_out), np.concatenate(root_out), np.concatenate(sign_out)


def sublevel_measure(rs: RootSet, period: float, starts_inside: bool) -> float:
    """Time spent with ``g <= 0`` on ``[0, period]`` from the roots of ``g``.

    The four branches correspond to whether ``g`` starts and ends above or
    below zero, read off the derivative signs at the first and last root.
    """
    xi = rs.roots
    k = len(xi)
    if k == 0:
        return period if starts_inside else 0.0
    odd = xi[0::2].sum()   # xi_1, xi_3, ...
    even = xi[1::2].sum()  # xi_2, xi_4, ...
    first, last = rs.derivative_signs[0], rs.derivative_signs[-1]
    if first < 0 and last > 0:
        return even - odd
    if first > 0 and last > 0:
        return odd - even
    if first < 0 and last < 0:
        return period + even - odd
    return period + odd - even


def sublevel_windows(rs: RootSet, period: float, starts_inside: bool) -> np.ndarray:
    """Intervals with ``g <= 0`` as an ``(n, 2)`` array."""
    edges = [0.0] if starts_inside else []
    edges.extend(rs.roots.tolist())
    if len(edges) % 2:
        edges.append(period)
    return np.array(edges, dtype=float).reshape(-1, 2)


def refine_extrema(fn, times: np.ndarray, samples: np.ndarray, xtol: float = 1e-3):
    """Insert the exact location of every sampled interior extremum into the grid.

    A dip below (or spike above) a level that fits between two samples has no
    sign change on the raw grid; with the extremum itself sampled, every
    excursion of a function with well separated extrema shows up.
    """
    s = samples
    is_min = (s[1:-1] < s[:-2]) & (s[1:-1] <= s[2:])
    is_max = (s[1:-1] > s[:-2]) & (s[1:-1] >= s[2:])
    k = np.flatnonzero(is_min | is_max) + 1
    if len(k) == 0:
        return times, samples
    sign = np.where(is_min[k - 1], 1.0, -1.0)
    a, b = times[k - 1].copy(), times[k + 1].copy()
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = sign * fn(c), sign * fn(d)
    while np.max(b - a) > xtol:
        left = fc < fd
        # golden-section step, keeping the better interior point
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new = np.where(left, b - inv_phi * (b - a), a + inv_phi * (b - a))
        fnew = sign * fn(new)
        c, d, fc, fd = (
            np.where(left, new, d),
            np.where(left, c, new),
            np.where(left, fnew, fd),
            np.where(left, fc, fnew),
        )
    t_ext = 0.5 * (a + b)
    # keep strictly inside the grid so no duplicate times appear
    t_ext = np.clip(t_ext, times[k - 1] + 0.5 * xtol, times[k + 1] - 0.5 * xtol)
    t_all = np.concatenate([times, t_ext])
    order = np.argsort(t_all, kind="stable")
    t_all = t_all[order]
    s_all = np.concatenate([samples, fn(t_ext)])[order]
    keep = np.concatenate([[True], np.diff(t_all) > 0])
    return t_all[keep], s_all[keep]


class GsDistanceProcess:
    """Distance from one CubeSat to one station, sampled once over a period.

    Root sets per level are memoised, so repeated CDF queries only pay for
    the bisection.
    """

    def __init__(self, orbit: OrbitSpec, gs: GroundStation, period: float, t_res: float = DEFAULT_T_RES):
        if orbit.constants != gs.constants:
            raise ValueError("orbit and ground station use different physical constants")
        self.orbit, self.gs = orbit, gs
        self.period, self.t_res = period, t_res
        times = sample_times(period, t_res)
        self.times, self.samples = refine_extrema(self.distance, times, distance_gs(orbit, gs, times))
        self.d_blockage = gs_blockage_distance(orbit, gs.min_elevation)
        self.d_min, self.d_max = gs_distance_bounds(orbit, gs)
        self._roots: dict[float, RootSet] = {}

    def distance(self, t):
        return distance_gs(self.orbit, self.gs, t)

    def roots(self, level: float) -> RootSet:
        level = float(level)
        rs = self._roots.get(level)
        if rs is None:
            rs = find_simple_roots(
                lambda t: self.distance(t) - level,
                (0.0, self.period),
                self.t_res,
                samples=self.samples - level,
                times=self.times,
            )
            if len(self._roots) > 4096:
                self._roots.clear()
            self._roots[level] = rs
        return rs

    def starts_below(self, level: float) -> bool:
        return bool(self.samples[0] <= level)

    def sublevel_measure(self, level: float) -> float:
        return sublevel_measure(self.roots(level), self.period, self.starts_below(level))

    def sublevel_windows(self, level: float) -> np.ndarray:
        return sublevel_windows(self.roots(level), self.period, self.starts_below(level))

    def visibility(self) -> VisibilityWindows:
        return VisibilityWindows(self.period, self.sublevel_windows(self.d_blockage))

    def _crossings_many(self, levels):
        levels = np.asarray(levels, dtype=float)
        li, roots, signs = level_crossings(self.distance, self.times, self.samples, levels)
        return levels, li, roots, signs

    def sublevel_measure_many(self, levels) -> np.ndarray:
        """Time spent at distance ``<= level`` for each level (window-sum form)."""
        levels, li, roots, signs = self._crossings_many(levels)
        # leaving contributes +t, entering -t; finishing inside adds the period
        out = np.bincount(li, weights=signs * roots, minlength=len(levels))
        return out + np.where(self.samples[-1] <= levels, self.period, 0.0)

    def sublevel_windows_many(self, levels) -> list[np.ndarray]:
        levels, li, roots, _ = self._crossings_many(levels)
        bounds = np.searchsorted(li, np.arange(len(levels) + 1))
        out = []
        for k, lv in enumerate(levels):
            rs = RootSet(roots[bounds[k]:bounds[k + 1]], np.empty(0))
            out.append(sublevel_windows(rs, self.period, bool(self.samples[0] <= lv)))
        return out


def visibility_gs(orbit: OrbitSpec, gs: GroundStation, t_res: float = DEFAULT_T_RES, period: float | None = None):
    """Windows where the CubeSat is above the station's elevation mask."""
    period = scenario_period_gs(orbit, t_res) if period is None else period
    return GsDistanceProcess(orbit, gs, period, t_res).visibility()


class GsDistanceCdf:
    """CDF of the (nearest-station) CubeSat-to-ground distance for ``t ~ U[0, T_GS]``.

    For one station the interior uses the four-case root formula; for several
    stations it is the measure of the union of per-station sublevel sets,
    i.e. the CDF of the pointwise minimum distance.
    """

    def __init__(self, orbit: OrbitSpec, stations: Sequence[GroundStation], t_res: float = DEFAULT_T_RES,
                 period: float | None = None):
        if not stations:
            raise ValueError("at least one ground station is required")
        self.orbit = orbit
        self.period = scenario_period_gs(orbit, t_res) if period is None else period
        self.processes = [GsDistanceProcess(orbit, gs, self.period, t_res) for gs in stations]
        self.d_lo = min(p.d_min for p in self.processes)
        self.d_hi = min(p.d_max for p in self.processes)
        self._visibility: VisibilityWindows | None = None

    @property
    def support(self) -> tuple[float, float]:
        return self.d_lo, self.d_hi

    def visibility(self) -> VisibilityWindows:
        if self._visibility is None:
            self._visibility = merge_windows(self.period, *[p.visibility().windows for p in self.processes])
        return self._visibility

    @property
    def contact_mass(self) -> float:
        return self.visibility().contact_fraction

    def measure_below(self, levels: Sequence[float]) -> float:
        """Time fraction with some station ``k`` at distance ``<= levels[k]``."""
        if len(self.processes) == 1:
            return self.processes[0].sublevel_measure(levels[0]) / self.period
        ws = [p.sublevel_windows(lv) for p, lv in zip(self.processes, levels)]
        return merge_windows(self.period, *ws).contact_fraction

    def measure_below_many(self, levels: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`measure_below`; ``levels`` has shape ``(n_stations, m)``."""
        levels = np.asarray(levels, dtype=float)
        if len(self.processes) == 1:
            return self.processes[0].sublevel_measure_many(levels[0]) / self.period
        per_station = [p.sublevel_windows_many(lv) for p, lv in zip(self.processes, levels)]
        return np.array([merge_windows(self.period, *ws).contact_fraction for ws in zip(*per_station)])

    def _scalar(self, d: float) -> float:
        if d <= self.d_lo:
            return 0.0
        if d >= self.d_hi:
            return 1.0
        return min(1.0, max(0.0, self.measure_below([d] * len(self.processes))))

    def __call__(self, d):
        d = np.asarray(d, dtype=float)
        if d.ndim == 0:
            return self._scalar(float(d))
        flat = d.ravel()
        out = np.where(flat <= self.d_lo, 0.0, 1.0)
        inner = (flat > self.d_lo) & (flat < self.d_hi)
        if np.any(inner):
            lv = np.broadcast_to(flat[inner], (len(self.processes), int(inner.sum())))
            out[inner] = np.clip(self.measure_below_many(lv), 0.0, 1.0)
        return out.reshape(d.shape)

    def visible_measure_below(self, d):
        """P(some station is visible and at distance <= d); vectorised over ``d``."""
        d = np.asarray(d, dtype=float)
        if d.ndim == 0:
            return self.measure_below([min(float(d), p.d_blockage) for p in self.processes])
        lv = np.stack([np.minimum(d.ravel(), p.d_blockage) for p in self.processes])
        return self.measure_below_many(lv).reshape(d.shape)


def cdf_distance_gs(orbit: OrbitSpec, gs: GroundStation, d, t_res: float = DEFAULT_T_RES):
    return GsDistanceCdf(orbit, [gs], t_res)(d)


def min_distance_multi_gs(orbit: OrbitSpec, stations: Sequence[GroundStation], t):
    """Distance to, and index of, the nearest *visible* station.

    Where no station is visible the nearest station distance is returned with
    index -1. Ties go to the lowest index.
    """
    if not stations:
        raise ValueError("at least one ground station is required")
    t = np.asarray(t, dtype=float)
    d = np.stack([distance_gs(orbit, gs, t) for gs in stations])
    d_b = np.array([gs_blockage_distance(orbit, gs.min_elevation) for gs in stations])
    d_b = d_b.reshape((-1,) + (1,) * t.ndim)
    visible = d < d_b
    masked = np.where(visible, d, np.inf)
    idx = np.argmin(masked, axis=0)
    any_vis = visible.any(axis=0)
    dist = np.where(any_vis, np.take_along_axis(masked, idx[None], 0)[0], d.min(axis=0))
    idx = np.where(any_vis, idx, -1)
    if t.ndim == 0:
        return float(dist), int(idx)
    return dist, idx


def visibility_ntn(geom: NtnGeometry) -> VisibilityWindows:
    """Relay line-of-sight windows over one relative period.

    With zero phase offset this is ``[0, a]`` and ``[T - a, T]`` with
    ``a = N*alpha*T/(2*pi)``; once ``N >= ceil(pi/alpha)`` it is the whole period.
    """
    period = geom.period
    if geom.continuous:
        return VisibilityWindows(period, np.array([[0.0, period]]))
    half = geom.alpha / geom.delta_omega
    spacing = 2 * math.pi / geom.n_relays
    t_align = np.mod(-geom.drift_sign * geom.phase_offset, spacing) / geom.delta_omega
    ws = []
    for centre in (t_align - period, t_align, t_align + period):
        a, b = max(centre - half, 0.0), min(centre + half, period)
        if b > a:
            ws.append((a, b))
    return merge_windows(period, np.array(ws))


class NtnDistanceCdf:
    """Closed-form CDF of the distance to the nearest relay, ``t ~ U[0, T_NTN]``."""

    def __init__(self, geom: NtnGeometry):
        self.geom = geom
        self.d_lo, self.d_hi = geom.d_min, geom.d_max

    @property
    def support(self) -> tuple[float, float]:
        return self.d_lo, self.d_hi

    @property
    def contact_mass(self) -> float:
        return 1.0 if self.geom.continuous else self.geom.n_relays * self.geom.alpha / math.pi

    def __call__(self, d):
        g = self.geom
        d = np.asarray(d, dtype=float)
        sigma = (g.r_cubesat**2 + g.r_relay**2 - d**2) / (2 * g.r_cubesat * g.r_relay)
        interior = g.n_relays / math.pi * np.arccos(np.clip(sigma, -1.0, 1.0))
        out = np.where(d <= self.d_lo, 0.0, np.where(d >= self.d_hi, 1.0, np.clip(interior, 0.0, 1.0)))
        return float(out) if out.ndim == 0 else out


def cdf_distance_ntn(geom: NtnGeometry, d):
    return NtnDistanceCdf(geom)(d)

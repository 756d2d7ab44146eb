import csv
import dataclasses
import math

import numpy as np
import pytest

from conftest import ring
from leorelay.kpi import GsScenario, NtnScenario, evaluate
from leorelay.linkbudget import preset
from leorelay.oracle import (
    EmpiricalCdf,
    GridCoverageWarning,
    SimulationGrid,
    compare_report,
    empirical_cdf,
    empirical_kpis,
    export_trace,
    orbit_positions,
    propagate,
    rotate,
    segment_clears_sphere,
    station_positions,
)
from leorelay.orbital import GroundStation, OrbitSpec, cubesat_position, gs_position, sso_inclination

KU = preset("Ku")


def test_positions_match_analytic_model():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        orbit = OrbitSpec(rng.uniform(300e3, 2500e3), rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi),
                          rng.uniform(0, 2 * np.pi))
        gs = GroundStation(rng.uniform(-1.5, 1.5), rng.uniform(-np.pi, np.pi))
        t = rng.uniform(0, 30 * 86400, 1000)
        for ours, theirs in ((orbit_positions(orbit, t), cubesat_position(orbit, t)),
                             (station_positions(gs, t), gs_position(gs, t))):
            err = np.linalg.norm(ours - theirs, axis=-1) / np.linalg.norm(theirs, axis=-1)
            worst = max(worst, float(err.max()))
    assert worst < 1e-9


def test_rotate_quarter_turn():
    assert np.allclose(rotate(np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), math.pi / 2), [0, 1, 0])


def test_segment_sphere():
    p = np.array([2.0, 0, 0])
    assert not segment_clears_sphere(p, np.array([-2.0, 0, 0]), 1.0)
    assert segment_clears_sphere(p, np.array([2.0, 3.0, 0]), 1.0)
    assert segment_clears_sphere(p, np.array([1.0, 0, 0]), 1.0)  # touching counts as clear


def test_grid_half_open():
    g = SimulationGrid.over_period(10.0, 1.0)
    assert g.count == 10 and g.span == 10.0
    assert g.times()[-1] == 9.0
    with pytest.raises(ValueError):
        SimulationGrid(0, 1, 0)


def test_empirical_cdf_steps():
    f = EmpiricalCdf([3.0, 1.0, 2.0, 2.0])
    assert f(0.5) == 0.0 and f(2.0) == 0.75 and f(3.0) == 1.0
    with pytest.raises(ValueError):
        EmpiricalCdf([])


def test_unknown_quantity():
    scen = NtnScenario(*ring(1000, 3), KU)
    trace = propagate(scen, SimulationGrid(0, 100, 10))
    with pytest.raises(KeyError):
        empirical_cdf(trace, "latency")


def test_partial_period_warns():
    scen = NtnScenario(*ring(1000, 3), KU)
    trace = propagate(scen, SimulationGrid(0, 1000, 10))
    with pytest.warns(GridCoverageWarning):
        empirical_kpis(trace, scen.geometry.period)


def test_compare_identical_reports():
    rep = evaluate(NtnScenario(*ring(2000, 2), KU))
    rows = compare_report(rep, rep)
    assert all(r.abs_err == 0 and r.rel_err == 0 and r.passed for r in rows)


def test_compare_perturbed_gamma():
    rep = evaluate(NtnScenario(*ring(2000, 2), KU))
    bumped = dataclasses.replace(rep, gamma=rep.gamma * 1.01)
    row = next(r for r in compare_report(rep, bumped) if r.metric == "gamma_bits")
    assert row.rel_err == pytest.approx(0.01, rel=1e-9)


@pytest.mark.parametrize("h,n,phase", [(400, 3, 0.2), (2000, 1, 1.0), (1500, 10, 0.0)])
def test_ntn_kpis_agree(h, n, phase):
    scen = NtnScenario(*ring(h, n, initial_phase=phase), KU)
    analytic = evaluate(scen)
    emp = empirical_kpis(propagate(scen, SimulationGrid.over_period(analytic.period, 2.0)), analytic.period)
    assert all(r.passed for r in compare_report(analytic, emp))


def test_gs_kpis_agree_and_converge(svalbard):
    orbit = OrbitSpec(1000e3, sso_inclination(1000e3))
    scen = GsScenario(orbit, (svalbard,), preset("SubTHz"))
    analytic = evaluate(scen)
    coarse = empirical_kpis(propagate(scen, SimulationGrid.over_period(analytic.period, 4.0)), analytic.period)
    fine = empirical_kpis(propagate(scen, SimulationGrid.over_period(analytic.period, 2.0)), analytic.period)
    assert all(r.passed for r in compare_report(analytic, fine))
    # halving the step moves the estimates by less than the tolerances
    assert abs(coarse.q - fine.q) < 0.005
    assert abs(coarse.gamma - fine.gamma) / fine.gamma < 0.01


def test_multi_gs_receiver_routing(svalbard):
    other = GroundStation(math.radians(67.9), math.radians(21.1), math.radians(10))
    orbit = OrbitSpec(600e3, sso_inclination(600e3))
    trace = propagate(GsScenario(orbit, (svalbard, other), KU, absorption=False), SimulationGrid(0, 86400, 5))
    assert set(np.unique(trace.receiver_index)) == {-1, 0, 1}
    vis = trace.los
    chosen = trace.link_distance[trace.receiver_index[vis], np.flatnonzero(vis)]
    both = trace.link_los.all(axis=0)
    assert np.allclose(chosen, trace.distance[vis])
    assert np.all(trace.distance[both] == trace.link_distance[:, both].min(axis=0))


def test_workers_do_not_change_trace(svalbard):
    scen = GsScenario(OrbitSpec(500e3, 1.7), (svalbard,), KU)
    grid = SimulationGrid(0, 250_000, 1.0)
    one, four = propagate(scen, grid, 1), propagate(scen, grid, 4)
    assert np.array_equal(one.capacity, four.capacity)
    assert np.array_equal(one.receiver_index, four.receiver_index)


def test_export_trace(tmp_path):
    trace = propagate(NtnScenario(*ring(2000, 1), KU), SimulationGrid(0, 600, 60))
    path = tmp_path / "trace.csv"
    export_trace(trace, path, header=["scenario=test"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# scenario=test"
    rows = list(csv.DictReader(lines[1:]))
    assert list(rows[0]) == ["t", "distance_m", "los", "snr_db", "capacity_bps", "receiver_index"]
    assert len(rows) == len(trace)

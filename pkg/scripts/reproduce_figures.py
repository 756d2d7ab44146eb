"""Write the data series behind the standard result plots as CSV files.

    python scripts/reproduce_figures.py [--out figures] [--quick]

Each file holds one tidy table; plotting is left to the reader's tool of choice.
"""
import argparse
import csv
import math
from pathlib import Path

import numpy as np

from leorelay.kpi import (
    BITS_PER_GB,
    BITS_PER_TB,
    GsScenario,
    NtnScenario,
    capacity_cdf,
    channel_capacity,
    contact_probability,
    download_capacity,
    download_capacity_limit,
    energy_efficiency,
)
from leorelay.linkbudget import preset
from leorelay.orbital import NtnConstellation, OrbitSpec, ntn_geometry, sso_inclination
from leorelay.scenario import GsCatalog

PRESETS = ("Ku", "SubTHz", "SubTHzNG")
RELAY_KM = 550.0


def ntn(h_km: float, n: int, radio: str) -> NtnScenario:
    cs = OrbitSpec(h_km * 1e3)
    return NtnScenario(cs, NtnConstellation(OrbitSpec(RELAY_KM * 1e3), n), preset(radio))


def gs(h_km: float, group: str, radio: str) -> GsScenario:
    orbit = OrbitSpec(h_km * 1e3, sso_inclination(h_km * 1e3))
    stations = tuple(e.station(orbit.constants) for e in GsCatalog.load().select(group))
    return GsScenario(orbit, stations, preset(radio))


def write(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        out.writerows(rows)
    print(f"wrote {path}")


def capacity_vs_distance(out: Path) -> None:
    d = np.geomspace(10e3, 10_000e3, 200)
    rows = [(p, x / 1e3, c / 1e9) for p in PRESETS for x, c in zip(d, channel_capacity(preset(p), d))]
    write(out / "capacity_vs_distance.csv", ["preset", "d_km", "capacity_gbps"], rows)


def relay_geometry(out: Path) -> None:
    rows = []
    for h in (400, 1000, 2000):
        for n in range(1, 21):
            g = ntn_geometry(OrbitSpec(h * 1e3), NtnConstellation(OrbitSpec(RELAY_KM * 1e3), n))
            q = 1.0 if g.continuous else n * g.alpha / math.pi
            rows.append((h, n, g.d_max / 1e3, g.d_blockage / 1e3, q, q * g.period / 3600))
    write(out / "relay_geometry.csv", ["h_cs_km", "n_s", "d_max_km", "d_b_km", "Q", "contact_h"], rows)


def capacity_cdfs(out: Path) -> None:
    rows = []
    for p in PRESETS:
        cdf = capacity_cdf(ntn(400, 10, p))
        for c in np.linspace(0.0, cdf.c_max, 400):
            rows.append((p, c / 1e9, float(cdf(c))))
    write(out / "capacity_cdf_ntn400.csv", ["preset", "c_gbps", "F"], rows)


def volume_vs_relays(out: Path, n_max: int) -> None:
    rows = []
    for h in (400, 2000):
        for p in PRESETS:
            limit = download_capacity_limit(ntn(h, 1, p).geometry, preset(p))
            for n in range(1, n_max + 1):
                rows.append((h, p, n, download_capacity(ntn(h, n, p)) / BITS_PER_TB, limit / BITS_PER_TB))
    write(out / "volume_vs_relays.csv", ["h_cs_km", "preset", "n_s", "gamma_tb", "limit_tb"], rows)


def altitude_sweep(out: Path, heights, gs_heights) -> None:
    rows = []
    for p in PRESETS:
        for n in (1, 3, 10):
            for h in heights:
                scen = ntn(h, n, p)
                rows.append((f"NTN N={n}", p, h, contact_probability(scen),
                             download_capacity(scen) / BITS_PER_GB, energy_efficiency(scen) / 1e9))
        for label, group in (("GS single", "Svalbard"), ("GS multi", "group:sample")):
            for h in gs_heights:
                scen = gs(h, group, p)
                rows.append((label, p, h, contact_probability(scen),
                             download_capacity(scen) / BITS_PER_GB, energy_efficiency(scen) / 1e9))
    write(out / "altitude_sweep.csv", ["architecture", "preset", "h_cs_km", "Q", "gamma_gb", "eta_gbpj"], rows)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("figures"))
    parser.add_argument("--quick", action="store_true", help="coarser sweeps for a fast look")
    args = parser.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    heights = [h for h in range(400, 2001, 200 if args.quick else 50) if h != 550]
    gs_heights = (400, 1000, 2000) if args.quick else (400, 600, 800, 1000, 1500, 2000)
    capacity_vs_distance(args.out)
    relay_geometry(args.out)
    capacity_cdfs(args.out)
    volume_vs_relays(args.out, 20 if args.quick else 60)
    altitude_sweep(args.out, heights, gs_heights)


if __name__ == "__main__":
    main()

"""Regenerate the shipped reference atmosphere (ITU-R P.835 mean annual global).

    python scripts/build_atmosphere_profile.py [--step-km 0.25] [--out PATH]
"""
import argparse
from pathlib import Path

import numpy as np

R_GEOPOT = 6356.766  # km
SURFACE_RHO = 7.5    # g/m^3
RHO_SCALE_HEIGHT = 2.0  # km
MIN_MIXING_RATIO = 2e-6


def geopotential(h):
    return R_GEOPOT * h / (R_GEOPOT + h)


def temperature(h):
    hp = geopotential(h)
    conds = [
        hp <= 11,
        hp <= 20,
        hp <= 32,
        hp <= 47,
        hp <= 51,
        hp <= 71,
        hp <= 84.852,
        h <= 91,
    ]
    vals = [
        288.15 - 6.5 * hp,
        np.full_like(hp, 216.65),
        216.65 + (hp - 20),
        228.65 + 2.8 * (hp - 32),
        np.full_like(hp, 270.65),
        270.65 - 2.8 * (hp - 51),
        214.65 - 2.0 * (hp - 71),
        np.full_like(hp, 186.8673),
    ]
    upper = 263.1905 - 76.3232 * np.sqrt(np.clip(1 - ((h - 91) / 19.9429) ** 2, 0, None))
    return np.select(conds, vals, default=upper)


def pressure(h):
    hp = geopotential(h)
    with np.errstate(invalid="ignore", divide="ignore"):
        conds = [hp <= 11, hp <= 20, hp <= 32, hp <= 47, hp <= 51, hp <= 71, hp <= 84.852]
        vals = [
            1013.25 * (288.15 / (288.15 - 6.5 * hp)) ** (-34.1632 / 6.5),
            226.3226 * np.exp(-34.1632 * (hp - 11) / 216.65),
            54.74980 * (216.65 / (216.65 + (hp - 20))) ** 34.1632,
            8.680422 * (228.65 / (228.65 + 2.8 * (hp - 32))) ** (34.1632 / 2.8),
            1.109106 * np.exp(-34.1632 * (hp - 47) / 270.65),
            0.6694167 * (270.65 / (270.65 - 2.8 * (hp - 51))) ** (-34.1632 / 2.8),
            0.03956649 * (214.65 / (214.65 - 2.0 * (hp - 71))) ** (-34.1632 / 2.0),
        ]
        upper = np.exp(95.571899 - 4.011801 * h + 6.424731e-2 * h**2 - 4.789660e-4 * h**3 + 1.340543e-6 * h**4)
        return np.select(conds, vals, default=upper)


def water_vapour_density(h, t, p):
    rho = SURFACE_RHO * np.exp(-h / RHO_SCALE_HEIGHT)
    e = rho * t / 216.7
    # above the hygropause the mixing ratio stays constant
    e_floor = MIN_MIXING_RATIO * p
    return np.where(e < e_floor, e_floor * 216.7 / t, rho)


def main():
    here = Path(__file__).resolve().parent.parent
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--step-km", type=float, default=0.25)
    ap.add_argument("--out", type=Path, default=here / "src/leorelay/data/p835_mean_annual_global.txt")
    args = ap.parse_args()

    h = np.round(np.arange(0.0, 100.0 + args.step_km / 2, args.step_km), 6)
    t = temperature(h)
    p = pressure(h)
    rho = water_vapour_density(h, t, p)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# Mean annual global reference atmosphere, ITU-R P.835 section 1.\n")
        fh.write(f"# Generated by scripts/build_atmosphere_profile.py, step {args.step_km} km.\n")
        fh.write(f"# Water vapour: {SURFACE_RHO} g/m^3 * exp(-h/{RHO_SCALE_HEIGHT} km), "
                 f"floored at mixing ratio {MIN_MIXING_RATIO:g}.\n")
        fh.write("# columns: altitude_km pressure_hPa temperature_K water_vapour_g_m3\n")
        for row in zip(h, p, t, rho):
            fh.write("{:.3f} {:.8e} {:.4f} {:.8e}\n".format(*row))
    print(f"wrote {len(h)} rows to {args.out}")


if __name__ == "__main__":
    main()

import csv
import math
import subprocess
import sys

import numpy as np
import pytest

from leorelay.cli import main
from leorelay.kpi import BITS_PER_TB


def read(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# leorelay ") and "config_sha256=" in lines[0]
    return list(csv.DictReader(lines[1:]))


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def sweep_series(rows, metric):
    pts = [(float(r["value"]), float(r["result"])) for r in rows if r["metric"] == metric]
    return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def test_contact_full_coverage(tmp_path):
    assert run(tmp_path, "contact", "--config", "multi_ntn_400") == 0
    (row,) = read(tmp_path / "multi_ntn_400_contact.csv")
    assert float(row["Q"]) == 1.0
    assert float(row["Tc_s"]) == float(row["T_s"])


def test_download_limit_ku(tmp_path):
    assert run(tmp_path, "download", "--limit", "--config", "single_ntn_2000") == 0
    (row,) = read(tmp_path / "single_ntn_2000_download.csv")
    assert float(row["gamma_limit_bits"]) / BITS_PER_TB == pytest.approx(10, rel=0.05)
    assert float(row["gamma_bits"]) < float(row["gamma_limit_bits"])


def test_download_limit_needs_relays(tmp_path, capsys):
    assert run(tmp_path, "download", "--limit", "--config", "single_gs_svalbard_400") == 1
    assert "relay" in capsys.readouterr().err


def test_verify_bundled_suite(tmp_path, capsys):
    assert run(tmp_path, "verify", "--workers", "2") == 0
    err = capsys.readouterr().err
    assert "FAIL" not in err and err.count("pass") == 5
    for path in tmp_path.glob("*_verify.csv"):
        assert all(r["pass"] == "1" for r in read(path))


@pytest.mark.parametrize("command", ["distance", "cdf", "capacity", "contact", "energy"])
def test_outputs_are_deterministic(tmp_path, command):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, command, "--config", "multi_ntn_2000_offset") == 0
    assert run(b, command, "--config", "multi_ntn_2000_offset") == 0
    name = f"multi_ntn_2000_offset_{command}.csv"
    assert (a / name).read_bytes() == (b / name).read_bytes()


def test_schemas(tmp_path):
    expected = {
        "distance": ["t_s", "d_m", "visible"],
        "cdf": ["x", "F"],
        "contact": ["Q", "T_s", "Tc_s"],
        "capacity": ["t_s", "c_bps"],
        "download": ["gamma_bits", "gamma_limit_bits"],
        "energy": ["eta_bits_per_joule"],
    }
    for command, columns in expected.items():
        assert run(tmp_path, command, "--config", "single_ntn_2000") == 0
        assert list(read(tmp_path / f"single_ntn_2000_{command}.csv")[0]) == columns


def test_gs_distance_and_cdf(tmp_path):
    assert run(tmp_path, "cdf", "--config", "single_gs_svalbard_400", "--points", "101") == 0
    rows = read(tmp_path / "single_gs_svalbard_400_cdf.csv")
    f = np.array([float(r["F"]) for r in rows])
    assert f[0] == 0.0 and f[-1] == 1.0 and np.all(np.diff(f) >= 0)
    assert run(tmp_path, "cdf", "--config", "single_gs_svalbard_400", "--quantity", "capacity") == 0


def test_relay_sweep_monotone(tmp_path):
    assert run(tmp_path, "sweep", "--config", "single_ntn_2000", "--axis", "n_s", "--values", "1:50",
               "--metrics", "gamma_bits,gamma_limit_bits", "--workers", "2") == 0
    rows = read(tmp_path / "single_ntn_2000_sweep_n_s.csv")
    n, gamma = sweep_series(rows, "gamma_bits")
    assert list(n) == list(range(1, 51))
    assert np.all(np.diff(gamma) >= 0)
    _, limit = sweep_series(rows, "gamma_limit_bits")
    assert np.all(gamma <= limit)


def test_altitude_sweep_peaks_at_relay_altitude(tmp_path):
    assert run(tmp_path, "sweep", "--config", "single_ntn_2000", "--axis", "h_cs", "--values", "300:900:50",
               "--metrics", "gamma_bits") == 0
    h, gamma = sweep_series(read(tmp_path / "single_ntn_2000_sweep_h_cs.csv"), "gamma_bits")
    assert math.isnan(gamma[h == 550][0])  # degenerate: no relative motion
    finite = ~np.isnan(gamma)
    assert h[finite][np.argmax(gamma[finite])] in (500, 600)
    assert np.all(np.diff(gamma[h < 550]) > 0) and np.all(np.diff(gamma[h > 550]) < 0)


def test_single_point_sweep_equals_direct_run(tmp_path):
    assert run(tmp_path, "sweep", "--config", "single_ntn_2000", "--axis", "h_cs", "--values", "2000",
               "--metrics", "gamma_bits") == 0
    assert run(tmp_path, "download", "--config", "single_ntn_2000") == 0
    (sweep_row,) = read(tmp_path / "single_ntn_2000_sweep_h_cs.csv")
    (direct,) = read(tmp_path / "single_ntn_2000_download.csv")
    assert sweep_row["result"] == direct["gamma_bits"]


def test_preset_sweep(tmp_path):
    assert run(tmp_path, "sweep", "--config", "multi_ntn_400", "--axis", "preset", "--values", "Ku,SubTHz,SubTHzNG",
               "--metrics", "gamma_bits") == 0
    rows = read(tmp_path / "multi_ntn_400_sweep_preset.csv")
    assert [r["value"] for r in rows] == ["Ku", "SubTHz", "SubTHzNG"]


def test_invalid_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\narchitecture = MultiNTN\n[cubesat]\naltitude_km = 700\n[constellation]\ncount = 0\n")
    assert run(tmp_path, "contact", "--config", str(bad)) == 2
    assert "count" in capsys.readouterr().err
    assert run(tmp_path, "contact", "--config", "does_not_exist") == 2


def test_bad_sweep_values(tmp_path):
    assert run(tmp_path, "sweep", "--config", "single_ntn_2000", "--axis", "n_s", "--values", "1:5:-1") == 1
    assert run(tmp_path, "sweep", "--config", "single_ntn_2000", "--axis", "n_s", "--values", "1:3",
               "--metrics", "latency") == 1


def test_missing_config_flag(tmp_path):
    assert run(tmp_path, "contact") == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "leorelay", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("leorelay ")

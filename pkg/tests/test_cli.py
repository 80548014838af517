import csv
import json
import subprocess
import sys

import pytest

from rmestab.cli import main, parse_int_list


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_int_list():
    assert parse_int_list("1-3,20") == [1, 2, 3, 20]
    assert parse_int_list("5") == [5]


def test_run_table(tmp_path):
    assert main(["run", "--model", "seir", "--ensemble", "fcs,iid", "--samples", "2000",
                 "--seed", "7", "--out", str(tmp_path)]) == 0
    raw = (tmp_path / "table.csv").read_bytes()
    assert b"\r" not in raw
    assert raw.splitlines()[0] == b"model,ensemble,n,N,p_hat,se"
    rows = read(tmp_path / "table.csv")
    assert [r["ensemble"] for r in rows] == ["fcs", "iid"]
    assert float(rows[0]["p_hat"]) == 1.0 and rows[0]["n"] == "3" and rows[0]["N"] == "2000"
    assert float(rows[1]["p_hat"]) < 0.5


def test_run_toy2(tmp_path):
    assert main(["run", "--model", "toy2", "--samples", "300", "--out", str(tmp_path)]) == 0
    assert float(read(tmp_path / "table.csv")[0]["p_hat"]) == 0.0


def test_run_lorenz_alternative_ranges(tmp_path):
    assert main(["run", "--model", "lorenz", "--range-scale", "1", "--samples", "500",
                 "--ensemble", "fcs,independent", "--out", str(tmp_path)]) == 0
    assert len(read(tmp_path / "table.csv")) == 2


def test_ranges_and_config_files(tmp_path):
    (tmp_path / "r.txt").write_text("mu = 0, 0.5\nalpha = 0.2, 1  # all alphas\n")
    (tmp_path / "c.cfg").write_text(f"model = sneir\nn = 2\nsamples = 300\nranges = {tmp_path / 'r.txt'}\n"
                                    f"ensemble = fcs\n")
    assert main(["run", "--config", str(tmp_path / "c.cfg"), "--out", str(tmp_path / "o")]) == 0
    rows = read(tmp_path / "o" / "table.csv")
    assert rows[0]["model"] == "sneir:2" and rows[0]["n"] == "4" and rows[0]["N"] == "300"
    # flags override the file
    assert main(["run", "--config", str(tmp_path / "c.cfg"), "--samples", "100",
                 "--out", str(tmp_path / "o")]) == 0
    assert read(tmp_path / "o" / "table.csv")[0]["N"] == "100"


def test_scan_and_determinism(tmp_path):
    args = ["scan", "--model", "sneir", "--n", "1-3", "--ensemble", "fcs,iid", "--samples", "500", "--seed", "2"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "scan.csv").read_bytes()
    assert a == (tmp_path / "b" / "scan.csv").read_bytes()
    rows = read(tmp_path / "a" / "scan.csv")
    assert list(rows[0]) == ["family", "n", "ensemble", "N", "p_hat", "se", "median", "q1", "q3"]
    assert len(rows) == 6
    assert all(float(r["p_hat"]) == 1.0 for r in rows if r["ensemble"] == "fcs")


def test_scan_numeric_mode(tmp_path):
    assert main(["scan", "--model", "senir", "--n", "7", "--samples", "20", "--out", str(tmp_path)]) == 0
    assert read(tmp_path / "scan.csv")[0]["N"] == "20"


def test_toy_outputs(tmp_path):
    assert main(["toy", "--resolution", "50", "--samples", "2000", "--out", str(tmp_path)]) == 0
    plane = read(tmp_path / "plane.csv")
    assert len(plane) == 2500
    assert all(int(r["stable"]) == (float(r["a"]) * float(r["b"]) < 1) for r in plane)
    for name in ("example2", "example3"):
        assert (tmp_path / f"locus_{name}.csv").exists()
    g = {r["scenario"]: float(r["p_hat"]) for r in read(tmp_path / "gaussian.csv")}
    assert g["C-I"] > g["C-II"]


def test_spectra_outputs(tmp_path):
    assert main(["spectra", "--model", "seir", "--ensemble", "fcs,iid", "--samples", "400",
                 "--bins", "21", "--out", str(tmp_path)]) == 0
    spec = read(tmp_path / "spectra_seir_fcs.csv")
    assert list(spec[0]) == ["draw", "k", "re", "im"] and len(spec) == 1200
    kde = read(tmp_path / "kde_seir_iid.csv")
    assert list(kde[0]) == ["x", "density"] and len(kde) == 512
    dens = read(tmp_path / "density_seir_fcs.csv")
    assert sum(int(r["count"]) for r in dens) == 1200
    summary = read(tmp_path / "summary.csv")
    assert list(summary[0]) == ["model", "ensemble", "n", "p_hat", "se", "median", "q1", "q3"]


@pytest.mark.parametrize("argv, code", [
    (["run", "--model", "nosuch"], 2),
    (["run", "--model", "seir", "--ensemble", "bogus"], 2),
    (["run"], 2),
    (["frobnicate"], 2),
    (["run", "--model", "sneir:8", "--mode", "analytic"], 2),
    (["scan", "--model", "lorenz"], 2),
    (["run", "--model", "lorenz", "--branch", "minus", "--samples", "2"], 1),
])
def test_errors_are_json(argv, code, capsys, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "frobnicate" else argv) == code
    err = capsys.readouterr().err.strip().splitlines()
    payload = json.loads(err[-1])
    assert set(payload) == {"error", "message"}


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rmestab", "run", "--model", "nosuch"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr.strip())["error"] == "usage"


def test_n_rejected_for_fixed_model(tmp_path, capsys):
    assert main(["run", "--model", "seir", "--n", "3", "--out", str(tmp_path)]) == 2
    payload = json.loads(capsys.readouterr().err.strip())
    assert payload["error"] == "usage" and "--n" in payload["message"]

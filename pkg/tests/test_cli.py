import csv
import io
import json

import numpy as np
import pytest

from qbm import cli
from qbm.spectral import resonance_cutoff


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


def test_measure_markov_limit(capsys):
    code, out, _ = run(["measure", "--backend", "cl_limit", "--gamma-over-omega0", "0.1",
                        "--kT-over-omega0", "100"], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["N"] == 0.0 and res["backend"] == "cl_limit"
    assert res["t_max"] == 40.0 and res["dt"] == 0.01


def test_measure_config_round_trip(tmp_path, capsys):
    code, out, _ = run(["measure", "--gamma-over-omega0", "0.5", "--t-max-omega0", "8"], capsys)
    first = json.loads(out)
    path = tmp_path / "echo.json"
    path.write_text(json.dumps(first["config"]))
    code, out, _ = run(["measure", "--config", str(path)], capsys)
    assert code == 0 and json.loads(out) == first


def test_evolve_free_oscillator(capsys):
    code, out, _ = run(["evolve", "--gamma-over-omega0", "0", "--t-max-omega0", "5"], capsys)
    assert code == 0
    header, data = read_csv(out)
    assert header[:6] == ["t", "x1", "p1", "sxx1", "sxp1", "spp1"] and header[-2:] == ["bures", "sigma"]
    b = data[:, header.index("bures")]
    assert np.ptp(b) < 1e-12 and np.abs(data[:, -1]).max() < 1e-9


def test_resonance(capsys):
    code, out, _ = run(["resonance", "--kT", "1", "2"], capsys)
    header, data = read_csv(out)
    assert header == ["kT", "Omega_star"]
    assert data[0, 0] == 1.0 and abs(data[0, 1] - 3.524) < 5e-4


def test_seventeen_digits_round_trip(capsys):
    _, out, _ = run(["resonance", "--kT", "0.7"], capsys)
    assert float(out.splitlines()[1].split(",")[1]) == resonance_cutoff(0.7)


def test_kernels(capsys):
    code, out, _ = run(["kernels", "--num", "5", "--x-max", "2"], capsys)
    header, data = read_csv(out)
    assert code == 0 and header == ["x", "J", "J_eff", "damping_kernel", "noise_kernel"]
    assert data.shape == (5, 5) and np.all(data[:, 2] >= data[:, 1])


def test_compare_mastereq(capsys):
    code, out, _ = run(["compare-mastereq", "--kT-over-omega0", "100", "--t-max-omega0", "2"], capsys)
    header, data = read_csv(out)
    assert code == 0 and "sxx_exact" in header and "bures_cl" in header
    assert data.shape == (201, len(header))


def test_sweep_outputs(tmp_path, capsys, monkeypatch):
    cfg = {"axis1": {"name": "kT_over_omega0", "values": [0.5, 1.0]},
           "axis2": {"name": "Omega_over_omega0", "min": 1, "max": 10, "num": 3, "log": True},
           "t_max_omega0": 5}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "s.csv"
    monkeypatch.setenv("QBM_WORKERS", "2")
    assert cli.main(["sweep", "--config", str(path), "--out", str(out), "--resonance"]) == 0
    header, data = read_csv(out.read_text())
    assert header == ["kT_over_omega0", "Omega_over_omega0", "N", "Omega_star"]
    assert data.shape == (6, 4)
    np.testing.assert_array_equal(data[:, 0], [0.5, 0.5, 0.5, 1, 1, 1])
    assert data[3, 3] == resonance_cutoff(1.0)
    side = json.loads((tmp_path / "s.csv.json").read_text())
    assert side["missing"] == [] and side["t_max"] == 5.0


@pytest.mark.parametrize("argv, config", [
    (["measure", "--backend", "cl_limit", "--gamma-over-omega0", "1.5"], None),
    (["measure"], {"gamma": 0.1}),
    (["measure", "--gamma-over-omega0", "-1"], None),
    (["sweep"], {"axis1": {"name": "gamma_over_omega0", "values": [1]},
                 "axis2": {"name": "gamma_over_omega0", "values": [2]}}),
    (["sweep"], {}),
    (["measure"], "not json"),
    (["measure", "--bogus"], None),
])
def test_config_errors_exit_2(argv, config, tmp_path, capsys):
    if config is not None:
        path = tmp_path / "c.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        argv = argv + ["--config", str(path)]
    try:
        code = cli.main(argv)
    except SystemExit as exc:  # argparse rejects unknown flags itself
        code = exc.code
    assert code == 2
    err = capsys.readouterr().err
    assert err.strip() and len(err.strip().splitlines()) <= 3


def test_non_convergence_exit_3(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"n_cap": 1, "kT_over_omega0": 0.01, "series_tol": 1e-12, "t_max_omega0": 1}))
    assert cli.main(["measure", "--config", str(path)]) == 3
    assert "numerical" in capsys.readouterr().err


def test_driving_config(tmp_path, capsys):
    base = {"t_max_omega0": 10}
    drv = dict(base, driving={"d0": 1.0, "force": {"type": "sin", "omega": 2.0},
                              "bath_kernel": {"type": "samples", "t": [0, 5, 10], "values": [0, 0.1, 0.0]}})
    results = []
    for cfg in (base, drv):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg))
        _, out, _ = run(["measure", "--config", str(path)], capsys)
        results.append(json.loads(out)["N"])
    assert abs(results[0] - results[1]) < 1e-10


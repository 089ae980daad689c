import json

import numpy as np
import pytest

from rlscatter import bundle
from rlscatter.cli import EXIT_CONFIG, EXIT_OK, main, resolve_threads
from rlscatter.config import parse_config
from rlscatter.errors import ConfigError


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _schrodinger(**over):
    cfg = {"schema_version": 1, "problem": "schrodinger",
           "potential": {"family": "square_well", "depth": 4.0, "radius": 1.0},
           "energies": [1.0], "grid": {"h": 0.3}, "mesh_order": 5,
           "oracles": {"partial_waves": True, "born": False}}
    cfg.update(over)
    return cfg


def _dirac(**over):
    cfg = {"schema_version": 1, "problem": "dirac", "mass": 1.0,
           "potential": {"scalar": {"family": "gaussian", "g": 0.5, "width": 0.8}},
           "energies": [1.2], "grid": {"h": 0.45, "rel_cut": 1e-3}, "mesh_order": 3,
           "oracles": {"gamma": True, "far_field": False}}
    cfg.update(over)
    return cfg


@pytest.mark.parametrize("bad,field", [
    ({"schema_version": 2}, "schema_version"),
    ({"grid": {"h": -0.1}}, "grid.h"),
    ({"grid": {"h": 0.3, "spacing": 1}}, "grid.spacing"),
    ({"mesh_order": 13}, "mesh_order"),
    ({"potential": {"family": "coulomb"}}, "potential.family"),
    ({"energies": []}, "energies"),
])
def test_config_errors_name_the_field(bad, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(_schrodinger(**bad))
    assert field in str(exc.value)


def test_gap_energy_is_a_config_error(tmp_path, capsys):
    code = main(["solve", "--config", _write(tmp_path, _dirac(energies=[0.5])), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "gap" in capsys.readouterr().err


def test_wavelength_rule(tmp_path):
    code = main(["solve", "--config", _write(tmp_path, _schrodinger(energies=[4.0])), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG


def test_threads_resolution(monkeypatch):
    monkeypatch.delenv("RLSCATTER_THREADS", raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv("RLSCATTER_THREADS", "3")
    assert resolve_threads(None) == 3 and resolve_threads(2) == 2
    with pytest.raises(ConfigError):
        resolve_threads(0)


def test_table_roundtrip(tmp_path):
    cols = {"i": np.arange(3), "x": np.array([0.1, 1 / 3, -2e-300]), "z": np.array([1 + 2j, -0.5j, np.pi])}
    bundle.write_table(tmp_path / "t.csv", cols, comments=["units: none"])
    comments, back = bundle.read_table(tmp_path / "t.csv")
    assert comments == ["units: none"]
    assert np.array_equal(back["i"], cols["i"])
    assert np.array_equal(back["x"], cols["x"]) and np.array_equal(back["z"], cols["z"])


def test_json_encoding_roundtrip(tmp_path):
    obj = {"a": 1 + 2j, "b": [np.float64(np.nan), np.inf], "c": np.arange(2)}
    bundle.write_json(tmp_path / "j.json", obj)
    back = bundle.read_json(tmp_path / "j.json")
    assert back["a"] == 1 + 2j and np.isnan(back["b"][0]) and back["b"][1] == np.inf and back["c"] == [0, 1]


def test_solve_bundle_is_deterministic(tmp_path):
    cfg = _write(tmp_path, _schrodinger())
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for o in outs:
        assert main(["solve", "--config", cfg, "--out", str(o)]) == EXIT_OK
    for name in ("summary.json", "energies.csv", "amplitude_000.csv", "eigenvalues_000.csv", "directions.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    b = bundle.read_bundle(outs[0])
    assert b["summary"]["exit_code"] == 0
    assert b["tables"]["amplitude_000"][1]["f"].shape == (14 * 14,)
    assert "started" in b["metadata"]


def test_scan_zero_potential(tmp_path):
    cfg = _schrodinger(potential={"family": "zero"}, energies={"start": 0.2, "stop": 1.0, "num": 3})
    out = tmp_path / "scan"
    assert main(["scan", "--config", _write(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
    rows = [l.split() for l in (out / "scan.txt").read_text().splitlines() if not l.startswith("#")][1:]
    assert [float(r[1]) for r in rows] == [1.0, 1.0, 1.0]


def test_validate_dirac(tmp_path):
    out = tmp_path / "val"
    code = main(["validate", "--config", _write(tmp_path, _dirac()), "--out", str(out)])
    report = bundle.read_json(out / "validate.json")
    assert code == EXIT_OK and report["all_passed"]
    names = {c["name"] for c in report["checks"]}
    assert "lambda=1.2.gamma_correlation" in names


def test_bound_command(tmp_path):
    cfg = _schrodinger(potential={"family": "square_well", "depth": 8.0, "radius": 1.0},
                       bound={"n_scan": 8}, grid={"h": 0.25})
    out = tmp_path / "b"
    assert main(["bound", "--config", _write(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
    s = bundle.read_json(out / "summary.json")
    assert len(s["bound_states"]) == 1
    exact = s["radial_oracle"]["0"][0]
    assert abs(s["bound_states"][0]["energy"] - exact) < 0.1 * abs(exact)

import json
import subprocess
import sys

import pytest

from nhbbc.cli import main


def _run(*args):
    return main(list(args))


@pytest.fixture(scope="module")
def topological(tmp_path_factory):
    from conftest import CONFIGS
    out = tmp_path_factory.mktemp("topo")
    assert _run("run", str(CONFIGS / "hn_topological.toml"), "--out", str(out)) == 0
    return out


def test_run_outputs_and_manifest(topological):
    m = json.loads((topological / "manifest.json").read_text())
    assert set(m) >= {"version", "parameters", "tolerances", "files", "seed", "timestamp"}
    assert m["files"] == sorted(m["files"])
    on_disk = {p.name for p in topological.iterdir()} - {"manifest.json"}
    assert set(m["files"]) == on_disk
    for name in ["spectrum.csv", "svd.csv", "chi.csv", "topology.json"]:
        assert name in m["files"]
    assert json.loads((topological / "topology.json").read_text())["winding"] == -1


def test_run_deterministic(topological, tmp_path, configs):
    assert _run("run", str(configs / "hn_topological.toml"), "--out", str(tmp_path)) == 0
    for f in json.loads((topological / "manifest.json").read_text())["files"]:
        assert (tmp_path / f).read_bytes() == (topological / f).read_bytes(), f
    a = json.loads((topological / "manifest.json").read_text())
    b = json.loads((tmp_path / "manifest.json").read_text())
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b


def test_degenerate_override(configs, tmp_path):
    rc = _run("run", str(configs / "hn_trivial.toml"), "--set", "analysis=winding",
              "--set", "model.theta=[0]", "--out", str(tmp_path))
    assert rc == 0
    assert json.loads((tmp_path / "topology.json").read_text())["winding"] == "degenerate"


def test_exit_codes(configs, tmp_path, capsys):
    assert _run("run", str(configs / "hn_trivial.toml"), "--set", "model.L=x",
                "--out", str(tmp_path)) == 2
    assert "model.L" in capsys.readouterr().err
    assert _run("run", str(tmp_path / "missing.toml")) == 2
    assert _run("run", str(configs / "hn_trivial.toml"), "--set", "analysis.N_k=16",
                "--out", str(tmp_path)) == 2
    # a clean system sitting exactly on the gap closing cannot seed a disorder study
    assert _run("run", str(configs / "disorder_topological.toml"), "--set", "model.lambda=[1.0]",
                "--set", "model.cooperativity=[1.0]", "--out", str(tmp_path / "o")) == 3
    assert "OriginOnCurve" in capsys.readouterr().err


def test_origin_on_curve_marker(configs, tmp_path):
    assert _run("run", str(configs / "hn_trivial.toml"), "--set", "analysis=winding",
                "--set", "model.lambda=[1.0]", "--set", "model.cooperativity=[1.0]",
                "--out", str(tmp_path)) == 0
    assert json.loads((tmp_path / "topology.json").read_text())["winding"] == "origin_on_curve"


def test_plot_command(topological, tmp_path, capsys):
    out = tmp_path / "c.svg"
    assert _run("plot", str(topological / "spectrum.csv"), "--kind", "complex",
                "--out", str(out)) == 0
    assert out.read_text().startswith("<svg")
    assert _run("plot", str(topological / "spectrum.csv"), "--kind", "heatmap",
                "--out", str(out)) == 2
    assert "'row'" in capsys.readouterr().err


def test_module_entry_point(configs, tmp_path):
    r = subprocess.run([sys.executable, "-m", "nhbbc", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and r.stdout.strip()

"""Command-line plumbing: exit codes, artifacts, determinism, manifests.

Everything runs in-process through main(argv) against real (tiny) meshes —
a 144-node circle sweep keeps the whole file under a minute — with one
subprocess case at the end confirming the installed console script wires
up to the same entry point.  Exit-code contract: 0 success, 2 config
error, 3 numerical failure.
"""

import csv
import io
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from helmtrap import cli

CIRCLE_SWEEP = """
kind = "sweep"
label = "tiny"
out = "{out}"
ppw = 12.0

[geometry]
kind = "circle"
radius = 1.0

[k]
mode = "list"
values = [5.0, 6.0, 8.0, 10.0]
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture(scope="module")
def sweep_dir(tmp_path_factory):
    """One tiny circle sweep shared by the artifact and manifest tests."""
    root = tmp_path_factory.mktemp("sweeprun")
    out = root / "results"
    cfg = root / "sweep.toml"
    cfg.write_text(CIRCLE_SWEEP.format(out=out))
    assert cli.main(["sweep", "--config", str(cfg)]) == 0
    return cfg, out


# ---------------------------------------------------------------------------
# argument and config failures


def test_no_command_exits_2(capsys):
    assert cli.main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_missing_config_flag(capsys):
    assert cli.main(["sweep"]) == 2
    assert "needs --config" in capsys.readouterr().err


def test_kind_subcommand_mismatch(tmp_path, capsys):
    path = _write(tmp_path, "s.toml", CIRCLE_SWEEP.format(out=tmp_path))
    assert cli.main(["quasimode", "--config", path]) == 2
    assert "does not match subcommand" in capsys.readouterr().err


def test_config_error_reports_path(tmp_path, capsys):
    path = _write(tmp_path, "bad.toml", 'kind = "warp"\n')
    assert cli.main(["sweep", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "error:" in err and "bad.toml" in err


def test_unknown_geometry_parameter(tmp_path, capsys):
    text = CIRCLE_SWEEP.format(out=tmp_path).replace(
        "radius = 1.0", "radius = 1.0\nwobble = 3.0")
    path = _write(tmp_path, "s.toml", text)
    assert cli.main(["sweep", "--config", path]) == 2
    assert "geometry parameters" in capsys.readouterr().err


def test_node_cap_is_numerical_failure(tmp_path, capsys):
    text = CIRCLE_SWEEP.format(out=tmp_path).replace(
        "values = [5.0, 6.0, 8.0, 10.0]", "values = [4000.0]")
    path = _write(tmp_path, "s.toml", text)
    assert cli.main(["sweep", "--config", path]) == 3
    err = capsys.readouterr().err
    assert "numerical failure" in err and "above the cap" in err
    assert "lower k_max or ppw" in err


def test_threads_flag_sets_blas_env(tmp_path):
    path = _write(tmp_path, "bad.toml", 'kind = "warp"\n')
    old = os.environ.get("OPENBLAS_NUM_THREADS")
    try:
        cli.main(["sweep", "--config", path, "--threads", "2"])
        assert os.environ["OPENBLAS_NUM_THREADS"] == "2"
    finally:
        if old is None:
            os.environ.pop("OPENBLAS_NUM_THREADS", None)
        else:
            os.environ["OPENBLAS_NUM_THREADS"] = old
    assert cli.main(["sweep", "--config", path, "--threads", "0"]) == 2


# ---------------------------------------------------------------------------
# the light experiment kinds


def test_geometry_check(tmp_path, capsys):
    path = _write(tmp_path, "g.toml", f"""
kind = "geometry-check"
out = "{tmp_path / 'res'}"

[geometry]
kind = "two_squares"
side = 1.0
gap = 0.5
""")
    assert cli.main(["geometry-check", "--config", path]) == 0
    out = capsys.readouterr().out
    assert "parallel facing walls: a = 0.5" in out
    assert "strongly (R0, R1) star-shaped" in out
    doc = json.loads((tmp_path / "res" /
                      "geometry-check_two_squares.json").read_text())
    assert doc["trapping_class"] == "parallel_trapping"
    assert doc["parallel_gap"] == pytest.approx(0.5)
    assert doc["length"] == pytest.approx(8.0)


def test_constants(tmp_path, capsys):
    path = _write(tmp_path, "c.toml", f"""
kind = "constants"
out = "{tmp_path / 'res'}"

[constants]
r0 = 1.0
r1 = 1.4
epsilon_scale = 0.5
""")
    assert cli.main(["constants", "--config", path]) == 0
    out = capsys.readouterr().out
    assert "k_threshold" in out and "c_chi" in out
    doc = json.loads((tmp_path / "res" / "constants.json").read_text())
    assert doc["constants"]["c_chi"] == pytest.approx(3.17707722, rel=1e-6)
    assert doc["constants"]["q"] > 0.0
    assert math.isfinite(doc["constants"]["k_threshold"])


def test_identities_and_seed_override(tmp_path, capsys):
    path = _write(tmp_path, "i.toml", f"""
kind = "identities"
out = "{tmp_path / 'res'}"
seed = 3

[identities]
n_identity = 6
n_friedrichs = 8
n_flux = 5
""")
    assert cli.main(["identities", "--config", path, "--seed", "11"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4 and "FAIL" not in out
    doc = json.loads((tmp_path / "res" / "identities.json").read_text())
    assert doc["pass"] is True
    assert doc["seed"] == 11
    assert doc["multiplier_identity"]["min_order"] >= 1.9
    assert doc["radiating_flux"]["max_lhs"] <= 1e-8


# ---------------------------------------------------------------------------
# sweeps and their artifacts


def test_sweep_artifacts_and_rerun_determinism(sweep_dir, capsys):
    cfg, out = sweep_dir
    csv_path = out / "tiny.csv"
    summary_path = out / "tiny_summary.json"
    log_path = out / "tiny_log.txt"
    assert csv_path.exists() and summary_path.exists() and log_path.exists()
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:5] == ["geometry", "label", "k", "eta", "n_nodes"]
    assert len(rows) == 5
    assert [float(r[2]) for r in rows[1:]] == [5.0, 6.0, 8.0, 10.0]
    doc = json.loads(summary_path.read_text())
    assert doc["kind"] == "sweep" and doc["csv"] == "tiny.csv"
    slopes = doc["entries"][0]["slopes"]
    assert slopes["cond"]["pass"] is True
    assert "config" in doc and 'kind = "sweep"' in doc["config"]
    log_lines = log_path.read_text().splitlines()
    assert len(log_lines) == 4 and all("N = " in ln for ln in log_lines)

    before_csv = csv_path.read_bytes()
    before_summary = summary_path.read_bytes()
    assert cli.main(["sweep", "--config", str(cfg)]) == 0
    capsys.readouterr()
    assert csv_path.read_bytes() == before_csv
    assert summary_path.read_bytes() == before_summary


def test_out_flag_overrides_config(sweep_dir, tmp_path, capsys):
    cfg, _out = sweep_dir
    alt = tmp_path / "elsewhere"
    assert cli.main(["sweep", "--config", str(cfg),
                     "--out", str(alt)]) == 0
    capsys.readouterr()
    assert (alt / "tiny.csv").exists()


def test_quasimode_subcommand_fills_extras(tmp_path, capsys):
    path = _write(tmp_path, "q.toml", f"""
kind = "quasimode"
out = "{tmp_path / 'res'}"
ppw = 12.0
corner_depth = 6

[geometry]
kind = "two_squares"
side = 1.0
gap = 0.5

[k]
mode = "quantized"
m_min = 1
m_max = 2
""")
    assert cli.main(["quasimode", "--config", path]) == 0
    capsys.readouterr()
    with open(tmp_path / "res" / "quasimode_two_squares.csv",
              newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[0]["k"]) == pytest.approx(2.0 * math.pi)
    assert float(rows[0]["residual"]) == pytest.approx(0.706511375878655,
                                                       rel=1e-7)
    assert float(rows[0]["lower_bound"]) > 1.0
    assert float(rows[0]["phi_norm"]) > 0.0
    assert rows[0]["coercivity_probe"] == ""


def test_scatter_with_field_grid(tmp_path, capsys):
    path = _write(tmp_path, "sc.toml", f"""
kind = "scatter"
label = "ring"
out = "{tmp_path / 'res'}"
ppw = 12.0

[geometry]
kind = "circle"
radius = 1.0

[k]
mode = "list"
values = [5.0]

[scatter]
direction_deg = 0.0
grid = true
""")
    assert cli.main(["scatter", "--config", path]) == 0
    capsys.readouterr()
    res = tmp_path / "res"
    lines = (res / "ring.csv").read_text().splitlines()
    assert lines[0] == "k,neumann_norm"
    k, norm = (float(v) for v in lines[1].split(","))
    assert k == 5.0 and norm > 0.0
    grid = np.loadtxt(res / "ring_field.txt")
    assert grid.shape[1] == 4
    finite = np.isfinite(grid[:, 2])
    assert finite.any() and (~finite).any()  # masked interior, live exterior
    # nan rows sit inside or hug the circle; finite rows are well outside
    r = np.hypot(grid[:, 0], grid[:, 1])
    assert r[~finite].min() < 1.2
    assert r[finite].min() > 1.0
    doc = json.loads((res / "ring_summary.json").read_text())
    assert doc["kind"] == "scatter" and doc["fit"] is None  # single point


# ---------------------------------------------------------------------------
# plot manifest


def test_manifest_matches_summary_exactly(sweep_dir, capsys):
    _cfg, out = sweep_dir
    assert cli.main(["plot-manifest", "--out", str(out)]) == 0
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    summary = json.loads((out / "tiny_summary.json").read_text())
    slopes = summary["entries"][0]["slopes"]
    by_col = {e["name"].split(".", 1)[1]: e for e in manifest["entries"]}
    assert set(by_col) == set(slopes)
    for col, entry in by_col.items():
        assert entry["fit"]["slope"] == slopes[col]["slope"]  # bitwise
        assert entry["csv"] == "tiny.csv"
        assert entry["figure"] == f"tiny_{col}.svg"
    inv = by_col["inv_sigma_min"]
    assert inv["y"] == "sigma_min" and inv["y_transform"] == "reciprocal"
    refs = {r["slope"] for r in by_col["cond"]["references"]}
    assert refs == {1.0 / 3.0}
    assert by_col["norm_S"]["references"][0]["slope"] == -2.0 / 3.0


def test_manifest_warns_on_missing_csv(sweep_dir, tmp_path):
    _cfg, out = sweep_dir
    clone = tmp_path / "partial"
    clone.mkdir()
    (clone / "tiny_summary.json").write_text(
        (out / "tiny_summary.json").read_text())
    stream = io.StringIO()
    path = cli.emit_plot_inputs(clone, stream=stream)
    assert "missing CSV" in stream.getvalue()
    assert json.loads(path.read_text()) == {"entries": []}


def test_manifest_empty_dir_is_config_error(tmp_path, capsys):
    empty = tmp_path / "none"
    empty.mkdir()
    assert cli.main(["plot-manifest", "--out", str(empty)]) == 2
    assert "nothing to plot" in capsys.readouterr().err
    assert cli.main(["plot-manifest"]) == 2  # neither --out nor --config


def test_manifest_fits_bare_csv(sweep_dir, tmp_path, capsys):
    _cfg, out = sweep_dir
    clone = tmp_path / "bare"
    clone.mkdir()
    (clone / "tiny.csv").write_bytes((out / "tiny.csv").read_bytes())
    assert cli.main(["plot-manifest", "--out", str(clone)]) == 0
    capsys.readouterr()
    manifest = json.loads((clone / "manifest.json").read_text())
    assert {e["name"].split(".", 1)[1] for e in manifest["entries"]} >= {
        "cond", "inv_sigma_min", "norm_S", "norm_Dp"}


# ---------------------------------------------------------------------------
# console script wiring


def test_installed_entry_point(tmp_path):
    path = _write(tmp_path, "g.toml", f"""
kind = "geometry-check"
out = "{tmp_path / 'res'}"

[geometry]
kind = "circle"
radius = 1.0
""")
    proc = subprocess.run(
        [sys.executable, "-m", "helmtrap.cli", "geometry-check",
         "--config", path],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "geometry circle" in proc.stdout

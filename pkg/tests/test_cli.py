import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

from qdesign.cli import main
from qdesign.config import default_config_path
from qdesign.spectrofit import SpectroscopyDataset, flux_model, write_csv


def run_cli(args, tmp_path, **env):
    """Invoke the installed entry point in a subprocess; returns the result."""
    e = dict(os.environ)
    e.update(env)
    return subprocess.run(
        [sys.executable, "-m", "qdesign.cli", *args],
        capture_output=True, text=True, cwd=tmp_path, env=e,
    )


@pytest.fixture()
def outdir(tmp_path):
    return tmp_path / "out"


def test_levels_report_files(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "levels", "--flux", "0"], tmp_path)
    assert r.returncode == 0, r.stderr
    assert "7.82" in r.stdout  # E_01 ~ 7.8 GHz line present
    assert (outdir / "levels.json").exists()
    assert (outdir / "levels_dispersion.csv").exists()
    assert (outdir / "levels_dispersion.png").exists()
    payload = json.loads((outdir / "levels.json").read_text())
    assert payload["levels_ghz"]["perturbative"][0] == pytest.approx(7.825189, rel=1e-6)


def test_levels_bias_equals_flux_offset(tmp_path):
    r1 = run_cli(["--no-out", "levels", "--bias", "0"], tmp_path)
    r2 = run_cli(["--no-out", "levels", "--flux", "0"], tmp_path)
    assert r1.returncode == r2.returncode == 0
    assert r1.stdout == r2.stdout  # default flux_offset is zero


def test_levels_methods_agree(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "--no-plot", "levels", "--numeric",
                 "--perturbative"], tmp_path)
    assert r.returncode == 0, r.stderr
    payload = json.loads((outdir / "levels.json").read_text())
    pert = payload["levels_ghz"]["perturbative"][0]
    num = payload["levels_ghz"]["numeric"][0]
    assert abs(pert - num) / num < 0.03


def test_loss_table_and_rows(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "loss"], tmp_path)
    assert r.returncode == 0, r.stderr
    out = r.stdout
    for token in ("47", "32", "87", "16", "26", "100", "8.9"):
        assert token in out
    payload = json.loads((outdir / "loss.json").read_text())
    sig = payload["lifetimes_us_2sig"]
    assert sig["purcell_single_mode"] == pytest.approx(47.0)
    assert sig["purcell_inductive"] == pytest.approx(32.0)
    assert sig["purcell_capacitive"] == pytest.approx(87.0)
    assert sig["tlf"] == pytest.approx(26.0)
    assert sig["total"] == pytest.approx(8.9)
    assert (outdir / "loss.png").exists()


def test_loss_single_channel(tmp_path):
    r = run_cli(["--no-out", "loss", "--channel", "ind"], tmp_path)
    assert r.returncode == 0
    assert "inductive" in r.stdout
    assert "single-mode" not in r.stdout


def test_loss_sweet_spot_flag(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "--no-plot", "loss", "--sweet-spot"], tmp_path)
    assert r.returncode == 0, r.stderr
    payload = json.loads((outdir / "loss.json").read_text())
    # detuning recomputed from the zero-flux frequency: |8.79 - 7.825| GHz
    assert payload["detuning_ghz"] == pytest.approx(0.965, abs=0.01)
    assert payload["lifetimes_us"]["purcell_total"] < 16.0


def test_coupling_defaults(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "--no-plot", "coupling"], tmp_path)
    assert r.returncode == 0, r.stderr
    payload = json.loads((outdir / "coupling.json").read_text())
    assert abs(abs(payload["m_loop_ph"]) - 31.0) / 31.0 < 0.5
    assert abs(payload["g_z_mhz"] - 5.0) / 5.0 < 0.25
    assert abs(payload["bias_current_per_phi0_ma"] - 0.9) / 0.9 < 0.5


def test_coupling_rotation_null(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "--no-plot", "coupling",
                 "--rotation", "1.5707963267948966"], tmp_path)
    assert r.returncode == 0, r.stderr
    payload = json.loads((outdir / "coupling.json").read_text())
    assert abs(payload["m_squid_ph"]) < 1e-3


def test_coupling_separation_falloff(tmp_path, outdir):
    vals = []
    for k, sep in enumerate(("150", "1500")):
        od = outdir / str(k)
        r = run_cli(["--out", str(od), "--no-plot", "coupling",
                     "--separation", sep], tmp_path)
        assert r.returncode == 0, r.stderr
        vals.append(abs(json.loads((od / "coupling.json").read_text())["m_loop_ph"]))
    assert vals[1] < vals[0] / 10.0


def make_flux_csv(path):
    bias = np.linspace(-1.0, 1.0, 20)
    f, _ = flux_model(bias, np.ones(20, dtype=int), 0.24, 45.0, 128.0, 0.32, 2.3, 0.1)
    write_csv(path, SpectroscopyDataset(bias, f))


def test_fit_flux_mode(tmp_path, outdir):
    csv = tmp_path / "spec.csv"
    make_flux_csv(csv)
    r = run_cli(["--out", str(outdir), "fit", str(csv), "--mode", "flux"], tmp_path)
    assert r.returncode == 0, r.stderr
    payload = json.loads((outdir / "fit.json").read_text())
    assert payload["flux_fit"]["e_j0_ghz"] == pytest.approx(45.0, rel=1e-4)
    assert payload["flux_fit"]["d"] == pytest.approx(0.32, rel=1e-4)
    assert (outdir / "fit_model.csv").exists()
    assert (outdir / "fit.png").exists()


def test_fit_sweetspot_mode(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "--no-plot", "fit", "--mode", "sweetspot",
                 "--f01", "7.6496", "--f02-half", "7.6094", "--f03-third", "7.5673"],
                tmp_path)
    assert r.returncode == 0, r.stderr
    payload = json.loads((outdir / "fit.json").read_text())
    assert 55.0 < payload["sweet_spot"]["e_j_ghz"] < 65.0


def test_fit_sweetspot_missing_triple_is_config_error(tmp_path):
    r = run_cli(["--no-out", "fit", "--mode", "sweetspot"], tmp_path)
    assert r.returncode == 2


def test_simulate_t1_preset(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "simulate", "--preset", "t1",
                 "--shots", "200", "--seed", "7"], tmp_path)
    assert r.returncode == 0, r.stderr
    assert "t1_fit_us=9.1" in r.stdout
    assert (outdir / "simulate_t1.csv").exists()
    assert (outdir / "simulate_t1.png").exists()


def test_simulate_zpulse_preset(tmp_path, outdir):
    r = run_cli(["--out", str(outdir), "--no-plot", "simulate", "--preset", "zpulse",
                 "--eta", "32", "--shots", "100", "--seed", "3"], tmp_path)
    assert r.returncode == 0, r.stderr
    payload = json.loads((outdir / "simulate_zpulse.json").read_text())
    assert abs(payload["fringe_mhz"] - 65.0) <= payload["fringe_bin_mhz"]


def test_simulate_sequence_file(tmp_path, outdir):
    seq = tmp_path / "seq.txt"
    seq.write_text("segment 20 x 2.5e7\nsegment 500 idle\nreadout\n")
    r = run_cli(["--out", str(outdir), "--no-plot", "simulate",
                 "--sequence", str(seq), "--shots", "16"], tmp_path)
    assert r.returncode == 0, r.stderr
    assert (outdir / "simulate_sequence.csv").exists()


def test_seeded_outputs_byte_identical(tmp_path, outdir):
    blobs = []
    for k in range(2):
        od = outdir / str(k)
        r = run_cli(["--out", str(od), "--no-plot", "simulate", "--preset", "zpulse",
                     "--shots", "100", "--seed", "11"], tmp_path)
        assert r.returncode == 0, r.stderr
        blobs.append((od / "simulate_zpulse.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_exit_code_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    r = run_cli(["--config", str(bad), "--no-out", "levels"], tmp_path)
    assert r.returncode == 2
    assert "config error" in r.stderr


def test_exit_code_numeric_error(tmp_path):
    # harmonic-degenerate multiphoton input cannot be solved
    r = run_cli(["--no-out", "fit", "--mode", "sweetspot", "--f01", "7.65",
                 "--f02-half", "7.60", "--f03-third", "7.66"], tmp_path)
    assert r.returncode == 2  # ordering violation is an input (domain) error
    r = run_cli(["--no-out", "fit", "--mode", "sweetspot", "--f01", "7.65",
                 "--f02-half", "7.649999999", "--f03-third", "7.649999998"], tmp_path)
    assert r.returncode in (2, 3)


def test_exit_code_io_error(tmp_path):
    r = run_cli(["--no-out", "fit", str(tmp_path / "missing.csv"), "--mode", "flux"],
                tmp_path)
    assert r.returncode == 4


def test_inputs_not_mutated(tmp_path, outdir):
    cfg_src = default_config_path()
    geo_src = cfg_src.replace("default_config.json", "reference_geometry.txt")
    cfg_copy = tmp_path / "config.json"
    geo_copy = tmp_path / "reference_geometry.txt"
    shutil.copy(cfg_src, cfg_copy)
    shutil.copy(geo_src, geo_copy)
    before = cfg_copy.read_bytes(), geo_copy.read_bytes()
    r = run_cli(["--config", str(cfg_copy), "--out", str(outdir), "--no-plot", "loss"],
                tmp_path)
    assert r.returncode == 0, r.stderr
    assert (cfg_copy.read_bytes(), geo_copy.read_bytes()) == before


def test_main_callable_in_process(tmp_path, outdir, capsys):
    # the entry point is also importable and returns exit codes directly
    rc = main(["--out", str(outdir), "--no-plot", "levels", "--flux", "0.25"])
    assert rc == 0
    assert "E_01" in capsys.readouterr().out

import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracepi.cli import run
from fracepi.config import (KNOWN_KEYS, ConfigError, RunConfig, build_config, parse_config,
                            parse_config_text, serialize_config)
from fracepi.epimodels import Model, endemic_equilibrium
from fracepi.focp import ControlWeights, SweepSettings
from fracepi.frackernel import Grid

SMALL = "grid.tf = 1\ngrid.n_steps = 100\n"


def cfg_file(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestParse:
    def test_empty_is_default_setup(self):
        cfg = parse_config_text("")
        assert cfg.model is Model.SEIRS
        p = cfg.params
        assert (p.mu, p.nu, p.gamma, p.epsilon, p.b0, p.b1, p.c1) == (0.0113, 36, 1.8, 91, 88.25, 0.17, 0.17)
        assert p.phi == math.pi / 2 and p.alpha == 0.993
        assert cfg.weights == ControlWeights(1.0, 0.001, 1.0, 1.0)
        assert cfg.sweep == SweepSettings()
        assert cfg.grid == Grid(0.0, 5.0, 1000)
        np.testing.assert_allclose(cfg.initial_state(), (0.4081, 0.0110, 0.0278, 0.5531), atol=5e-5)
        assert set(cfg.defaults_used) == set(KNOWN_KEYS)
        assert parse_config(None) == cfg

    def test_alpha_out_of_domain(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text("model.alpha = 1.2")
        assert info.value.key == "model.alpha"
        assert "alpha" in str(info.value)

    @pytest.mark.parametrize("text,key", [
        ("model.beta = 3", "model.beta"),
        ("grid.n_steps = 0", "grid.n_steps"),
        ("grid.n_steps = 2.5", "grid.n_steps"),
        ("grid.tf = -1", "grid.tf"),
        ("control.kappa2 = 0", "control.kappa2"),
        ("model.b1 = 1", "model.b1"),
        ("initial.S = 0.5", "initial.E"),
        ("model.type = sirs\nmodel.epsilon = 3", "model.epsilon"),
        ("model.alpha = 0.9\nmodel.alpha = 0.8", "model.alpha"),
        ("model.b0 = 1", "initial"),
        ("sweep.tol = nan", "sweep.tol"),
    ])
    def test_errors_name_key(self, text, key):
        with pytest.raises(ConfigError) as info:
            parse_config_text(text)
        assert info.value.key == key

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "absent.cfg")

    def test_pi_expressions(self):
        assert parse_config_text("model.phi = 7*pi/5").params.phi == pytest.approx(7 * math.pi / 5)
        assert parse_config_text("model.phi = -pi").params.phi == -math.pi
        assert parse_config_text("model.phi = 0.25").params.phi == 0.25

    def test_comments_and_blank_lines(self):
        cfg = parse_config_text("# header\n\nmodel.alpha = 0.9   \n")
        assert cfg.params.alpha == 0.9 and cfg.explicit_keys == {"model.alpha"}

    @pytest.mark.parametrize("text", ["", "model.type = sirs", "model.phi = 7*pi/5\nmodel.alpha = 1",
                                      "initial.S = 0.5\ninitial.E = 0.1\ninitial.I = 0.1\ninitial.R = 0.3",
                                      "calibration.data = x.csv\ncosteff.label = frac\n"
                                      "costeff.population_scale = 2e5"])
    def test_roundtrip(self, text):
        cfg = parse_config_text(text)
        again = parse_config_text(serialize_config(cfg))
        assert again == cfg
        assert serialize_config(again) == serialize_config(cfg)


VALUE_POOL = st.sampled_from(["0", "1", "-1", "0.5", "0.993", "1.2", "2", "1e9", "nan", "inf",
                              "abc", "", "7*pi/5", "sirs", "seirs", "3", "1000", "0.001", "true"])


@settings(max_examples=300, deadline=None)
@given(raw=st.dictionaries(st.sampled_from(KNOWN_KEYS), VALUE_POOL, max_size=8))
def test_config_fuzz_only_config_errors(raw):
    try:
        cfg = build_config(raw)
    except ConfigError:
        return
    assert isinstance(cfg, RunConfig)
    y0 = cfg.initial_state()
    assert len(y0) == len(cfg.model.compartments) and min(y0) >= 0
    assert 0 < cfg.params.alpha <= 1 and cfg.grid.n_steps >= 1


class TestCli:
    def test_equilibrium_prints_reference_state(self, tmp_path, capsys):
        assert run(["equilibrium", "--out", str(tmp_path)]) == 0
        assert capsys.readouterr().out.strip() == "(0.4081, 0.0110, 0.0278, 0.5531)"
        rows = read_csv(tmp_path / "equilibrium.csv")
        assert rows[0] == ["S", "E", "I", "R", "R0"]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["status"] == 0 and "equilibrium.csv" in manifest["outputs"]
        assert "model.alpha" in manifest["defaults_used"]
        assert set(manifest["versions"]) >= {"fracepi", "numpy", "python"}

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg = cfg_file(tmp_path, "model.alpha = 1.2\n")
        assert run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "config" and err["key"] == "model.alpha"
        assert not (tmp_path / "o").exists()

    def test_zero_steps(self, tmp_path):
        cfg = cfg_file(tmp_path, "grid.n_steps = 0\n")
        assert run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_alpha_flag(self, tmp_path, capsys):
        assert run(["simulate", "--alpha", "1.5", "--out", str(tmp_path)]) == 2
        assert "alpha" in capsys.readouterr().err

    def test_simulate_idempotent(self, tmp_path):
        cfg = cfg_file(tmp_path, SMALL)
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["simulate", "--config", str(cfg), "--out", str(a), "--alpha", "0.9"]) == 0
        assert run(["simulate", "--config", str(cfg), "--out", str(b), "--alpha", "0.9"]) == 0
        assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
        rows = read_csv(a / "trajectory.csv")
        assert rows[0] == ["t", "S", "E", "I", "R"] and len(rows) == 102
        m = json.loads((a / "manifest.json").read_text())
        assert str(cfg) in m["inputs"]

    def test_optimize_costeff_chain(self, tmp_path, capsys):
        cfg = cfg_file(tmp_path, SMALL)
        d1, d2 = tmp_path / "classical", tmp_path / "frac"
        assert run(["optimize", "--config", str(cfg), "--alpha", "1", "--out", str(d1)]) == 0
        assert run(["optimize", "--config", str(cfg), "--out", str(d2),
                    "--kappa2-sweep", "0.01,0.001"]) == 0
        header = read_csv(d2 / "focp.csv")[0]
        assert header == ["t", "S", "E", "I", "R", "p1", "p2", "p3", "p4", "T"]
        summary = json.loads((d2 / "focp_summary.json").read_text())
        assert summary["converged"] is True and summary["alpha"] == 0.993
        assert read_csv(d2 / "sensitivity_kappa2.csv")[0] == ["t", "F_kappa2=0.01", "F_kappa2=0.001"]

        rep = tmp_path / "rep"
        assert run(["costeff", str(d1), str(d2), "--out", str(rep)]) == 0
        rows = read_csv(rep / "costeff.csv")
        assert rows[0][:6] == ["label", "A", "TC", "ACER", "Fbar", "ICER"]
        A = [float(r[1]) for r in rows[1:]]
        assert A == sorted(A)
        assert float(rows[1][5]) == float(rows[1][3])

        single = tmp_path / "single"
        assert run(["costeff", str(d2), "--out", str(single)]) == 0
        r = read_csv(single / "costeff.csv")[1]
        assert r[5] == r[3]

        plots = tmp_path / "plots_out"
        assert run(["plots", "--source", str(d2), "--out", str(plots)]) == 0
        names = {p.name for p in (plots / "plots").iterdir()}
        assert {"fig_states.py", "fig_costates.py", "fig_control.py", "fig_efficacy.py",
                "fig_sensitivity.py"} <= names

    def test_costeff_missing_run(self, tmp_path, capsys):
        assert run(["costeff", str(tmp_path / "nothing"), "--out", str(tmp_path / "r")]) == 2
        assert "focp.csv" in capsys.readouterr().err

    def test_unconverged_keeps_artifacts(self, tmp_path):
        cfg = cfg_file(tmp_path, SMALL + "sweep.max_iter = 1\nsweep.tol = 1e-12\n")
        out = tmp_path / "o"
        assert run(["optimize", "--config", str(cfg), "--out", str(out)]) == 4
        assert (out / "focp.csv").exists()
        assert json.loads((out / "manifest.json").read_text())["status"] == 4

    def test_numerical_failure_removes_partial_output(self, tmp_path, capsys):
        cfg = cfg_file(tmp_path, SMALL + "model.b0 = 1e7\nmodel.alpha = 0.9\n"
                                 "initial.S = 0.5\ninitial.E = 0.1\ninitial.I = 0.1\ninitial.R = 0.3\n")
        out = tmp_path / "o"
        assert run(["optimize", "--config", str(cfg), "--out", str(out)]) == 3
        assert not out.exists()
        assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "numerical"

    def test_partial_cleanup_keeps_existing_files(self, tmp_path):
        out = tmp_path / "o"
        out.mkdir()
        keep = out / "notes.txt"
        keep.write_text("mine")
        cfg = cfg_file(tmp_path, "calibration.months = 4\ncalibration.alpha_min = 0.999\n"
                                 "calibration.data = " + str(tmp_path / "missing.csv") + "\n")
        assert run(["fit", "--config", str(cfg), "--out", str(out)]) == 2
        assert [p.name for p in out.iterdir()] == ["notes.txt"]

    def test_fit_synthetic(self, tmp_path, capsys):
        cfg = cfg_file(tmp_path, "calibration.months = 12\ncalibration.synthetic_alpha = 0.97\n")
        out = tmp_path / "fit"
        assert run(["fit", "--config", str(cfg), "--out", str(out), "--seed", "3"]) == 0
        best = float(read_csv(out / "fit_summary.csv")[1][0])
        assert abs(best - 0.97) <= 5e-4
        assert read_csv(out / "data.csv")[0] == ["month", "cases"]
        assert read_csv(out / "fit_curve.csv")[0] == ["month", "label", "data", "model_alpha1", "model_best"]
        assert json.loads((out / "manifest.json").read_text())["seed"] == 3

    def test_fit_from_file(self, tmp_path):
        from fracepi.calibration import synth_series, write_case_series
        cfg0 = parse_config_text("")
        s = synth_series("seirs", cfg0.params.replace(alpha=0.98), endemic_equilibrium(cfg0.params),
                         10, 10_000)
        data = tmp_path / "cases.csv"
        write_case_series(s, data)
        cfg = cfg_file(tmp_path, f"calibration.data = {data}\n")
        out = tmp_path / "fit"
        assert run(["fit", "--config", str(cfg), "--out", str(out)]) == 0
        assert not (out / "data.csv").exists()
        m = json.loads((out / "manifest.json").read_text())
        assert str(data) in m["inputs"]
        assert abs(float(read_csv(out / "fit_summary.csv")[1][0]) - 0.98) <= 5e-4

    def test_plots_empty_dir(self, tmp_path, capsys):
        src = tmp_path / "empty"
        src.mkdir()
        assert run(["plots", "--source", str(src), "--out", str(tmp_path / "p")]) == 2
        err = capsys.readouterr().err
        assert "focp.csv" in err and "trajectory.csv" in err

import numpy as np
import pytest

from skyrmion import cli
from skyrmion.reference import REFERENCES, TAIL_COEFFICIENT_EXACT


def write_series(path, t, v):
    cfg = cli.RunConfig("evolve", {})
    cli.write_csv(path, {"t": t, "value": v}, cfg, ["observer=P@10"])
    return path


def test_parse_pairs():
    assert cli.parse_pairs(["h=0.01", "  A = 2 # comment", "", "# only comment"]) == {"h": "0.01", "A": "2"}
    with pytest.raises(cli.ConfigError):
        cli.parse_pairs(["novalue"])
    with pytest.raises(cli.ConfigError):
        cli.parse_pairs(["=3"])


def test_run_config_parsing():
    cfg = cli.RunConfig("x", {"h": "0.5", "window": "20,60", "bad": "abc", "snap": "1,2,3"})
    assert cfg.number("h", positive=True) == 0.5
    assert cfg.pair("window") == (20.0, 60.0)
    assert cfg.numbers("snap") == (1.0, 2.0, 3.0)
    with pytest.raises(cli.ConfigError):
        cfg.number("bad")
    with pytest.raises(cli.ConfigError, match="unknown"):
        cli.RunConfig("x", {"typo": "1"}).check_unused()
    with pytest.raises(cli.ConfigError, match="positive"):
        cli.RunConfig("x", {"h": "-1"}).number("h", positive=True)


def test_csv_round_trip_keeps_full_precision(tmp_path):
    t = np.linspace(0.0, 1.0, 7)
    v = np.pi * np.exp(-t) / 3.0
    path = write_series(tmp_path / "s.csv", t, v)
    text = path.read_text(encoding="utf-8")
    assert text.startswith("# command=evolve\n")
    assert "\r" not in text
    cols, header = cli.read_csv(path)
    np.testing.assert_array_equal(cols["value"], v)
    assert header["observer"] == "P@10"


def test_unknown_key_is_a_config_error(tmp_path, capsys):
    assert cli.main(["tail-predict", f"out={tmp_path}", "colour=red"]) == cli.EXIT_CONFIG
    assert "colour" in capsys.readouterr().err


def test_missing_config_file_is_a_config_error(tmp_path):
    assert cli.main(["static", "--config", str(tmp_path / "nope.txt")]) == cli.EXIT_CONFIG


def test_bad_family_is_a_config_error(tmp_path):
    assert cli.main(["evolve", f"out={tmp_path}", "family=square"]) == cli.EXIT_CONFIG


def test_config_file_and_command_line_merge(tmp_path):
    conf = tmp_path / "run.txt"
    conf.write_text("A = 2\nout = %s\n" % (tmp_path / "a"), encoding="utf-8")
    assert cli.main(["tail-predict", "--config", str(conf), f"out={tmp_path / 'b'}"]) == cli.EXIT_OK
    report = (tmp_path / "b" / "report.txt").read_text(encoding="utf-8")
    assert "param.A=2" in report
    c = float(next(line for line in report.splitlines() if line.startswith("c=")).split("=")[1])
    assert c == pytest.approx(8 * TAIL_COEFFICIENT_EXACT, rel=1e-8)


def test_tail_predict_reports_reference_check(tmp_path):
    code = cli.main(["tail-predict", f"out={tmp_path}", "t_range=40,60", "t_step=10"])
    assert code == cli.EXIT_OK
    cols, header = cli.read_csv(tmp_path / "tail_prediction.csv")
    assert list(cols) == ["t", "F3", "asymptotic"]
    np.testing.assert_allclose(cols["t"], [40, 50, 60])
    assert float(header["c"]) == pytest.approx(TAIL_COEFFICIENT_EXACT, abs=1e-10)
    assert "check.tail_coefficient_quadrature=PASS" in (tmp_path / "report.txt").read_text(encoding="utf-8")


def test_ringdown_fit_on_synthetic_series(tmp_path):
    t = np.arange(0.0, 100.0, 0.1)
    v = 3.0 * np.exp(-0.26 * t) * np.cos(0.61 * t + 0.4)
    path = write_series(tmp_path / "obs.csv", t, v)
    code = cli.main(["ringdown-fit", f"input={path}", f"out={tmp_path}"])
    assert code == cli.EXIT_OK
    cols, _ = cli.read_csv(tmp_path / "ringdown_fit.csv")
    assert cols["Omega"][0] == pytest.approx(0.61, abs=1e-8)
    assert cols["Gamma"][0] == pytest.approx(0.26, abs=1e-8)


def test_reference_mismatch_exit_code(tmp_path):
    t = np.arange(0.0, 100.0, 0.1)
    v = np.exp(-0.1 * t) * np.cos(1.3 * t)
    path = write_series(tmp_path / "obs.csv", t, v)
    assert cli.main(["ringdown-fit", f"input={path}", f"out={tmp_path}"]) == cli.EXIT_MISMATCH


def test_tail_fit_on_synthetic_series(tmp_path):
    t = np.arange(1.0, 1000.0, 0.5)
    path = write_series(tmp_path / "obs.csv", t, 7.0 * t**-6.0)
    assert cli.main(["tail-fit", f"input={path}", f"out={tmp_path}", "window=200,1000"]) == cli.EXIT_OK
    cols, _ = cli.read_csv(tmp_path / "tail_fit.csv")
    assert cols["b"][0] == pytest.approx(6.0, abs=1e-8)


def test_fit_failure_is_a_numerical_error(tmp_path):
    t = np.arange(1.0, 1000.0, 0.5)
    path = write_series(tmp_path / "obs.csv", t, np.cos(t) * t**-6.0)
    assert cli.main(["tail-fit", f"input={path}", f"out={tmp_path}", "window=200,1000"]) == cli.EXIT_NUMERICAL


def test_evolve_is_deterministic_and_writes_outputs(tmp_path):
    args = ["evolve", "family=degree0_gaussian_cubed", "h=0.05", "t_max=4", "observers=F@5,P@5",
            "snapshots=2"]
    assert cli.main(args + [f"out={tmp_path / 'a'}"]) == cli.EXIT_OK
    assert cli.main(args + [f"out={tmp_path / 'b'}"]) == cli.EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["energy.csv", "observer_F_at_5.csv", "observer_P_at_5.csv", "report.txt",
                     "snapshot_t2.csv"]
    for name in names[:-2] + names[-1:]:
        a = (tmp_path / "a" / name).read_bytes().replace(b"/a", b"")
        b = (tmp_path / "b" / name).read_bytes().replace(b"/b", b"")
        assert a == b
    cols, header = cli.read_csv(tmp_path / "a" / "energy.csv")
    assert list(cols) == ["t", "E_sigma", "E_S", "E_total"]
    assert header["family"] == "degree0_gaussian_cubed"
    snap, _ = cli.read_csv(tmp_path / "a" / "snapshot_t2.csv")
    assert list(snap) == ["r", "F", "P", "S"]
    assert not snap["S"].any()


def test_figure_names_missing_prerequisite(tmp_path, capsys):
    for fig, hint in ((1, "skyrmion evolve"), (2, "skyrmion evolve"), (4, "skyrmion compare")):
        code = cli.main(["figure", f"figure={fig}", f"runs={tmp_path}", f"out={tmp_path / 'f'}"])
        assert code == cli.EXIT_CONFIG
        assert hint in capsys.readouterr().err
    assert cli.main(["figure", "figure=7", f"runs={tmp_path}"]) == cli.EXIT_CONFIG


def test_figure_two_from_observer_csv(tmp_path):
    t = np.arange(0.0, 150.0, 0.1)
    v = np.exp(-0.26 * t) * np.cos(0.61 * t + 0.4)
    (tmp_path / "evolve").mkdir()
    write_series(tmp_path / "evolve" / "observer_P_at_10.csv", t, v)
    code = cli.main(["figure", "figure=2", f"runs={tmp_path}", f"out={tmp_path / 'f'}"])
    assert code == cli.EXIT_OK
    cols, _ = cli.read_csv(tmp_path / "f" / "fig2.csv")
    assert list(cols) == ["t", "ln_abs_P", "fit"]
    assert cols["t"].max() <= 100.0


def test_reference_table_bands():
    lo, hi = REFERENCES["qnm_Omega"].band()
    assert (lo, hi) == pytest.approx((0.600, 0.620))
    assert REFERENCES["ringdown_Gamma"].accepts(0.27)
    assert not REFERENCES["ringdown_Gamma"].accepts(0.271)
    assert not REFERENCES["qnm_Gamma"].accepts(float("nan"))


def test_usage_error_is_a_config_error():
    assert cli.main(["no-such-command"]) == cli.EXIT_CONFIG

import json

import numpy as np
import pytest

import ntest_cli
from ntest_cli import constants_payload, main
from normality.normal_math import solve_qtilde
from normality.truncated_moments import lmr_partitions, trunc_moments


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setattr(ntest_cli, "configure_logging", lambda *args, **kwargs: None)


@pytest.fixture
def sample_file(tmp_path):
    path = tmp_path / "sample.csv"
    values = np.random.default_rng(3).standard_normal(200)
    path.write_text("\n".join(f"{v:.10f}" for v in values) + "\n")
    return path


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


class TestConstants:
    def test_payload(self):
        payload = constants_payload()
        assert set(payload) == {
            "qtilde",
            "qtilde_root",
            "rho",
            "rho_quadrature",
            "lambda_tail",
            "rounded_variance_gap",
            "blocks",
        }
        assert payload["qtilde"] == pytest.approx(0.19809, abs=1e-5)
        assert payload["rho"] == pytest.approx(1.7885, abs=5e-4)
        assert set(payload["blocks"]) == {"L", "M", "R"}

    def test_blocks_share_one_variance(self):
        blocks = constants_payload()["blocks"]
        assert blocks["L"]["sigma2_tilde"] == pytest.approx(blocks["M"]["sigma2_tilde"], abs=1e-9)
        assert blocks["R"]["sigma2_tilde"] == pytest.approx(blocks["M"]["sigma2_tilde"], abs=1e-9)
        middle = trunc_moments(lmr_partitions(solve_qtilde().value)[1])
        assert blocks["M"]["kappa_tilde"] == pytest.approx(middle.kappa_tilde)

    def test_command(self, capsys):
        assert main(["constants", "--format", "json"]) == 0
        assert _json_out(capsys)["lambda_tail"] == pytest.approx(0.2186, abs=3e-4)

    def test_text(self, capsys):
        assert main(["constants"]) == 0
        assert "rho" in capsys.readouterr().out


class TestTestCommand:
    def test_json(self, sample_file, capsys):
        assert main(["test", str(sample_file), "--format", "json"]) == 0
        payload = _json_out(capsys)
        assert payload["n"] == 200
        assert set(payload["statistics"]) == {"N", "N1", "N2", "N3", "JB", "AD", "SW"}
        assert [d["test"] for d in payload["decisions"]] == ["N", "JB", "AD", "SW"]
        for decision in payload["decisions"]:
            assert 0.0 <= decision["p_value"] <= 1.0

    def test_two_levels(self, sample_file, capsys):
        args = ["test", str(sample_file), "--format", "json", "--level", "0.01", "0.05"]
        assert main(args) == 0
        assert len(_json_out(capsys)["decisions"]) == 8

    def test_calibrated(self, sample_file, tmp_path, capsys):
        args = [
            "test",
            str(sample_file),
            "--source",
            "calibrated",
            "--reps",
            "10000",
            "--calibration-dir",
            str(tmp_path / "cal"),
            "--format",
            "json",
        ]
        assert main(args) == 0
        payload = _json_out(capsys)
        assert len(payload["decisions"]) == 7
        assert all(d["critical_source"].startswith("calibrated") for d in payload["decisions"])
        assert len(list((tmp_path / "cal").glob("*.ncal"))) == 7

    def test_json_shape(self, sample_file, capsys):
        assert main(["test", str(sample_file), "--format", "json", "--quantile-mode", "type7"]) == 0
        payload = _json_out(capsys)
        assert set(payload) == {"n", "source", "estimator", "statistics", "decisions"}
        assert payload["estimator"] == {
            "denominator": "m",
            "index_mode": "r_type7_quantile",
            "partition_ratio": "exact_qtilde",
        }
        assert all(isinstance(v, float) for v in payload["statistics"].values())
        for decision in payload["decisions"]:
            assert set(decision) == {
                "test",
                "statistic",
                "side",
                "level",
                "critical_source",
                "critical_values",
                "p_value",
                "reject",
            }
            assert isinstance(decision["critical_values"], list)
            assert isinstance(decision["reject"], bool)

    def test_text_names_the_estimator(self, sample_file, capsys):
        assert main(["test", str(sample_file), "--denominator", "m-1"]) == 0
        out = capsys.readouterr().out
        assert "estimator: denominator=m_minus_1" in out
        assert "N3" in out

    def test_empty_file(self, tmp_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text("")
        assert main(["test", str(path)]) == 2
        assert "no data" in capsys.readouterr().err

    def test_bad_level(self, sample_file, capsys):
        assert main(["test", str(sample_file), "--level", "1.5"]) == 2
        assert "--level" in capsys.readouterr().err

    def test_unknown_flag(self, sample_file):
        assert main(["test", str(sample_file), "--bogus"]) == 2

    def test_bad_log_level(self, sample_file):
        assert main(["test", str(sample_file), "--log-level", "chatty"]) == 2


def test_help_exits_cleanly():
    assert main(["--help"]) == 0


def test_power_needs_calibration(tmp_path, capsys):
    args = ["power", "--n", "60", "--reps", "100", "--calibration-dir", str(tmp_path)]
    assert main(args) == 2
    assert "ntest calibrate" in capsys.readouterr().err


def test_calibrate_then_power(tmp_path, capsys):
    cal_dir, out_dir = str(tmp_path / "cal"), str(tmp_path / "out")
    calibrate = ["calibrate", "--n", "60", "--reps", "10000", "--calibration-dir", cal_dir]
    assert main(calibrate + ["--format", "json"]) == 0
    summaries = _json_out(capsys)
    assert {s["statistic"] for s in summaries} == {"N", "JB", "AD", "SW"}

    n3 = calibrate + ["--statistics", "N3", "--format", "json"]
    assert main(n3) == 0
    (summary,) = _json_out(capsys)
    assert summary["statistic"] == "N3"
    assert summary["config_hash"] != "reference"

    power = [
        "power",
        "--n",
        "60",
        "--reps",
        "500",
        "--spec",
        "laplace",
        "t(5)",
        "--calibration-reps",
        "10000",
        "--calibration-dir",
        cal_dir,
        "--output",
        out_dir,
        "--format",
        "json",
    ]
    assert main(power) == 0
    rows = _json_out(capsys)
    assert len(rows) == 2 * 5
    assert {row["spec"] for row in rows} == {"Laplace", "t(5)"}
    assert len(list((tmp_path / "out").glob("power_*.json"))) == 1

    unique = ["unique", "--n", "60", "--reps", "500", "--spec", "logistic"] + power[8:]
    assert main(unique) == 0
    (row,) = _json_out(capsys)
    assert set(row["unique"]) == {"JB", "AD", "SW", "N_right"}


def test_returns_from_prices(tmp_path, capsys):
    rng = np.random.default_rng(8)
    inputs = []
    for name in ("aaa", "bbb"):
        prices = 100.0 * np.exp(np.cumsum(0.01 * rng.standard_t(5, 1001)))
        path = tmp_path / f"{name}.csv"
        path.write_text("close\n" + "\n".join(f"{p:.8f}" for p in prices) + "\n")
        inputs.append(str(path))

    args = inputs + [
        "--prices",
        "--n",
        "100",
        "--level",
        "0.05",
        "--calibrate",
        "--calibration-reps",
        "10000",
        "--calibration-dir",
        str(tmp_path / "cal"),
        "--output",
        str(tmp_path / "out"),
        "--format",
        "json",
    ]
    assert main(["returns"] + args) == 0
    (row,) = _json_out(capsys)
    assert row["windows"] == 20
    assert set(row["total"]) == {"JB", "AD", "SW", "N_right"}

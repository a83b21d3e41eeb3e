import json

import numpy as np
import pytest

from msetarx import io
from msetarx.cli import main
from msetarx.exceptions import ValidationError


@pytest.fixture
def dgp1_file(tmp_path, dgp1):
    path = tmp_path / "dgp1.json"
    io.save_model(path, dgp1)
    return path


def _stderr_json(capsys):
    err = capsys.readouterr().err.strip()
    assert "\n" not in err
    return json.loads(err)


class TestModelDocuments:
    def test_round_trip(self, tmp_path, dgp1, dgp2):
        for spec in (dgp1, dgp2):
            path = tmp_path / "m.json"
            io.save_model(path, spec)
            assert io.load_model(path) == spec

    def test_missing_regime(self, tmp_path, dgp1):
        doc = io.model_to_dict(dgp1)
        doc["regimes"] = [r for r in doc["regimes"] if r["index"] != [3, 2]]
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match=r"missing regime \(3, 2\)"):
            io.load_model(path)

    def test_breakpoint_order(self, tmp_path, dgp1):
        doc = io.model_to_dict(dgp1)
        doc["partition"][0] = [0.5, -0.5]
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError, match="not increasing in dimension 1"):
            io.load_model(path)

    def test_all_problems_reported(self, tmp_path, dgp1):
        doc = io.model_to_dict(dgp1)
        doc["partition"][0] = [0.5, -0.5]
        doc["noise_cov_eps"] = [[1.0, 0.0], [0.0, -1.0]]
        path = tmp_path / "m.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValidationError) as info:
            io.load_model(path)
        assert len(info.value.problems) >= 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "dims": {,\n}')
        with pytest.raises(ValidationError, match=r"line 2, column"):
            io.load_model(path)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"partition": [[]]}))
        with pytest.raises(ValidationError, match="missing key 'dims'"):
            io.load_model(path)


class TestSeries:
    def test_round_trip(self, tmp_path):
        Y = np.array([[0.1, 1e-17], [1.0 / 3.0, -2.5], [np.pi, 7.0]])
        F = np.array([[1.0], [2.0], [3.0]])
        path = tmp_path / "s.csv"
        io.write_series(path, Y, F, regime=[1, 2, 1])
        Y2, F2, reg = io.read_series(path)
        np.testing.assert_array_equal(Y2, Y)
        np.testing.assert_array_equal(F2, F)
        assert reg.tolist() == [1, 2, 1]

    def test_no_exogenous_columns(self, tmp_path):
        path = tmp_path / "s.csv"
        io.write_series(path, np.zeros((2, 2)))
        assert path.read_text().splitlines()[0] == "t,y1,y2"
        assert io.read_series(path)[1].shape == (2, 0)

    @pytest.mark.parametrize(
        "text, message",
        [
            ("t,y1\n0,1,2\n", "ragged row 1"),
            ("t,y1\n0,1\n1,abc\n", "non-numeric cell in row 2"),
            ("t,y1\n0,1\n2,1\n1,1\n", r"increase strictly from 0 \(row 3\)"),
            ("t,y1\n1,1\n", r"\(row 1\)"),
            ("time,y1\n0,1\n", "must start with 't'"),
            ("t,f1\n0,1\n", "y1..yD"),
        ],
    )
    def test_malformed(self, tmp_path, text, message):
        path = tmp_path / "s.csv"
        path.write_text(text)
        with pytest.raises(ValidationError, match=message):
            io.read_series(path)


class TestCLI:
    def test_simulate_deterministic(self, tmp_path, dgp1_file):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert main(["simulate", "--model", str(dgp1_file), "--n", "10", "--seed", "7", "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        lines = outs[0].decode().splitlines()
        assert lines[0] == "t,y1,y2" and len(lines) == 11

    def test_simulate_exogenous_and_trace(self, tmp_path, dgp2):
        model = tmp_path / "dgp2.json"
        io.save_model(model, dgp2)
        out = tmp_path / "s.csv"
        main(["simulate", "--model", str(model), "--n", "5", "--seed", "1", "--out", str(out), "--trace"])
        assert out.read_text().splitlines()[0] == "t,y1,y2,f1,f2,regime"

    def test_bad_algorithm_is_usage_error(self, tmp_path, dgp1_file, capsys):
        code = main(["fit", "--model-config", str(dgp1_file), "--data", "x.csv",
                     "--algorithm", "foo", "--out", str(tmp_path / "f.json")])
        assert code == 2
        err = _stderr_json(capsys)
        assert err["exit_code"] == 2 and err["error"] == "usage"

    def test_invalid_model_exit_3(self, tmp_path, dgp1, capsys):
        doc = io.model_to_dict(dgp1)
        doc["regimes"].pop()
        model = tmp_path / "m.json"
        model.write_text(json.dumps(doc))
        code = main(["stationarity", "--model", str(model), "--out", str(tmp_path / "r.json")])
        assert code == 3
        err = _stderr_json(capsys)
        assert err["error"] == "validation" and any("missing regime" in p for p in err["problems"])

    def test_estimation_failure_exit_4(self, tmp_path, capsys):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"partition": [[10.0]], "d": 1, "p": 1}))
        data = tmp_path / "s.csv"
        io.write_series(data, np.random.default_rng(0).standard_normal(50))
        code = main(["fit", "--model-config", str(config), "--data", str(data),
                     "--algorithm", "batch", "--out", str(tmp_path / "f.json")])
        assert code == 4
        assert "regime (2,)" in _stderr_json(capsys)["message"]

    def test_stationarity_report(self, tmp_path, dgp2):
        model = tmp_path / "m.json"
        io.save_model(model, dgp2)
        out = tmp_path / "r.json"
        assert main(["stationarity", "--model", str(model), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        radii = [r["spectral_radius"] for r in doc["regimes"]]
        np.testing.assert_allclose(radii, [np.sqrt(0.3), 1.3, 0.5], atol=1e-10)
        assert doc["all_stable"] is False
        assert doc["exogenous"]["spectral_radius"] == pytest.approx(0.5, abs=1e-10)

    @pytest.mark.parametrize("algorithm", ["batch", "recursive", "adaptive"])
    def test_fit_with_trajectory(self, tmp_path, dgp1_file, algorithm):
        data = tmp_path / "s.csv"
        main(["simulate", "--model", str(dgp1_file), "--n", "3000", "--seed", "3", "--out", str(data)])
        out, traj = tmp_path / "f.json", tmp_path / "t.csv"
        args = ["fit", "--model-config", str(dgp1_file), "--data", str(data),
                "--algorithm", algorithm, "--out", str(out)]
        if algorithm != "batch":
            args += ["--trajectory", str(traj)]
        assert main(args) == 0
        doc = json.loads(out.read_text())
        assert doc["regime_time_total"] == 3000 - 6
        if algorithm != "batch":
            header = traj.read_text().splitlines()[0].split(",")
            assert header[:3] == ["step", "regime", "max_abs_error"]
            assert ("s" in header) == (algorithm == "adaptive")

    def test_trajectory_needs_reference(self, tmp_path, capsys):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"partition": [[0.0]], "d": 1, "p": 1}))
        data = tmp_path / "s.csv"
        io.write_series(data, np.random.default_rng(0).standard_normal(50))
        code = main(["fit", "--model-config", str(config), "--data", str(data), "--algorithm",
                     "recursive", "--out", str(tmp_path / "f.json"), "--trajectory", str(tmp_path / "t.csv")])
        assert code == 2

    def test_reproduce_dgp2(self, tmp_path, capsys):
        assert main(["reproduce", "dgp2", "--seed", "3", "--n", "5000", "--out-dir", str(tmp_path)]) == 0
        names = {p.name for p in tmp_path.iterdir()}
        assert {"model.json", "series.csv", "fit.json", "stationarity.json", "table.csv"} <= names
        assert "dgp2" in capsys.readouterr().out

    def test_reproduce_dgp1_intercepts(self, tmp_path, dgp1, capsys):
        assert main(["reproduce", "dgp1", "--seed", "1", "--out-dir", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "fit.json").read_text())
        assert doc["regime_time_total"] == 49_994
        worst = max(
            np.abs(np.array(r["a0"]) - dgp1.regimes[tuple(r["index"])].a0).max() for r in doc["regimes"]
        )
        assert worst <= 0.06, f"worst intercept error {worst:.4f}"

"""Command-line behavior: payloads, sentinels, exit codes, determinism."""

import json

import numpy as np
import pytest

from conescore.cli import main


@pytest.fixture
def files(tmp_path):
    def write(name, content):
        path = tmp_path / name
        path.write_text(content)
        return str(path)

    return write


@pytest.fixture
def n01(files):
    return files("n01.json", json.dumps({"family": "gaussian", "mean": 0.0, "var": 1.0}))


@pytest.fixture
def n11(files):
    return files("n11.json", json.dumps({"family": "gaussian", "mean": 1.0, "var": 1.0}))


@pytest.fixture
def uniform(files):
    cfg = {"family": "grid", "domain": [0.0, 1.0], "values": [1.0] * 51}
    return files("uniform.json", json.dumps(cfg))


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------

def test_score_log_gaussian(capsys, files, n01):
    obs = files("obs.csv", "0.0\n")
    code, out, _ = run(capsys, ["score", "--rule", "log", "--forecast", n01, "--obs", obs])
    assert code == 0
    payload = json.loads(out)
    assert payload["rule"] == "logarithmic"
    assert payload["records"][0]["score"] == pytest.approx(-0.9189385332, abs=1e-8)
    assert payload["summary"] == {
        "mean": pytest.approx(-0.9189385332),
        "count": 1,
        "clamped": 0,
    }
    digest = payload["forecast_digest"]
    assert len(digest) == 12 and set(digest) <= set("0123456789abcdef")


def test_score_hyvarinen_closed_form(capsys, files, n01):
    obs = files("obs.csv", "0.0\n1.0\n2.0\n")
    code, out, _ = run(capsys, ["score", "--rule", "hyv", "--forecast", n01, "--obs", obs])
    assert code == 0
    scores = [r["score"] for r in json.loads(out)["records"]]
    np.testing.assert_allclose(scores, [2.0, 1.0, -2.0], atol=1e-10)


def test_score_quadratic_uniform(capsys, files, uniform):
    obs = files("obs.csv", "0.2\n0.8\n")
    code, out, _ = run(capsys, ["score", "--rule", "quadratic", "--forecast", uniform, "--obs", obs])
    assert code == 0
    scores = [r["score"] for r in json.loads(out)["records"]]
    np.testing.assert_allclose(scores, [1.0, 1.0], atol=1e-10)


def test_score_zero_density_sentinel(capsys, files):
    cfg = {"family": "grid", "domain": [0.0, 1.0], "values": [0.0, 0.0, 1.0, 1.0, 1.0]}
    forecast = files("halfzero.json", json.dumps(cfg))
    obs = files("obs.csv", "0.05\n0.9\n")
    code, out, err = run(capsys, ["score", "--rule", "log", "--forecast", forecast, "--obs", obs])
    assert code == 0
    payload = json.loads(out)
    assert payload["records"][0]["score"] == "-inf"
    assert isinstance(payload["records"][1]["score"], float)
    assert payload["summary"]["clamped"] == 1
    assert payload["summary"]["mean"] == "-inf"
    assert "-inf" in err


def test_score_skips_header_row(capsys, files, n01):
    obs = files("obs.csv", "value\n0.0\n1.0\n")
    code, out, _ = run(capsys, ["score", "--rule", "log", "--forecast", n01, "--obs", obs])
    assert code == 0
    assert json.loads(out)["summary"]["count"] == 2


def test_score_writes_json_and_csv(capsys, files, n01, tmp_path):
    obs = files("obs.csv", "0.0\n1.0\n")
    out_json = tmp_path / "scores.json"
    out_csv = tmp_path / "scores.csv"
    code, out, _ = run(
        capsys, ["score", "--rule", "log", "--forecast", n01, "--obs", obs, "--out", str(out_json)]
    )
    assert code == 0
    assert json.loads(out_json.read_text()) == json.loads(out)
    code, _, _ = run(
        capsys, ["score", "--rule", "log", "--forecast", n01, "--obs", obs, "--out", str(out_csv)]
    )
    assert code == 0
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0].split(",")[:2] == ["x", "score"]
    assert len(lines) == 3


def test_score_out_of_domain_exits_3(capsys, files, uniform):
    obs = files("obs.csv", "2.0\n")
    code, _, err = run(capsys, ["score", "--rule", "quadratic", "--forecast", uniform, "--obs", obs])
    assert code == 3
    assert "domain" in err


def test_score_config_errors_exit_2(capsys, files, n01, uniform):
    obs = files("obs.csv", "0.0\n")
    assert run(capsys, ["score", "--rule", "log", "--forecast", "/nope.json", "--obs", obs])[0] == 2
    bad = files("bad.json", "{not json")
    assert run(capsys, ["score", "--rule", "log", "--forecast", bad, "--obs", obs])[0] == 2
    unknown = files("unknown.json", json.dumps({"family": "beta"}))
    assert run(capsys, ["score", "--rule", "log", "--forecast", unknown, "--obs", obs])[0] == 2
    empty = files("empty.csv", "\n")
    assert run(capsys, ["score", "--rule", "log", "--forecast", n01, "--obs", empty])[0] == 2
    assert run(capsys, ["score", "--rule", "elo", "--forecast", n01, "--obs", obs])[0] == 2


def test_score_strict_cone_gate(capsys, files, n01):
    obs = files("obs.csv", "0.0\n")
    cauchy = files("cauchy.json", json.dumps({"family": "power_law", "beta": 2.0}))
    code, _, _ = run(
        capsys, ["score", "--rule", "log", "--forecast", cauchy, "--obs", obs, "--strict-cone"]
    )
    assert code == 0
    # Gaussian tails fall below every polynomial envelope: not a member
    code, _, err = run(
        capsys, ["score", "--rule", "log", "--forecast", n01, "--obs", obs, "--strict-cone"]
    )
    assert code == 3
    assert "domain" in err


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def test_verify_runs_are_byte_identical(capsys):
    argv = ["verify", "--suite", "euler", "--samples", "3", "--seed", "7"]
    code_a, out_a, err_a = run(capsys, argv)
    code_b, out_b, _ = run(capsys, argv)
    assert code_a == code_b == 0
    assert out_a == out_b
    assert "cases passed" in err_a
    payload = json.loads(out_a)
    assert payload["summary"]["pass"] == payload["summary"]["total"]


def test_verify_config_errors_exit_2(capsys):
    assert run(capsys, ["verify", "--suite", "spectra"])[0] == 2
    assert run(capsys, ["verify", "--suite", "euler", "--tol", "-1"])[0] == 2
    assert run(capsys, ["verify", "--suite", "gateaux", "--rule", "log"])[0] == 2
    assert run(capsys, ["verify", "--suite", "euler", "--samples", "0"])[0] == 2


# ---------------------------------------------------------------------------
# deriv
# ---------------------------------------------------------------------------

def test_deriv_matches_closed_form(capsys, n01, n11):
    code, out, _ = run(capsys, ["deriv", "--rule", "log", "--q", n01, "--p", n11])
    assert code == 0
    payload = json.loads(out)
    assert payload["residual"] <= 1e-4
    assert payload["converged"] is True
    assert payload["monotonicity_violations"] == 0
    assert payload["fd_value"] == pytest.approx(-1.9189385332, abs=1e-4)
    assert len(payload["trace"]) == 16


def test_deriv_unsupported_family_exits_3(capsys, uniform, n01):
    code, _, err = run(capsys, ["deriv", "--rule", "hyv", "--q", uniform, "--p", uniform])
    assert code == 3
    assert "domain" in err


# ---------------------------------------------------------------------------
# demo
# ---------------------------------------------------------------------------

def test_demo_binary_boundary(capsys):
    code, out, err = run(capsys, ["demo", "--name", "binary-boundary"])
    assert code == 0
    payload = json.loads(out)
    assert payload["strictly_decreasing"] is True
    assert payload["final"] < -27.0
    assert payload["crossed_at_index"] == 11
    assert "crossed" in err


def test_demo_binary_boundary_uncrossed_threshold_fails(capsys):
    code, _, _ = run(capsys, ["demo", "--name", "binary-boundary", "--K", "3"])
    assert code == 1  # partials never reach -27 on a short path


def test_demo_nowhere_dense(capsys):
    code, out, _ = run(capsys, ["demo", "--name", "nowhere-dense"])
    assert code == 0
    payload = json.loads(out)
    assert [10.0, 0] in payload["witnesses"]
    assert [1.0, 2] in payload["witnesses"]
    assert [0.1, 8] in payload["witnesses"]
    assert payload["b_sum"] == pytest.approx((2.0**-0.5) / (1.0 - 2.0**-0.5), rel=1e-9)


def test_demo_sup_mode(capsys):
    code, out, _ = run(capsys, ["demo", "--name", "sup-mode"])
    assert code == 0
    reports = json.loads(out)["reports"]
    assert reports["plateau"]["regime"] == "integrable-subgradient"
    assert reports["triangle"]["regime"] == "dirac"
    assert all(r["pass"] for r in reports.values())


def test_demo_validation(capsys):
    assert run(capsys, ["demo", "--name", "escher"])[0] == 2
    assert run(capsys, ["demo", "--name", "sup-mode", "--grid-points", "3"])[0] == 2


def test_no_command_exits_2(capsys):
    assert main([]) == 2
    capsys.readouterr()

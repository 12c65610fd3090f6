import json
import subprocess
import sys

import numpy as np
import pytest

from besovfill.cli import ConfigError, RunConfig, main, report_csv
from besovfill.io import save_sequence


@pytest.fixture
def out(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv("BESOVFILL_OUT", str(d))
    monkeypatch.chdir(tmp_path)
    return d


@pytest.fixture
def built(out):
    assert main(["build", "--space", "grid1d:64", "--levels", "0:6"]) == 0
    return out


def test_build_writes_artifacts(built):
    for name in ("space.json", "filling.json", "structure.json", "config.json"):
        assert (built / name).exists()
    filling = json.loads((built / "filling.json").read_text())
    assert filling["levels"] == [0, 6]
    assert len({v["level"] for v in filling["vertices"]}) == 7
    structure = json.loads((built / "structure.json").read_text())
    assert structure["structure"]["ok"]


def test_build_grid256_level_blocks(out):
    assert main(["build", "--space", "grid1d:256", "--levels", "0:8"]) == 0
    filling = json.loads((out / "filling.json").read_text())
    assert sorted({v["level"] for v in filling["vertices"]}) == list(range(9))


def test_invalid_levels(out, capsys):
    assert main(["build", "--levels", "5:2"]) == 2
    assert "levels" in capsys.readouterr().err


def test_cantor_warning(out, capsys):
    assert main(["build", "--space", "cantor:5"]) == 0
    assert "finest radius" in capsys.readouterr().err


def test_usage_error(out):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_verify_requires_artifacts(out, capsys):
    assert main(["verify", "--suite", "structure"]) == 2
    assert "space.json" in capsys.readouterr().err


def test_verify_structure(built):
    assert main(["verify", "--suite", "structure"]) == 0
    report = json.loads((built / "report.json").read_text())
    assert report["passed"] and report["suites"] == ["structure"]
    names = [c["name"] for c in report["checks"]]
    assert names == sorted(names)
    assert len(report["config_hash"]) == 64


def test_operators_chain(built):
    assert main(["extend", "--function", "sin2pi"]) == 0
    assert main(["derive", "--input", str(built / "poisson.json"), "--edges"]) == 0
    assert main(["integrate", "--input", str(built / "derivative.json")]) == 0
    assert main(["trace", "--function", "identity", "--report", str(built / "tr.json")]) == 0
    tr = json.loads((built / "tr.json").read_text())
    assert tr["max_deviation"] <= tr["bound"]
    data = json.loads((built / "integral.json").read_text())
    x = np.arange(64) / 63
    g = np.array(data["values"]) - np.sin(2 * np.pi * x)
    assert np.ptp(g) < 1e-10


def test_norm_constant_is_zero(built):
    rep = built / "norm.json"
    assert main(["norm", "--function", "const", "--s", "0.5", "--p", "2", "--q", "inf",
                 "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["results"][0]["norm"] == 0
    assert data["results"][0]["params"]["q"] == "inf"
    assert set(data["results"][0]["levels"]) == {str(k) for k in range(7)}
    assert "level,term" in report_csv(data).splitlines()[0]


def test_norm_partial_params(built):
    assert main(["norm", "--function", "sin2pi", "--s", "0.5"]) == 2


def test_interp_and_tamper(built):
    n = len(json.loads((built / "filling.json").read_text())["vertices"])
    u = np.random.default_rng(0).exponential(size=n)
    save_sequence(built / "u.json", "vertex", u)
    cert = built / "cert.json"
    assert main(["interp", "--params0", "0.3,1,inf", "--params1", "0.7,3,inf",
                 "--theta", "0.5", "--input", str(built / "u.json"), "--report", str(cert)]) == 0
    data = json.loads(cert.read_text())
    assert data["max_pointwise_error"] <= 1e-12 * (1 + u.max())
    assert main(["verify", "--suite", "interp"]) == 0
    data["u0"][int(np.argmax(u))] = 0.0
    (built / "tampered-cert.json").write_text(json.dumps(data))
    assert main(["verify", "--suite", "interp"]) == 1
    report = json.loads((built / "report.json").read_text())
    failed = [c for c in report["checks"] if c["status"] == "fail"]
    assert [c["name"] for c in failed] == ["interp.certificate.tampered-cert.json"]
    assert failed[0]["property"] == "pointwise Calderon factorization"


def test_interp_degenerate_identity(built):
    n = len(json.loads((built / "filling.json").read_text())["vertices"])
    u = np.random.default_rng(1).exponential(size=n)
    save_sequence(built / "u.json", "vertex", u)
    assert main(["interp", "--params0", "0.5,2,2", "--params1", "0.5,2,2",
                 "--theta", "0.5", "--input", str(built / "u.json")]) == 0
    data = json.loads((built / "cert.json").read_text())
    np.testing.assert_allclose(data["u0"], u)
    np.testing.assert_allclose(data["u1"], u)


def test_report_csv(built, tmp_path):
    assert main(["verify", "--suite", "structure"]) == 0
    target = tmp_path / "r.csv"
    assert main(["report", "--csv", str(target)]) == 0
    lines = target.read_text().splitlines()
    assert lines[0] == "name,suite,property,status,measured,threshold"
    assert all(line.split(",")[3] == "pass" for line in lines[1:])


def test_config_file(out, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"space": "grid1d:32", "levels": [0, 5], "seed": 3}))
    assert main(["build", "--config", str(cfg)]) == 0
    assert json.loads((out / "config.json").read_text())["seed"] == 3
    cfg.write_text(json.dumps({"space": "grid1d:32", "levels": "x"}))
    assert main(["build", "--config", str(cfg)]) == 2
    assert "config.levels" in capsys.readouterr().err


@pytest.mark.parametrize("data,field", [
    ({"seed": "zero"}, "config.seed"),
    ({"params": ["1,2"]}, "config.params[0]"),
    ({"functions": ["sin2pi", "nope"]}, "config.functions[1]"),
    ({"colour": 1}, "config.colour"),
])
def test_config_field_paths(data, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        RunConfig.from_dict(data)


def test_digest_ignores_out(tmp_path):
    a = RunConfig(out=str(tmp_path / "a"))
    b = RunConfig(out=str(tmp_path / "b"))
    assert a.digest() == b.digest()
    assert RunConfig(seed=1).digest() != a.digest()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "besovfill", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "verify" in proc.stdout

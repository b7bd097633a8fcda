import json

from fmscatter.cli import main

SMALL = ["--N", "14", "--lmax", "1", "--theta", "7"]


def test_validate_config(capsys):
    assert main(["validate-config", "--preset", "e-Ps", "--energies", "0.1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["system"] == "e-Ps" and out["energies_total"] == [-0.15]


def test_config_error_exit_code(capsys):
    assert main(["validate-config", "--preset", "e-Ps", "--set", "merkuriev.mu=2.0"]) == 2
    assert "mu" in capsys.readouterr().err
    assert main(["validate-config", "/nonexistent.yaml"]) == 2


def test_numerical_failure_exit_code(monkeypatch, capsys, tmp_path):
    import fmscatter.cli as cli
    from fmscatter.runner import RunError

    def fail(*args, **kw):
        raise RunError("E=-0.15, L=0, spin=0: matrix is singular")

    monkeypatch.setattr(cli, "scan", fail)
    rc = main(["run", "--preset", "e-Ps", "--energies", "0.1", "--out", str(tmp_path)])
    assert rc == 3
    assert "singular" in capsys.readouterr().err


def test_run_is_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        rc = main(["run", "--preset", "e-Ps", "--energies", "0.1", *SMALL, "--out", str(d)])
        assert rc == 0
        outs.append(((d / "run_partial.csv").read_text(), (d / "run_total.csv").read_text(),
                     json.loads((d / "run.json").read_text())))
    assert outs[0][0] == outs[1][0] and outs[0][1] == outs[1][1]
    ja, jb = outs[0][2], outs[1][2]
    assert ja["records"] == jb["records"]
    assert ja["provenance"]["config_hash"] == jb["provenance"]["config_hash"]
    assert "code_version" in ja["provenance"]


def test_sweep_and_spectrum(tmp_path):
    rc = main(["sweep", "--preset", "e-Ps", "--energies", "0.1", *SMALL, "--axis", "theta",
               "--values", "6,8", "--set", "spin=1", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "run_sweep_theta.csv").exists()
    rc = main(["spectrum", "--preset", "e-H", "--N", "10", "--lmax", "0", "--out", str(tmp_path)])
    assert rc == 0
    data = json.loads((tmp_path / "run_spectrum.json").read_text())
    assert any(e["kind"] == "continuum" for e in data["eigenvalues"])

import json

import pytest

from mflab import cli, harness
from mflab.harness import ConfigError, ExperimentConfig, ExperimentError, loglog_fit


def cfg(**kw):
    return ExperimentConfig.from_dict(kw)


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        cfg(experiment="bogus")


@pytest.mark.parametrize("doc,needle", [
    ({"experiment": "scat-sweep", "beta": 1.2}, "outside (0,1]"),
    ({"experiment": "nbody-convergence", "N": [8], "M": 32, "d": 1}, "capacity"),
    ({"experiment": "scat-sweep", "beta": 0.5, "class": "V_1"}, "declared class"),
    ({"experiment": "gp-run", "trap": {"form": "harmonic", "ramp": {"type": "linear", "t_end": 0, "final": 1}}},
     "unbounded"),
    ({"experiment": "smear-sweep", "beta": 0.5, "beta1": 0.7}, "beta1"),
])
def test_validate_diagnostics(doc, needle):
    diags = harness.validate(ExperimentConfig.from_dict(doc))
    assert any(needle in d for d in diags), diags


def test_validate_clean():
    assert harness.validate(cfg(experiment="scat-sweep", beta=0.5, N=[10, 100, 1000])) == []


def test_fit_recovers_slope():
    f = loglog_fit("x", [1, 10, 100, 1000], [2.0, 0.2, 0.02, 0.002], max_slope=-0.9)
    assert f.slope == pytest.approx(-1.0) and f.r2 == pytest.approx(1.0) and f.passed
    noisy = loglog_fit("y", [1, 2, 3, 4], [1, 5, 1, 5], max_slope=10)
    assert not noisy.passed  # R^2 below 0.98


def test_scat_sweep_deterministic(tmp_path):
    c = cfg(experiment="scat-sweep", beta=0.8, beta1=0.5, N=[1e2, 1e3, 1e4])
    r1 = harness.run(c, tmp_path / "a")
    harness.run(c, tmp_path / "b")
    for name in ("series.csv", "summary.json", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert r1.passed
    header = (tmp_path / "a" / "series.csv").read_text().splitlines()[0]
    assert "[length]" in header


def test_workers_give_same_rows(tmp_path):
    base = dict(experiment="smear-sweep", beta=0.8, beta1=0.25, N=[1e2, 1e3, 1e4])
    serial = harness.run(cfg(**base))
    pooled = harness.run(cfg(**base, workers=2))
    assert serial.csv_text() == pooled.csv_text()


def test_weights_audit_reports_upper_bound_failure():
    rep = harness.run(cfg(experiment="weights-audit", N=[4, 50]))
    assert rep.verdicts["recursion (a)"] == "PASS"
    assert rep.verdicts["sandwich bound (b)"] == "FAIL"
    assert not rep.passed


def test_nbody_zero_potential_gives_zero():
    rep = harness.run(cfg(experiment="nbody-convergence", N=[2, 3], M=8, L=8.0, a=0.0, T=0.05,
                          dt=1e-2, trap={"form": "harmonic", "strength": 1.0}))
    assert all(abs(row[1]) < 1e-10 for row in rep.rows)


def test_gronwall_probe_fits_constant():
    rep = harness.run(cfg(experiment="gronwall-probe", N=2, M=8, L=8.0, a=1.0, T=0.1, dt=1e-3,
                          perturb=0.05, trap={"form": "harmonic", "strength": 1.0,
                                              "ramp": {"type": "sin", "eps": 0.3, "omega": 3}}))
    assert rep.passed and rep.extra["C_fit"] >= 0


def test_errors_carry_coordinates():
    with pytest.raises(ExperimentError, match="N"):
        harness.run(cfg(experiment="scat-sweep", beta=0.5, beta1=0.4, N=[10, 100, 1000],
                        profile={"kind": "square-barrier", "V0": 1.0, "R": 2.0}))


def test_gp_run_writes_density(tmp_path):
    c = cfg(experiment="gp-run", grid={"d": 1, "M": 64, "L": 12.0}, init="gaussian", T=0.1, dt=1e-2,
            trap={"form": "harmonic", "strength": 1.0}, snapshot_every=5)
    harness.run(c, tmp_path)
    assert (tmp_path / "density.f64").exists()
    assert json.loads((tmp_path / "summary.json").read_text())["verdict"] == "PASS"


# --- CLI --------------------------------------------------------------------

def write(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, {"experiment": "scat-sweep", "beta": 1.0, "N": [1, 10, 100]})
    assert cli.main(["scat", "--config", good, "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "series.csv").exists()
    assert cli.main(["weights", "--N", "4", "50"]) == 1
    bad = write(tmp_path, {"experiment": "scat-sweep", "beta": 1.2})
    assert cli.main(["scat", "--config", bad]) == 2
    assert cli.main(["validate", "--config", bad]) == 2
    assert cli.main(["gp", "--config", good]) == 2       # wrong kind for the verb
    assert cli.main(["run"]) == 2                        # needs --config


def test_cli_weights_dump(capsys):
    assert cli.main(["weights", "--dump", "--N", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == 'j,k,"m^j(k,N)"' and len(lines) == 1 + 6 * 5


def test_cli_seed_recorded(tmp_path):
    p = write(tmp_path, {"experiment": "weights-audit", "N": [4]})
    cli.main(["run", "--config", p, "--out", str(tmp_path / "o"), "--seed", "11"])
    assert json.loads((tmp_path / "o" / "config.json").read_text())["seed"] == 11

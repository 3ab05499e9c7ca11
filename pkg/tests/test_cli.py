import json

import numpy as np
import pytest

from vecmin.cli import EXIT_CONFIG, EXIT_FALSE, EXIT_OK, OUT_DIR_ENV, main
from vecmin.config import ConfigError, load_config, parse_config
from vecmin.fieldio import read_field
from vecmin.field import mass
from vecmin.nonlin import CoupledPower, PaperExample, PurePower, default_constants

BENCH = PurePower().to_dict()


def write_cfg(tmp_path, name="cfg.json", grid=(1, 512, 32.0), spec=None, **extra):
    d = {"grid": {"N": grid[0], "M": grid[1], "L": grid[2]}, "nonlinearity": spec or BENCH}
    d.update(extra)
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return p


def run(tmp_path, *args, out="out"):
    return main([*args, "--out", str(tmp_path / out)])


def report(tmp_path, out="out", name="report.json"):
    return json.loads((tmp_path / out / name).read_text())


# -- config validation ----------------------------------------------------------


def test_config_rejects_unknown_keys(tmp_path):
    p = write_cfg(tmp_path, params={"c": 1.0}, colour="blue")
    assert run(tmp_path, "solve", "--config", str(p)) == EXIT_CONFIG
    p = write_cfg(tmp_path, params={"c": 1.0, "speed": 3})
    assert run(tmp_path, "solve", "--config", str(p)) == EXIT_CONFIG
    p = write_cfg(tmp_path, params={"c": 1.0}, flow={"tau": 1.0, "foo": 0})
    assert run(tmp_path, "solve", "--config", str(p)) == EXIT_CONFIG


@pytest.mark.parametrize("c", [0.0, -1.0])
def test_nonpositive_mass_rejected(tmp_path, c):
    p = write_cfg(tmp_path, params={"c": c})
    assert run(tmp_path, "solve", "--config", str(p)) == EXIT_CONFIG
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("values", [[], [1.0, 0.8, 1.2]])
def test_scan_list_validation(tmp_path, values):
    p = write_cfg(tmp_path, params={"c_values": values})
    assert run(tmp_path, "scan", "--config", str(p)) == EXIT_CONFIG


def test_config_bad_inputs():
    base = {"grid": {"N": 1, "M": 64, "L": 8.0}, "nonlinearity": BENCH}
    parse_config(base)
    for bad in (
        {**base, "grid": {"N": 1, "M": 64}},
        {**base, "grid": {"N": 1.0, "M": 64, "L": 8.0}},
        {**base, "grid": {"N": 1, "M": 63, "L": 8.0}},
        {**base, "format_version": 9},
        {**base, "params": {"fractions": [0.5, 1.0]}},
        {**base, "params": {"functional": "K"}},
        {**base, "plan": {"dim": 2}},
        {**base, "nonlinearity": {"kind": "nope"}},
        {"grid": base["grid"]},
    ):
        with pytest.raises(ConfigError):
            parse_config(bad)


def test_missing_or_invalid_file(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["solve", "--config", str(tmp_path / "bad.json")]) == EXIT_CONFIG
    assert main(["frobnicate", "--config", "x"]) == EXIT_CONFIG
    assert main(["solve"]) == EXIT_CONFIG


def test_digest_ignores_paths_and_threads(tmp_path):
    a = load_config(write_cfg(tmp_path, "a.json", output_dir="x", flow={"threads": 1}))
    b = load_config(write_cfg(tmp_path, "b.json", output_dir="y", flow={"threads": 4}))
    c = load_config(write_cfg(tmp_path, "c.json", flow={"seed": 5}))
    assert a.digest() == b.digest() != c.digest()
    assert a.with_overrides(seed=5).digest() == c.digest()


# -- solve / scan ---------------------------------------------------------------


def test_solve_benchmark(tmp_path):
    p = write_cfg(tmp_path, params={"c": 1.0})
    assert run(tmp_path, "solve", "--config", str(p)) == EXIT_OK
    doc = report(tmp_path)
    assert doc["command"] == "solve"
    assert doc["config_digest"] == load_config(p).digest()
    res = doc["result"]
    assert res["energy"] == pytest.approx(-1 / 24, rel=1e-3)
    assert res["multiplier"] == pytest.approx(-0.25, rel=1e-3)
    assert res["converged"]
    u = read_field(tmp_path / "out" / "minimizer.vfld")
    assert mass(u) == pytest.approx(1.0, rel=1e-12)
    header = (tmp_path / "out" / "trace.csv").read_text().splitlines()[0]
    assert header == "iter,energy,kinetic,potential,mass_error,residual,tau"


def test_solve_deterministic_bytes(tmp_path):
    p = write_cfg(tmp_path, params={"c": 1.0}, flow={"seed": 7, "multistart": 2})
    assert run(tmp_path, "solve", "--config", str(p), out="a") == EXIT_OK
    assert run(tmp_path, "solve", "--config", str(p), out="b") == EXIT_OK
    for name in ("report.json", "trace.csv", "minimizer.vfld"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    p = write_cfg(tmp_path, params={"c": 1.0}, flow={"seed": 7, "multistart": 2})
    assert run(tmp_path, "solve", "--config", str(p), "--seed", "8", out="a") == EXIT_OK
    expected = load_config(p).with_overrides(seed=8).digest()
    assert report(tmp_path, "a")["config_digest"] == expected


def test_output_dir_precedence(tmp_path, monkeypatch):
    p = write_cfg(tmp_path, params={"c": 1.0}, output_dir=str(tmp_path / "from_cfg"))
    assert main(["probe-dilation", "--config", str(p)]) == EXIT_OK
    assert (tmp_path / "from_cfg" / "dilation.csv").exists()
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "from_env"))
    assert main(["probe-dilation", "--config", str(p)]) == EXIT_OK
    assert (tmp_path / "from_env" / "report.json").exists()
    assert main(["probe-dilation", "--config", str(p), "--out", str(tmp_path / "from_flag")]) == EXIT_OK
    assert (tmp_path / "from_flag" / "report.json").exists()


def test_scan_benchmark(tmp_path):
    cs = [0.9, 1.0, 1.1]
    p = write_cfg(tmp_path, grid=(1, 1024, 64.0), params={"c_values": cs})
    assert run(tmp_path, "scan", "--config", str(p)) == EXIT_OK
    rows = (tmp_path / "out" / "scan.csv").read_text().splitlines()
    assert rows[0] == "c,energy,multiplier,residual"
    got = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    np.testing.assert_allclose(got[:, 0], cs)
    np.testing.assert_allclose(got[:, 1], -np.array(cs) ** 6 / 24, rtol=0.02)


def test_solve_refuses_supercritical(tmp_path):
    p = write_cfg(tmp_path, spec=PurePower(coef=1.0, degree=7.0).to_dict(), params={"c": 1.0})
    assert run(tmp_path, "solve", "--config", str(p)) == EXIT_CONFIG


# -- verify -----------------------------------------------------------------------


def test_verify_negativity_defaults(tmp_path):
    p = write_cfg(tmp_path, grid=(1, 256, 32.0), spec=PaperExample().to_dict(), params={"c": 1.0})
    assert run(tmp_path, "verify", "negativity", "--config", str(p)) == EXIT_OK
    doc = report(tmp_path)
    assert doc["command"] == "verify negativity"
    assert doc["result"]["verdict"] == "pass"


def test_verify_comparison_negative_control(tmp_path):
    spec = PaperExample(p0=0.0, q1=0.0).to_dict()
    p = write_cfg(tmp_path, grid=(1, 256, 32.0), spec=spec, params={"c": 1.0})
    assert run(tmp_path, "verify", "comparison", "--config", str(p)) == EXIT_FALSE
    assert report(tmp_path)["result"]["verdict"] == "fail"


def test_verify_unknown_lemma(tmp_path):
    p = write_cfg(tmp_path, params={"c": 1.0})
    assert run(tmp_path, "verify", "riemann", "--config", str(p)) == EXIT_CONFIG


def test_verify_missing_params(tmp_path):
    p = write_cfg(tmp_path)
    assert run(tmp_path, "verify", "negativity", "--config", str(p)) == EXIT_CONFIG
    p = write_cfg(tmp_path, spec=PurePower(coef=1.0, degree=7.0).to_dict(), params={"c": 1.0})
    assert run(tmp_path, "verify", "supercritical", "--config", str(p)) == EXIT_CONFIG
    assert run(tmp_path, "verify", "critical-threshold", "--config", str(p)) == EXIT_CONFIG
    p = write_cfg(tmp_path, params={"c": 1.0, "delta": 0.6})
    assert run(tmp_path, "verify", "continuity", "--config", str(p)) == EXIT_CONFIG


def test_verify_supercritical_cli(tmp_path):
    spec = PurePower(coef=1.0, degree=7.0).to_dict()
    p = write_cfg(tmp_path, grid=(1, 512, 16.0), spec=spec, params={"c": 1.0, "bound": 1000.0})
    assert run(tmp_path, "verify", "supercritical", "--config", str(p)) == EXIT_OK


# -- check-assumptions --------------------------------------------------------------


def test_check_assumptions_defaults(tmp_path):
    spec = PaperExample()
    p = write_cfg(
        tmp_path,
        spec=spec.to_dict(),
        constants=default_constants(spec, 1).to_dict(),
        plan={"dim": 1, "samples": 20000},
    )
    assert run(tmp_path, "check-assumptions", "--config", str(p)) == EXIT_OK
    doc = report(tmp_path)
    assert doc["command"] == "check-assumptions"


def test_check_assumptions_negative_coupling(tmp_path):
    spec = CoupledPower(beta=-10.0)
    p = write_cfg(
        tmp_path,
        spec=spec.to_dict(),
        constants=default_constants(spec, 1).to_dict(),
        plan={"dim": 1, "samples": 20000},
    )
    assert run(tmp_path, "check-assumptions", "--config", str(p)) == EXIT_FALSE
    text = (tmp_path / "out" / "report.json").read_text()
    assert "witness" in text


def test_check_assumptions_requires_constants(tmp_path):
    p = write_cfg(tmp_path)
    assert run(tmp_path, "check-assumptions", "--config", str(p)) == EXIT_CONFIG

import json
import os

import pytest

from slipflow.cli import main, run
from slipflow.config import SCHEMA, RunConfig, parse_config
from slipflow.errors import ConfigError


def test_defaults_roundtrip():
    cfg = parse_config("")
    assert cfg.values == RunConfig().values
    again = parse_config(cfg.to_text())
    assert again.values == cfg.values
    assert set(again.explicit) == set(SCHEMA)


def test_parse_values():
    cfg = parse_config("""
# comment
map.kind = moebius
map.a = 0.3 + 0.2i   # trailing comment
verify.Nr_list = 16, 32
output.fields = yes
""")
    assert cfg["map.a"] == 0.3 + 0.2j
    assert cfg["verify.Nr_list"] == (16, 32)
    assert cfg["output.fields"] is True
    assert cfg.map.kind == "moebius"
    assert {"map.kind", "map.a"} <= cfg.explicit


@pytest.mark.parametrize("text, line, word", [
    ("scenario = bump\ndynamics.beta = 0.9", 2, "beta must exceed 1"),
    ("grid.Nr = 32\n\ngrid.Ntheta = 63", 3, "even"),
    ("mystery = 1", 1, "unknown key"),
    ("grid.Nr 32", 1, "malformed"),
    ("grid.Nr = 3.5", 1, "integer"),
    ("map.kind = quadratic\nmap.c = 0.6", 2, "univalent"),
    ("probe.nu = 0.7", 1, "probe.nu"),
    ("seed =", 1, "missing value"),
])
def test_errors_name_line(text, line, word):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert f"line {line}" in str(e.value)
    assert word in str(e.value)


def _cfg(tmp_path, text):
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


def test_cli_config_error_exit(tmp_path):
    out = tmp_path / "out"
    code = main(["simulate", "--config", _cfg(tmp_path, "dynamics.beta = 0.9\n"), "--out", str(out)])
    assert code == 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["error"]["type"] == "ConfigError" and summary["passed"] is False


def test_cli_missing_config(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "o")]) == 2


def test_cli_equilibrium(tmp_path):
    out = tmp_path / "eq"
    text = "scenario = equilibrium\ngrid.Nr = 8\ngrid.Ntheta = 16\ndynamics.t_end = 0.01\noutput.every_steps = 5\n"
    assert main(["simulate", "--config", _cfg(tmp_path, text), "--out", str(out)]) == 0
    files = set(os.listdir(out))
    assert {"effective_config.txt", "summary.json", "diagnostics.csv"} <= files
    assert any(f.startswith("fields_t") for f in files)
    s = json.loads((out / "summary.json").read_text())
    assert s["passed"] and all(s["checks"].values())
    assert s["mass_drift"] == 0.0 and s["representation_sign"] == 1


def test_cli_deterministic(tmp_path):
    text = ("scenario = bump\nmap.kind = cubic\nmap.c = 0.25\ngrid.Nr = 8\ngrid.Ntheta = 16\n"
            "dynamics.cfl = 0.9\ndynamics.t_end = 0.01\noutput.every_steps = 10\noutput.fields = true\n")
    cfg = _cfg(tmp_path, text)
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert main(["simulate", "--config", cfg, "--out", str(o), "--seed", "4"]) == 0
    names = sorted(f for f in os.listdir(outs[0]) if f.endswith(".csv") or f.endswith(".txt"))
    assert "diagnostics.csv" in names
    for n in names:
        assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes(), n


def test_cli_verify_geometry(tmp_path):
    out = tmp_path / "geo"
    text = "map.kind = moebius\nmap.a = 0.3+0.2i\ngrid.Nr = 16\ngrid.Ntheta = 32\n"
    assert main(["verify-geometry", "--config", _cfg(tmp_path, text), "--out", str(out)]) == 0
    header = (out / "verify-geometry.csv").read_text().splitlines()[0]
    assert "," in header


def test_module_error_exit(tmp_path):
    # a manufactured run on a mapped domain fails inside the library, not in parsing
    cfg = parse_config("scenario = manufactured\nmap.kind = cubic\nmap.c = 0.25\ngrid.Nr = 8\ngrid.Ntheta = 16\n")
    assert run("simulate", cfg, str(tmp_path / "m")) == 3
    s = json.loads((tmp_path / "m" / "summary.json").read_text())
    assert s["error"]["type"] == "DomainError"

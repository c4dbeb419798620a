import json
from pathlib import Path

import numpy as np
import pytest

from channel_damp import cli, io_formats
from channel_damp.errors import ParseError, RangeError, UnknownKey


def test_parse_minimal_config(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('scenario = "phi1-oracle"\n')
    cfg = cli.parse_config(p)
    assert cfg.scenario == "phi1-oracle"
    assert cfg.profile_spec["family"] == "couette_constant"
    assert cfg.profile_spec["n_y"] == 257
    assert cfg.seed == 0


def test_parse_unknown_key(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('scenario = "phi1-oracle"\nbogus = 1\n')
    with pytest.raises(UnknownKey):
        cli.parse_config(p)
    p.write_text('scenario = "phi1-oracle"\n[params]\nwhatever = 2\n')
    with pytest.raises(UnknownKey):
        cli.parse_config(p)


def test_parse_range_errors(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('scenario = "phi1-oracle"\n[profile]\nn_y = 10\n')
    with pytest.raises(RangeError):
        cli.parse_config(p)
    p.write_text('scenario = "not-a-thing"\n')
    with pytest.raises(RangeError):
        cli.parse_config(p)
    p.write_text("scenario = [broken\n")
    with pytest.raises(ParseError):
        cli.parse_config(p)


def test_emit_outputs_empty(tmp_path):
    files = cli.emit_outputs({"checks": []}, tmp_path / "out")
    names = sorted(f.name for f in files)
    assert names == ["manifest.json", "summary.json"]
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert "summary.json" in man


def test_emit_outputs_unwritable():
    with pytest.raises(IOError):
        cli.emit_outputs({"checks": []}, "/proc/definitely/not/writable")


def test_green_audit_scenario_and_determinism(tmp_path):
    cfg = cli.config_from_dict({"scenario": "green-audit", "seed": 3,
                                "profile": {"n_y": 129}})
    res = cli.run_scenario(cfg)
    assert all(c["passed"] for c in res["checks"])
    f1 = cli.emit_outputs(res, tmp_path / "a", cfg.echo())
    res2 = cli.run_scenario(cfg)
    f2 = cli.emit_outputs(res2, tmp_path / "b", cfg.echo())
    m1 = json.loads((tmp_path / "a" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert m1 == m2


def test_kernel_binary_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    K = rng.standard_normal((17, 17))
    p = tmp_path / "k.bin"
    io_formats.write_kernel_binary(p, K, 3)
    k, back = io_formats.read_kernel_binary(p)
    assert k == 3
    assert np.array_equal(back.real, K)


def test_field_binary_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    om = rng.standard_normal((4, 33)) + 1j * rng.standard_normal((4, 33))
    d = rng.standard_normal((4, 33)) + 0j
    p = tmp_path / "f.bin"
    io_formats.write_field_binary(p, 2.5, om, d)
    t, om2, d2 = io_formats.read_field_binary(p)
    assert t == 2.5
    assert np.array_equal(om2, om)
    assert np.array_equal(d2, d)


def test_main_list_and_exit_codes(tmp_path, capsys):
    assert cli.main(["--list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "phi1-oracle" in out and "nonlinear-demo" in out
    rc = cli.main(["--scenario", "green-audit", "--out", str(tmp_path / "o"),
                   "--ny", "129"])
    assert rc == 0
    assert (tmp_path / "o" / "summary.json").exists()
    assert cli.main(["--scenario", "bogus"]) == 2
    assert cli.main([]) == 2

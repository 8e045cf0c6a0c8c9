import pytest

from towerlab.config import (ConfigError, default_config, load_config,
                             parse_float_list, parse_int_list)


def test_defaults_exist_for_all_kinds():
    for kind in ("return-tail", "meeting-tail", "approx-decay", "clt",
                 "coboundary", "stationarity"):
        cfg = default_config(kind)
        assert cfg.kind == kind
        assert cfg.sections


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError):
        default_config("florp")


def test_roundtrip_through_file(tmp_path):
    cfg = default_config("meeting-tail", seed=42)
    cfg.sections["run"]["runs"] = 12345
    p = tmp_path / "c.ini"
    cfg.write(p)
    back = load_config(p)
    assert back.kind == cfg.kind
    assert back.seed == 42
    assert back.sections == cfg.sections
    assert back.hash() == cfg.hash()


def test_type_coercion(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nkind = return-tail\nseed = 7\n"
                 "[map]\nalpha = 0.75\n[run]\nsamples = 1000\n")
    cfg = load_config(p)
    assert cfg.seed == 7
    assert cfg.sections["map"]["alpha"] == 0.75
    assert cfg.sections["run"]["samples"] == 1000
    assert isinstance(cfg.sections["run"]["samples"], int)


def test_unknown_key_named_in_error(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nkind = return-tail\n[map]\nalfa = 0.5\n")
    with pytest.raises(ConfigError, match="map.alfa"):
        load_config(p)


def test_unknown_section_rejected(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nkind = return-tail\n[nonsense]\nx = 1\n")
    with pytest.raises(ConfigError, match="nonsense"):
        load_config(p)


def test_bad_value_rejected(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nkind = return-tail\n[map]\nalpha = hello\n")
    with pytest.raises(ConfigError, match="map.alpha"):
        load_config(p)


def test_hash_ignores_workers_and_out(tmp_path):
    a = default_config("coboundary", seed=1)
    b = default_config("coboundary", seed=1)
    b.workers = 8
    b.out_dir = "elsewhere"
    assert a.hash() == b.hash()
    b.seed = 2
    assert a.hash() != b.hash()


def test_list_parsing():
    assert parse_int_list("4,8,16") == [4, 8, 16]
    assert parse_float_list("0.5, 0.3,0.2") == [0.5, 0.3, 0.2]

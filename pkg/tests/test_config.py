import pytest

from lpcollapse.config import SolverConfig, config_from_mapping, load_config
from lpcollapse.errors import ConfigError


def test_defaults_valid():
    c = SolverConfig()
    assert c.tol_ode == 1e-11 and c.tol_y == 1e-10 and c.n_max == 80
    assert c.z_min == 1e-6 and c.z_max == 100.0
    assert set(c.tolerances()) >= {"tol_ode", "tol_y", "eps_sonic", "tol_match"}


@pytest.mark.parametrize("kw", [
    {"z_min": 1.0}, {"z_min": 2.0}, {"handoff": 1.5}, {"z_max": 0.9}, {"z_max": 5.0},
    {"tol_ode": 0.0}, {"tol_y": -1.0}, {"tol_y": 1e-13}, {"n_max": 5}, {"n_max": 10.5},
    {"bracket": (3.0, 2.0)}, {"z_match": 1.0}, {"eps_sonic": float("nan")},
])
def test_invalid_values(kw):
    with pytest.raises(ConfigError):
        SolverConfig(**kw)


def test_toml_loading(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('tol_ode = 1e-10\nn-max = 40\n[solver]\nz_max = 200\nbracket = [2.2, 2.6]\n')
    c = load_config(p)
    assert c.tol_ode == 1e-10 and c.n_max == 40 and c.z_max == 200.0
    assert c.bracket == (2.2, 2.6)


def test_toml_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("tol_ode = = 1")
    with pytest.raises(ConfigError):
        load_config(bad)
    unk = tmp_path / "unk.toml"
    unk.write_text("colour = 'red'")
    with pytest.raises(ConfigError):
        load_config(unk)
    typ = tmp_path / "typ.toml"
    typ.write_text("n_max = 'many'")
    with pytest.raises(ConfigError):
        load_config(typ)


def test_mapping_overrides_base():
    base = SolverConfig(tol_ode=1e-10)
    c = config_from_mapping({"tol_y": 1e-8}, base)
    assert c.tol_ode == 1e-10 and c.tol_y == 1e-8

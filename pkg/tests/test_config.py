"""Tests for configuration management."""

from pathlib import Path

import pytest

import sbp_freesurface
from sbp_freesurface.config import (
    ReceiverConfig,
    SimConfig,
    SourceConfig,
    list_presets,
    preset_aliases,
)
from sbp_freesurface.exceptions import ConfigurationError

EXPECTED_PRESETS = {
    "depth-1d-weak", "depth-1d-strong", "depth-1d-weak-fine", "midsource-1d-weak",
    "surface-acoustic-strong", "surface-acoustic-weak",
    "compressional-elastic-strong", "compressional-elastic-weak",
    "corner-elastic-strong", "corner-elastic-weak", "corner-shear-elastic-weak",
    "spec-weak", "spec-strong",
    "cfl-1d-strong", "cfl-1d-weak", "cfl-acoustic-strong", "cfl-acoustic-weak",
    "cfl-elastic-strong", "cfl-elastic-weak",
}


def test_default_config():
    """Test default configuration values."""
    config = SimConfig.load()
    assert config.simulation.equation == "wave1d"
    assert config.simulation.bc_mode == "strong"
    assert config.simulation.layout == "stress_on_n"
    assert config.simulation.threads == 1
    assert config.grid.ppw == [10]
    assert config.grid.dx is None
    assert config.analysis.courant is None
    assert config.analysis.blowup_factor == 1e3
    assert config.output.out_dir == "results"
    assert config.sources == [] and config.receivers == []


def test_env_override(monkeypatch):
    """Test environment variable overrides."""
    monkeypatch.setenv("SBP_FS_BC_MODE", "weak")
    monkeypatch.setenv("SBP_FS_DT", "1/4000")
    monkeypatch.setenv("SBP_FS_PPW", "10, 20")
    monkeypatch.setenv("SBP_FS_COURANT", "6/7")
    monkeypatch.setenv("SBP_FS_FULL_FIDELITY", "yes")
    monkeypatch.setenv("SBP_FS_OUT_DIR", "/tmp/elsewhere")

    config = SimConfig.load()
    assert config.simulation.bc_mode == "weak"
    assert config.simulation.dt == 2.5e-4
    assert config.grid.ppw == [10, 20]
    assert config.analysis.courant == pytest.approx(6 / 7)
    assert config.analysis.full_fidelity is True
    assert config.output.out_dir == "/tmp/elsewhere"


def test_env_invalid_values_keep_defaults(monkeypatch):
    monkeypatch.setenv("SBP_FS_STEPS", "many")
    monkeypatch.setenv("SBP_FS_FULL_FIDELITY", "maybe")
    config = SimConfig.load()
    assert config.simulation.steps == 24000
    assert config.analysis.full_fidelity is False


def test_env_invalid_bc_mode_is_rejected(monkeypatch):
    monkeypatch.setenv("SBP_FS_BC_MODE", "soft")
    with pytest.raises(ConfigurationError, match="bc_mode"):
        SimConfig.load()


def test_ini_round_trip():
    config = SimConfig.load_preset("corner-elastic-strong")
    echoed = SimConfig.from_ini(config.to_ini())
    assert echoed.to_dict() == config.to_dict()
    assert [r.label for r in echoed.receivers] == ["Vy", "Sxy", "Sxx"]


def test_load_from_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(
        "[simulation]\nequation = acoustic2d\nbc_mode = weak\n"
        "[grid]\nextent_x = 0.48\nextent_y = 0.48\nppw = 10\n"
        "[source.S]\ntarget = sigma\nx = 0.16\ny = 0.008\n"
        "[receiver.R0]\nx = 0.32\n"
    )
    config = SimConfig.load(path)
    assert config.dimension == 2
    assert config.sources[0].label == "S"
    assert config.sources[0].y == 0.008
    assert config.receivers[0].variable == "sigma"


def test_save_and_load(tmp_path):
    config = SimConfig.load_preset("depth-1d-weak")
    path = config.save(tmp_path / "nested" / "depth-1d-weak.ini")
    assert SimConfig.load(path).to_dict() == config.to_dict()


@pytest.mark.parametrize(
    "text,match",
    [
        ("[simulation]\nsteps = lots\n", "Invalid value"),
        ("[simulation]\nspeed = 2\n", "Invalid key"),
        ("[physics]\nx = 1\n", "Invalid config section"),
        ("not an ini file", "Invalid config syntax"),
    ],
)
def test_ini_errors(text, match):
    with pytest.raises(ConfigurationError, match=match):
        SimConfig.from_ini(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="Cannot read"):
        SimConfig.load(tmp_path / "missing.ini")


def test_presets_are_shipped_and_valid():
    names = list_presets()
    assert set(names) == EXPECTED_PRESETS
    for name in names:
        config = SimConfig.load_preset(name)
        assert config.simulation.name == name
        for ppw in config.grid.ppw:
            assert min(config.grid_counts(ppw)) >= 9


def test_unknown_preset():
    with pytest.raises(ConfigurationError, match="Invalid preset 'no-such-preset'"):
        SimConfig.load_preset("no-such-preset")


def test_preset_values():
    depth_weak = SimConfig.load_preset("depth-1d-weak")
    assert depth_weak.simulation.bc_mode == "weak"
    assert depth_weak.grid.ppw == [10, 20, 40, 80]
    assert depth_weak.grid_counts(10) == (201,)
    assert depth_weak.spacing_for(80) == pytest.approx(0.001)
    compressional_strong = SimConfig.load_preset("compressional-elastic-strong")
    assert compressional_strong.grid_counts(20) == (121, 121)
    assert compressional_strong.medium.lam == 1.0
    assert compressional_strong.medium.mu == 1.0


EXPERIMENT_ALIASES = {
    "fig3": "depth-1d-weak",
    "fig4": "depth-1d-strong",
    "fig6": "surface-acoustic-strong",
    "fig7": "surface-acoustic-weak",
    "fig10": "compressional-elastic-strong",
    "fig11": "compressional-elastic-weak",
    "fig12": "corner-elastic-strong",
    "fig13": "corner-elastic-weak",
    "suppA": "depth-1d-weak-fine",
    "suppB": "midsource-1d-weak",
}


def test_preset_aliases_resolve():
    """Every alias points at a shipped preset and loads the same configuration."""
    assert preset_aliases() == EXPERIMENT_ALIASES
    for alias, name in EXPERIMENT_ALIASES.items():
        assert name in list_presets()
        assert alias not in list_presets()
        assert SimConfig.load_preset(alias).to_dict() == SimConfig.load_preset(name).to_dict()


def test_package_imports_from_source_tree():
    """Tests exercise the checked-out sources and their preset files."""
    src = Path(__file__).resolve().parents[1] / "src" / "sbp_freesurface"
    assert Path(sbp_freesurface.__file__).resolve().parent == src
    assert (src / "presets" / "aliases.cfg").is_file()


def test_explicit_dx_wins():
    config = SimConfig()
    config.grid.extent_x = 1.0
    config.grid.dx = 0.125
    assert config.spacing_for(40) == 0.125
    assert config.grid_counts(40) == (9,)


def test_grid_must_divide_extent():
    config = SimConfig()
    config.grid.extent_x = 1.0
    config.grid.min_wavelength = 0.3
    with pytest.raises(ConfigurationError, match="not a multiple"):
        config.grid_counts(1)


def _valid():
    config = SimConfig()
    config.sources = [SourceConfig()]
    config.receivers = [ReceiverConfig(label="R0")]
    return config


def _weak_stress_on_m(config):
    config.simulation.layout = "stress_on_m"
    config.simulation.bc_mode = "weak"


@pytest.mark.parametrize(
    "mutate,match",
    [
        (lambda c: setattr(c.simulation, "equation", "maxwell"), "equation"),
        (lambda c: setattr(c.simulation, "dt", 0.0), "dt"),
        (lambda c: setattr(c.simulation, "steps", 0), "steps"),
        (lambda c: setattr(c.simulation, "threads", 0), "threads"),
        (_weak_stress_on_m, "stress_on_m"),
        (lambda c: setattr(c.grid, "ppw", []), "ppw"),
        (lambda c: setattr(c.medium, "rho", -1.0), "rho"),
        (lambda c: setattr(c.analysis, "courant", 0.0), "courant"),
        (lambda c: setattr(c.analysis, "blowup_factor", 1.0), "blowup_factor"),
        (lambda c: setattr(c.analysis, "mms", "heat"), "mms"),
        (lambda c: setattr(c.sources[0], "target", "vx"), "source target"),
        (lambda c: setattr(c.receivers[0], "label", "R 0"), "receiver label"),
        (lambda c: c.receivers.append(ReceiverConfig(label="R0")), "Duplicate"),
    ],
)
def test_validation_errors(mutate, match):
    config = _valid()
    config.validate()
    mutate(config)
    with pytest.raises(ConfigurationError, match=match):
        config.validate()


def test_stress_on_m_allowed_for_strong_wave1d():
    config = _valid()
    config.simulation.layout = "stress_on_m"
    config.simulation.bc_mode = "strong"
    config.validate()


def test_elastic_medium_validation():
    config = SimConfig()
    config.simulation.equation = "elastic2d"
    config.grid.extent_y = 1.0
    with pytest.raises(ConfigurationError, match="needs lam and mu"):
        config.validate()
    config.medium.lam, config.medium.mu = -1.5, 1.0
    with pytest.raises(ConfigurationError, match="lam \\+ mu"):
        config.validate()
    config.medium.lam = 1.0
    config.validate()


"""Boundary-violation behavior of the shipped surface presets."""

import numpy as np
import pytest

from sbp_freesurface.config import SimConfig
from sbp_freesurface.wavesim import run


def surface_violation(preset, ppw):
    """Max surface stress relative to the deepest receiver."""
    result = run(SimConfig.load_preset(preset), ppw=ppw)
    return result.traces.max_abs("R0") / result.traces.max_abs("R2")


@pytest.mark.integration
def test_strong_1d_surface_is_exactly_zero():
    result = run(SimConfig.load_preset("depth-1d-strong"), ppw=10)
    assert result.traces.max_abs("R0") == 0.0
    assert result.traces.max_abs("R1") > 0.0


@pytest.mark.integration
def test_weak_1d_violation_is_visible():
    result = run(SimConfig.load_preset("depth-1d-weak"), ppw=10)
    assert result.traces.max_abs("R0") > 0.0


@pytest.mark.integration
def test_strong_acoustic_surface_is_exactly_zero():
    result = run(SimConfig.load_preset("surface-acoustic-strong"), ppw=10)
    assert result.traces.max_abs("R0") == 0.0


@pytest.mark.integration
def test_weak_acoustic_violation_exceeds_one_percent():
    assert surface_violation("surface-acoustic-weak", 10) > 0.01


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["depth-1d-strong", "compressional-elastic-strong"])
def test_strong_surface_zero_at_every_resolution(preset):
    config = SimConfig.load_preset(preset)
    for ppw in config.grid.ppw:
        assert run(config, ppw=ppw).traces.max_abs("R0") == 0.0


@pytest.mark.slow
def test_weak_violation_shrinks_with_resolution():
    violations = [surface_violation("surface-acoustic-weak", ppw) for ppw in (10, 30, 50)]
    assert violations[0] > violations[1] > violations[2]


@pytest.mark.slow
def test_strong_acoustic_deep_traces_agree():
    config = SimConfig.load_preset("surface-acoustic-strong")
    coarse = run(config, ppw=30).traces.column("R2")
    fine = run(config, ppw=50).traces.column("R2")
    assert np.max(np.abs(coarse - fine)) <= 0.02 * np.max(np.abs(fine))

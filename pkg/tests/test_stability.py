"""Tests for interior von Neumann analysis and the empirical CFL probe."""

from fractions import Fraction

import pytest

from sbp_freesurface.analysis.stability import (
    amplification_is_stable,
    beta_of,
    cfl_probe,
    growth_factors,
    interior_cfl_limit,
    is_stable,
    min_beta,
)
from sbp_freesurface.assembly import BCMode, MediumSpec, assemble_1d
from sbp_freesurface.config import SimConfig
from sbp_freesurface.sbp_core import OperatorVariant, build_operator_set

SEED = 12345


def unit_1d_system(bc_mode):
    op = build_operator_set(OperatorVariant.EXTRAPOLATING, 41)
    return assemble_1d(op, MediumSpec.acoustic(1), BCMode(bc_mode), 1 / 40)


def test_beta_values():
    assert beta_of(Fraction(1)) == 0
    assert beta_of(Fraction(-1)) == Fraction(-49, 9)
    assert beta_of(Fraction(0)) == Fraction(-169, 72)
    assert beta_of(-1.0) == pytest.approx(-49 / 9)


def test_interior_limit_is_six_sevenths():
    assert min_beta() == Fraction(-49, 9)
    assert interior_cfl_limit() == Fraction(6, 7)


def test_growth_factors_at_limit():
    """At C = 6/7 the worst mode has a double root on the unit circle."""
    g1, g2 = growth_factors(-49 / 9, 6 / 7)
    assert abs(g1) == pytest.approx(1.0)
    assert abs(g2) == pytest.approx(1.0)
    assert amplification_is_stable(-49 / 9, 6 / 7, tolerance=1e-6)


def test_growth_factors_beyond_limit():
    g1, g2 = growth_factors(-49 / 9, 0.9)
    assert max(abs(g1), abs(g2)) > 1.0
    assert not amplification_is_stable(-49 / 9, 0.9)


def test_every_mode_stable_below_limit():
    for k in range(21):
        c = -1 + k / 10
        assert amplification_is_stable(beta_of(c), 0.85)


def test_weak_1d_above_limit_blows_up():
    """C = 0.70 exceeds the weak limit and diverges within a few thousand steps."""
    system = unit_1d_system("weak")
    assert not is_stable(system, 0.70, 3000, 1e3, SEED)
    assert is_stable(system, 0.60, 3000, 1e3, SEED)


def test_strong_1d_stable_at_interior_limit():
    system = unit_1d_system("strong")
    assert is_stable(system, 0.85, 3000, 1e3, SEED)
    assert not is_stable(system, 0.90, 3000, 1e3, SEED)


@pytest.mark.parametrize(
    "preset,expected",
    [("cfl-1d-strong", 6 / 7), ("cfl-1d-weak", 0.6355)],
)
def test_cfl_probe_1d(preset, expected):
    config = SimConfig.load_preset(preset)
    assert config.analysis.probe_steps == 20000
    result = cfl_probe(config)
    assert result.upper - result.lower <= config.analysis.probe_tolerance
    assert result.courant == pytest.approx(expected, abs=1e-3)
    assert result.history[0] == (config.analysis.probe_upper, False)


@pytest.mark.integration
@pytest.mark.parametrize("preset", ["cfl-acoustic-strong", "cfl-elastic-strong"])
def test_cfl_2d_strong_respects_interior_bound(preset):
    """On 81x81 grids the measured limit is within 1e-3 of 6/7.

    A thousand steps are enough to push any mode more than 1e-4 past its
    limit beyond the threshold.
    """
    result = cfl_probe(SimConfig.load_preset(preset), steps=1000)
    assert 6 / 7 - 1e-3 <= result.courant <= 6 / 7 + 1e-3


@pytest.mark.slow
@pytest.mark.parametrize(
    "preset,expected",
    [
        ("cfl-acoustic-strong", 6 / 7),
        ("cfl-acoustic-weak", 0.6355),
        ("cfl-elastic-strong", 6 / 7),
    ],
)
def test_cfl_probe_2d(preset, expected):
    result = cfl_probe(SimConfig.load_preset(preset))
    assert result.courant == pytest.approx(expected, abs=1e-3)


@pytest.mark.slow
def test_cfl_probe_elastic_weak_is_reported():
    """The weak elastic limit is measured, not asserted tightly."""
    result = cfl_probe(SimConfig.load_preset("cfl-elastic-weak"))
    assert 0.3 < result.courant < 1.2

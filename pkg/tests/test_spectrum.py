"""Tests for spectral radii of the semi-discrete operators."""

import math

import pytest

from sbp_freesurface.analysis.spectrum import (
    cfl_from_spectrum,
    format_spectral_table,
    periodic_spectral_radius,
    spectral_radius,
    spectral_rows,
)
from sbp_freesurface.assembly import (
    BCMode,
    MediumSpec,
    assemble_1d,
    assemble_2d_acoustic,
)
from sbp_freesurface.exceptions import EigensolverError
from sbp_freesurface.sbp_core import OperatorVariant, build_operator_set

# Spectral radii on [0, 1] with a unit medium
WEAK_RADII = {40: 125.871385897805, 160: 503.485543591221, 640: 2013.942174364883}
STRONG_RADII = {40: 93.256016056512, 160: 373.311280516844, 640: 1493.327619757113}
STRONG_SCALED = {40: 1.998343201211, 160: 1.999881859912, 640: 1.999992347889}


def unit_system(bc_mode, cells):
    op = build_operator_set(OperatorVariant.EXTRAPOLATING, cells + 1)
    return assemble_1d(op, MediumSpec.acoustic(1), BCMode(bc_mode), 1 / cells)


@pytest.mark.parametrize("cells", [40, 160, 640])
def test_weak_radius(cells):
    report = spectral_radius(unit_system("weak", cells))
    assert report.spectral_radius == pytest.approx(WEAK_RADII[cells], rel=1e-9)
    assert report.residual <= 1e-12
    assert report.solver == "dense"


@pytest.mark.parametrize("cells", [40, 160, 640])
def test_strong_radius_and_scaled(cells):
    report = spectral_radius(unit_system("strong", cells), courant=6 / 7)
    assert report.spectral_radius == pytest.approx(STRONG_RADII[cells], rel=1e-9)
    assert report.scaled_radius == pytest.approx(STRONG_SCALED[cells], rel=1e-9)
    assert report.scaled_radius < 2.0


def test_weak_scaled_at_measured_limit():
    report = spectral_radius(unit_system("weak", 40), courant=0.6355)
    assert report.scaled_radius == pytest.approx(1.999781643451, rel=1e-9)
    assert cfl_from_spectrum(report) == pytest.approx(0.6355, abs=1e-3)


def test_periodic_reference():
    """The interior stencil alone has radius (7/3)/dx; at C = 6/7 it scales to 2."""
    report = periodic_spectral_radius(40, 1 / 40)
    assert report.spectral_radius == pytest.approx(7 / 3 * 40, rel=1e-9)
    assert report.spectral_radius * (6 / 7) / 40 == pytest.approx(2.0, rel=1e-9)


def test_strong_radius_below_periodic():
    """Strong closures never exceed the periodic interior radius."""
    strong = spectral_radius(unit_system("strong", 40))
    assert strong.spectral_radius < periodic_spectral_radius(40, 1 / 40).spectral_radius


def test_acoustic_2d_radius_is_separable():
    """With a unit medium on a square the 2D radius is sqrt(2) times the 1D one."""
    op = build_operator_set(OperatorVariant.EXTRAPOLATING, 21)
    system = assemble_2d_acoustic(op, op, MediumSpec.acoustic(2), BCMode.WEAK, 0.05, 0.05)
    radius_2d = spectral_radius(system).spectral_radius
    radius_1d = spectral_radius(unit_system("weak", 20)).spectral_radius
    assert radius_2d == pytest.approx(math.sqrt(2) * radius_1d, rel=1e-8)


def test_elastic_rejected(system_factory):
    with pytest.raises(EigensolverError, match="elastic"):
        spectral_radius(system_factory("elastic2d", "strong"))


def test_table_and_rows():
    reports = [
        spectral_radius(unit_system("weak", 40), courant=0.6355),
        periodic_spectral_radius(40, 1 / 40),
    ]
    table = format_spectral_table(reports)
    assert table.splitlines()[0].split() == ["dx", "radius", "C", "scaled"]
    assert "125.871385897" in table
    rows = spectral_rows(reports)
    assert rows[0][0] == 1 / 40
    assert rows[1][2] == "" and rows[1][3] == ""

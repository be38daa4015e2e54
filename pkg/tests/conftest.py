"""Shared pytest fixtures for sbp-freesurface tests."""

import os

import numpy as np
import pytest

from sbp_freesurface.assembly import (
    BCMode,
    MediumSpec,
    assemble_1d,
    assemble_2d_acoustic,
    assemble_2d_elastic,
    elastic_operator_sets,
)
from sbp_freesurface.sbp_core import OperatorVariant, build_operator_set


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch):
    """Keep SBP_FS_* overrides from the developer's shell out of the tests."""
    for key in list(os.environ):
        if key.startswith("SBP_FS_"):
            monkeypatch.delenv(key, raising=False)


@pytest.fixture
def extrapolating_set():
    """Unreset extrapolating set with 20 N-grid points."""
    return build_operator_set(OperatorVariant.EXTRAPOLATING, 20)


@pytest.fixture
def intertwined_set():
    """Unreset intertwined set with 20 N-grid points."""
    return build_operator_set(OperatorVariant.INTERTWINED, 20)


def make_system(kind: str, bc_mode: str):
    """Small heterogeneous systems; energy identities hold for any positive medium."""
    mode = BCMode(bc_mode)
    if kind == "wave1d":
        medium = MediumSpec(
            dimension=1,
            rho=lambda x: 1.0 + 0.3 * np.sin(3 * x),
            beta=lambda x: 0.5 + 0.2 * np.cos(2 * x),
        )
        op = build_operator_set(OperatorVariant.EXTRAPOLATING, 21)
        return assemble_1d(op, medium, mode, 0.05)
    if kind == "acoustic2d":
        medium = MediumSpec(
            dimension=2,
            rho=lambda x, y: 1.0 + 0.2 * x * y,
            beta=lambda x, y: 0.8 + 0.1 * np.sin(x + y),
        )
        setx = build_operator_set(OperatorVariant.EXTRAPOLATING, 13)
        sety = build_operator_set(OperatorVariant.EXTRAPOLATING, 11)
        return assemble_2d_acoustic(setx, sety, medium, mode, 0.1, 0.12)
    medium = MediumSpec(
        dimension=2,
        rho=lambda x, y: 1.0 + 0.1 * x,
        lam=lambda x, y: 2.0 + 0.5 * y,
        mu=lambda x, y: 1.0 + 0.2 * np.cos(x * y),
    )
    return assemble_2d_elastic(*elastic_operator_sets(13, 11, mode), medium, mode, 0.1, 0.12)


SYSTEM_CASES = [
    ("wave1d", "strong"),
    ("wave1d", "weak"),
    ("acoustic2d", "strong"),
    ("acoustic2d", "weak"),
    ("elastic2d", "strong"),
    ("elastic2d", "weak"),
]


@pytest.fixture(params=SYSTEM_CASES, ids=[f"{k}-{b}" for k, b in SYSTEM_CASES])
def any_system(request):
    """Every equation in both imposition modes."""
    return make_system(*request.param)


@pytest.fixture
def random_fields():
    """Factory for reproducible random states respecting strong constraints."""
    def _make(system, seed=0):
        rng = np.random.default_rng(seed)
        fields = {}
        for name, var in system.variables.items():
            values = rng.standard_normal(var.size)
            values[var.constrained] = 0.0
            fields[name] = values
        return fields
    return _make


@pytest.fixture
def system_factory():
    """``make_system(kind, bc_mode)`` as a fixture."""
    return make_system

"""Tests for leapfrog time stepping, sources, receivers and run outputs."""

import math

import numpy as np
import pytest

from sbp_freesurface.assembly import BCMode, MediumSpec, assemble_1d
from sbp_freesurface.config import ReceiverConfig, SimConfig, SourceConfig
from sbp_freesurface.exceptions import BlowUpError, ConfigurationError, SourceError
from sbp_freesurface.sbp_core import OperatorVariant, build_operator_set
from sbp_freesurface.utils import read_csv_columns
from sbp_freesurface.wavesim import (
    SourceSpec,
    WaveState,
    advance_stress,
    advance_velocity,
    bind_source,
    build_system,
    check_finite,
    courant_number,
    discrete_energy,
    dt_for_courant,
    minimum_wavelength,
    resolve_receivers,
    resolve_sources,
    ricker,
    ricker_max_frequency,
    run,
    run_all,
    simulate,
    step_leapfrog,
    write_run_outputs,
)


def small_config(bc_mode="weak", **simulation):
    """A short 1D run on [0, 0.4] with a near-surface source."""
    config = SimConfig()
    config.simulation.bc_mode = bc_mode
    config.simulation.dt = 1e-3
    config.simulation.steps = 200
    config.simulation.energy_stride = 20
    for key, value in simulation.items():
        setattr(config.simulation, key, value)
    config.grid.extent_x = 0.4
    config.grid.min_wavelength = 0.08
    config.grid.ppw = [10, 20]
    config.sources = [SourceConfig(label="S", target="sigma", x=0.008, t0=0.1)]
    config.receivers = [
        ReceiverConfig(label="R0", variable="sigma", x=0.0),
        ReceiverConfig(label="R1", variable="sigma", x=0.2),
        ReceiverConfig(label="V1", variable="v", x=0.2, x_offset=0.5),
    ]
    config.validate()
    return config


def test_ricker_values():
    """Peak of one at t0, zero crossings at tau = +-1/(pi f0 sqrt 2)."""
    assert ricker(0.25, 5.0, 0.25) == pytest.approx(1.0)
    tau = 1.0 / (math.pi * 5.0 * math.sqrt(2.0))
    assert ricker(0.25 + tau, 5.0, 0.25) == pytest.approx(0.0, abs=1e-15)
    values = ricker(np.array([0.0, 0.25]), 5.0, 0.25, amplitude=2.0)
    assert values.shape == (2,)
    assert values[1] == pytest.approx(2.0)
    assert ricker_max_frequency(5.0) == 12.5
    assert minimum_wavelength(1.0, 5.0) == pytest.approx(0.08)


def test_courant_number_round_trip(system_factory):
    for kind in ("wave1d", "acoustic2d", "elastic2d"):
        system = system_factory(kind, "strong")
        dt = dt_for_courant(system, 0.5)
        assert courant_number(system, dt) == pytest.approx(0.5)
        assert courant_number(system, -dt) == pytest.approx(0.5)


def test_courant_number_1d():
    """In 1D C = c dt / dx."""
    op = build_operator_set(OperatorVariant.EXTRAPOLATING, 41)
    system = assemble_1d(op, MediumSpec.acoustic(1, 1.0, 2.0), BCMode.WEAK, 0.025)
    assert courant_number(system, 0.01) == pytest.approx(2.0 * 0.01 / 0.025)


def test_time_reversal(any_system, random_fields):
    """Stepping forward then backward with -dt recovers the initial state."""
    dt = dt_for_courant(any_system, 0.5)
    state = WaveState(random_fields(any_system, 11), dt)
    initial = state.copy()
    steps = 50
    for _ in range(steps):
        step_leapfrog(any_system, state)
    for _ in range(steps):
        advance_stress(any_system, state, dt=-dt)
        advance_velocity(any_system, state, dt=-dt)
    assert state.step == 0
    for name, values in initial.fields.items():
        scale = max(1.0, float(np.max(np.abs(values))))
        np.testing.assert_allclose(state.fields[name], values, atol=1e-10 * scale, rtol=0)


def test_linearity(any_system, random_fields):
    """The update of a sum equals the sum of the updates."""
    dt = dt_for_courant(any_system, 0.4)
    a = WaveState(random_fields(any_system, 1), dt)
    b = WaveState(random_fields(any_system, 2), dt)
    ab = WaveState({k: 2.0 * a.fields[k] - 3.0 * b.fields[k] for k in a.fields}, dt)
    for state in (a, b, ab):
        for _ in range(10):
            step_leapfrog(any_system, state)
    for name in a.fields:
        expected = 2.0 * a.fields[name] - 3.0 * b.fields[name]
        scale = float(np.max(np.abs(expected))) or 1.0
        np.testing.assert_allclose(ab.fields[name], expected, atol=1e-12 * scale, rtol=0)


def test_source_free_energy_is_bounded(system_factory, random_fields):
    """Below the CFL limit the discrete energy does not grow."""
    system = system_factory("acoustic2d", "weak")
    state = WaveState(random_fields(system, 5), dt_for_courant(system, 0.3))
    energies = []
    for _ in range(200):
        step_leapfrog(system, state)
        energies.append(discrete_energy(system, state))
    assert max(energies) < 2.0 * energies[0]


def test_bind_source_errors(system_factory):
    system = system_factory("wave1d", "strong")
    with pytest.raises(SourceError, match="unknown variable"):
        bind_source(system, SourceSpec("sxx", (3,)))
    with pytest.raises(SourceError, match="outside grid"):
        bind_source(system, SourceSpec("sigma", (99,)))
    with pytest.raises(SourceError, match="constrained surface point"):
        bind_source(system, SourceSpec("sigma", (0,)))
    weak = system_factory("wave1d", "weak")
    assert bind_source(weak, SourceSpec("sigma", (0,))).index == 0


def test_source_scale_uses_norm_weight():
    """A stress source is divided by beta and the norm weight of its point."""
    op = build_operator_set(OperatorVariant.EXTRAPOLATING, 21)
    system = assemble_1d(op, MediumSpec.acoustic(1, 1.0, 2.0), BCMode.WEAK, 0.05)
    bound = bind_source(system, SourceSpec("sigma", (0,)))
    weight = 7 / 18 * 0.05
    assert bound.scale == pytest.approx(1.0 / (0.25 * weight))
    velocity = bind_source(system, SourceSpec("v", (4,)))
    assert velocity.scale == pytest.approx(1.0 / 0.05)


def test_source_sampling_levels(system_factory):
    """Stress sources read the wavelet at n dt, velocity sources at (n + 1/2) dt."""
    system = system_factory("wave1d", "weak")
    dt = 0.01
    stress = bind_source(system, SourceSpec("sigma", (4,), f0=5.0, t0=0.05))
    velocity = bind_source(system, SourceSpec("v", (4,), f0=5.0, t0=0.05))

    state = WaveState(system.zero_fields(), dt, step=3)
    advance_stress(system, state, [stress])
    injected = state.fields["sigma"][stress.index] / (dt * stress.scale)
    assert injected == pytest.approx(ricker(3 * dt, 5.0, 0.05), rel=1e-12)

    state = WaveState(system.zero_fields(), dt, step=3)
    advance_velocity(system, state, [velocity])
    injected = state.fields["v"][velocity.index] / (dt * velocity.scale)
    assert injected == pytest.approx(ricker(3.5 * dt, 5.0, 0.05), rel=1e-12)


def test_time_reversal_with_sources(system_factory):
    """Backward substeps resample the sources at the forward levels."""
    system = system_factory("wave1d", "weak")
    dt = dt_for_courant(system, 0.5)
    sources = [
        bind_source(system, SourceSpec("sigma", (4,), f0=5.0, t0=0.05)),
        bind_source(system, SourceSpec("v", (6,), f0=5.0, t0=0.05)),
    ]
    state = WaveState(system.zero_fields(), dt)
    for _ in range(20):
        step_leapfrog(system, state, sources)
    assert state.max_abs() > 0.0
    for _ in range(20):
        advance_stress(system, state, sources, dt=-dt)
        advance_velocity(system, state, sources, dt=-dt)
    assert state.step == 0
    assert state.max_abs() < 1e-10


def test_check_finite_raises_with_step():
    state = WaveState({"v": np.array([1.0, np.nan])}, 0.1, step=7)
    with pytest.raises(BlowUpError) as excinfo:
        check_finite(state)
    assert excinfo.value.step == 7


def test_unstable_run_reports_blowup(system_factory):
    system = system_factory("wave1d", "weak")
    dt = dt_for_courant(system, 3.0)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(BlowUpError) as excinfo:
            simulate(system, dt, 5000, [SourceSpec("sigma", (5,), t0=0.0)], nan_check_stride=10)
    assert excinfo.value.step > 0


def test_simulate_is_deterministic():
    config = small_config()
    first = run(config)
    second = run(config)
    assert first.traces.rows == second.traces.rows
    assert first.energy.rows == second.energy.rows


def test_receivers_record_at_staggered_levels():
    config = small_config()
    result = run(config, ppw=10)
    assert result.traces.labels == ["R0", "R1"]
    assert result.velocity_traces.labels == ["V1"]
    assert len(result.traces) == config.simulation.steps + 1
    assert result.traces.times[0] == 0.0
    assert result.velocity_traces.times[0] == pytest.approx(0.5 * config.simulation.dt)
    assert len(result.energy) == config.simulation.steps // config.simulation.energy_stride


def test_strong_surface_trace_is_zero():
    """With strong imposition the surface receiver records exactly zero."""
    result = run(small_config("strong"))
    assert result.traces.max_abs("R0") == 0.0
    assert result.traces.max_abs("R1") > 0.0


def test_weak_surface_trace_is_nonzero():
    """A source one grid point below a weak surface drives the surface stress."""
    result = run(small_config("weak"), ppw=10)
    assert result.traces.max_abs("R0") > 0.0


def test_energy_conserved_after_source():
    """Once the wavelet has died out the energy stays constant."""
    config = small_config("strong", steps=600, energy_stride=10)
    energy = run(config).energy.column("E")
    tail = energy[-20:]
    assert np.max(np.abs(tail - tail[0])) <= 1e-2 * tail[0]


def test_resolve_locations_per_resolution():
    config = small_config()
    for ppw, index in ((10, 1), (20, 2)):
        system = build_system(config, ppw)
        sources = resolve_sources(config, system)
        assert sources[0].location == (index,)
    receivers = resolve_receivers(config, build_system(config, 10))
    assert receivers[2].location == (25,)


def test_resolve_off_grid_location_fails():
    config = small_config()
    config.sources[0].x = 0.0051
    with pytest.raises(SourceError, match="not a 'sigma' grid point"):
        resolve_sources(config, build_system(config, 10))


def test_build_system_rejects_tiny_grid():
    config = small_config()
    config.grid.extent_x = 0.04
    with pytest.raises(ConfigurationError, match="Invalid grid"):
        build_system(config, 10)


def test_build_system_stress_on_m():
    config = small_config("strong")
    config.simulation.layout = "stress_on_m"
    system = build_system(config, 10)
    assert system.variables["sigma"].grids == ("M",)
    assert system.metadata["variant"] == "intertwined"


def test_run_all_keeps_order_with_threads():
    config = small_config(threads=2)
    results = run_all(config)
    assert [r.ppw for r in results] == [10, 20]
    assert results[0].grid_counts == (51,)
    assert results[1].grid_counts == (101,)


def test_write_run_outputs(tmp_path):
    config = small_config()
    results = run_all(config)
    out = write_run_outputs(config, results, tmp_path / "out")
    traces = read_csv_columns(out / "ppw10" / "traces.csv")
    assert list(traces) == ["t", "R0", "R1"]
    assert len(traces["t"]) == config.simulation.steps + 1
    assert (out / "ppw20" / "velocity_traces.csv").exists()
    energy = read_csv_columns(out / "ppw20" / "energy.csv")
    assert list(energy) == ["t", "E"]
    manifest = (out / "manifest.txt").read_text()
    assert "[simulation]" in manifest
    assert "# ppw=10 grid=51" in manifest
    # The manifest echoes a config that parses back to the same values
    echoed = SimConfig.from_ini(manifest)
    assert echoed.to_dict() == config.to_dict()


def test_csv_values_round_trip(tmp_path):
    """Trace files carry shortest round-trip decimals."""
    config = small_config()
    result = run(config)
    out = write_run_outputs(config, [result], tmp_path)
    column = read_csv_columns(out / "ppw10" / "traces.csv")["R1"]
    assert [float(v) for v in column] == list(result.traces.column("R1"))

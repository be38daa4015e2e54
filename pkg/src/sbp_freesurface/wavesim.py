"""Staggered leapfrog time stepping with point sources, receivers and energy traces.

State convention: after ``n`` steps the stress unknowns hold t = n dt and the
velocity unknowns hold t = (n - 1/2) dt.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .assembly import (
    BCMode,
    Layout1D,
    MediumSpec,
    SemiDiscreteSystem,
    Variable,
    VariableKind,
    assemble_1d,
    assemble_2d_acoustic,
    assemble_2d_elastic,
    elastic_operator_sets,
)
from .config import SimConfig
from .exceptions import BlowUpError, ConfigurationError, OperatorSizeError, SourceError
from .sbp_core import OperatorVariant, build_operator_set
from .utils.csv_io import write_csv

logger = logging.getLogger(__name__)

RICKER_MAX_FREQUENCY_RATIO = 2.5
DEFAULT_NAN_CHECK_STRIDE = 100


# =============================================================================
# Wavelet
# =============================================================================

def ricker(t, f0: float, t0: float, amplitude: float = 1.0):
    """Ricker wavelet amplitude (1 - 2 pi^2 f0^2 tau^2) exp(-pi^2 f0^2 tau^2), tau = t - t0.

    Works on scalars and numpy arrays.
    """
    tau2 = (np.pi * f0 * (np.asarray(t, dtype=np.float64) - t0)) ** 2
    value = amplitude * (1.0 - 2.0 * tau2) * np.exp(-tau2)
    return float(value) if np.ndim(value) == 0 else value


def ricker_max_frequency(f0: float) -> float:
    """Highest frequency with significant Ricker energy (5 Hz -> 12.5 Hz)."""
    return RICKER_MAX_FREQUENCY_RATIO * f0


def minimum_wavelength(c_min: float, f0: float) -> float:
    """Shortest wavelength excited by a Ricker source in a medium of speed ``c_min``."""
    return c_min / ricker_max_frequency(f0)


# =============================================================================
# State, sources and receivers
# =============================================================================

@dataclass(frozen=True)
class SourceSpec:
    """Point source at a grid index of one variable."""
    target: str
    location: Tuple[int, ...]
    f0: float = 5.0
    t0: float = 0.25
    amplitude: float = 1.0
    label: str = "S"
    wavelet: str = "ricker"

    def value(self, t: float) -> float:
        return ricker(t, self.f0, self.t0, self.amplitude)


@dataclass(frozen=True)
class ReceiverSpec:
    """Receiver at a grid index of one variable."""
    variable: str
    location: Tuple[int, ...]
    label: str


@dataclass(frozen=True)
class PointSource:
    """A source bound to a system: flat index and quadrature-consistent scale."""
    spec: SourceSpec
    kind: VariableKind
    index: int
    scale: float


@dataclass
class WaveState:
    """Solution vectors on their staggered grids."""
    fields: Dict[str, np.ndarray]
    dt: float
    step: int = 0

    @property
    def time(self) -> float:
        """Time level of the stress unknowns."""
        return self.step * self.dt

    def copy(self) -> "WaveState":
        return WaveState({k: v.copy() for k, v in self.fields.items()}, self.dt, self.step)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) if v.size else 0.0 for v in self.fields.values())

    def is_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(v))) for v in self.fields.values())


def initial_state(system: SemiDiscreteSystem, dt: float) -> WaveState:
    """Quiescent state (all fields zero) at step 0."""
    return WaveState(system.zero_fields(), dt)


def bind_source(system: SemiDiscreteSystem, source: SourceSpec) -> PointSource:
    """Resolve a source against a system.

    The scale is 1/(m a), where ``a`` is the norm weight of the point
    (including the Delta-x factors) and ``m`` the material coefficient: density
    for velocity targets, the compliance diagonal for stress targets.

    Raises:
        SourceError: If the target or index is invalid, or the point is a
            strongly constrained surface point.
    """
    var = system.variables.get(source.target)
    if var is None:
        raise SourceError(
            f"Source '{source.label}' targets unknown variable '{source.target}'. "
            f"Valid: {', '.join(system.variables)}"
        )
    try:
        index = var.flat_index(source.location)
    except IndexError as e:
        raise SourceError(f"Source '{source.label}': {e}") from e
    if var.constrained[index]:
        raise SourceError(
            f"Source '{source.label}' sits on a strongly constrained surface point of "
            f"'{source.target}' at {tuple(source.location)}"
        )
    if var.kind is VariableKind.VELOCITY:
        coefficient = float(system.density[source.target][index])
    else:
        coefficient = float(system.law.compliance_diagonal(source.target)[index])
    scale = 1.0 / (coefficient * float(var.weights[index]))
    return PointSource(source, var.kind, index, scale)


def inject_source(rates: Dict[str, np.ndarray], source: PointSource, t: float) -> None:
    """Add the discrete point-source term at time ``t`` to ``rates`` in place."""
    value = source.spec.value(t)
    if value != 0.0:
        rates[source.spec.target][source.index] += value * source.scale


# =============================================================================
# Time stepping
# =============================================================================

def advance_velocity(
    system: SemiDiscreteSystem,
    state: WaveState,
    sources: Sequence[PointSource] = (),
    dt: Optional[float] = None,
) -> None:
    """Velocity substep t^{n-1/2} -> t^{n+1/2} using stresses at t^n (in place).

    Velocity sources are sampled at the half level t^{n+1/2}.
    """
    dt = state.dt if dt is None else dt
    rates = system.velocity_rates(state.fields)
    t_source = state.time + 0.5 * state.dt
    for source in sources:
        if source.kind is VariableKind.VELOCITY:
            inject_source(rates, source, t_source)
    for name, rate in rates.items():
        state.fields[name] += dt * rate


def advance_stress(
    system: SemiDiscreteSystem,
    state: WaveState,
    sources: Sequence[PointSource] = (),
    dt: Optional[float] = None,
) -> None:
    """Stress substep t^n -> t^{n+1} using velocities at t^{n+1/2} (in place).

    Stress sources are sampled at the integer level the substep starts from.
    A negative ``dt`` steps backwards and decrements the step counter.
    """
    dt = state.dt if dt is None else dt
    rates = system.stress_rates(state.fields)
    t_source = state.time if dt > 0 else state.time - state.dt
    for source in sources:
        if source.kind is VariableKind.STRESS:
            inject_source(rates, source, t_source)
    for name, rate in rates.items():
        state.fields[name] += dt * rate
    state.step += 1 if dt > 0 else -1


def check_finite(state: WaveState) -> None:
    """Raise BlowUpError if any field is NaN or infinite."""
    if not state.is_finite():
        max_abs = state.max_abs()
        raise BlowUpError(
            f"Non-finite values at step {state.step} (max |field| = {max_abs})",
            step=state.step,
            max_abs=max_abs,
        )


def step_leapfrog(
    system: SemiDiscreteSystem,
    state: WaveState,
    sources: Sequence[PointSource] = (),
    dt: Optional[float] = None,
    nan_check_stride: int = DEFAULT_NAN_CHECK_STRIDE,
) -> WaveState:
    """Advance one full staggered leapfrog step.

    Raises:
        BlowUpError: If a NaN/Inf check (every ``nan_check_stride`` steps) fails.
    """
    advance_velocity(system, state, sources, dt)
    advance_stress(system, state, sources, dt)
    if state.step % nan_check_stride == 0:
        check_finite(state)
    return state


def discrete_energy(system: SemiDiscreteSystem, state: WaveState) -> float:
    """Norm-weighted kinetic plus compliance energy of the stored fields."""
    return system.energy(state.fields)


def courant_number(system: SemiDiscreteSystem, dt: float) -> float:
    """C = c_max dt sqrt(sum 1/Delta^2); reduces to c dt / dx in 1D."""
    return system.max_wave_speed * abs(dt) * math.sqrt(sum(1.0 / h**2 for h in system.spacing))


def dt_for_courant(system: SemiDiscreteSystem, courant: float) -> float:
    """Time step that gives the requested Courant number."""
    return courant / (system.max_wave_speed * math.sqrt(sum(1.0 / h**2 for h in system.spacing)))


# =============================================================================
# Recording
# =============================================================================

@dataclass
class TraceSet:
    """Time series of several labelled samples."""
    labels: List[str]
    times: List[float] = field(default_factory=list)
    rows: List[List[float]] = field(default_factory=list)

    def record(self, t: float, values: Sequence[float]) -> None:
        self.times.append(float(t))
        self.rows.append([float(v) for v in values])

    def __len__(self) -> int:
        return len(self.times)

    def column(self, label: str) -> np.ndarray:
        k = self.labels.index(label)
        return np.array([row[k] for row in self.rows])

    def max_abs(self, label: str) -> float:
        col = self.column(label)
        return float(np.max(np.abs(col))) if col.size else 0.0


@dataclass(frozen=True)
class _BoundReceiver:
    label: str
    variable: str
    index: int


def bind_receivers(
    system: SemiDiscreteSystem, receivers: Sequence[ReceiverSpec]
) -> Tuple[List[_BoundReceiver], List[_BoundReceiver]]:
    """Split receivers into (stress, velocity) lists with flat indices."""
    stress, velocity = [], []
    for receiver in receivers:
        var = system.variables.get(receiver.variable)
        if var is None:
            raise SourceError(f"Receiver '{receiver.label}' on unknown variable '{receiver.variable}'")
        try:
            index = var.flat_index(receiver.location)
        except IndexError as e:
            raise SourceError(f"Receiver '{receiver.label}': {e}") from e
        bound = _BoundReceiver(receiver.label, receiver.variable, index)
        (velocity if var.kind is VariableKind.VELOCITY else stress).append(bound)
    return stress, velocity


def _sample(state: WaveState, receivers: Sequence[_BoundReceiver]) -> List[float]:
    return [float(state.fields[r.variable][r.index]) for r in receivers]


# =============================================================================
# Driver
# =============================================================================

@dataclass
class SimResult:
    """Outcome of one simulation at one resolution."""
    ppw: int
    description: str
    grid_counts: Tuple[int, ...]
    dx: float
    dt: float
    courant: float
    traces: TraceSet
    velocity_traces: TraceSet
    energy: TraceSet
    wall_time: float
    steps: int
    final_state: WaveState


def simulate(
    system: SemiDiscreteSystem,
    dt: float,
    steps: int,
    sources: Sequence[SourceSpec] = (),
    receivers: Sequence[ReceiverSpec] = (),
    energy_stride: int = 10,
    nan_check_stride: int = DEFAULT_NAN_CHECK_STRIDE,
    ppw: int = 0,
) -> SimResult:
    """Run ``steps`` leapfrog steps from rest and record traces and energy.

    Stress receivers are sampled at integer levels (including t = 0), velocity
    receivers at half levels. The energy is sampled every ``energy_stride``
    steps with the velocity averaged over the two neighbouring half levels.

    Raises:
        BlowUpError: With the step index and max |field| when a run diverges.
    """
    bound_sources = [bind_source(system, s) for s in sources]
    stress_receivers, velocity_receivers = bind_receivers(system, receivers)
    state = initial_state(system, dt)

    traces = TraceSet([r.label for r in stress_receivers])
    velocity_traces = TraceSet([r.label for r in velocity_receivers])
    energy = TraceSet(["E"])
    velocity_names = system.velocity_names

    logger.info(f"Simulating {system.describe()} for {steps} steps, dt={dt}")
    started = time.perf_counter()
    if stress_receivers:
        traces.record(0.0, _sample(state, stress_receivers))
    for n in range(steps):
        sample_energy = n % energy_stride == 0
        if sample_energy:
            previous = {name: state.fields[name].copy() for name in velocity_names}
        advance_velocity(system, state, bound_sources)
        if velocity_receivers:
            velocity_traces.record((n + 0.5) * dt, _sample(state, velocity_receivers))
        if sample_energy:
            centred = dict(state.fields)
            for name in velocity_names:
                centred[name] = 0.5 * (previous[name] + state.fields[name])
            energy.record(n * dt, [system.energy(centred)])
        advance_stress(system, state, bound_sources)
        if stress_receivers:
            traces.record(state.time, _sample(state, stress_receivers))
        if state.step % nan_check_stride == 0:
            check_finite(state)
    check_finite(state)
    wall_time = time.perf_counter() - started
    logger.info(f"Finished {steps} steps in {wall_time:.2f}s")

    return SimResult(
        ppw=ppw,
        description=system.describe(),
        grid_counts=system.n_counts,
        dx=system.spacing[0],
        dt=dt,
        courant=courant_number(system, dt),
        traces=traces,
        velocity_traces=velocity_traces,
        energy=energy,
        wall_time=wall_time,
        steps=steps,
        final_state=state,
    )


def build_system(config: SimConfig, ppw: int) -> SemiDiscreteSystem:
    """Assemble the system a configuration describes at one resolution.

    Raises:
        ConfigurationError: If the resolved grid is unusable.
    """
    sim, grid, med = config.simulation, config.grid, config.medium
    dx = config.spacing_for(ppw)
    counts = config.grid_counts(ppw)
    bc_mode = BCMode(sim.bc_mode)
    try:
        if sim.equation == "wave1d":
            layout = Layout1D(sim.layout)
            variant = (
                OperatorVariant.INTERTWINED
                if layout is Layout1D.STRESS_ON_M
                else OperatorVariant.EXTRAPOLATING
            )
            return assemble_1d(
                build_operator_set(variant, counts[0]),
                MediumSpec.acoustic(1, med.rho, med.c),
                bc_mode,
                dx,
                x_left=grid.x_left,
                layout=layout,
            )
        origin = (grid.x_left, grid.y_top)
        if sim.equation == "acoustic2d":
            variant = OperatorVariant.EXTRAPOLATING
            return assemble_2d_acoustic(
                build_operator_set(variant, counts[0]),
                build_operator_set(variant, counts[1]),
                MediumSpec.acoustic(2, med.rho, med.c),
                bc_mode,
                dx,
                dx,
                origin=origin,
            )
        sets = elastic_operator_sets(counts[0], counts[1], bc_mode)
        return assemble_2d_elastic(
            *sets,
            MediumSpec.elastic(med.rho, med.lam, med.mu),
            bc_mode,
            dx,
            dx,
            origin=origin,
        )
    except OperatorSizeError as e:
        raise ConfigurationError(f"Invalid grid for ppw {ppw}: {e}") from e


def _locate(
    var: Variable, x: float, y: float, x_offset: float, y_offset: float, dx: float, what: str
) -> Tuple[int, ...]:
    point = (x + x_offset * dx, y + y_offset * dx)[: len(var.shape)]
    try:
        return var.nearest_index(point)
    except IndexError as e:
        raise SourceError(f"{what}: {e}") from e


def resolve_sources(
    config: SimConfig, system: SemiDiscreteSystem
) -> List[SourceSpec]:
    """Convert configured physical source locations to grid indices."""
    dx = system.spacing[0]
    resolved = []
    for src in config.sources:
        var = _variable(system, src.target, f"Source '{src.label}'")
        location = _locate(var, src.x, src.y, src.x_offset, src.y_offset, dx,
                           f"Source '{src.label}'")
        resolved.append(
            SourceSpec(src.target, location, src.f0, src.t0, src.amplitude, src.label, src.wavelet)
        )
    return resolved


def resolve_receivers(
    config: SimConfig, system: SemiDiscreteSystem
) -> List[ReceiverSpec]:
    """Convert configured physical receiver locations to grid indices."""
    dx = system.spacing[0]
    resolved = []
    for rec in config.receivers:
        var = _variable(system, rec.variable, f"Receiver '{rec.label}'")
        location = _locate(var, rec.x, rec.y, rec.x_offset, rec.y_offset, dx,
                           f"Receiver '{rec.label}'")
        resolved.append(ReceiverSpec(rec.variable, location, rec.label))
    return resolved


def _variable(system: SemiDiscreteSystem, name: str, what: str) -> Variable:
    try:
        return system.variables[name]
    except KeyError as e:
        raise SourceError(f"{what} refers to unknown variable '{name}'") from e


def run(config: SimConfig, ppw: Optional[int] = None) -> SimResult:
    """Run one resolution of a configuration (the first ppw by default)."""
    ppw = config.grid.ppw[0] if ppw is None else ppw
    system = build_system(config, ppw)
    sim = config.simulation
    result = simulate(
        system,
        sim.dt,
        sim.steps,
        resolve_sources(config, system),
        resolve_receivers(config, system),
        energy_stride=sim.energy_stride,
        nan_check_stride=sim.nan_check_stride,
        ppw=ppw,
    )
    if result.courant > 1.0:
        logger.warning(f"Courant number {result.courant:.4f} at ppw {ppw} exceeds 1")
    return result


def run_all(config: SimConfig) -> List[SimResult]:
    """Run every configured resolution; results keep the ppw order."""
    ppws = list(config.grid.ppw)
    threads = min(config.simulation.threads, len(ppws))
    if threads <= 1:
        return [run(config, ppw) for ppw in ppws]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(lambda p: run(config, p), ppws))


# =============================================================================
# Output
# =============================================================================

def write_traces_csv(path: Path, traces: TraceSet) -> Path:
    """CSV with header ``t,<label1>,...`` and one row per sample."""
    return write_csv(
        path, ["t"] + traces.labels, ([t] + row for t, row in zip(traces.times, traces.rows))
    )


def write_energy_csv(path: Path, energy: TraceSet) -> Path:
    """CSV with header ``t,E``."""
    return write_csv(path, ["t", "E"], ([t] + row for t, row in zip(energy.times, energy.rows)))


def write_manifest(path: Path, config: SimConfig, results: Sequence[SimResult]) -> Path:
    """Resolved configuration (canonical INI) followed by per-resolution facts."""
    lines = [config.to_ini().rstrip(), "", "# resolutions"]
    for r in results:
        counts = "x".join(str(c) for c in r.grid_counts)
        lines.append(
            f"# ppw={r.ppw} grid={counts} dx={r.dx!r} dt={r.dt!r} "
            f"courant={r.courant:.6f} steps={r.steps} wall_time={r.wall_time:.3f}s"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_run_outputs(
    config: SimConfig, results: Sequence[SimResult], out_dir: Optional[Path] = None
) -> Path:
    """Write traces and energy per resolution (``ppw<k>/``) plus the manifest."""
    out = Path(out_dir or config.output.out_dir)
    names = config.output
    for r in results:
        sub = out / f"ppw{r.ppw}"
        write_traces_csv(sub / names.traces_file, r.traces)
        if r.velocity_traces.labels:
            write_traces_csv(sub / names.velocity_traces_file, r.velocity_traces)
        write_energy_csv(sub / names.energy_file, r.energy)
    write_manifest(out / names.manifest_file, config, results)
    logger.info(f"Wrote results for {len(results)} resolution(s) to {out}")
    return out

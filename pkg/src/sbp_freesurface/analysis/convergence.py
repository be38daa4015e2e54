"""Manufactured-solution convergence harness.

Two exact solutions are supported, both satisfying every free surface:

* wave1d on [0, 1], unit medium:
  sigma = sin(8 pi x) sin(8 pi t),  v = -cos(8 pi x) cos(8 pi t)
* elastic2d on the unit square, rho = mu = lam = 1, k = 2 pi, w = sqrt(2) k:
  sxx = 2k sin(wt) sin(kx) sin(ky) = -syy,  sxy = 0,
  vx = -w cos(wt) sin(ky) cos(kx),  vy = w cos(wt) cos(ky) sin(kx)
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..assembly import (
    BCMode,
    Layout1D,
    MediumSpec,
    SemiDiscreteSystem,
    assemble_1d,
    assemble_2d_elastic,
    elastic_operator_sets,
)
from ..exceptions import BlowUpError, ConfigurationError
from ..sbp_core import INTERIOR_STENCIL, OperatorVariant, as_float, build_operator_set
from ..wavesim import WaveState, check_finite, step_leapfrog

logger = logging.getLogger(__name__)

WAVE1D_FREQUENCY = 8 * math.pi
ELASTIC_K = 2 * math.pi
ELASTIC_W = math.sqrt(2) * ELASTIC_K


class MMSCase(Enum):
    """Manufactured solution and 1D layout."""
    WAVE1D = "wave1d"
    WAVE1D_INTERTWINED = "wave1d-intertwined"
    ELASTIC2D = "elastic2d"


@dataclass(frozen=True)
class Schedule:
    dt: float
    steps: int
    ppw: Tuple[int, ...]


# Published schedules; the 2D desk schedule reaches the same final time
FULL_SCHEDULES: Dict[MMSCase, Schedule] = {
    MMSCase.WAVE1D: Schedule(1e-6, 666667, (10, 20, 40, 80, 160)),
    MMSCase.WAVE1D_INTERTWINED: Schedule(1e-6, 666667, (10, 20, 40, 80, 160)),
    MMSCase.ELASTIC2D: Schedule(1e-6, 666667, (10, 20, 40, 80, 160)),
}
DESK_SCHEDULES: Dict[MMSCase, Schedule] = {
    MMSCase.WAVE1D: FULL_SCHEDULES[MMSCase.WAVE1D],
    MMSCase.WAVE1D_INTERTWINED: FULL_SCHEDULES[MMSCase.WAVE1D_INTERTWINED],
    MMSCase.ELASTIC2D: Schedule(1e-5, 66667, (10, 20, 40, 80)),
}


def default_schedule(case: MMSCase, full_fidelity: bool = False) -> Schedule:
    case = MMSCase(case)
    return (FULL_SCHEDULES if full_fidelity else DESK_SCHEDULES)[case]


def mms_spacing(case: MMSCase, ppw: int) -> float:
    """Grid spacing for ``ppw`` points per wavelength (1/4 in 1D, 1 in 2D)."""
    wavelength = 0.25 if MMSCase(case) is not MMSCase.ELASTIC2D else 1.0
    return wavelength / ppw


def mms_system(case: MMSCase, bc_mode: BCMode, ppw: int) -> SemiDiscreteSystem:
    """Assemble the unit-domain, unit-medium system the manufactured solution needs."""
    case, bc_mode = MMSCase(case), BCMode(bc_mode)
    dx = mms_spacing(case, ppw)
    n = int(round(1.0 / dx)) + 1
    if case is MMSCase.ELASTIC2D:
        return assemble_2d_elastic(
            *elastic_operator_sets(n, n, bc_mode),
            MediumSpec.elastic(rho=1.0, lam=1.0, mu=1.0),
            bc_mode,
            dx,
            dx,
        )
    if case is MMSCase.WAVE1D_INTERTWINED:
        if bc_mode is not BCMode.STRONG:
            raise ConfigurationError("Invalid bc_mode 'weak' for the intertwined 1D layout")
        op = build_operator_set(OperatorVariant.INTERTWINED, n)
        layout = Layout1D.STRESS_ON_M
    else:
        op = build_operator_set(OperatorVariant.EXTRAPOLATING, n)
        layout = Layout1D.STRESS_ON_N
    return assemble_1d(op, MediumSpec.acoustic(1, 1.0, 1.0), bc_mode, dx, layout=layout)


def _check_medium(system: SemiDiscreteSystem) -> None:
    for name, rho in system.density.items():
        if not np.allclose(rho, 1.0):
            raise ConfigurationError(f"Invalid medium for the manufactured solution: rho({name}) != 1")
    law = system.law
    if hasattr(law, "beta") and not all(np.allclose(b, 1.0) for b in law.beta.values()):
        raise ConfigurationError("Invalid medium for the manufactured solution: beta != 1")
    if hasattr(law, "mu_shear") and not (
        np.allclose(law.mu, 1.0) and np.allclose(law.mu_shear, 1.0)
    ):
        raise ConfigurationError("Invalid medium for the manufactured solution: mu != 1")
    for h, n in zip(system.spacing, system.n_counts):
        if not math.isclose(h * (n - 1), 1.0, rel_tol=1e-12):
            raise ConfigurationError("Invalid domain for the manufactured solution: must be unit length")


def mms_exact_fields(
    system: SemiDiscreteSystem, t_stress: float, t_velocity: float
) -> Dict[str, np.ndarray]:
    """Exact solution sampled on every variable's grid at its own time level."""
    out: Dict[str, np.ndarray] = {}
    if system.dimension == 1:
        q = WAVE1D_FREQUENCY
        for name, var in system.variables.items():
            x = var.coords[0]
            if name == "sigma":
                out[name] = np.sin(q * x) * np.sin(q * t_stress)
            else:
                out[name] = -np.cos(q * x) * np.cos(q * t_velocity)
        return out

    k, w = ELASTIC_K, ELASTIC_W
    for name, var in system.variables.items():
        x, y = np.meshgrid(*var.coords, indexing="ij")
        if name == "vx":
            value = -w * np.cos(w * t_velocity) * np.sin(k * y) * np.cos(k * x)
        elif name == "vy":
            value = w * np.cos(w * t_velocity) * np.cos(k * y) * np.sin(k * x)
        elif name == "sxx":
            value = 2 * k * np.sin(w * t_stress) * np.sin(k * x) * np.sin(k * y)
        elif name == "syy":
            value = -2 * k * np.sin(w * t_stress) * np.sin(k * x) * np.sin(k * y)
        else:
            value = np.zeros_like(x)
        out[name] = value.ravel()
    return out


def mms_initial_state(system: SemiDiscreteSystem, dt: float) -> WaveState:
    """Exact data: stresses at t = 0, velocities at t = -dt/2."""
    _check_medium(system)
    return WaveState(mms_exact_fields(system, 0.0, -0.5 * dt), dt)


def mms_error(system: SemiDiscreteSystem, state: WaveState) -> float:
    """Energy-norm distance sqrt(2 E(u - u_exact)) at the state's time levels.

    The energy includes the norm weights and the material compliance, so the
    elastic error is measured in the same quadratic form the scheme conserves.

    Raises:
        ConfigurationError: If the system's medium or domain does not match
            the manufactured solution.
    """
    _check_medium(system)
    exact = mms_exact_fields(system, state.time, state.time - 0.5 * state.dt)
    diff = {name: state.fields[name] - exact[name] for name in system.variables}
    return math.sqrt(2.0 * system.energy(diff))


def interior_residual_1d(dx: float, t: float = 0.1) -> float:
    """Max interior truncation error of the stencil on the manufactured stress."""
    stencil = as_float(np.array(INTERIOR_STENCIL, dtype=object))
    q = WAVE1D_FREQUENCY
    x_m = np.arange(2, int(round(1.0 / dx)) - 2) * dx + 0.5 * dx
    # M point x_m uses N points x_m - 3dx/2 .. x_m + 3dx/2
    offsets = np.array([-1.5, -0.5, 0.5, 1.5]) * dx
    values = np.sin(q * (x_m[:, None] + offsets[None, :])) * np.sin(q * t)
    approx = values @ stencil / dx
    exact = q * np.cos(q * x_m) * np.sin(q * t)
    return float(np.max(np.abs(approx - exact)))


# =============================================================================
# Suite
# =============================================================================

@dataclass
class ConvergenceRow:
    ppw: int
    error: float
    rate: Optional[float] = None
    note: str = ""


@dataclass
class ConvergenceReport:
    """Errors and observed rates for a manufactured-solution sweep."""
    case: MMSCase
    bc_mode: BCMode
    dt: float
    steps: int
    rows: List[ConvergenceRow] = field(default_factory=list)

    @property
    def final_time(self) -> float:
        return self.dt * self.steps

    @property
    def rates(self) -> List[float]:
        return [r.rate for r in self.rows if r.rate is not None]


def run_mms(case: MMSCase, bc_mode: BCMode, ppw: int, dt: float, steps: int) -> float:
    """Integrate one resolution from exact data and return the final error."""
    system = mms_system(case, bc_mode, ppw)
    state = mms_initial_state(system, dt)
    for _ in range(steps):
        step_leapfrog(system, state)
    check_finite(state)
    error = mms_error(system, state)
    logger.info(f"MMS {MMSCase(case).value}/{BCMode(bc_mode).value} ppw={ppw}: error {error:.4e}")
    return error


def convergence_suite(
    case: MMSCase,
    bc_mode: BCMode,
    ppw: Optional[Sequence[int]] = None,
    dt: Optional[float] = None,
    steps: Optional[int] = None,
    full_fidelity: bool = False,
    threads: int = 1,
) -> ConvergenceReport:
    """Run every resolution (optionally concurrently) and compute successive rates.

    A resolution that blows up is reported as a row with a NaN error and a note.
    """
    case, bc_mode = MMSCase(case), BCMode(bc_mode)
    schedule = default_schedule(case, full_fidelity)
    ppws = list(schedule.ppw if ppw is None else ppw)
    dt = schedule.dt if dt is None else dt
    steps = schedule.steps if steps is None else steps

    def one(p: int) -> ConvergenceRow:
        try:
            return ConvergenceRow(p, run_mms(case, bc_mode, p, dt, steps))
        except BlowUpError as e:
            logger.warning(f"ppw {p} blew up: {e}")
            return ConvergenceRow(p, float("nan"), note=f"blow-up at step {e.step}")

    if threads > 1 and len(ppws) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(ppws))) as executor:
            rows = list(executor.map(one, ppws))
    else:
        rows = [one(p) for p in ppws]

    for previous, row in zip(rows, rows[1:]):
        if previous.error > 0 and row.error > 0 and math.isfinite(previous.error * row.error):
            row.rate = math.log(previous.error / row.error) / math.log(row.ppw / previous.ppw)
    return ConvergenceReport(case, bc_mode, dt, steps, rows)


def format_convergence_table(report: ConvergenceReport) -> str:
    """Aligned text table ``ppw  error  rate``."""
    lines = [
        f"# {report.case.value} {report.bc_mode.value} dt={report.dt!r} steps={report.steps}",
        f"{'ppw':>6}  {'error':>12}  {'rate':>8}",
    ]
    for row in report.rows:
        rate = "" if row.rate is None else f"{row.rate:.4f}"
        line = f"{row.ppw:>6}  {row.error:>12.4e}  {rate:>8}"
        if row.note:
            line += f"  {row.note}"
        lines.append(line)
    return "\n".join(lines)


def convergence_rows(report: ConvergenceReport) -> List[list]:
    """CSV rows ``ppw,error,rate`` (rate empty on the first row)."""
    return [[r.ppw, r.error, "" if r.rate is None else r.rate] for r in report.rows]

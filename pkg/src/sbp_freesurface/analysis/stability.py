"""Interior von Neumann analysis and empirical CFL probing."""

import cmath
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import List, Optional, Tuple, Union

import numpy as np

from ..assembly import SemiDiscreteSystem
from ..config import SimConfig
from ..exceptions import BlowUpError
from ..wavesim import WaveState, build_system, check_finite, dt_for_courant, step_leapfrog

logger = logging.getLogger(__name__)

Number = Union[Fraction, float]

# beta(c) = c^3/72 - 3 c^2/8 + 65 c/24 - 169/72, c = cos(k dx)
BETA_COEFFICIENTS: Tuple[Fraction, ...] = (
    Fraction(1, 72),
    Fraction(-3, 8),
    Fraction(65, 24),
    Fraction(-169, 72),
)


def beta_of(c: Number) -> Number:
    """Amplification polynomial of the interior stencil, exact for Fraction input."""
    a3, a2, a1, a0 = BETA_COEFFICIENTS
    if isinstance(c, (Fraction, int)):
        c = Fraction(c)
        return ((a3 * c + a2) * c + a1) * c + a0
    return ((float(a3) * c + float(a2)) * c + float(a1)) * c + float(a0)


def _exact_sqrt(value: Fraction) -> Optional[Fraction]:
    """Square root of a non-negative rational when it is rational, else None."""
    num, den = value.numerator, value.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def _beta_critical_points() -> List[Fraction]:
    """Roots of beta'(c) = c^2/24 - 3c/4 + 65/24 when rational."""
    a3, a2, a1, _ = BETA_COEFFICIENTS
    qa, qb, qc = 3 * a3, 2 * a2, a1
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return []
    root = _exact_sqrt(disc)
    if root is None:
        raise ArithmeticError("beta'(c) has irrational roots")
    return [(-qb - root) / (2 * qa), (-qb + root) / (2 * qa)]


def min_beta() -> Fraction:
    """Minimum of beta over c in [-1, 1] from endpoints and interior critical points."""
    candidates = [Fraction(-1), Fraction(1)]
    candidates += [c for c in _beta_critical_points() if -1 <= c <= 1]
    return min(beta_of(c) for c in candidates)


def interior_cfl_limit() -> Fraction:
    """Largest C with (1 + beta C^2 / 2)^2 <= 1 for every beta in range.

    The growth factors satisfy G^2 - (2 + beta C^2) G + 1 = 0, so |G| = 1
    exactly when -4 <= beta C^2 <= 0, giving C_max = sqrt(4 / |min beta|).
    """
    bound = Fraction(4) / abs(min_beta())
    limit = _exact_sqrt(bound)
    if limit is None:
        raise ArithmeticError(f"C_max^2 = {bound} is not a rational square")
    return limit


def growth_factors(beta: float, courant: float) -> Tuple[complex, complex]:
    """Roots of G^2 - (2 + beta C^2) G + 1 = 0."""
    b = 2.0 + float(beta) * float(courant) ** 2
    root = cmath.sqrt(b * b - 4.0)
    return (b + root) / 2.0, (b - root) / 2.0


def amplification_is_stable(beta: float, courant: float, tolerance: float = 1e-12) -> bool:
    """True when both growth factors lie on or inside the unit circle."""
    return max(abs(g) for g in growth_factors(beta, courant)) <= 1.0 + tolerance


# =============================================================================
# Empirical CFL probe
# =============================================================================

@dataclass
class ProbeResult:
    """Outcome of a CFL bisection."""
    description: str
    courant: float
    lower: float
    upper: float
    steps: int
    history: List[Tuple[float, bool]] = field(default_factory=list)


def probe_initial_state(system: SemiDiscreteSystem, dt: float, seed: int) -> WaveState:
    """Unit-amplitude random state with strongly constrained entries zeroed."""
    rng = np.random.default_rng(seed)
    fields = {}
    for name, var in system.variables.items():
        values = rng.uniform(-1.0, 1.0, var.size)
        values[var.constrained] = 0.0
        fields[name] = values
    return WaveState(fields, dt)


def is_stable(
    system: SemiDiscreteSystem,
    courant: float,
    steps: int,
    threshold: float,
    seed: int,
    check_stride: int = 100,
) -> bool:
    """Run ``steps`` source-free steps at ``courant`` and report boundedness."""
    dt = dt_for_courant(system, courant)
    state = probe_initial_state(system, dt, seed)
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            for _ in range(steps):
                step_leapfrog(system, state, nan_check_stride=check_stride)
                if state.step % check_stride == 0 and state.max_abs() >= threshold:
                    return False
            check_finite(state)
        except BlowUpError:
            return False
    return state.max_abs() < threshold


def cfl_probe(
    config: SimConfig, steps: Optional[int] = None, ppw: Optional[int] = None
) -> ProbeResult:
    """Bisect the largest stable Courant number in (0, probe_upper].

    A Courant number counts as stable when max |field| stays below
    ``blowup_factor`` times the unit initial amplitude for ``steps`` steps.
    """
    analysis = config.analysis
    steps = analysis.probe_steps if steps is None else steps
    ppw = config.grid.ppw[0] if ppw is None else ppw
    system = build_system(config, ppw)
    threshold = analysis.blowup_factor

    def probe(courant: float) -> bool:
        stable = is_stable(system, courant, steps, threshold, analysis.probe_seed,
                           config.simulation.nan_check_stride)
        logger.info(f"Probe C={courant:.6f}: {'stable' if stable else 'unstable'}")
        result.history.append((courant, stable))
        return stable

    result = ProbeResult(system.describe(), 0.0, 0.0, analysis.probe_upper, steps)
    if probe(analysis.probe_upper):
        logger.warning(f"Stable at the probe upper bound {analysis.probe_upper}")
        result.courant = result.lower = analysis.probe_upper
        return result

    lower, upper = 0.0, analysis.probe_upper
    while upper - lower > analysis.probe_tolerance:
        middle = 0.5 * (lower + upper)
        if probe(middle):
            lower = middle
        else:
            upper = middle
    result.lower, result.upper = lower, upper
    result.courant = 0.5 * (lower + upper)
    logger.info(f"Measured max Courant {result.courant:.4f} in [{lower:.4f}, {upper:.4f}]")
    return result

"""Semi-discrete systems assembled from 1D operator sets.

A system is a list of velocity and stress unknowns on their staggered grids,
plus two families of sparse couplings:

* velocity couplings  rho dV/dt = sum_k D[V, S_k] S_k
* strain couplings    e_S      = sum_k D[S, V_k] V_k

and a constitutive law mapping strain rates to stress rates. 2D fields are
flattened in C order over (x index, y index); y index 0 is the top surface.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .exceptions import AssemblyError, OperatorStructureError
from .sbp_core import (
    OperatorSet1D,
    OperatorVariant,
    apply_strong_reset,
    as_csr,
    as_float,
    build_operator_set,
    compute_q,
    format_rational,
    is_zero,
    projection_vectors,
    rational_equal,
)

logger = logging.getLogger(__name__)

FieldLike = Union[float, int, Callable[..., np.ndarray]]


class Equation(Enum):
    """Governing equation of a system."""
    WAVE1D = "wave1d"
    ACOUSTIC2D = "acoustic2d"
    ELASTIC2D = "elastic2d"


class BCMode(Enum):
    """How the free-surface condition is imposed."""
    STRONG = "strong"
    WEAK = "weak"


class Layout1D(Enum):
    """Placement of the 1D unknowns.

    STRESS_ON_N is the standard layout (stress on the boundary-inclusive grid).
    STRESS_ON_M places stress on the half-offset grid and relies on the
    truncated intertwined operators for the surface condition.
    """
    STRESS_ON_N = "stress_on_n"
    STRESS_ON_M = "stress_on_m"


class VariableKind(Enum):
    VELOCITY = "velocity"
    STRESS = "stress"


# =============================================================================
# Media
# =============================================================================

@dataclass
class MediumSpec:
    """Material description, homogeneous values or samplers f(x[, y]).

    For wave1d/acoustic2d set ``beta`` (compressibility 1/(rho c^2)); for
    elastic2d set ``lam`` and ``mu``.
    """
    dimension: int
    rho: FieldLike = 1.0
    beta: Optional[FieldLike] = None
    lam: Optional[FieldLike] = None
    mu: Optional[FieldLike] = None

    @classmethod
    def acoustic(cls, dimension: int, rho: float = 1.0, c: float = 1.0) -> "MediumSpec":
        if rho <= 0 or c <= 0:
            raise AssemblyError(f"Invalid medium rho={rho}, c={c}. Both must be > 0")
        return cls(dimension=dimension, rho=rho, beta=1.0 / (rho * c * c))

    @classmethod
    def elastic(cls, rho: float = 1.0, lam: float = 1.0, mu: float = 1.0) -> "MediumSpec":
        return cls(dimension=2, rho=rho, lam=lam, mu=mu)

    @property
    def is_elastic(self) -> bool:
        return self.lam is not None or self.mu is not None

    def sample(self, name: str, coords: Sequence[np.ndarray]) -> np.ndarray:
        """Sample one material field on a tensor grid given per-axis coordinates."""
        value = getattr(self, name)
        if value is None:
            raise AssemblyError(f"Medium has no '{name}' field")
        shape = tuple(len(c) for c in coords)
        if len(coords) != self.dimension:
            raise AssemblyError(
                f"Medium is {self.dimension}D but was sampled on a {len(coords)}D grid"
            )
        if callable(value):
            mesh = np.meshgrid(*coords, indexing="ij")
            raw = np.asarray(value(*mesh), dtype=np.float64)
        else:
            raw = np.asarray(value, dtype=np.float64)
        try:
            sampled = np.broadcast_to(raw, shape).astype(np.float64)
        except ValueError as e:
            raise AssemblyError(
                f"Medium field '{name}' of shape {raw.shape} does not match grid {shape}"
            ) from e
        if not np.all(np.isfinite(sampled)):
            raise AssemblyError(f"Medium field '{name}' has non-finite samples")
        return sampled.ravel()


# =============================================================================
# Constitutive laws
# =============================================================================

class AcousticLaw:
    """Scalar compliance: dSigma/dt = e / beta."""

    def __init__(self, beta: Dict[str, np.ndarray]):
        self.beta = beta
        if any(np.any(b <= 0) for b in beta.values()):
            raise AssemblyError("Invalid medium: beta must be > 0 everywhere")

    def stress_rates(self, strains: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        return {name: strains[name] / self.beta[name] for name in self.beta}

    def energy(self, fields: Dict[str, np.ndarray], weights: Dict[str, np.ndarray]) -> float:
        return 0.5 * sum(
            float(np.sum(weights[name] * self.beta[name] * fields[name] ** 2)) for name in self.beta
        )

    def energy_gradient(
        self, fields: Dict[str, np.ndarray], weights: Dict[str, np.ndarray]
    ) -> Dict[str, np.ndarray]:
        return {name: weights[name] * self.beta[name] * fields[name] for name in self.beta}

    def compliance_diagonal(self, name: str) -> np.ndarray:
        return self.beta[name]

    def stiffness_form(self, weights: Dict[str, np.ndarray], order: Sequence[str]) -> sparse.spmatrix:
        """Symmetric matrix W C acting on the stacked strain vector."""
        return sparse.diags(np.concatenate([weights[n] / self.beta[n] for n in order]))

    def max_wave_speed(self, rho: np.ndarray, name: str = "sigma") -> float:
        return float(np.sqrt(np.max(1.0 / (rho * self.beta[name]))))


class IsotropicElasticLaw:
    """Plane isotropic elasticity in stiffness form.

    Normal stresses (sxx, syy) share one grid; shear stress sxy lives on another.
    """

    def __init__(
        self,
        lam_normal: np.ndarray,
        mu_normal: np.ndarray,
        mu_shear: np.ndarray,
    ):
        if np.any(mu_normal <= 0) or np.any(mu_shear <= 0):
            raise AssemblyError("Invalid medium: mu must be > 0 everywhere")
        if np.any(lam_normal + 2 * mu_normal <= 0):
            raise AssemblyError("Invalid medium: lambda + 2 mu must be > 0 everywhere")
        if np.any(lam_normal + mu_normal <= 0):
            raise AssemblyError("Invalid medium: lambda + mu must be > 0 for a positive compliance")
        self.lam = lam_normal
        self.mu = mu_normal
        self.mu_shear = mu_shear
        det = 4.0 * mu_normal * (lam_normal + mu_normal)
        self._s11 = (lam_normal + 2 * mu_normal) / det
        self._s12 = -lam_normal / det

    def stress_rates(self, strains: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        exx, eyy, exy = strains["sxx"], strains["syy"], strains["sxy"]
        p = self.lam + 2 * self.mu
        return {
            "sxx": p * exx + self.lam * eyy,
            "syy": self.lam * exx + p * eyy,
            "sxy": self.mu_shear * exy,
        }

    def energy(self, fields: Dict[str, np.ndarray], weights: Dict[str, np.ndarray]) -> float:
        sxx, syy, sxy = fields["sxx"], fields["syy"], fields["sxy"]
        normal = self._s11 * (sxx**2 + syy**2) + 2 * self._s12 * sxx * syy
        return 0.5 * float(np.sum(weights["sxx"] * normal)) + 0.5 * float(
            np.sum(weights["sxy"] * sxy**2 / self.mu_shear)
        )

    def energy_gradient(
        self, fields: Dict[str, np.ndarray], weights: Dict[str, np.ndarray]
    ) -> Dict[str, np.ndarray]:
        sxx, syy, sxy = fields["sxx"], fields["syy"], fields["sxy"]
        return {
            "sxx": weights["sxx"] * (self._s11 * sxx + self._s12 * syy),
            "syy": weights["syy"] * (self._s12 * sxx + self._s11 * syy),
            "sxy": weights["sxy"] * sxy / self.mu_shear,
        }

    def compliance_diagonal(self, name: str) -> np.ndarray:
        """Diagonal entry of the compliance acting on one stress component."""
        if name == "sxy":
            return 1.0 / self.mu_shear
        return self._s11

    def stiffness_form(self, weights: Dict[str, np.ndarray], order: Sequence[str]) -> sparse.spmatrix:
        w = weights["sxx"]
        p = self.lam + 2 * self.mu
        blocks = {
            ("sxx", "sxx"): sparse.diags(w * p),
            ("sxx", "syy"): sparse.diags(w * self.lam),
            ("syy", "sxx"): sparse.diags(w * self.lam),
            ("syy", "syy"): sparse.diags(w * p),
            ("sxy", "sxy"): sparse.diags(weights["sxy"] * self.mu_shear),
        }
        grid = [[blocks.get((a, b)) for b in order] for a in order]
        return sparse.bmat(grid, format="csr")

    def max_wave_speed(self, rho: np.ndarray, name: str = "sxx") -> float:
        return float(np.sqrt(np.max((self.lam + 2 * self.mu) / rho)))


ConstitutiveLaw = Union[AcousticLaw, IsotropicElasticLaw]


# =============================================================================
# System description
# =============================================================================

@dataclass(frozen=True, eq=False)
class Variable:
    """One unknown field on its staggered grid.

    ``weights`` are the flattened norm weights including the Delta-x factors;
    ``constrained`` marks surface points held at zero by strong imposition.
    """
    name: str
    kind: VariableKind
    grids: Tuple[str, ...]
    coords: Tuple[np.ndarray, ...]
    weights: np.ndarray
    constrained: np.ndarray

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(c) for c in self.coords)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def flat_index(self, index: Sequence[int]) -> int:
        index = tuple(int(i) for i in index)
        if len(index) != len(self.shape) or any(
            not 0 <= i < n for i, n in zip(index, self.shape)
        ):
            raise IndexError(f"Index {index} outside grid {self.shape} of '{self.name}'")
        return int(np.ravel_multi_index(index, self.shape))

    def nearest_index(self, point: Sequence[float], tolerance: float = 1e-6) -> Tuple[int, ...]:
        """Grid index of a physical point that must lie on this variable's grid.

        Raises:
            IndexError: If the point is further than ``tolerance`` grid
                spacings from a grid point or outside the grid.
        """
        index = []
        for axis, (coord, x) in enumerate(zip(self.coords, point)):
            spacing = coord[1] - coord[0] if len(coord) > 1 else 1.0
            k = int(round((x - coord[0]) / spacing))
            if not 0 <= k < len(coord) or abs(coord[k] - x) > tolerance * spacing:
                raise IndexError(
                    f"Point {x} on axis {axis} is not a '{self.name}' grid point"
                )
            index.append(k)
        return tuple(index)


@dataclass(frozen=True, eq=False)
class Coupling:
    """Sparse operator feeding ``source`` into the rate of ``target``."""
    target: str
    source: str
    op: sparse.csr_matrix


@dataclass(frozen=True, eq=False)
class SemiDiscreteSystem:
    """Assembled, immutable semi-discrete system ready for time stepping."""
    equation: Equation
    bc_mode: BCMode
    spacing: Tuple[float, ...]
    origin: Tuple[float, ...]
    n_counts: Tuple[int, ...]
    variables: Dict[str, Variable]
    velocity_couplings: Tuple[Coupling, ...]
    strain_couplings: Tuple[Coupling, ...]
    density: Dict[str, np.ndarray]
    law: ConstitutiveLaw
    layout: Layout1D = Layout1D.STRESS_ON_N
    max_wave_speed: float = 1.0
    metadata: Dict[str, str] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.spacing)

    @property
    def velocity_names(self) -> List[str]:
        return [n for n, v in self.variables.items() if v.kind is VariableKind.VELOCITY]

    @property
    def stress_names(self) -> List[str]:
        return [n for n, v in self.variables.items() if v.kind is VariableKind.STRESS]

    @property
    def weights(self) -> Dict[str, np.ndarray]:
        return {name: var.weights for name, var in self.variables.items()}

    @property
    def unknowns(self) -> int:
        return sum(v.size for v in self.variables.values())

    def zero_fields(self) -> Dict[str, np.ndarray]:
        return {name: np.zeros(var.size) for name, var in self.variables.items()}

    def operator(self, target: str, source: str) -> sparse.csr_matrix:
        """The assembled coupling from ``source`` to ``target``."""
        for coupling in self.velocity_couplings + self.strain_couplings:
            if coupling.target == target and coupling.source == source:
                return coupling.op
        raise KeyError(f"No coupling {source} -> {target}")

    def velocity_forcing(self, fields: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """sum_k D[V, S_k] S_k for every velocity (before dividing by density)."""
        out = {name: np.zeros(self.variables[name].size) for name in self.velocity_names}
        for c in self.velocity_couplings:
            out[c.target] += c.op @ fields[c.source]
        return out

    def strain_rates(self, fields: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        out = {name: np.zeros(self.variables[name].size) for name in self.stress_names}
        for c in self.strain_couplings:
            out[c.target] += c.op @ fields[c.source]
        return out

    def velocity_rates(self, fields: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        forcing = self.velocity_forcing(fields)
        return {name: forcing[name] / self.density[name] for name in forcing}

    def stress_rates(self, fields: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        return self.law.stress_rates(self.strain_rates(fields))

    def energy(self, fields: Dict[str, np.ndarray]) -> float:
        kinetic = 0.5 * sum(
            float(np.sum(self.density[n] * self.variables[n].weights * fields[n] ** 2))
            for n in self.velocity_names
        )
        return kinetic + self.law.energy(fields, self.weights)

    def surface_points(self, name: str) -> np.ndarray:
        """Flat indices of the constrained points of one variable."""
        return np.flatnonzero(self.variables[name].constrained)

    def describe(self) -> str:
        shapes = ", ".join(f"{n}{v.shape}" for n, v in self.variables.items())
        return f"{self.equation.value}/{self.bc_mode.value} [{shapes}]"


# =============================================================================
# Energy identity
# =============================================================================

def energy_rate(system: SemiDiscreteSystem, fields: Dict[str, np.ndarray]) -> float:
    """dE/dt obtained by chaining the energy gradient with the system's rates."""
    vel_rates = system.velocity_rates(fields)
    str_rates = system.stress_rates(fields)
    total = 0.0
    for name in system.velocity_names:
        var = system.variables[name]
        total += float(np.sum(system.density[name] * var.weights * fields[name] * vel_rates[name]))
    gradient = system.law.energy_gradient(fields, system.weights)
    for name in system.stress_names:
        total += float(np.sum(gradient[name] * str_rates[name]))
    return total


def energy_rate_scale(system: SemiDiscreteSystem, fields: Dict[str, np.ndarray]) -> float:
    """Magnitude of the terms that cancel in :func:`energy_rate`."""
    forcing = system.velocity_forcing(fields)
    strains = system.strain_rates(fields)
    scale = 0.0
    for name in system.velocity_names:
        scale += float(np.sum(np.abs(system.variables[name].weights * fields[name] * forcing[name])))
    for name in system.stress_names:
        scale += float(np.sum(np.abs(system.variables[name].weights * fields[name] * strains[name])))
    return scale


# =============================================================================
# Exact weak (SAT) operators
# =============================================================================

def rational_weak_dn(op: OperatorSet1D) -> np.ndarray:
    """DN + AM^{-1} (PL e_L^T - PR e_R^T), exact.

    Raises:
        AssemblyError: If the set has no projection vectors.
    """
    pl, pr = _require_projection(op)
    dn = op.DN.copy()
    dn[:, 0] = dn[:, 0] + pl / op.AM
    dn[:, -1] = dn[:, -1] - pr / op.AM
    return dn


def rational_weak_dm(op: OperatorSet1D) -> np.ndarray:
    """DM + AN^{-1} (e_L PL^T - e_R PR^T), exact."""
    pl, pr = _require_projection(op)
    dm = op.DM.copy()
    dm[0, :] = dm[0, :] + pl / op.AN[0]
    dm[-1, :] = dm[-1, :] - pr / op.AN[-1]
    return dm


def weak_skew_residual(op: OperatorSet1D) -> np.ndarray:
    """AN DM + (AM D~N)^T for the SAT-modified DN; zero by construction."""
    return op.AN[:, None] * op.DM + (op.AM[:, None] * rational_weak_dn(op)).T


def _require_projection(op: OperatorSet1D) -> Tuple[np.ndarray, np.ndarray]:
    if op.is_reset:
        raise AssemblyError(f"Weak imposition needs an unreset operator set, got {op.describe()}")
    try:
        return projection_vectors(op)
    except OperatorStructureError as e:
        raise AssemblyError(f"Operator set {op.describe()} cannot carry SATs: {e}") from e


# =============================================================================
# Helpers
# =============================================================================

def identity(n: int) -> sparse.csr_matrix:
    return sparse.identity(n, format="csr")


def identity_zeroed_ends(n: int) -> sparse.csr_matrix:
    """Identity with its first and last diagonal entries set to zero."""
    diag = np.ones(n)
    diag[0] = diag[-1] = 0.0
    return sparse.diags(diag, format="csr")


def _kron(a: sparse.spmatrix, b: sparse.spmatrix) -> sparse.csr_matrix:
    out = sparse.kron(a, b, format="csr")
    out.eliminate_zeros()
    return out


def _boundary_mask(shape: Tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for axis in range(len(shape)):
        index = [slice(None)] * len(shape)
        index[axis] = 0
        mask[tuple(index)] = True
        index[axis] = -1
        mask[tuple(index)] = True
    return mask.ravel()


def _outer_weights(*diagonals: np.ndarray) -> np.ndarray:
    out = np.ones(1)
    for d in diagonals:
        out = np.multiply.outer(out, d).reshape(-1)
    return out


def _check_sizes(op: OperatorSet1D, name: str) -> None:
    if op.n_count < 9:
        raise AssemblyError(f"Operator set for {name} has too few points ({op.n_count})")


# =============================================================================
# 1D
# =============================================================================

def assemble_1d(
    op: OperatorSet1D,
    medium: MediumSpec,
    bc_mode: BCMode,
    dx: float,
    x_left: float = 0.0,
    layout: Layout1D = Layout1D.STRESS_ON_N,
) -> SemiDiscreteSystem:
    """Assemble the 1D velocity-stress system with free surfaces at both ends.

    Args:
        op: Unreset operator set (Extrapolating for weak imposition).
        medium: 1D medium with ``rho`` and ``beta``.
        bc_mode: STRONG (both-side reset) or WEAK (SATs folded into DN).
        dx: Grid spacing.
        x_left: Coordinate of the left surface.
        layout: STRESS_ON_M uses the truncated intertwined operators.

    Returns:
        SemiDiscreteSystem with variables ``v`` and ``sigma``.
    """
    bc_mode = BCMode(bc_mode)
    layout = Layout1D(layout)
    if medium.dimension != 1:
        raise AssemblyError(f"1D assembly needs a 1D medium, got dimension {medium.dimension}")
    _check_sizes(op, "x")
    op = op.with_spacing(dx)
    n, m = op.n_count, op.m_count
    xn = op.grid_n(x_left)
    xm = op.grid_m(x_left)
    am, an = as_float(op.AM) * dx, as_float(op.AN) * dx

    if layout is Layout1D.STRESS_ON_N:
        if bc_mode is BCMode.STRONG:
            used = apply_strong_reset(op, True, True)
            dn, dm = used.DN, used.DM
        else:
            dn, dm = rational_weak_dn(op), op.DM
        constrained = np.zeros(n, dtype=bool)
        if bc_mode is BCMode.STRONG:
            constrained[[0, -1]] = True
        v = Variable("v", VariableKind.VELOCITY, ("M",), (xm,), am, np.zeros(m, dtype=bool))
        s = Variable("sigma", VariableKind.STRESS, ("N",), (xn,), an, constrained)
        vel_op, strain_op = as_csr(dn, 1.0 / dx), as_csr(dm, 1.0 / dx)
    else:
        if op.variant is not OperatorVariant.INTERTWINED or op.is_reset:
            raise AssemblyError("Stress-on-M layout needs an unreset intertwined operator set")
        if bc_mode is not BCMode.STRONG:
            raise AssemblyError("Stress-on-M layout embeds the surface condition; use strong mode")
        v = Variable("v", VariableKind.VELOCITY, ("N",), (xn,), an, np.zeros(n, dtype=bool))
        s = Variable("sigma", VariableKind.STRESS, ("M",), (xm,), am, np.zeros(m, dtype=bool))
        vel_op, strain_op = as_csr(op.DM, 1.0 / dx), as_csr(op.DN, 1.0 / dx)

    rho = medium.sample("rho", v.coords)
    beta = medium.sample("beta", s.coords)
    if np.any(rho <= 0):
        raise AssemblyError("Invalid medium: rho must be > 0 everywhere")
    law = AcousticLaw({"sigma": beta})
    rho_on_stress = medium.sample("rho", s.coords)

    system = SemiDiscreteSystem(
        equation=Equation.WAVE1D,
        bc_mode=bc_mode,
        spacing=(float(dx),),
        origin=(float(x_left),),
        n_counts=(n,),
        variables={"v": v, "sigma": s},
        velocity_couplings=(Coupling("v", "sigma", vel_op),),
        strain_couplings=(Coupling("sigma", "v", strain_op),),
        density={"v": rho},
        law=law,
        layout=layout,
        max_wave_speed=law.max_wave_speed(rho_on_stress),
        metadata={"variant": op.variant.value},
    )
    logger.info(f"Assembled {system.describe()} with {system.unknowns} unknowns")
    return system


# =============================================================================
# 2D acoustic
# =============================================================================

def assemble_2d_acoustic(
    setx: OperatorSet1D,
    sety: OperatorSet1D,
    medium: MediumSpec,
    bc_mode: BCMode,
    dx: float,
    dy: float,
    origin: Tuple[float, float] = (0.0, 0.0),
) -> SemiDiscreteSystem:
    """Assemble the 2D acoustic system with free surfaces on all four sides.

    Sigma lives on (Nx, Ny), Vx on (Mx, Ny), Vy on (Nx, My).
    """
    bc_mode = BCMode(bc_mode)
    if medium.dimension != 2:
        raise AssemblyError(f"2D assembly needs a 2D medium, got dimension {medium.dimension}")
    _check_sizes(setx, "x")
    _check_sizes(sety, "y")
    sx, sy = setx.with_spacing(dx), sety.with_spacing(dy)
    nx, ny = sx.n_count, sy.n_count
    mx, my = sx.m_count, sy.m_count
    xn, xm = sx.grid_n(origin[0]), sx.grid_m(origin[0])
    yn, ym = sy.grid_n(origin[1]), sy.grid_m(origin[1])

    if bc_mode is BCMode.STRONG:
        rx, ry = apply_strong_reset(sx, True, True), apply_strong_reset(sy, True, True)
        dnx, dmx, dny, dmy = rx.DN, rx.DM, ry.DN, ry.DM
        inx, iny = identity_zeroed_ends(nx), identity_zeroed_ends(ny)
    else:
        dnx, dmx = rational_weak_dn(sx), sx.DM
        dny, dmy = rational_weak_dn(sy), sy.DM
        inx, iny = identity(nx), identity(ny)

    dnx_f, dmx_f = as_csr(dnx, 1.0 / dx), as_csr(dmx, 1.0 / dx)
    dny_f, dmy_f = as_csr(dny, 1.0 / dy), as_csr(dmy, 1.0 / dy)

    amx, anx = as_float(sx.AM) * dx, as_float(sx.AN) * dx
    amy, any_ = as_float(sy.AM) * dy, as_float(sy.AN) * dy

    constrained = _boundary_mask((nx, ny)) if bc_mode is BCMode.STRONG else np.zeros(nx * ny, bool)
    variables = {
        "vx": Variable("vx", VariableKind.VELOCITY, ("M", "N"), (xm, yn),
                       _outer_weights(amx, any_), np.zeros(mx * ny, bool)),
        "vy": Variable("vy", VariableKind.VELOCITY, ("N", "M"), (xn, ym),
                       _outer_weights(anx, amy), np.zeros(nx * my, bool)),
        "sigma": Variable("sigma", VariableKind.STRESS, ("N", "N"), (xn, yn),
                          _outer_weights(anx, any_), constrained),
    }

    velocity_couplings = (
        Coupling("vx", "sigma", _kron(dnx_f, iny)),
        Coupling("vy", "sigma", _kron(inx, dny_f)),
    )
    strain_couplings = (
        Coupling("sigma", "vx", _kron(dmx_f, iny)),
        Coupling("sigma", "vy", _kron(inx, dmy_f)),
    )

    density = {
        "vx": medium.sample("rho", (xm, yn)),
        "vy": medium.sample("rho", (xn, ym)),
    }
    if any(np.any(r <= 0) for r in density.values()):
        raise AssemblyError("Invalid medium: rho must be > 0 everywhere")
    law = AcousticLaw({"sigma": medium.sample("beta", (xn, yn))})

    system = SemiDiscreteSystem(
        equation=Equation.ACOUSTIC2D,
        bc_mode=bc_mode,
        spacing=(float(dx), float(dy)),
        origin=(float(origin[0]), float(origin[1])),
        n_counts=(nx, ny),
        variables=variables,
        velocity_couplings=velocity_couplings,
        strain_couplings=strain_couplings,
        density=density,
        law=law,
        max_wave_speed=law.max_wave_speed(medium.sample("rho", (xn, yn))),
        metadata={"variant": setx.variant.value},
    )
    logger.info(f"Assembled {system.describe()} with {system.unknowns} unknowns")
    return system


# =============================================================================
# 2D elastic
# =============================================================================

@dataclass
class RequirementReport:
    """Outcome of the shared-norm / skew-symmetry / shared-DN checks."""
    failures: List[str] = field(default_factory=list)
    checked: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def check_elastic_requirements(
    setx_N: OperatorSet1D,
    setx_M: OperatorSet1D,
    sety_N: OperatorSet1D,
    sety_M: OperatorSet1D,
) -> RequirementReport:
    """Verify, exactly, the identities the elastic strong layout relies on.

    Per axis: the two flavors share AM and AN; the as-used operators of both
    flavors satisfy AN DM + (AM DN)^T = 0; and DN agrees across flavors on
    every column that the N-flavor reset has not zeroed.
    """
    report = RequirementReport()
    for axis, n_set, m_set in (("x", setx_N, setx_M), ("y", sety_N, sety_M)):
        report.checked.append(f"{axis}: sizes")
        if n_set.n_count != m_set.n_count:
            report.failures.append(
                f"{axis}: N-flavor has {n_set.n_count} points, M-flavor has {m_set.n_count}"
            )
            continue

        report.checked.append(f"{axis}: shared norms")
        if not rational_equal(n_set.AN, m_set.AN):
            report.failures.append(f"{axis}: AN differs between flavors")
        if not rational_equal(n_set.AM, m_set.AM):
            report.failures.append(f"{axis}: AM differs between flavors")

        for flavor, op in (("N", n_set), ("M", m_set)):
            report.checked.append(f"{axis}: {flavor}-flavor skew symmetry")
            Q = compute_q(op)
            if not is_zero(Q):
                rows = [i for i in range(op.n_count) if not is_zero(Q[i])]
                first = ", ".join(format_rational(q) for q in Q[rows[0], :3])
                report.failures.append(
                    f"{axis}: {flavor}-flavor AN DM + (AM DN)^T != 0 at rows {rows[:4]} "
                    f"(row {rows[0]} starts [{first}])"
                )

        report.checked.append(f"{axis}: shared DN")
        keep = np.ones(n_set.n_count, dtype=bool)
        if n_set.reset_left:
            keep[0] = False
        if n_set.reset_right:
            keep[-1] = False
        if m_set.reset_left or m_set.reset_right:
            report.failures.append(f"{axis}: M-flavor set must not be reset")
        if not rational_equal(n_set.DN[:, keep], m_set.DN[:, keep]):
            report.failures.append(f"{axis}: DN differs between flavors")
    return report


def assemble_2d_elastic(
    setx_N: OperatorSet1D,
    setx_M: OperatorSet1D,
    sety_N: OperatorSet1D,
    sety_M: OperatorSet1D,
    medium: MediumSpec,
    bc_mode: BCMode,
    dx: float,
    dy: float,
    origin: Tuple[float, float] = (0.0, 0.0),
) -> SemiDiscreteSystem:
    """Assemble the 2D elastic system with free surfaces on all four sides.

    Grid layout: sxy on (Nx, Ny); vx on (Nx, My); vy on (Mx, Ny);
    sxx and syy on (Mx, My).

    Strong mode resets the N-flavor sets on both sides (idempotent) and uses
    the M-flavor sets as given, which must be unreset and truncated
    (intertwined). Weak mode uses unreset extrapolating sets and adds SATs on
    the velocity equations for every surface traction component.

    Raises:
        AssemblyError: If the operator sets are incompatible.
    """
    bc_mode = BCMode(bc_mode)
    if medium.dimension != 2 or not medium.is_elastic:
        raise AssemblyError("Elastic assembly needs a 2D medium with lam and mu")
    for name, op in (("x/N", setx_N), ("x/M", setx_M), ("y/N", sety_N), ("y/M", sety_M)):
        _check_sizes(op, name)

    if bc_mode is BCMode.STRONG:
        xN = apply_strong_reset(setx_N, True, True)
        yN = apply_strong_reset(sety_N, True, True)
        report = check_elastic_requirements(xN, setx_M, yN, sety_M)
        if not report.passed:
            raise AssemblyError("Elastic operator sets rejected: " + "; ".join(report.failures))
        dn_xN, dm_xN = xN.DN, xN.DM
        dn_yN, dm_yN = yN.DN, yN.DM
        dn_xM, dm_xM = setx_M.DN, setx_M.DM
        dn_yM, dm_yM = sety_M.DN, sety_M.DM
    else:
        if setx_N.n_count != setx_M.n_count or sety_N.n_count != sety_M.n_count:
            raise AssemblyError("Elastic operator sets disagree on grid sizes")
        dn_xN, dm_xN = rational_weak_dn(setx_N), setx_N.DM
        dn_yN, dm_yN = rational_weak_dn(sety_N), sety_N.DM
        dn_xM, dm_xM = setx_M.DN, rational_weak_dm(setx_M)
        dn_yM, dm_yM = sety_M.DN, rational_weak_dm(sety_M)

    sx, sy = setx_N.with_spacing(dx), sety_N.with_spacing(dy)
    nx, ny, mx, my = sx.n_count, sy.n_count, sx.m_count, sy.m_count
    xn, xm = sx.grid_n(origin[0]), sx.grid_m(origin[0])
    yn, ym = sy.grid_n(origin[1]), sy.grid_m(origin[1])
    amx, anx = as_float(sx.AM) * dx, as_float(sx.AN) * dx
    amy, any_ = as_float(sy.AM) * dy, as_float(sy.AN) * dy

    if bc_mode is BCMode.STRONG:
        inx, iny = identity_zeroed_ends(nx), identity_zeroed_ends(ny)
    else:
        inx, iny = identity(nx), identity(ny)
    imx, imy = identity(mx), identity(my)

    f = lambda mat, h: as_csr(mat, 1.0 / h)  # noqa: E731
    velocity_couplings = (
        Coupling("vx", "sxx", _kron(f(dm_xM, dx), imy)),
        Coupling("vx", "sxy", _kron(inx, f(dn_yN, dy))),
        Coupling("vy", "sxy", _kron(f(dn_xN, dx), iny)),
        Coupling("vy", "syy", _kron(imx, f(dm_yM, dy))),
    )
    strain_couplings = (
        Coupling("sxx", "vx", _kron(f(dn_xM, dx), imy)),
        Coupling("syy", "vy", _kron(imx, f(dn_yM, dy))),
        Coupling("sxy", "vy", _kron(f(dm_xN, dx), iny)),
        Coupling("sxy", "vx", _kron(inx, f(dm_yN, dy))),
    )

    normal_w = _outer_weights(amx, amy)
    shear_constrained = (
        _boundary_mask((nx, ny)) if bc_mode is BCMode.STRONG else np.zeros(nx * ny, bool)
    )
    variables = {
        "vx": Variable("vx", VariableKind.VELOCITY, ("N", "M"), (xn, ym),
                       _outer_weights(anx, amy), np.zeros(nx * my, bool)),
        "vy": Variable("vy", VariableKind.VELOCITY, ("M", "N"), (xm, yn),
                       _outer_weights(amx, any_), np.zeros(mx * ny, bool)),
        "sxx": Variable("sxx", VariableKind.STRESS, ("M", "M"), (xm, ym),
                        normal_w, np.zeros(mx * my, bool)),
        "syy": Variable("syy", VariableKind.STRESS, ("M", "M"), (xm, ym),
                        normal_w.copy(), np.zeros(mx * my, bool)),
        "sxy": Variable("sxy", VariableKind.STRESS, ("N", "N"), (xn, yn),
                        _outer_weights(anx, any_), shear_constrained),
    }

    density = {
        "vx": medium.sample("rho", (xn, ym)),
        "vy": medium.sample("rho", (xm, yn)),
    }
    if any(np.any(r <= 0) for r in density.values()):
        raise AssemblyError("Invalid medium: rho must be > 0 everywhere")
    law = IsotropicElasticLaw(
        lam_normal=medium.sample("lam", (xm, ym)),
        mu_normal=medium.sample("mu", (xm, ym)),
        mu_shear=medium.sample("mu", (xn, yn)),
    )

    system = SemiDiscreteSystem(
        equation=Equation.ELASTIC2D,
        bc_mode=bc_mode,
        spacing=(float(dx), float(dy)),
        origin=(float(origin[0]), float(origin[1])),
        n_counts=(nx, ny),
        variables=variables,
        velocity_couplings=velocity_couplings,
        strain_couplings=strain_couplings,
        density=density,
        law=law,
        max_wave_speed=law.max_wave_speed(medium.sample("rho", (xm, ym))),
        metadata={"variant_N": setx_N.variant.value, "variant_M": setx_M.variant.value},
    )
    logger.info(f"Assembled {system.describe()} with {system.unknowns} unknowns")
    return system


def elastic_operator_sets(
    n_x: int, n_y: int, bc_mode: BCMode
) -> Tuple[OperatorSet1D, OperatorSet1D, OperatorSet1D, OperatorSet1D]:
    """The (x/N, x/M, y/N, y/M) sets each imposition mode is built from."""
    if BCMode(bc_mode) is BCMode.STRONG:
        variant = OperatorVariant.INTERTWINED
        xN = apply_strong_reset(build_operator_set(variant, n_x), True, True)
        yN = apply_strong_reset(build_operator_set(variant, n_y), True, True)
        return xN, build_operator_set(variant, n_x), yN, build_operator_set(variant, n_y)
    variant = OperatorVariant.EXTRAPOLATING
    x, y = build_operator_set(variant, n_x), build_operator_set(variant, n_y)
    return x, x, y, y

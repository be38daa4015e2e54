"""Spectral radius of the semi-discrete operator via a symmetric eigenproblem.

Eliminating the stresses gives H dV^2/dt^2 = -D^T K D V, with H the
density-weighted velocity norm, D the stacked strain operator and K the
norm-weighted stiffness. The spectral radius of the first-order system is
sqrt(lambda_max) of W = H^{-1/2} D^T K D H^{-1/2}.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from ..assembly import Equation, SemiDiscreteSystem
from ..exceptions import EigensolverError
from ..sbp_core import INTERIOR_STENCIL, as_float

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4000
RESIDUAL_TOLERANCE = 1e-12


@dataclass
class SpectralReport:
    """Spectral radius of one system, optionally scaled by a Courant number."""
    description: str
    dx: float
    spectral_radius: float
    residual: float
    solver: str
    min_eigenvalue: Optional[float] = None
    courant: Optional[float] = None

    @property
    def scaled_radius(self) -> Optional[float]:
        if self.courant is None:
            return None
        return scaled_radius(self, self.courant, self.dx)

    @property
    def cfl_limit(self) -> float:
        return cfl_from_spectrum(self)


def reduced_operator(system: SemiDiscreteSystem) -> sparse.csr_matrix:
    """Symmetric matrix W whose largest eigenvalue is the squared spectral radius."""
    velocity_names = system.velocity_names
    stress_names = system.stress_names
    blocks = [[None for _ in velocity_names] for _ in stress_names]
    for coupling in system.strain_couplings:
        i = stress_names.index(coupling.target)
        j = velocity_names.index(coupling.source)
        blocks[i][j] = coupling.op if blocks[i][j] is None else blocks[i][j] + coupling.op
    for i, name in enumerate(stress_names):
        for j, vname in enumerate(velocity_names):
            if blocks[i][j] is None:
                blocks[i][j] = sparse.csr_matrix(
                    (system.variables[name].size, system.variables[vname].size)
                )
    strain = sparse.bmat(blocks, format="csr")
    stiffness = system.law.stiffness_form(system.weights, stress_names)
    h = np.concatenate(
        [system.density[n] * system.variables[n].weights for n in velocity_names]
    )
    h_inv_sqrt = sparse.diags(1.0 / np.sqrt(h))
    w = h_inv_sqrt @ (strain.T @ (stiffness @ strain)) @ h_inv_sqrt
    return sparse.csr_matrix(0.5 * (w + w.T))


def _largest_eigenpair(w: sparse.spmatrix) -> tuple:
    n = w.shape[0]
    if n <= DENSE_LIMIT:
        values, vectors = linalg.eigh(w.toarray())
        logger.debug(f"Dense eigh on {n}x{n}")
        return values[-1], vectors[:, -1], float(values[0]), "dense"
    try:
        values, vectors = eigsh(w, k=1, which="LA", tol=0)
    except ArpackNoConvergence as e:
        raise EigensolverError(f"ARPACK did not converge on a {n}x{n} problem") from e
    logger.debug(f"ARPACK eigsh on {n}x{n}")
    return values[0], vectors[:, 0], None, "arpack"


def spectral_radius(
    system: SemiDiscreteSystem,
    courant: Optional[float] = None,
    tolerance: float = RESIDUAL_TOLERANCE,
) -> SpectralReport:
    """Largest imaginary-axis eigenvalue magnitude of the semi-discrete system.

    Raises:
        EigensolverError: If the eigensolver fails, the residual
            ||W v - lambda v|| / lambda exceeds ``tolerance``, or the system
            is elastic (its CFL limit is probed instead).
    """
    if system.equation is Equation.ELASTIC2D:
        raise EigensolverError("Spectral radius is not computed for elastic systems; use the CFL probe")
    w = reduced_operator(system)
    lam, vec, lam_min, solver = _largest_eigenpair(w)
    if not lam > 0:
        raise EigensolverError(f"Largest eigenvalue {lam} is not positive")
    residual = float(np.linalg.norm(w @ vec - lam * vec) / (lam * np.linalg.norm(vec)))
    if residual > tolerance:
        raise EigensolverError(f"Eigen residual {residual:.3e} exceeds {tolerance:.0e}")
    report = SpectralReport(
        description=system.describe(),
        dx=system.spacing[0],
        spectral_radius=float(np.sqrt(lam)),
        residual=residual,
        solver=solver,
        min_eigenvalue=lam_min,
        courant=courant,
    )
    logger.info(f"Spectral radius {report.spectral_radius:.12f} for {report.description}")
    return report


def scaled_radius(report: SpectralReport, courant: float, dx: float) -> float:
    """spectral_radius * C * dx; leapfrog is stable iff this is <= 2."""
    return report.spectral_radius * courant * dx


def cfl_from_spectrum(report: SpectralReport) -> float:
    """Largest Courant number with scaled radius <= 2."""
    return 2.0 / (report.spectral_radius * report.dx)


def periodic_spectral_radius(cells: int, dx: float) -> SpectralReport:
    """Reference radius of the interior stencil on a periodic grid of ``cells`` cells."""
    first_column = np.zeros(cells)
    stencil = as_float(np.array(INTERIOR_STENCIL, dtype=object))
    # row i uses columns i-1 .. i+2
    for offset, value in zip((-1, 0, 1, 2), stencil):
        first_column[(-offset) % cells] += value
    d = linalg.circulant(first_column) / dx
    values, vectors = linalg.eigh(d.T @ d)
    lam, vec = values[-1], vectors[:, -1]
    residual = float(np.linalg.norm(d.T @ (d @ vec) - lam * vec) / lam)
    return SpectralReport(
        description=f"periodic cells={cells}",
        dx=dx,
        spectral_radius=float(np.sqrt(lam)),
        residual=residual,
        solver="dense",
        min_eigenvalue=float(values[0]),
    )


def format_spectral_table(reports: Sequence[SpectralReport]) -> str:
    """Aligned text table: dx, radius, Courant, scaled radius."""
    header = f"{'dx':>12}  {'radius':>20}  {'C':>8}  {'scaled':>16}"
    lines: List[str] = [header]
    for r in reports:
        courant = "" if r.courant is None else f"{r.courant:.6f}"
        scaled = "" if r.scaled_radius is None else f"{r.scaled_radius:.12f}"
        lines.append(f"{r.dx:>12.8f}  {r.spectral_radius:>20.12f}  {courant:>8}  {scaled:>16}")
    return "\n".join(lines)


def spectral_rows(reports: Sequence[SpectralReport]) -> List[list]:
    """CSV rows ``dx,radius,courant,scaled,residual``."""
    rows = []
    for r in reports:
        rows.append([
            r.dx,
            r.spectral_radius,
            "" if r.courant is None else r.courant,
            "" if r.scaled_radius is None else r.scaled_radius,
            r.residual,
        ])
    return rows

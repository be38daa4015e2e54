"""Exact-rational staggered SBP operator sets in 1D.

Every higher-dimensional operator in the package is built from the sets
constructed here. Matrices are stored unscaled (unit grid spacing) as numpy
object arrays of ``fractions.Fraction`` so identities can be checked bit-exactly;
floating point enters only through :meth:`OperatorSet1D.scaled`.

Grid convention (x_L = 0, unit spacing):

* N-grid: x_j = j, j = 0..n_count-1 (both boundaries included)
* M-grid: x_j = j + 1/2, j = 0..m_count-1 (boundaries excluded)
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .exceptions import AccuracyError, OperatorSizeError, OperatorStructureError

logger = logging.getLogger(__name__)

# =============================================================================
# Coefficient Tables (unit spacing, left boundary; right side is mirrored)
# =============================================================================

MIN_N_COUNT = 9

F = Fraction

INTERIOR_STENCIL: Tuple[Fraction, ...] = (F(1, 24), F(-9, 8), F(9, 8), F(-1, 24))

AM_HEAD: Tuple[Fraction, ...] = (F(13, 12), F(7, 8), F(25, 24))
AN_HEAD: Tuple[Fraction, ...] = (F(7, 18), F(9, 8), F(1), F(71, 72))

# Rows of DN (m x n) inside the left boundary block
DN_LEFT_ROWS: Tuple[Tuple[Fraction, ...], ...] = (
    (F(-79, 78), F(27, 26), F(-1, 26), F(1, 78)),
    (F(2, 21), F(-9, 7), F(9, 7), F(-2, 21)),
    (F(1, 75), F(0), F(-27, 25), F(83, 75), F(-1, 25)),
)

# Rows of DM (n x m) inside the left boundary block, extrapolating variant
DM_LEFT_ROWS: Tuple[Tuple[Fraction, ...], ...] = (
    (F(-2), F(3), F(-1)),
    (F(-1), F(1)),
    (F(1, 24), F(-9, 8), F(9, 8), F(-1, 24)),
    (F(-1, 71), F(6, 71), F(-83, 71), F(81, 71), F(-3, 71)),
)

# Intertwined sets truncate the surface point out of the first DM row
INTERTWINED_DM_ROW0: Tuple[Fraction, ...] = (F(79, 28), F(-3, 14), F(-1, 28))
SURFACE_COEFFICIENT = F(-18, 7)

EXTRAPOLATING_Q_ROW0: Tuple[Fraction, ...] = (F(-15, 8), F(5, 4), F(-3, 8))

DM_BOUNDARY_ROWS = len(DM_LEFT_ROWS)
DN_BOUNDARY_ROWS = len(DN_LEFT_ROWS)

BOUNDARY_MIN_DEGREE = 2
INTERIOR_MIN_DEGREE = 4
MAX_TESTED_DEGREE = 4


class OperatorVariant(Enum):
    """Boundary closure family of a 1D operator set."""
    EXTRAPOLATING = "extrapolating"
    INTERTWINED = "intertwined"


# =============================================================================
# Rational array helpers
# =============================================================================

def rational_zeros(shape) -> np.ndarray:
    """Object array of exact zeros."""
    out = np.empty(shape, dtype=object)
    out.fill(F(0))
    return out


def rational_identity(n: int) -> np.ndarray:
    """Exact n x n identity."""
    out = rational_zeros((n, n))
    for i in range(n):
        out[i, i] = F(1)
    return out


def is_zero(arr: np.ndarray) -> bool:
    """True when every entry is exactly zero."""
    return all(value == 0 for value in np.asarray(arr, dtype=object).ravel())


def rational_equal(a: np.ndarray, b: np.ndarray) -> bool:
    """Exact entrywise equality of two rational arrays."""
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    if a.shape != b.shape:
        return False
    return all(x == y for x, y in zip(a.ravel(), b.ravel()))


def as_float(arr: np.ndarray) -> np.ndarray:
    """Convert a rational array to float64."""
    return np.asarray(arr, dtype=object).astype(np.float64)


def as_csr(arr: np.ndarray, scale: float = 1.0) -> sparse.csr_matrix:
    """Convert a rational matrix to a scaled float CSR matrix."""
    dense = as_float(arr) * scale
    matrix = sparse.csr_matrix(dense)
    matrix.eliminate_zeros()
    return matrix


def format_rational(value: Fraction) -> str:
    """Render a rational as ``p/q`` (denominator always shown)."""
    value = F(value)
    return f"{value.numerator}/{value.denominator}"


# =============================================================================
# Operator set
# =============================================================================

@dataclass(frozen=True)
class ScaledOperators:
    """Floating-point operators for a given grid spacing."""
    dx: float
    AM: np.ndarray
    AN: np.ndarray
    DN: sparse.csr_matrix
    DM: sparse.csr_matrix
    PL: Optional[np.ndarray]
    PR: Optional[np.ndarray]


@dataclass(frozen=True, eq=False)
class OperatorSet1D:
    """Norm and difference matrices for one staggered 1D grid pair.

    Attributes:
        variant: Boundary closure family.
        n_count: Number of N-grid points (both boundaries included).
        AM: Diagonal of the M-grid norm matrix (length m_count).
        AN: Diagonal of the N-grid norm matrix (length n_count).
        DN: m_count x n_count difference matrix, N values to M derivatives.
        DM: n_count x m_count difference matrix, M values to N derivatives.
        PL, PR: Boundary projection vectors (length m_count), or None when
            the set has no boundary terms to project (Q rows vanish).
        reset_left, reset_right: Whether the strong reset has been applied.
        dx: Grid spacing used by :meth:`scaled`.
    """
    variant: OperatorVariant
    n_count: int
    AM: np.ndarray
    AN: np.ndarray
    DN: np.ndarray
    DM: np.ndarray
    PL: Optional[np.ndarray] = None
    PR: Optional[np.ndarray] = None
    reset_left: bool = False
    reset_right: bool = False
    dx: float = 1.0

    @property
    def m_count(self) -> int:
        return self.n_count - 1

    @property
    def is_reset(self) -> bool:
        return self.reset_left or self.reset_right

    def grid_n(self, x_left: float = 0.0) -> np.ndarray:
        """N-grid coordinates for this set's spacing."""
        return x_left + np.arange(self.n_count) * self.dx

    def grid_m(self, x_left: float = 0.0) -> np.ndarray:
        """M-grid coordinates for this set's spacing."""
        return x_left + (np.arange(self.m_count) + 0.5) * self.dx

    def with_spacing(self, dx: float) -> "OperatorSet1D":
        """Copy of this set carrying a different grid spacing."""
        if dx <= 0:
            raise ValueError(f"Grid spacing must be positive, got {dx}")
        return replace(self, dx=float(dx))

    def scaled(self) -> ScaledOperators:
        """Floating-point operators scaled by the set's grid spacing."""
        dx = self.dx
        return ScaledOperators(
            dx=dx,
            AM=as_float(self.AM) * dx,
            AN=as_float(self.AN) * dx,
            DN=as_csr(self.DN, 1.0 / dx),
            DM=as_csr(self.DM, 1.0 / dx),
            PL=None if self.PL is None else as_float(self.PL),
            PR=None if self.PR is None else as_float(self.PR),
        )

    def same_entries(self, other: "OperatorSet1D") -> bool:
        """Exact equality of every stored matrix (ignores variant label)."""
        return (
            self.n_count == other.n_count
            and rational_equal(self.AM, other.AM)
            and rational_equal(self.AN, other.AN)
            and rational_equal(self.DN, other.DN)
            and rational_equal(self.DM, other.DM)
        )

    def describe(self) -> str:
        resets = [side for side, flag in (("left", self.reset_left), ("right", self.reset_right)) if flag]
        reset_text = ",".join(resets) if resets else "none"
        return f"{self.variant.value} n={self.n_count} reset={reset_text}"


def _mirrored_diagonal(head: Sequence[Fraction], length: int) -> np.ndarray:
    diag = np.empty(length, dtype=object)
    diag.fill(F(1))
    for i, value in enumerate(head):
        diag[i] = value
        diag[length - 1 - i] = value
    return diag


def _fill_banded(
    rows: int,
    cols: int,
    left_rows: Sequence[Sequence[Fraction]],
    interior_offset: int,
) -> np.ndarray:
    """Fill boundary blocks, mirror them, and put the interior stencil between.

    Interior row i uses columns i + interior_offset .. i + interior_offset + 3.
    """
    mat = rational_zeros((rows, cols))
    block = len(left_rows)
    for i, row in enumerate(left_rows):
        for j, value in enumerate(row):
            mat[i, j] = value
            mat[rows - 1 - i, cols - 1 - j] = -value
    for i in range(block, rows - block):
        for k, value in enumerate(INTERIOR_STENCIL):
            mat[i, i + interior_offset + k] = value
    return mat


def build_operator_set(variant: OperatorVariant, n_count: int) -> OperatorSet1D:
    """Build the unscaled operator set for ``n_count`` N-grid points.

    Args:
        variant: Extrapolating (weak-imposition family) or Intertwined
            (truncated, used on the stress-on-M axes of the elastic layout).
        n_count: Number of N-grid points, at least :data:`MIN_N_COUNT`.

    Returns:
        OperatorSet1D with unit spacing and no resets.

    Raises:
        OperatorSizeError: If ``n_count`` is too small for the boundary blocks.
    """
    variant = OperatorVariant(variant)
    if n_count < MIN_N_COUNT:
        raise OperatorSizeError(
            f"Invalid n_count {n_count}. Must be >= {MIN_N_COUNT} so boundary blocks do not overlap"
        )
    m_count = n_count - 1

    dm_rows = list(DM_LEFT_ROWS)
    if variant is OperatorVariant.INTERTWINED:
        dm_rows[0] = INTERTWINED_DM_ROW0

    op = OperatorSet1D(
        variant=variant,
        n_count=n_count,
        AM=_mirrored_diagonal(AM_HEAD, m_count),
        AN=_mirrored_diagonal(AN_HEAD, n_count),
        DN=_fill_banded(m_count, n_count, DN_LEFT_ROWS, interior_offset=-1),
        DM=_fill_banded(n_count, m_count, dm_rows, interior_offset=-2),
    )
    pl, pr = _try_projection(op)
    logger.debug(f"Built {variant.value} operator set with n_count={n_count}")
    return replace(op, PL=pl, PR=pr)


def apply_strong_reset(op: OperatorSet1D, left: bool, right: bool) -> OperatorSet1D:
    """Zero the DM row and DN column of each requested boundary.

    Resetting a side that is already reset is a no-op.
    """
    DM = op.DM.copy()
    DN = op.DN.copy()
    if left:
        DM[0, :] = F(0)
        DN[:, 0] = F(0)
    if right:
        DM[-1, :] = F(0)
        DN[:, -1] = F(0)
    reset = replace(
        op,
        DM=DM,
        DN=DN,
        reset_left=op.reset_left or left,
        reset_right=op.reset_right or right,
    )
    pl, pr = _try_projection(reset)
    return replace(reset, PL=pl, PR=pr)


def compute_q(op: OperatorSet1D) -> np.ndarray:
    """Return Q = AN DM + (AM DN)^T in exact arithmetic (n_count x m_count)."""
    return op.AN[:, None] * op.DM + (op.AM[:, None] * op.DN).T


def projection_vectors(op: OperatorSet1D) -> Tuple[np.ndarray, np.ndarray]:
    """Boundary projection vectors PL = -Q[0]^T and PR = Q[-1]^T.

    Raises:
        OperatorStructureError: If Q has nonzero interior rows, or the
            boundary rows do not reproduce constants (reset or truncated sets).
    """
    Q = compute_q(op)
    bad_rows = [i for i in range(1, op.n_count - 1) if not is_zero(Q[i])]
    if bad_rows:
        raise OperatorStructureError(
            f"Q of {op.describe()} has nonzero interior rows {bad_rows[:5]}; unsuitable for SAT"
        )
    PL = -Q[0, :]
    PR = Q[-1, :].copy()
    if sum(PL) != 1 or sum(PR) != 1:
        raise OperatorStructureError(
            f"Boundary rows of Q for {op.describe()} do not form a consistent projection"
        )
    return PL, PR


def _try_projection(op: OperatorSet1D) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    try:
        return projection_vectors(op)
    except OperatorStructureError:
        return None, None


# =============================================================================
# Polynomial exactness
# =============================================================================

@dataclass
class AccuracyReport:
    """Polynomial degree reproduced by each difference-matrix row."""
    set_description: str
    dm_degrees: List[int] = field(default_factory=list)
    dn_degrees: List[int] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def min_boundary_degree(self) -> int:
        boundary = self.dm_degrees[:DM_BOUNDARY_ROWS] + self.dn_degrees[:DN_BOUNDARY_ROWS]
        return min(boundary)


def _row_degree(
    weights: Sequence[Fraction], points: Sequence[Fraction], target: Fraction
) -> int:
    """Highest k <= MAX_TESTED_DEGREE such that all monomials up to x^k differentiate exactly."""
    degree = -1
    for k in range(MAX_TESTED_DEGREE + 1):
        approx = sum((w * p**k for w, p in zip(weights, points)), F(0))
        exact = k * target ** (k - 1) if k > 0 else F(0)
        if approx != exact:
            break
        degree = k
    return degree


def verify_accuracy(op: OperatorSet1D, raise_on_failure: bool = True) -> AccuracyReport:
    """Check every DN and DM row against monomials 1, x, .., x^4.

    Reset sets are checked through their unreset base stencils, since reset
    rows carry the boundary condition rather than a derivative. For the
    intertwined DM end rows the truncated surface coefficient is reinstated
    at the conceptual surface point before testing.

    Raises:
        AccuracyError: If any row falls below its contract and
            ``raise_on_failure`` is set.
    """
    base = build_operator_set(op.variant, op.n_count) if op.is_reset else op
    n, m = base.n_count, base.m_count
    n_points = [F(j) for j in range(n)]
    m_points = [F(2 * j + 1, 2) for j in range(m)]
    report = AccuracyReport(set_description=op.describe())

    for i in range(n):
        cols = [j for j in range(m) if base.DM[i, j] != 0]
        weights = [base.DM[i, j] for j in cols]
        points = [m_points[j] for j in cols]
        if base.variant is OperatorVariant.INTERTWINED and i in (0, n - 1):
            surface = F(0) if i == 0 else F(n - 1)
            sign = 1 if i == 0 else -1
            weights = [sign * SURFACE_COEFFICIENT] + weights
            points = [surface] + points
        degree = _row_degree(weights, points, n_points[i])
        report.dm_degrees.append(degree)
        boundary = i < DM_BOUNDARY_ROWS or i >= n - DM_BOUNDARY_ROWS
        required = BOUNDARY_MIN_DEGREE if boundary else INTERIOR_MIN_DEGREE
        if degree < required:
            report.failures.append(f"DM row {i}: degree {degree} < {required}")

    for i in range(m):
        cols = [j for j in range(n) if base.DN[i, j] != 0]
        degree = _row_degree([base.DN[i, j] for j in cols], [n_points[j] for j in cols], m_points[i])
        report.dn_degrees.append(degree)
        boundary = i < DN_BOUNDARY_ROWS or i >= m - DN_BOUNDARY_ROWS
        required = BOUNDARY_MIN_DEGREE if boundary else INTERIOR_MIN_DEGREE
        if degree < required:
            report.failures.append(f"DN row {i}: degree {degree} < {required}")

    if report.failures and raise_on_failure:
        raise AccuracyError(f"{op.describe()}: " + "; ".join(report.failures))
    return report


# =============================================================================
# Invariant ledger
# =============================================================================

def check_operator_invariants(op: OperatorSet1D) -> List[str]:
    """Run every exact identity the operator set must satisfy.

    Returns:
        Human-readable descriptions of failed identities (empty when all pass).
    """
    failures: List[str] = []
    n, m = op.n_count, op.m_count

    if sum(op.AM) != m:
        failures.append(f"quadrature: sum(AM) = {format_rational(sum(op.AM))}, expected {m}")
    if sum(op.AN) != n - 1:
        failures.append(f"quadrature: sum(AN) = {format_rational(sum(op.AN))}, expected {n - 1}")

    if not rational_equal(op.AM, op.AM[::-1]):
        failures.append("mirror: AM is not symmetric")
    if not rational_equal(op.AN, op.AN[::-1]):
        failures.append("mirror: AN is not symmetric")
    if op.reset_left == op.reset_right:
        if not rational_equal(op.DM[::-1, ::-1], -op.DM):
            failures.append("mirror: DM is not the negative mirror of itself")
        if not rational_equal(op.DN[::-1, ::-1], -op.DN):
            failures.append("mirror: DN is not the negative mirror of itself")

    other_variant = (
        OperatorVariant.INTERTWINED
        if op.variant is OperatorVariant.EXTRAPOLATING
        else OperatorVariant.EXTRAPOLATING
    )
    other = apply_strong_reset(
        build_operator_set(other_variant, n), op.reset_left, op.reset_right
    )
    if op.is_reset and not op.same_entries(
        apply_strong_reset(op, op.reset_left, op.reset_right)
    ):
        failures.append("reset: reapplying the strong reset changes the set")

    if not rational_equal(op.AM, other.AM) or not rational_equal(op.AN, other.AN):
        failures.append("shared norms: AM/AN differ between variants")
    if not rational_equal(op.DN, other.DN):
        failures.append("shared DN: DN differs between variants")

    Q = compute_q(op)
    for i in range(1, n - 1):
        if not is_zero(Q[i]):
            failures.append(f"Q ledger: interior row {i} is nonzero")
            break
    if op.reset_left and not is_zero(Q[0]):
        failures.append("Q ledger: row 0 nonzero after left reset")
    if op.reset_right and not is_zero(Q[-1]):
        failures.append("Q ledger: last row nonzero after right reset")
    if op.variant is OperatorVariant.INTERTWINED and not is_zero(Q):
        failures.append("Q ledger: intertwined Q is not zero")
    if op.variant is OperatorVariant.EXTRAPOLATING and not op.reset_left:
        expected = list(EXTRAPOLATING_Q_ROW0) + [F(0)] * (m - len(EXTRAPOLATING_Q_ROW0))
        if not rational_equal(Q[0], np.array(expected, dtype=object)):
            failures.append("Q ledger: first row differs from [-15/8, 5/4, -3/8, 0, ...]")

    report = verify_accuracy(op, raise_on_failure=False)
    logger.debug(
        f"{op.describe()}: boundary rows reach degree {report.min_boundary_degree()}"
    )
    failures.extend(report.failures)
    return failures


# =============================================================================
# Plain-text dump
# =============================================================================

DUMP_SECTIONS = ("AM", "AN", "DN", "DM", "Q", "PL", "PR")


def dump_operator_set(op: OperatorSet1D) -> str:
    """Render the set as plain-text tables of exact ``p/q`` entries.

    One section per matrix (AM, AN, DN, DM, Q, PL, PR), row-major, entries
    separated by a single space. Vectors occupy one line; missing projection
    vectors are written as ``none``.
    """
    matrices: Dict[str, Optional[np.ndarray]] = {
        "AM": op.AM,
        "AN": op.AN,
        "DN": op.DN,
        "DM": op.DM,
        "Q": compute_q(op),
        "PL": op.PL,
        "PR": op.PR,
    }
    lines = [
        f"# variant={op.variant.value} n_count={op.n_count} m_count={op.m_count} "
        f"reset_left={str(op.reset_left).lower()} reset_right={str(op.reset_right).lower()}"
    ]
    for name in DUMP_SECTIONS:
        lines.append(f"[{name}]")
        mat = matrices[name]
        if mat is None:
            lines.append("none")
            continue
        rows = mat if mat.ndim == 2 else mat[None, :]
        for row in rows:
            lines.append(" ".join(format_rational(value) for value in row))
    return "\n".join(lines) + "\n"


def parse_operator_dump(text: str) -> Dict[str, Optional[np.ndarray]]:
    """Parse the output of :func:`dump_operator_set` back into rational arrays.

    Vector sections come back one-dimensional.
    """
    sections: Dict[str, List[List[Fraction]]] = {}
    current: Optional[str] = None
    none_sections = set()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
            continue
        if current is None:
            raise ValueError(f"Entry outside of a section: {line!r}")
        if line == "none":
            none_sections.add(current)
            continue
        sections[current].append([F(token) for token in line.split()])

    parsed: Dict[str, Optional[np.ndarray]] = {}
    for name, rows in sections.items():
        if name in none_sections:
            parsed[name] = None
            continue
        arr = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
        for i, row in enumerate(rows):
            arr[i, :] = row
        parsed[name] = arr[0] if name in ("AM", "AN", "PL", "PR") else arr
    return parsed

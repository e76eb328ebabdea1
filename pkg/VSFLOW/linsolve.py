# This is free software, licensed under the LGPL v3. See the file "COPYING" for
# details.
"""Sparse linear solves of the Newton systems: level-of-fill incomplete LU
factorization ILU(k) in natural ordering and a right-preconditioned BiCGSTAB
iteration.

    result = solve_linear_system(matrix, rhs, LinearSolverConfig(ilu_level=0))
    result.solution, result.iterations, result.residual
"""

import dataclasses
import heapq
import logging
import typing

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from . import common
from .errors import ConfigurationError, FactorizationError, LinearSolverError

log = logging.getLogger(__name__)

#: pivots smaller than this, relative to the largest matrix entry, are zero
PIVOT_TOLERANCE = 1e-14
#: relative size of the diagonal shift used when a factorization is retried
DIAGONAL_SHIFT = 1e-8
#: |rho| below this (relative to the vector norms) counts as breakdown
BREAKDOWN_TOLERANCE = 1e-30


@dataclasses.dataclass(frozen=True)
class LinearSolverConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_iters: int = 5000
    ilu_level: int = 0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ConfigurationError(_("lin_rel_tol must be positive"))
        if not self.abs_tol > 0:
            raise ConfigurationError(_("lin_abs_tol must be positive"))
        if int(self.max_iters) < 1:
            raise ConfigurationError(_("lin_max_iters must be at least 1"))
        if int(self.ilu_level) < 0:
            raise ConfigurationError(_("ilu_level must not be negative"))


class BicgstabResult(typing.NamedTuple):
    solution: np.ndarray
    iterations: int
    residual: float


class LinearSolveResult(typing.NamedTuple):
    solution: np.ndarray
    iterations: int
    residual: float
    shifted: bool


class IluPreconditioner:
    """Incomplete factors L (unit lower triangular, stored without its
    diagonal) and U of a square matrix. Applying the preconditioner solves
    L U x = y."""

    def __init__(self, lower, upper, level):
        self.L = lower
        self.U = upper
        self.level = level

    @property
    def shape(self):
        return self.U.shape

    @property
    def nnz(self):
        return self.L.nnz + self.U.nnz

    def solve(self, y):
        y = np.asarray(y, dtype=float)
        if not self.L.nnz:
            z = y.copy()
        else:
            z = spla.spsolve_triangular(
                self.L + sps.identity(self.shape[0], format="csr"),
                y,
                lower=True,
                unit_diagonal=True,
            )
        return spla.spsolve_triangular(self.U, z, lower=False)

    __call__ = solve

    def as_operator(self):
        return spla.LinearOperator(self.shape, matvec=self.solve, dtype=float)


def _fill_row(i, row, levels, upper_rows, upper_levels, level):
    """Symbolic and numeric elimination of row i (IKJ variant). `row` and
    `levels` map column to value and fill level and are updated in place."""
    pending = [col for col in row if col < i]
    heapq.heapify(pending)
    done = set()
    while pending:
        k = heapq.heappop(pending)
        if k in done:
            continue
        done.add(k)
        cols, vals = upper_rows[k]
        factor = row[k] / vals[0]
        row[k] = factor
        lev_k = levels[k]
        for col, val, lev in zip(cols[1:], vals[1:], upper_levels[k][1:]):
            if col in row:
                row[col] -= factor * val
                levels[col] = min(levels[col], lev_k + lev + 1)
                continue
            fill = lev_k + lev + 1
            if fill > level:
                continue
            row[col] = -factor * val
            levels[col] = fill
            if col < i:
                heapq.heappush(pending, col)


def ilu_factorize(matrix, level=0):
    """ilu_factorize(matrix, level=0) -> IluPreconditioner
    Level based incomplete LU factorization. Entries of A have level 0, a fill
    entry created from the levels a and b gets level a + b + 1 and is dropped
    if that exceeds `level`. With level 0 the sparsity pattern of A is kept.
    Explicitly stored zeros of A are part of that pattern, so a Jacobian keeps
    its face stencil whatever the values of the current state.
    A zero pivot raises FactorizationError."""
    matrix = sps.csr_matrix(matrix, dtype=float)
    matrix.sum_duplicates()
    n, m = matrix.shape
    if n != m:
        raise ValueError("ILU factorization needs a square matrix, got %dx%d" % (n, m))
    level = int(level)
    scale = np.max(np.abs(matrix.data)) if matrix.nnz else 0.0
    lower = ([], [], [])
    upper = ([], [], [])
    upper_rows, upper_levels = [], []
    for i in range(n):
        start, end = matrix.indptr[i], matrix.indptr[i + 1]
        row = dict(zip(matrix.indices[start:end].tolist(), matrix.data[start:end]))
        row.setdefault(i, 0.0)
        levels = dict.fromkeys(row, 0)
        _fill_row(i, row, levels, upper_rows, upper_levels, level)
        pivot = row[i]
        if not np.isfinite(pivot) or abs(pivot) <= PIVOT_TOLERANCE * scale:
            raise FactorizationError(
                _("zero pivot in row %d of the incomplete factorization") % i, row=i
            )
        cols = sorted(row)
        upper_cols = [c for c in cols if c > i]
        upper_rows.append(
            (
                np.array([i] + upper_cols),
                np.array([pivot] + [row[c] for c in upper_cols]),
            )
        )
        upper_levels.append([0] + [levels[c] for c in upper_cols])
        for col in cols:
            target = lower if col < i else upper
            target[0].append(i)
            target[1].append(col)
            target[2].append(row[col])
    build = lambda t: sps.csr_matrix((t[2], (t[0], t[1])), shape=(n, n))
    factors = IluPreconditioner(build(lower), build(upper), level)
    log.debug(
        "ILU(%d) of %d unknowns: %d nonzeros in A, %d in L+U",
        level,
        n,
        matrix.nnz,
        factors.nnz,
    )
    return factors


def _breakdown(value, first, second):
    return abs(value) <= BREAKDOWN_TOLERANCE * first * second or not np.isfinite(value)


# pylint: disable=too-many-locals
def bicgstab_solve(matrix, rhs, preconditioner=None, config=None, x0=None):
    """bicgstab_solve(matrix, rhs, preconditioner=None, config=None, x0=None)
    Right-preconditioned BiCGSTAB: iterate on A M^-1 u = b, x = M^-1 u. Stops
    once ||b - Ax|| <= max(rel_tol*||b||, abs_tol); the returned residual norm
    is recomputed from the returned solution. Raises LinearSolverError on
    breakdown or when max_iters is exceeded."""
    config = config or LinearSolverConfig()
    matrix = sps.csr_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    n = matrix.shape[0]
    if matrix.shape != (n, n) or b.shape != (n,):
        raise ValueError(
            "dimension mismatch: matrix %s, right-hand side %s"
            % (matrix.shape, b.shape)
        )
    apply_m = preconditioner.solve if preconditioner is not None else np.copy
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return BicgstabResult(np.zeros(n), 0, 0.0)
    tol = max(config.rel_tol * norm_b, config.abs_tol)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - matrix @ x
    norm_r = np.linalg.norm(r)
    if norm_r <= tol:
        return BicgstabResult(x, 0, norm_r)
    r_star = r.copy()
    p = r.copy()
    rho = r_star @ r
    iterations = 0
    while iterations < config.max_iters:
        iterations += 1
        mp = apply_m(p)
        amp = matrix @ mp
        denominator = r_star @ amp
        if _breakdown(denominator, np.linalg.norm(r_star), np.linalg.norm(amp)):
            raise LinearSolverError(
                _("BiCGSTAB breakdown (r*.Ap = 0)"), iterations, norm_r
            )
        alpha = rho / denominator
        s = r - alpha * amp
        if np.linalg.norm(s) <= tol:
            x = x + alpha * mp
            true_norm = np.linalg.norm(b - matrix @ x)
            if true_norm <= tol:
                return BicgstabResult(x, iterations, true_norm)
            r = b - matrix @ x
            r_star, p, rho, norm_r = r.copy(), r.copy(), r @ r, true_norm
            continue
        ms = apply_m(s)
        ams = matrix @ ms
        ams_norm2 = ams @ ams
        if ams_norm2 == 0.0:
            raise LinearSolverError(
                _("BiCGSTAB breakdown (As = 0)"), iterations, norm_r
            )
        omega = (ams @ s) / ams_norm2
        x = x + alpha * mp + omega * ms
        r = s - omega * ams
        norm_r = np.linalg.norm(r)
        if norm_r <= tol:
            true_norm = np.linalg.norm(b - matrix @ x)
            if true_norm <= tol:
                return BicgstabResult(x, iterations, true_norm)
            r = b - matrix @ x
            r_star, p, rho, norm_r = r.copy(), r.copy(), r @ r, true_norm
            continue
        rho_new = r_star @ r
        if omega == 0.0 or _breakdown(rho_new, np.linalg.norm(r_star), norm_r):
            raise LinearSolverError(
                _("BiCGSTAB breakdown (rho = 0)"), iterations, norm_r
            )
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * amp)
    raise LinearSolverError(
        _("BiCGSTAB did not converge within %d iterations") % config.max_iters,
        iterations,
        float(np.linalg.norm(b - matrix @ x)),
    )


def shifted(matrix, shift):
    """Return matrix + shift * I."""
    return sps.csr_matrix(matrix) + shift * sps.identity(matrix.shape[0], format="csr")


def solve_linear_system(matrix, rhs, config=None):
    """Factorize with ILU(k), retrying once with a diagonal shift of
    1e-8*max|diag| on a zero pivot, and solve with BiCGSTAB. The shift only
    enters the preconditioner, the system solved is unchanged."""
    config = config or LinearSolverConfig()
    matrix = sps.csr_matrix(matrix, dtype=float)
    was_shifted = False
    try:
        preconditioner = ilu_factorize(matrix, config.ilu_level)
    except FactorizationError as error:
        shift = DIAGONAL_SHIFT * np.max(np.abs(matrix.diagonal()))
        log.warning("%s, retrying with a diagonal shift of %g", error.message, shift)
        common.WarningRegistry().register_warning(
            _("incomplete factorization needed a diagonal shift"),
            row=error.row,
            shift="%g" % shift,
        )
        preconditioner = ilu_factorize(shifted(matrix, shift), config.ilu_level)
        was_shifted = True
    result = bicgstab_solve(matrix, rhs, preconditioner, config)
    log.debug(
        "linear solve: %d iterations, residual %.3e", result.iterations, result.residual
    )
    return LinearSolveResult(*result, was_shifted)

"""Centralized simplex scheduler over the throughput-gap relaxation.

The relaxation asks for time fractions ``x`` over schedules and a gap
``gamma`` in [0, 1] with ``M x = (1 - gamma) a`` and ``1'x = 1``. A vertex is
fixed by an ``n x n`` basis ``B`` of schedules; it is improved by pricing a
new column with weights ``B^-T 1`` (an exact max-weight independent-set
call) and a one-parameter line search to the adjacent vertex.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .topology import InterferenceGraph, Schedule, max_weight_independent_set

ZERO_TOL = 1e-10
PIVOT_TOL = 1e-10


class SingularBasisError(ValueError):
    pass


class InfeasibleVertexError(ValueError):
    pass


class IterationCapError(RuntimeError):
    pass


class Basis:
    """``n`` schedule columns with an LU factorization of the matrix they form."""

    def __init__(self, columns):
        cols = np.array(columns, dtype=np.int64)
        if cols.ndim != 2 or cols.shape[0] != cols.shape[1]:
            raise ValueError("a basis needs n columns of length n")
        self.columns = cols  # columns[k] is the k-th basic schedule
        if np.any(cols.sum(axis=1) == 0):
            raise SingularBasisError("the empty schedule cannot be a basis column")
        with warnings.catch_warnings():
            # an exactly singular matrix warns; the pivot check below reports it
            warnings.simplefilter("ignore", LinAlgWarning)
            self._lu = lu_factor(cols.T.astype(float), check_finite=False)
        if np.min(np.abs(np.diag(self._lu[0]))) <= PIVOT_TOL:
            raise SingularBasisError("basis matrix is singular")

    @classmethod
    def identity(cls, n: int) -> "Basis":
        return cls(np.eye(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.columns.T.astype(float)

    def solve(self, rhs) -> np.ndarray:
        return lu_solve(self._lu, np.asarray(rhs, dtype=float), check_finite=False)

    def solve_transpose(self, rhs) -> np.ndarray:
        return lu_solve(self._lu, np.asarray(rhs, dtype=float), trans=1, check_finite=False)

    def index_of(self, sigma) -> int | None:
        hits = np.flatnonzero(np.all(self.columns == np.asarray(sigma), axis=1))
        return int(hits[0]) if len(hits) else None

    def schedules(self) -> list[Schedule]:
        return [Schedule(tuple(int(b) for b in c)) for c in self.columns]


@dataclass
class Vertex:
    x: np.ndarray
    gamma: float
    idle: float = 0.0  # unused airtime, only nonzero for underloaded inputs


@dataclass
class PivotReport:
    entering: np.ndarray
    step: float
    leaving: int | None  # basis position; None for the gamma bound or a null pivot
    gamma_bound: bool
    x_basis: np.ndarray  # basis weights at the new point, before relabelling
    x_new: float
    gamma: float
    delta_gamma: float

    @property
    def vertex(self) -> Vertex:
        """New vertex expressed on the swapped-in basis (leaving slot -> new column)."""
        if self.gamma_bound:
            raise ValueError("gamma reached zero; there is no basis swap to report")
        if self.leaving is None:  # null pivot
            return Vertex(self.x_basis.copy(), self.gamma)
        x = self.x_basis.copy()
        x[self.leaving] = self.x_new
        return Vertex(x, self.gamma)


def initial_vertex(a) -> tuple[Basis, Vertex]:
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("arrival rates must be nonnegative")
    total = a.sum()
    basis = Basis.identity(len(a))
    if total >= 1.0:
        return basis, Vertex(a / total, 1.0 - 1.0 / total)
    return basis, Vertex(a.copy(), 0.0, idle=1.0 - total)


def solve_vertex(basis: Basis, a) -> Vertex:
    """Solve the bordered system ``B x + gamma a = a``, ``1'x = 1``."""
    y = basis.solve(a)
    total = y.sum()
    if total <= ZERO_TOL:
        raise InfeasibleVertexError("1' B^-1 a must be positive")
    gamma = 1.0 - 1.0 / total
    x = y / total
    if np.any(x < -ZERO_TOL) or gamma < -ZERO_TOL or gamma > 1 + ZERO_TOL:
        raise InfeasibleVertexError(f"vertex outside the feasible region (gamma={gamma:.6g})")
    return Vertex(np.clip(x, 0.0, None), min(max(gamma, 0.0), 1.0))


def pricing_weights(basis: Basis) -> np.ndarray:
    """``c = B^-T 1`` so that the direction score of ``sigma`` is ``c . sigma``."""
    return basis.solve_transpose(np.ones(basis.n))


def direction_score(basis: Basis, sigma) -> float:
    return float(pricing_weights(basis) @ np.asarray(sigma, dtype=float))


def delta_gamma(gamma: float, score: float) -> float:
    """Rate of change of the gap when the new column's weight grows."""
    return (1.0 - gamma) * (1.0 - score)


def simplex_search(basis: Basis, g: InterferenceGraph) -> Schedule:
    return max_weight_independent_set(g, pricing_weights(basis))


def move_direction(basis: Basis, a, gamma: float, sigma) -> tuple[np.ndarray, float]:
    """Per-unit change ``(dx, dgamma)`` of the basic variables along a new column."""
    u = basis.solve(sigma)
    y = basis.solve(a)
    dgamma = (1.0 - u.sum()) / y.sum()
    return -u - dgamma * y, dgamma


def move_to_vertex(basis: Basis, vertex: Vertex, sigma_new, a) -> PivotReport:
    """Ratio test along the new column.

    The step is the largest value keeping every basic weight and the gap
    nonnegative. The gap bound wins ties; among basic weights the smallest
    position leaves. A column that is already basic gives a null pivot
    (step 0, nothing leaves).
    """
    sigma_new = np.asarray(sigma_new, dtype=np.int64)
    if basis.index_of(sigma_new) is not None:
        return PivotReport(sigma_new, 0.0, None, False, vertex.x.copy(), 0.0,
                           float(vertex.gamma), 0.0)
    dx, dgamma = move_direction(basis, a, vertex.gamma, sigma_new)
    step = np.inf
    leaving = None
    gamma_bound = False
    if dgamma < -ZERO_TOL:
        step = vertex.gamma / -dgamma
        gamma_bound = True
    elif dgamma > ZERO_TOL:
        step = (1.0 - vertex.gamma) / dgamma
    for k in np.flatnonzero(dx < -ZERO_TOL):
        ratio = vertex.x[k] / -dx[k]
        if ratio < step - ZERO_TOL:
            step, leaving, gamma_bound = ratio, int(k), False
    if not np.isfinite(step):
        raise RuntimeError("unbounded step along the entering column")
    if not gamma_bound and leaving is None:
        raise RuntimeError("gamma upper bound reached before any basic weight")
    step = max(step, 0.0)
    x_basis = vertex.x + step * dx
    gamma = vertex.gamma + step * dgamma
    if gamma_bound:
        gamma = 0.0
    else:
        x_basis[leaving] = 0.0
    return PivotReport(
        entering=sigma_new,
        step=float(step),
        leaving=leaving,
        gamma_bound=gamma_bound,
        x_basis=np.clip(x_basis, 0.0, None),
        x_new=float(step),
        gamma=float(min(max(gamma, 0.0), 1.0)),
        delta_gamma=float(dgamma),
    )


def pivot(basis: Basis, sigma_new, leaving: int) -> Basis:
    """Replace column ``leaving`` by ``sigma_new``; raises if that is singular."""
    cols = basis.columns.copy()
    cols[leaving] = np.asarray(sigma_new, dtype=np.int64)
    return Basis(cols)


@dataclass
class SimIteration:
    iteration: int
    gamma: float
    entering: str
    leaving: int | None
    step: float


@dataclass
class SimResult:
    basis: Basis
    x_basis: np.ndarray
    gamma: float
    iterations: int
    idle: float = 0.0
    entering: np.ndarray | None = None  # extra column when the gap hit zero mid-edge
    x_entering: float = 0.0
    optimal: bool = True  # False when no improving direction remained with gamma > 0
    log: list[SimIteration] = field(default_factory=list)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Schedules (rows) and time fractions of the returned solution."""
        cols = self.basis.columns
        x = self.x_basis
        if self.entering is not None:
            cols = np.vstack([cols, self.entering])
            x = np.append(x, self.x_entering)
        return cols, x

    def service_rates(self) -> np.ndarray:
        cols, x = self.support()
        return cols.T.astype(float) @ x

    def write_log(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "gamma", "entering", "leaving", "step"])
            for it in self.log:
                w.writerow([it.iteration, repr(it.gamma), it.entering,
                            "" if it.leaving is None else it.leaving, repr(it.step)])


def sim_run(g: InterferenceGraph, a, iteration_cap: int = 1000) -> SimResult:
    """Run the simplex scheduler until the gap closes or no column improves it."""
    a = np.asarray(a, dtype=float)
    if a.shape != (g.n,):
        raise ValueError(f"expected {g.n} arrival rates, got shape {a.shape}")
    basis, vertex = initial_vertex(a)
    result = SimResult(basis, vertex.x, vertex.gamma, 0, idle=vertex.idle)
    it = 0
    while vertex.gamma > ZERO_TOL:
        sigma = simplex_search(basis, g).array()
        score = direction_score(basis, sigma)
        if score <= 1.0 + ZERO_TOL:
            result.optimal = False
            break
        if it >= iteration_cap:
            raise IterationCapError(f"no convergence within {iteration_cap} iterations "
                                    f"(gamma={vertex.gamma:.6g})")
        it += 1
        report = move_to_vertex(basis, vertex, sigma, a)
        result.log.append(SimIteration(it, report.gamma, "".join(map(str, sigma)),
                                       report.leaving, report.step))
        if report.gamma_bound:
            return SimResult(basis, report.x_basis, 0.0, it, entering=sigma,
                             x_entering=report.x_new, log=result.log)
        basis = pivot(basis, sigma, report.leaving)
        vertex = report.vertex
    result.basis, result.x_basis, result.gamma, result.iterations = basis, vertex.x, vertex.gamma, it
    return result

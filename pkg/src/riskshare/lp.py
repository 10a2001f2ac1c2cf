"""Dense linear programming in standard form with certified outcomes.

Solves ``minimize c·v  subject to  A v = b, v >= 0`` with a two-phase
revised simplex method.  The solver is deliberately dense and simple:
instances produced elsewhere in the package stay at desk scale (at most a
few thousand variables), and exactness matters more than speed here.

Every ``Optimal`` outcome is certified before it is returned: primal
residual, complementary slackness and the duality gap are all checked
against the *original* data, and a violation raises
``NumericalBreakdown`` instead of returning a wrong answer.

Anti-cycling: pivoting starts under Dantzig's rule and switches to
Bland's rule permanently once ``3 * n_columns`` consecutive degenerate
steps have been taken.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import InputError, NumericalBreakdown

#: Entries smaller than this never serve as pivots.
PIVOT_TOL = 1e-11
#: Phase-1 objective above this means the system is infeasible.
FEAS_TOL = 1e-8
#: Rows whose eliminated coefficients all fall below this are dropped.
REDUNDANCY_TOL = 1e-10
#: Reduced costs above -OPT_TOL count as nonnegative (optimality).
OPT_TOL = 1e-9
#: A simplex step of length <= this counts as degenerate.
DEGENERATE_STEP_TOL = 1e-12
#: Complementary-slackness residual allowed on certified outcomes.
COMP_SLACK_TOL = 1e-7
#: Relative duality gap allowed on certified outcomes.
GAP_TOL = 1e-7


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """minimize c·v subject to A v = b, v >= 0."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2:
            raise InputError("A must be a 2-d array")
        m, n = A.shape
        if c.shape != (n,) or b.shape != (m,):
            raise InputError(
                f"inconsistent shapes: A is {A.shape}, c is {c.shape}, b is {b.shape}"
            )
        if n < 1:
            raise InputError("program needs at least one variable")
        for name, arr in (("c", c), ("A", A), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise InputError(f"non-finite entry in {name}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True, eq=False)
class LPOutcome:
    """Result of a solve; ``duals`` follow the original row order and signs."""

    status: LPStatus
    value: float
    solution: Optional[np.ndarray]
    duals: Optional[np.ndarray]
    pivots: int


#: Optional replacement engine; the internal simplex is the reference and
#: is used whenever this is None.
Engine = Callable[[LinearProgram], LPOutcome]
default_engine: Optional[Engine] = None


class _Breakdown(Exception):
    """Internal signal, converted to NumericalBreakdown at the boundary."""


def _simplex_iterations(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    basis: list[int],
) -> tuple[str, list[int], np.ndarray, np.ndarray, int]:
    """Run simplex to optimality/unboundedness from a feasible basis.

    Returns (status, basis, basic values, duals, pivot count) with status
    "optimal" or "unbounded".
    """
    m, n = A.shape
    pivots = 0
    degen_run = 0
    bland = False
    max_iter = 200 * (m + n) + 5000
    while True:
        if pivots > max_iter:
            raise _Breakdown(f"iteration limit {max_iter} exceeded")
        B = A[:, basis]
        try:
            invB = np.linalg.inv(B) if m else np.zeros((0, 0))
        except np.linalg.LinAlgError as exc:
            raise _Breakdown(f"singular working basis: {exc}") from exc
        xB = invB @ b
        y = invB.T @ c[basis]
        z = c - A.T @ y
        z[basis] = 0.0

        negative = np.flatnonzero(z < -OPT_TOL)
        if negative.size == 0:
            return "optimal", basis, xB, y, pivots
        if bland:
            candidates = negative  # already in ascending index order
        else:
            candidates = negative[np.argsort(z[negative], kind="stable")]

        pivot_done = False
        saw_tiny_column = False
        for j in candidates:
            d = invB @ A[:, j]
            eligible = np.flatnonzero(d > PIVOT_TOL)
            if eligible.size == 0:
                if d.size == 0 or np.max(d, initial=-np.inf) <= 1e-13:
                    return "unbounded", basis, xB, y, pivots
                saw_tiny_column = True  # positive entries exist but all < PIVOT_TOL
                continue
            ratios = xB[eligible] / d[eligible]
            theta = np.min(ratios)
            ties = eligible[ratios <= theta + DEGENERATE_STEP_TOL]
            # leave on the smallest variable index (Bland-compatible, deterministic)
            r = min(ties, key=lambda i: basis[i])
            if theta <= DEGENERATE_STEP_TOL:
                degen_run += 1
            else:
                degen_run = 0
            if not bland and degen_run >= 3 * n:
                bland = True
            basis[r] = int(j)
            pivots += 1
            pivot_done = True
            break
        if not pivot_done:
            if saw_tiny_column:
                raise _Breakdown(
                    f"all usable pivot entries below {PIVOT_TOL} and no alternative column"
                )
            return "optimal", basis, xB, y, pivots  # unreachable in practice


def _drive_out_artificials(
    A_struct: np.ndarray,
    b: np.ndarray,
    basis: list[int],
) -> tuple[np.ndarray, np.ndarray, list[int], list[int]]:
    """Replace basic artificials by structural columns or drop their rows.

    Works on the full ``[A | I]`` system so every artificial column stays an
    exact unit vector.  When a basic artificial's tableau row has no usable
    structural entry, the corresponding original row is redundant; that row
    and the artificial's basis slot are removed together, which keeps the
    remaining basis square and nonsingular.

    Returns the reduced (A, b), the all-structural basis, and the surviving
    original row indices.
    """
    m0, n = A_struct.shape
    A1 = np.hstack([A_struct, np.eye(m0)])
    rhs = b.copy()
    rows = list(range(m0))
    while True:
        art_slots = [k for k, j in enumerate(basis) if j >= n]
        if not art_slots:
            break
        B = A1[:, basis]
        try:
            invB = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise _Breakdown(f"singular basis while removing artificials: {exc}") from exc
        k = art_slots[0]
        row_vec = invB[k] @ A1[:, :n]
        for jb in basis:
            if jb < n:
                row_vec[jb] = 0.0
        cand = np.flatnonzero(np.abs(row_vec) > REDUNDANCY_TOL)
        if cand.size:
            basis[k] = int(cand[0])
        else:
            # the tableau row certifies a ~0 combination of rows in which the
            # artificial's own row has coefficient exactly 1, so drop that row
            pos = rows.index(basis[k] - n)
            A1 = np.delete(A1, pos, axis=0)
            rhs = np.delete(rhs, pos)
            del rows[pos]
            del basis[k]
    return A1[:, :n], rhs, basis, rows


def _phase_one(
    A: np.ndarray, b: np.ndarray
) -> tuple[float, list[int], np.ndarray, np.ndarray, int]:
    """Minimize the sum of artificial variables; returns value, basis, x, y, pivots."""
    m, n = A.shape
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    status, basis, xB, y, pivots = _simplex_iterations(A1, b, c1, basis)
    if status != "optimal":
        raise _Breakdown("phase 1 reported unbounded; objective is bounded below")
    x = np.zeros(n + m)
    x[basis] = xB
    value = float(c1 @ x)
    return value, basis, x, y, pivots


def _map_duals(
    y_reduced: Optional[np.ndarray],
    kept_rows: list[int],
    signs: np.ndarray,
    m_original: int,
) -> Optional[np.ndarray]:
    if y_reduced is None:
        return None
    y = np.zeros(m_original)
    for pos, row in enumerate(kept_rows):
        y[row] = y_reduced[pos] * signs[row]
    return y


def _certify(lp: LinearProgram, x: np.ndarray, y: np.ndarray, value: float) -> None:
    primal = float(np.max(np.abs(lp.A @ x - lp.b), initial=0.0))
    z = lp.c - lp.A.T @ y
    comp = float(np.max(np.abs(x * z), initial=0.0))
    gap = abs(float(lp.c @ x) - float(y @ lp.b))
    if primal > FEAS_TOL:
        raise _Breakdown(f"primal residual {primal:.3e} exceeds {FEAS_TOL}")
    if comp > COMP_SLACK_TOL:
        raise _Breakdown(f"complementary slackness residual {comp:.3e} exceeds {COMP_SLACK_TOL}")
    if gap > GAP_TOL * (1.0 + abs(value)):
        raise _Breakdown(f"duality gap {gap:.3e} exceeds tolerance")


def _dump_tableau(path: str, A: np.ndarray, b: np.ndarray, basis: list[int]) -> None:
    m = A.shape[0]
    B = A[:, basis] if m else np.zeros((0, 0))
    invB = np.linalg.inv(B) if m else np.zeros((0, 0))
    T = invB @ A
    rhs = invB @ b
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"v{j}" for j in range(A.shape[1])] + ["rhs"])
        for i in range(m):
            writer.writerow([repr(v) for v in T[i]] + [repr(rhs[i])])


def solve(
    lp: LinearProgram,
    engine: Optional[Engine] = None,
    dump_csv: Optional[str] = None,
) -> LPOutcome:
    """Solve the program; Optimal outcomes are certified, or an error is raised."""
    eng = engine if engine is not None else default_engine
    if eng is not None:
        return eng(lp)
    try:
        return _solve_internal(lp, dump_csv)
    except _Breakdown as exc:
        raise NumericalBreakdown(str(exc)) from exc


def _solve_internal(lp: LinearProgram, dump_csv: Optional[str]) -> LPOutcome:
    m0, n = lp.A.shape
    signs = np.where(lp.b < 0, -1.0, 1.0)
    A = lp.A * signs[:, None]
    b = lp.b * signs

    p1_value, basis, x1, y1, pivots1 = _phase_one(A, b)
    if p1_value > FEAS_TOL:
        duals = _map_duals(y1, list(range(m0)), signs, m0)
        return LPOutcome(LPStatus.INFEASIBLE, p1_value, None, duals, pivots1)

    A2, b2, basis, kept = _drive_out_artificials(A, b, basis)

    status, basis, xB, y, pivots2 = _simplex_iterations(A2, b2, lp.c.copy(), basis)
    pivots = pivots1 + pivots2
    if status == "unbounded":
        return LPOutcome(LPStatus.UNBOUNDED, float("-inf"), None, None, pivots)

    x = np.zeros(n)
    x[basis] = xB
    if float(np.min(x, initial=0.0)) < -FEAS_TOL:
        raise _Breakdown(f"negative basic value {np.min(x):.3e} after phase 2")
    np.clip(x, 0.0, None, out=x)
    value = float(lp.c @ x)
    duals = _map_duals(y, kept, signs, m0)
    assert duals is not None
    _certify(lp, x, duals, value)
    if dump_csv is not None:
        _dump_tableau(dump_csv, A2, b2, basis)
    return LPOutcome(LPStatus.OPTIMAL, value, x, duals, pivots)


def feasible(A: np.ndarray, b: np.ndarray) -> LPOutcome:
    """Phase-1 feasibility check of ``A v = b, v >= 0``.

    Returns Optimal with a feasible point when the residual objective comes
    out <= FEAS_TOL, otherwise Infeasible with the residual as the value.
    """
    lp = LinearProgram(c=np.zeros(np.asarray(A).shape[1]), A=A, b=b)
    m0, n = lp.A.shape
    signs = np.where(lp.b < 0, -1.0, 1.0)
    Af = lp.A * signs[:, None]
    bf = lp.b * signs
    try:
        value, basis, x1, y1, pivots = _phase_one(Af, bf)
    except _Breakdown as exc:
        raise NumericalBreakdown(str(exc)) from exc
    duals = _map_duals(y1, list(range(m0)), signs, m0)
    if value > FEAS_TOL:
        return LPOutcome(LPStatus.INFEASIBLE, value, None, duals, pivots)
    x = np.clip(x1[:n], 0.0, None)
    return LPOutcome(LPStatus.OPTIMAL, value, x, duals, pivots)

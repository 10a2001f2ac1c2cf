"""Maximal correlation against a baseline law and the comonotonicity gap.

``rho(X) = max E[X · Y~]`` over all couplings of ``L(X)`` with the baseline
``mu``.  On the line the maximum is attained by pairing quantiles in the
same order (comonotone rearrangement), so a sorted merge of the two atom
lists computes it exactly.  In higher dimension the coupling is found by
linear programming.

``rho`` is subadditive over components of an allocation; the nonnegative
defect ``sum_i rho(X_i) - rho(sum_i X_i)`` (the gap) vanishes exactly on
allocations whose components are simultaneously rearrangeable against
``mu``.  With an atomic baseline a zero gap is a consistency certificate,
not a proof, and is reported as such.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import lp
from .errors import DimensionMismatch, SolverFailure
from .measures import (
    BallConfig,
    Coords,
    DiscreteMeasure,
    JointLaw,
    marginal,
    sum_pushforward,
    validate_measure,
)

DEFAULT_TOL = 1e-8
#: Points per axis in the default baseline lattice.
_LATTICE_SIDE = 5


@dataclass(frozen=True, eq=False)
class CorrelationResult:
    """Optimal value together with a coupling attaining it."""

    value: float
    coupling: tuple[tuple[tuple[Coords, Coords], float], ...]

    def max_violation(self, xi: DiscreteMeasure, mu: DiscreteMeasure) -> float:
        """Defect of the result against its invariants, for auditing."""
        got = sum(
            w * float(np.dot(x, y)) for (x, y), w in self.coupling
        )
        worst = abs(got - self.value)
        left = validate_measure([(x, w) for (x, _), w in self.coupling], dim=xi.dim)
        right = validate_measure([(y, w) for (_, y), w in self.coupling], dim=mu.dim)
        for a, b in ((left, xi), (right, mu)):
            if a.size != b.size:
                return float("inf")
            for (ca, wa), (cb, wb) in zip(a.atoms, b.atoms):
                worst = max(worst, float(np.max(np.abs(np.subtract(ca, cb)))), abs(wa - wb))
        return worst


@dataclass(frozen=True, eq=False)
class GapReport:
    """Per-component maximal correlations against their joint counterpart."""

    rho_sum: float
    rho_total: float
    gap: float
    per_agent: tuple[float, ...]

    def comonotone_at(self, tol: float = DEFAULT_TOL) -> bool:
        """True when the gap is consistent with simultaneous rearrangeability."""
        return self.gap <= tol


def _sorted_merge(xi: DiscreteMeasure, mu: DiscreteMeasure):
    """Pair quantiles of the two laws in increasing order."""
    xs = sorted(((x[0], w) for x, w in xi.atoms))
    ys = sorted(((y[0], w) for y, w in mu.atoms))
    nx, ny = len(xs), len(ys)
    i = j = 0
    a, b = xs[0][1], ys[0][1]
    value = 0.0
    pairs: list[tuple[tuple[Coords, Coords], float]] = []
    while i < nx and j < ny:
        t = min(a, b)
        if t > 1e-15:
            value += t * xs[i][0] * ys[j][0]
            pairs.append((((xs[i][0],), (ys[j][0],)), t))
        a -= t
        b -= t
        if a <= 1e-15:
            i += 1
            a = xs[i][1] if i < nx else 0.0
        if b <= 1e-15:
            j += 1
            b = ys[j][1] if j < ny else 0.0
    return value, tuple(pairs)


def _lp_coupling(xi: DiscreteMeasure, mu: DiscreteMeasure):
    """Maximize sum pi_ij <x_i, y_j> over couplings, by linear programming."""
    n, m = xi.size, mu.size
    X, Y = xi.support_array(), mu.support_array()
    c = -(X @ Y.T).reshape(n * m)
    rows = []
    rhs = []
    for i in range(n):
        r = np.zeros(n * m)
        r[i * m : (i + 1) * m] = 1.0
        rows.append(r)
        rhs.append(xi.weights_array()[i])
    for j in range(m):
        r = np.zeros(n * m)
        r[j::m] = 1.0
        rows.append(r)
        rhs.append(mu.weights_array()[j])
    out = lp.solve(lp.LinearProgram(c=c, A=np.array(rows), b=np.array(rhs)))
    if out.status is not lp.LPStatus.OPTIMAL:
        raise SolverFailure(
            f"coupling program reported {out.status.value}; couplings always exist"
        )
    pi = out.solution.reshape(n, m)
    pairs = tuple(
        ((tuple(X[i]), tuple(Y[j])), float(pi[i, j]))
        for i in range(n)
        for j in range(m)
        if pi[i, j] > 1e-12
    )
    return -out.value, pairs


def max_correlation(
    xi: DiscreteMeasure, mu: DiscreteMeasure, tol: float = DEFAULT_TOL
) -> CorrelationResult:
    """Largest E[X · Y~] over couplings of ``xi`` with the baseline ``mu``."""
    if xi.dim != mu.dim:
        raise DimensionMismatch(f"dimension mismatch: {xi.dim} vs {mu.dim}")
    if xi.dim == 1:
        value, pairs = _sorted_merge(xi, mu)
    else:
        value, pairs = _lp_coupling(xi, mu)
    return CorrelationResult(value=float(value), coupling=pairs)


def default_baseline(dim: int, ball: Optional[BallConfig] = None) -> DiscreteMeasure:
    """Uniform law on a centered lattice of 5^dim points inside the ball.

    The per-axis extent is radius/sqrt(dim) so the lattice corners sit on
    the sphere; the result is a fixed, reproducible, non-degenerate
    baseline for gap computations.
    """
    ball = ball or BallConfig(radius=1.0)
    axis = np.linspace(-1.0, 1.0, _LATTICE_SIDE) * (ball.radius / np.sqrt(dim))
    center = ball.center_for(dim)
    atoms = [
        (tuple(center + np.array(pt)), 1.0 / _LATTICE_SIDE**dim)
        for pt in itertools.product(axis, repeat=dim)
    ]
    return validate_measure(atoms, dim=dim)


def comonotonicity_gap(
    gamma: JointLaw,
    mu: Optional[DiscreteMeasure] = None,
    tol: float = DEFAULT_TOL,
    ball: Optional[BallConfig] = None,
) -> GapReport:
    """Subadditivity defect of the maximal correlation across agents.

    A strictly positive gap refutes simultaneous comonotonicity relative to
    ``mu``; a gap within ``tol`` of zero is consistent with it.
    """
    if mu is None:
        mu = default_baseline(gamma.dim, ball)
    if mu.dim != gamma.dim:
        raise DimensionMismatch(f"dimension mismatch: {mu.dim} vs {gamma.dim}")
    per_agent = tuple(
        max_correlation(marginal(gamma, i), mu, tol).value for i in range(gamma.agents)
    )
    rho_total = max_correlation(sum_pushforward(gamma), mu, tol).value
    rho_sum = float(sum(per_agent))
    return GapReport(
        rho_sum=rho_sum,
        rho_total=rho_total,
        gap=rho_sum - rho_total,
        per_agent=per_agent,
    )

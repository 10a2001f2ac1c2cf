"""Dual potential evaluation and cutting-plane descent.

For a profile of agent costs ``psi`` and a baseline allocation law, the
objective

    J(psi) = E[ sum_i psi_i(X_i) ] - E[ (box)psi(sum_i X_i) ]

is nonnegative and vanishes exactly when the baseline already splits every
aggregate state optimally.  :func:`minimize_q` descends J inside the
quadratic-plus-max-affine family by adding affine cutting pieces, providing
an upper companion bound to the improvement statistic computed by
:mod:`riskshare.improve`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InputError, NumericalBreakdown
from .improve import default_radius
from .infconv import AgentProfile, StrictlyConvexProfile, share_point
from .measures import (
    BallConfig,
    Coords,
    DiscreteMeasure,
    JointLaw,
    marginal,
    sum_pushforward,
    validate_joint_law,
)

DEFAULT_TOL = 1e-8
MATCH_TOL = 1e-7  # atom-matching resolution for marginal discrepancies
DEFAULT_MAX_ITERS = 500
_STEP_GRID = tuple(2.0**k for k in range(-6, 7))
_NEGATIVE_J_FLOOR = -1e-9

SignedAtoms = tuple[tuple[Coords, float], ...]


@dataclass(frozen=True)
class QState:
    """A descent iterate: the potential, its objective, and diagnostics."""

    profile: StrictlyConvexProfile
    j: float
    gamma_psi: JointLaw
    marginal_discrepancies: tuple[SignedAtoms, ...]
    iterations: int
    hit_cap: bool
    j_history: tuple[float, ...]


def _default_ball(gamma0: JointLaw) -> BallConfig:
    return BallConfig(radius=default_radius(gamma0))


def _check_components(gamma0: JointLaw, ball: BallConfig) -> None:
    for xs, _ in gamma0.atoms:
        for x in xs:
            if not ball.contains(x):
                raise InputError(
                    f"allocation component {x} lies outside the admissible ball"
                )


def _check_shapes(profile: StrictlyConvexProfile, gamma0: JointLaw) -> None:
    if profile.dim != gamma0.dim:
        raise DimensionMismatch(
            f"profile dimension {profile.dim} != law dimension {gamma0.dim}"
        )
    if profile.n_agents != gamma0.agents:
        raise DimensionMismatch(
            f"profile has {profile.n_agents} agents, law has {gamma0.agents}"
        )


def _evaluate(
    profile: StrictlyConvexProfile,
    gamma0: JointLaw,
    m0: DiscreteMeasure,
    ball: BallConfig,
) -> tuple[float, JointLaw]:
    """J(profile) together with the induced sharing law of ``m0``."""
    first = math.fsum(
        w * math.fsum(profile.psi_value(i, np.asarray(x)) for i, x in enumerate(xs))
        for xs, w in gamma0.atoms
    )
    split_atoms = []
    second_terms = []
    for coords, w in m0.atoms:
        sp = share_point(profile, coords, ball)
        split_atoms.append((sp.shares, w))
        second_terms.append(
            w
            * math.fsum(
                profile.psi_value(i, np.asarray(y)) for i, y in enumerate(sp.shares)
            )
        )
    j = first - math.fsum(second_terms)
    if j < _NEGATIVE_J_FLOOR:
        raise NumericalBreakdown(
            f"objective evaluated to {j:.3e}; an optimal split was overestimated"
        )
    law = validate_joint_law(split_atoms, agents=gamma0.agents, dim=gamma0.dim)
    return j, law


def j_value(
    profile: StrictlyConvexProfile,
    gamma0: JointLaw,
    ball: Optional[BallConfig] = None,
) -> float:
    """Excess cost of the baseline over the optimal sharing of its aggregate."""
    _check_shapes(profile, gamma0)
    ball = ball if ball is not None else _default_ball(gamma0)
    _check_components(gamma0, ball)
    j, _ = _evaluate(profile, gamma0, sum_pushforward(gamma0), ball)
    return j


def _signed_diff(a: DiscreteMeasure, b: DiscreteMeasure) -> SignedAtoms:
    """Atoms of the signed measure ``a - b``, merged at MATCH_TOL resolution."""
    entries = [(x, w) for x, w in a.atoms] + [(x, -w) for x, w in b.atoms]
    entries.sort(key=lambda e: e[0])
    merged: list[list] = []
    for x, w in entries:
        if merged and all(
            abs(p - q) <= MATCH_TOL for p, q in zip(merged[-1][0], x)
        ):
            merged[-1][1] += w
        else:
            merged.append([x, w])
    return tuple((tuple(x), float(w)) for x, w in merged if abs(w) > 1e-12)


def _discrepancies(gamma0: JointLaw, law: JointLaw) -> tuple[SignedAtoms, ...]:
    return tuple(
        _signed_diff(marginal(gamma0, i), marginal(law, i))
        for i in range(gamma0.agents)
    )


def _piece_max(ag: AgentProfile, x: Coords) -> float:
    return max(
        sum(ak * xk for ak, xk in zip(a, x)) + b for a, b in ag.pieces
    )


def _best_cut_atoms(
    profile: StrictlyConvexProfile, disc: tuple[SignedAtoms, ...]
) -> list[tuple[int, Coords, float]]:
    """Per agent, the tangent cut with the best first-order decrease.

    Candidate cuts are tangents of the quadratic growth at atoms of the
    signed discrepancy; the decrease estimate integrates the cut's pointwise
    increase of psi_i against that discrepancy (the directional derivative
    of J).  Agents with no descending candidate are left out.
    """
    cuts = []
    for i, entries in enumerate(disc):
        ag = profile.agents[i]
        best = None
        for z, _ in entries:
            if all(c == 0.0 for c in z):
                continue
            half_nz = 0.5 * sum(c * c for c in z)
            der = 0.0
            for x, w in entries:
                lin = ag.eps * (sum(zc * xc for zc, xc in zip(z, x)) - half_nz)
                inc = lin - _piece_max(ag, x)
                if inc > 0.0:
                    der += w * inc
            if der < -1e-12 and (best is None or der < best[0]):
                best = (der, z)
        if best is not None:
            cuts.append((i, best[1], -best[0]))
    return cuts


def _with_cuts(
    profile: StrictlyConvexProfile,
    cuts: Sequence[tuple[int, Coords, float]],
    sigma: float,
) -> Optional[StrictlyConvexProfile]:
    """Add, per listed agent, the step-scaled tangent piece at its surplus atom.

    The piece sigma*eps_i*(z.y - |z|^2/2) is the tangent line of the
    quadratic growth at z with its slope scaled by sigma; it raises the cost
    beyond z (where the induced law over-allocates) more than at z itself.
    Returns None when every cut duplicates an existing piece.
    """
    agents = list(profile.agents)
    changed = False
    for i, z, _ in cuts:
        ag = agents[i]
        a = tuple(sigma * ag.eps * zk for zk in z)
        b = -sigma * ag.eps * 0.5 * sum(zk * zk for zk in z)
        duplicate = any(
            abs(pb - b) <= 1e-9 * (1.0 + abs(b))
            and all(
                abs(pa - av) <= 1e-9 * (1.0 + abs(av)) for pa, av in zip(p, a)
            )
            for p, pb in ag.pieces
        )
        if duplicate:
            continue
        agents[i] = AgentProfile(eps=ag.eps, pieces=ag.pieces + ((a, b),), quad=ag.quad)
        changed = True
    if not changed:
        return None
    return StrictlyConvexProfile(dim=profile.dim, agents=tuple(agents))


def minimize_q(
    gamma0: JointLaw,
    profile: Optional[StrictlyConvexProfile] = None,
    *,
    ball: Optional[BallConfig] = None,
    eps: Optional[Sequence[float]] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    target: Optional[float] = None,
    tol: float = DEFAULT_TOL,
) -> QState:
    """Descend J from ``profile`` (default: the pure quadratic costs).

    Each iteration adds one tangent cutting piece per agent at that agent's
    most over-weighted baseline atom, with the scale chosen by a doubling
    line search; a step is accepted only when J strictly decreases, so the
    history is non-increasing.  When ``target`` is given (e.g. the
    improvement statistic of the same instance) the descent stops as soon as
    J is within 1e-6 of it.  Hitting ``max_iters`` sets ``hit_cap`` on the
    returned state rather than raising.
    """
    p = gamma0.agents
    if profile is None:
        es = [1.0] * p if eps is None else [float(e) for e in eps]
        if len(es) != p:
            raise InputError(f"expected {p} cost weights, got {len(es)}")
        if any(not (e > 0.0) for e in es):
            raise InputError("cost weights must be positive")
        profile = StrictlyConvexProfile(
            dim=gamma0.dim, agents=tuple(AgentProfile(eps=e) for e in es)
        )
    _check_shapes(profile, gamma0)
    ball = ball if ball is not None else _default_ball(gamma0)
    _check_components(gamma0, ball)
    m0 = sum_pushforward(gamma0)

    j_cur, law_cur = _evaluate(profile, gamma0, m0, ball)
    history = [j_cur]
    stop_at = 1e-9 if target is None else max(target, 0.0) + 1e-6
    iterations = 0
    hit_cap = False
    for _ in range(max_iters):
        if j_cur <= stop_at:
            break
        disc = _discrepancies(gamma0, law_cur)
        if max((abs(w) for d in disc for _, w in d), default=0.0) <= 1e-9:
            break  # induced law matches the baseline: no descent direction
        cuts = _best_cut_atoms(profile, disc)
        if not cuts:
            break
        accept_below = j_cur - 1e-12 * (1.0 + abs(j_cur))
        best = None
        cut_sets = [cuts]
        if len(cuts) > 1:
            # fall back to one agent at a time, strongest estimate first
            for single in sorted(cuts, key=lambda c: -c[2]):
                cut_sets.append([single])
        for cut_set in cut_sets:
            for sigma in _STEP_GRID:
                trial = _with_cuts(profile, cut_set, sigma)
                if trial is None:
                    continue
                j_t, law_t = _evaluate(trial, gamma0, m0, ball)
                if best is None or j_t < best[0]:
                    best = (j_t, law_t, trial)
            if best is not None and best[0] < accept_below:
                break  # the joint cut already improves; skip the fallback
        iterations += 1
        if best is None or best[0] >= accept_below:
            break  # no step-scaled cut improves: local stall
        j_cur, law_cur, profile = best
        history.append(j_cur)
    else:
        hit_cap = j_cur > stop_at

    return QState(
        profile=profile,
        j=j_cur,
        gamma_psi=law_cur,
        marginal_discrepancies=_discrepancies(gamma0, law_cur),
        iterations=iterations,
        hit_cap=hit_cap,
        j_history=tuple(history),
    )

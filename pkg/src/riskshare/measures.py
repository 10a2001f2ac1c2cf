"""Finitely supported measures on R^d and joint allocation laws on (R^d)^p.

A measure is stored as a canonical tuple of ``(coords, weight)`` atoms:
weights are strictly positive and sum to one, atoms are pairwise distinct
(Euclidean distance > MERGE_TOL) and listed in lexicographic order, so two
equal laws compare equal as Python objects and serialize identically.

A joint law is the law of an allocation ``(Y_1, ..., Y_p)``: each atom is a
p-tuple of points in R^d.  ``marginal`` and ``sum_pushforward`` are the two
pushforwards the rest of the package consumes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InputError,
    NonPositiveWeight,
    WeightSumOutOfTolerance,
)

# Coordinates are plain tuples of floats; dedicated point classes would buy
# nothing at desk scale.
Coords = tuple[float, ...]

#: Atoms closer than this (Euclidean) are considered the same support point.
MERGE_TOL = 1e-12
#: Weight sums further than this from 1 are an error, not silently fixed.
WEIGHT_SUM_TOL = 1e-9


def _as_coords(raw: Sequence[float], dim: int | None = None) -> Coords:
    coords = tuple(float(c) for c in raw)
    if len(coords) < 1:
        raise DimensionMismatch("point must have dimension >= 1")
    if dim is not None and len(coords) != dim:
        raise DimensionMismatch(f"point has dimension {len(coords)}, expected {dim}")
    if not all(math.isfinite(c) for c in coords):
        raise InputError(f"non-finite coordinate in point {coords!r}")
    return coords


@dataclass(frozen=True)
class BallConfig:
    """Closed ball that must contain every individual share.

    ``center=None`` means the origin of whatever dimension is being checked.
    """

    radius: float
    center: Coords | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise InputError(f"ball radius must be positive, got {self.radius!r}")
        if self.center is not None:
            object.__setattr__(self, "center", _as_coords(self.center))

    def center_for(self, dim: int) -> np.ndarray:
        if self.center is None:
            return np.zeros(dim)
        if len(self.center) != dim:
            raise DimensionMismatch(
                f"ball center has dimension {len(self.center)}, expected {dim}"
            )
        return np.asarray(self.center)

    def contains(self, coords: Sequence[float], slack: float = 1e-9) -> bool:
        x = np.asarray(coords, dtype=float)
        return float(np.linalg.norm(x - self.center_for(x.size))) <= self.radius + slack


def _merge_weighted(
    items: list[tuple[Coords, float]], merge_tol: float = MERGE_TOL
) -> list[tuple[Coords, float]]:
    """Merge support points closer than ``merge_tol``, summing weights.

    Works on lexicographically sorted items; candidates for a merge always
    sit inside the window where the first coordinate differs by <= merge_tol,
    so the scan is near-linear.
    """
    items = sorted(items, key=lambda a: a[0])
    merged: list[tuple[Coords, float]] = []
    for coords, w in items:
        hit = None
        for k in range(len(merged) - 1, -1, -1):
            ref = merged[k][0]
            if coords[0] - ref[0] > merge_tol:
                break
            if math.dist(coords, ref) <= merge_tol:
                hit = k
                break
        if hit is None:
            merged.append((coords, w))
        else:
            merged[hit] = (merged[hit][0], merged[hit][1] + w)
    return merged


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure with finite support in R^dim, in canonical form."""

    dim: int
    atoms: tuple[tuple[Coords, float], ...]

    @property
    def size(self) -> int:
        return len(self.atoms)

    def support_array(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms], dtype=float).reshape(self.size, self.dim)

    def weights_array(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms], dtype=float)

    def mean(self) -> np.ndarray:
        return self.weights_array() @ self.support_array()

    def total_mass(self) -> float:
        return float(sum(a[1] for a in self.atoms))


def validate_measure(
    atoms: Iterable[tuple[Sequence[float], float]],
    dim: int | None = None,
    ball: BallConfig | None = None,
) -> DiscreteMeasure:
    """Canonicalize raw ``(coords, weight)`` pairs into a DiscreteMeasure.

    Duplicate support points (distance <= MERGE_TOL) are merged with weights
    summed.  The weight sum may be renormalized only when it is within
    WEIGHT_SUM_TOL of 1; larger drift raises WeightSumOutOfTolerance.
    """
    raw = list(atoms)
    if not raw:
        raise InputError("measure needs at least one atom")
    items: list[tuple[Coords, float]] = []
    for coords_raw, w_raw in raw:
        coords = _as_coords(coords_raw, dim)
        if dim is None:
            dim = len(coords)
        w = float(w_raw)
        if not math.isfinite(w) or w <= 0.0:
            raise NonPositiveWeight(f"atom weight must be > 0, got {w!r} at {coords!r}")
        items.append((coords, w))
    merged = _merge_weighted(items)
    total = math.fsum(w for _, w in merged)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumOutOfTolerance(
            f"atom weights sum to {total!r}, off from 1 by more than {WEIGHT_SUM_TOL}"
        )
    if total != 1.0:
        merged = [(c, w / total) for c, w in merged]
    if ball is not None:
        for coords, _ in merged:
            if not ball.contains(coords):
                raise InputError(f"atom {coords!r} lies outside the configured ball")
    assert dim is not None
    return DiscreteMeasure(dim=dim, atoms=tuple(merged))


def dirac(coords: Sequence[float]) -> DiscreteMeasure:
    """Point mass at ``coords``."""
    c = _as_coords(coords)
    return DiscreteMeasure(dim=len(c), atoms=((c, 1.0),))


@dataclass(frozen=True)
class JointLaw:
    """Law of a p-agent allocation: atoms are p-tuples of points in R^dim."""

    agents: int
    dim: int
    atoms: tuple[tuple[tuple[Coords, ...], float], ...]

    @property
    def size(self) -> int:
        return len(self.atoms)

    def weights_array(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms], dtype=float)

    def component_array(self) -> np.ndarray:
        """Shape (size, agents, dim) array of the support tuples."""
        return np.array([[pt for pt in tup] for tup, _ in self.atoms], dtype=float).reshape(
            self.size, self.agents, self.dim
        )


def _tuple_key(tup: tuple[Coords, ...]) -> Coords:
    return tuple(c for pt in tup for c in pt)


def validate_joint_law(
    atoms: Iterable[tuple[Sequence[Sequence[float]], float]],
    agents: int | None = None,
    dim: int | None = None,
    ball: BallConfig | None = None,
) -> JointLaw:
    """Canonicalize raw joint-law atoms; same merge and weight rules as measures."""
    raw = list(atoms)
    if not raw:
        raise InputError("joint law needs at least one atom")
    flat_items: list[tuple[Coords, float]] = []
    for tup_raw, w_raw in raw:
        tup = tuple(_as_coords(pt, dim) for pt in tup_raw)
        if not tup:
            raise DimensionMismatch("allocation tuple must have at least one agent")
        if dim is None:
            dim = len(tup[0])
        if agents is None:
            agents = len(tup)
        if len(tup) != agents:
            raise DimensionMismatch(f"tuple has {len(tup)} agents, expected {agents}")
        w = float(w_raw)
        if not math.isfinite(w) or w <= 0.0:
            raise NonPositiveWeight(f"atom weight must be > 0, got {w!r}")
        flat_items.append((_tuple_key(tup), w))
    merged = _merge_weighted(flat_items)
    total = math.fsum(w for _, w in merged)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumOutOfTolerance(
            f"atom weights sum to {total!r}, off from 1 by more than {WEIGHT_SUM_TOL}"
        )
    if total != 1.0:
        merged = [(c, w / total) for c, w in merged]
    assert agents is not None and dim is not None
    out_atoms = []
    for flat, w in merged:
        tup = tuple(flat[i * dim : (i + 1) * dim] for i in range(agents))
        if ball is not None:
            for pt in tup:
                if not ball.contains(pt):
                    raise InputError(f"share {pt!r} lies outside the configured ball")
        out_atoms.append((tup, w))
    return JointLaw(agents=agents, dim=dim, atoms=tuple(out_atoms))


def marginal(law: JointLaw, agent: int) -> DiscreteMeasure:
    """Law of agent ``agent`` (zero-based) under the allocation."""
    if not 0 <= agent < law.agents:
        raise IndexOutOfRange(f"agent index {agent} outside 0..{law.agents - 1}")
    return validate_measure(
        [(tup[agent], w) for tup, w in law.atoms], dim=law.dim
    )


def sum_pushforward(law: JointLaw) -> DiscreteMeasure:
    """Law of the coordinate sum Y_1 + ... + Y_p; colliding sums merge."""
    items = []
    for tup, w in law.atoms:
        total = tuple(math.fsum(pt[k] for pt in tup) for k in range(law.dim))
        items.append((total, w))
    return validate_measure(items, dim=law.dim)


def measures_equal(a: DiscreteMeasure, b: DiscreteMeasure, tol: float = 1e-8) -> bool:
    """Approximate equality of two canonical measures.

    Compares positionally after canonical sorting: same atom count, support
    points within ``tol`` (Euclidean) and weights within ``tol``.
    """
    if a.dim != b.dim or a.size != b.size:
        return False
    for (ca, wa), (cb, wb) in zip(a.atoms, b.atoms):
        if math.dist(ca, cb) > tol or abs(wa - wb) > tol:
            return False
    return True


def joint_laws_equal(a: JointLaw, b: JointLaw, tol: float = 1e-8) -> bool:
    if a.agents != b.agents or a.dim != b.dim or a.size != b.size:
        return False
    for (ta, wa), (tb, wb) in zip(a.atoms, b.atoms):
        if abs(wa - wb) > tol:
            return False
        if math.dist(_tuple_key(ta), _tuple_key(tb)) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------
# measure:   {"dim": d, "atoms": [{"x": [r, ...], "w": r}, ...]}
# joint law: {"agents": p, "dim": d, "atoms": [{"x": [[r, ...], ...], "w": r}, ...]}
# Parsers reject NaN/Infinity in any numeric position.


def _reject_constant(name: str) -> float:
    raise InputError(f"non-finite JSON number {name!r} is not allowed")


def parse_strict_json(text: str):
    """json.loads that refuses NaN/Infinity literals."""
    return json.loads(text, parse_constant=_reject_constant)


def measure_to_obj(m: DiscreteMeasure) -> dict:
    return {
        "dim": m.dim,
        "atoms": [{"x": list(c), "w": w} for c, w in m.atoms],
    }


def measure_from_obj(obj: dict, ball: BallConfig | None = None) -> DiscreteMeasure:
    try:
        dim = int(obj["dim"])
        atoms = [(a["x"], a["w"]) for a in obj["atoms"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed measure object: {exc}") from exc
    return validate_measure(atoms, dim=dim, ball=ball)


def joint_law_to_obj(law: JointLaw) -> dict:
    return {
        "agents": law.agents,
        "dim": law.dim,
        "atoms": [{"x": [list(pt) for pt in tup], "w": w} for tup, w in law.atoms],
    }


def joint_law_from_obj(obj: dict, ball: BallConfig | None = None) -> JointLaw:
    try:
        agents = int(obj["agents"])
        dim = int(obj["dim"])
        atoms = [(a["x"], a["w"]) for a in obj["atoms"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed joint-law object: {exc}") from exc
    return validate_joint_law(atoms, agents=agents, dim=dim, ball=ball)


def measure_from_json(text: str, ball: BallConfig | None = None) -> DiscreteMeasure:
    return measure_from_obj(parse_strict_json(text), ball=ball)


def measure_to_json(m: DiscreteMeasure) -> str:
    return json.dumps(measure_to_obj(m))


def joint_law_from_json(text: str, ball: BallConfig | None = None) -> JointLaw:
    return joint_law_from_obj(parse_strict_json(text), ball=ball)


def joint_law_to_json(law: JointLaw) -> str:
    return json.dumps(joint_law_to_obj(law))

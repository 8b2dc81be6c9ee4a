"""Numerical geometry over oriented projective space.

Points are kept in homogeneous coordinates so that ordinary points and
ray directions (ideal points) share one representation.  Halfspaces are
normal/intercept pairs ``{y : normal . y >= intercept}``.  Every stored
object is max-norm normalized, which makes the tolerance thresholds
scale-free; the same :class:`Tolerance` instance is meant to be shared
by every layer above so side classifications never disagree.

All values are immutable after construction and safe to share across
worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import MolpError

__all__ = [
    "Side",
    "Tolerance",
    "DEFAULT_TOL",
    "HomPoint",
    "Halfspace",
    "side_of",
    "intersect_edge",
]


class Side(IntEnum):
    """Classification of a point against a halfspace boundary."""

    NEGATIVE = -1
    ON = 0
    POSITIVE = 1


@dataclass(frozen=True)
class Tolerance:
    """Shared tolerance policy.

    Parameters
    ----------
    eps_zero : float
        Magnitude below which a computed value is treated as zero.
    eps_side : float
        Threshold for classifying a point against a hyperplane; applied
        to max-norm normalized quantities only.
    """

    eps_zero: float = 1e-10
    eps_side: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.eps_zero <= self.eps_side < 1e-3):
            raise ValueError(
                "tolerances must satisfy 0 < eps_zero <= eps_side < 1e-3"
            )


DEFAULT_TOL = Tolerance()


class HomPoint:
    """A point of oriented projective p-space in homogeneous coordinates.

    ``weight == 1`` marks an ordinary point, ``weight == 0`` an ideal
    point (the direction of a ray).  Construction normalizes: ordinary
    points are divided by their weight, ideal directions are scaled to
    max-norm 1.
    """

    __slots__ = ("coords", "weight")

    def __init__(self, coords, weight, tol: Tolerance = DEFAULT_TOL):
        coords = np.asarray(coords, dtype=float)
        weight = float(weight)
        if weight < -tol.eps_zero:
            raise MolpError("homogeneous weight must be nonnegative")
        if weight <= tol.eps_zero:
            nrm = float(np.max(np.abs(coords))) if coords.size else 0.0
            if nrm <= tol.eps_zero:
                raise MolpError("null homogeneous point")
            self.coords = coords / nrm
            self.weight = 0.0
        else:
            self.coords = coords / weight
            self.weight = 1.0

    @classmethod
    def finite(cls, coords) -> "HomPoint":
        """Ordinary point with the given coordinates."""
        return cls(coords, 1.0)

    @classmethod
    def ideal(cls, direction) -> "HomPoint":
        """Ideal point for the given (nonzero) ray direction."""
        return cls(direction, 0.0)

    @property
    def is_ideal(self) -> bool:
        return self.weight == 0.0

    @property
    def dim(self) -> int:
        return self.coords.size

    def coincides(self, other: "HomPoint", tol: Tolerance = DEFAULT_TOL) -> bool:
        """Approximate equality of two normalized points."""
        if self.weight != other.weight:
            return False
        return bool(np.max(np.abs(self.coords - other.coords)) <= tol.eps_side)

    def __repr__(self):
        kind = "ideal" if self.is_ideal else "point"
        return f"HomPoint({kind} {np.array2string(self.coords, precision=6)})"


class Halfspace:
    """Closed halfspace ``{y : normal . y >= intercept}``.

    The ideal halfspace (hyperplane at infinity) is a marker value with
    a zero normal: every ordinary point lies on its positive side and
    every ideal point on its boundary.  Ordinary halfspaces are stored
    with max-norm 1 normals.
    """

    __slots__ = ("normal", "intercept", "is_ideal")

    def __init__(self, normal, intercept, is_ideal: bool = False,
                 tol: Tolerance = DEFAULT_TOL):
        normal = np.asarray(normal, dtype=float)
        if is_ideal:
            self.normal = np.zeros_like(normal)
            self.intercept = 1.0
        else:
            nrm = float(np.max(np.abs(normal))) if normal.size else 0.0
            if nrm <= tol.eps_zero:
                raise MolpError("null halfspace normal")
            self.normal = normal / nrm
            self.intercept = float(intercept) / nrm
        self.is_ideal = bool(is_ideal)

    @classmethod
    def ideal_facet(cls, dim: int) -> "Halfspace":
        """The hyperplane at infinity of p-space."""
        return cls(np.zeros(dim), 1.0, is_ideal=True)

    @property
    def dim(self) -> int:
        return self.normal.size

    def flipped(self) -> "Halfspace":
        """Same boundary, opposite sides."""
        if self.is_ideal:
            raise MolpError("cannot flip the ideal halfspace")
        return Halfspace(-self.normal, -self.intercept)

    def value_at(self, pt: HomPoint) -> float:
        """Signed boundary offset of a normalized homogeneous point."""
        return float(self.normal @ pt.coords - self.intercept * pt.weight)

    def coincides(self, other: "Halfspace", tol: Tolerance = DEFAULT_TOL) -> bool:
        if self.is_ideal or other.is_ideal:
            return self.is_ideal and other.is_ideal
        return bool(
            np.max(np.abs(self.normal - other.normal)) <= tol.eps_side
            and abs(self.intercept - other.intercept) <= tol.eps_side
        )

    def __repr__(self):
        if self.is_ideal:
            return "Halfspace(ideal)"
        return (f"Halfspace({np.array2string(self.normal, precision=6)}"
                f" . y >= {self.intercept:.6g})")


def side_of(pt: HomPoint, hs: Halfspace, tol: Tolerance = DEFAULT_TOL) -> Side:
    """Classify a normalized point against a normalized halfspace.

    Ordinary points are compared by the sign of ``normal . y - intercept``
    within ``eps_side``; for ideal points the intercept does not apply and
    only the sign of ``normal . direction`` counts.  Against the ideal
    halfspace every ordinary point is positive and every ideal point lies
    on the boundary.
    """
    if hs.is_ideal:
        return Side.ON if pt.is_ideal else Side.POSITIVE
    val = hs.normal @ pt.coords - hs.intercept * pt.weight
    if val > tol.eps_side:
        return Side.POSITIVE
    if val < -tol.eps_side:
        return Side.NEGATIVE
    return Side.ON


def intersect_edge(pos: HomPoint, neg: HomPoint, hs: Halfspace) -> HomPoint:
    """Boundary point of ``hs`` on the segment from ``pos`` to ``neg``.

    ``pos`` must be strictly positive and ``neg`` strictly negative, so
    the homogeneous combination below is a proper interior crossing.
    One ideal endpoint turns the segment into a ray from the ordinary
    endpoint; the same formula covers that case.
    """
    fp = hs.value_at(pos)
    fn = hs.value_at(neg)
    coords = fp * neg.coords - fn * pos.coords
    weight = fp * neg.weight - fn * pos.weight
    return HomPoint(coords, weight)

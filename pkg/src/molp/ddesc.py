"""Incremental double description of a convex polytope.

The polytope is held as parallel slot lists of vertices and facets plus
two adjacency families stored as Python-integer bit vectors: for each
vertex the set of facet slots it lies on, and for each facet the set of
vertex slots on its boundary.  The two update operations never rebuild
the description from scratch:

* :meth:`DoubleDescription.cut_with_halfspace` intersects with a new
  halfspace.  Vertices on the negative side are retired, a new vertex is
  created wherever an edge crosses the boundary, and the halfspace is
  appended without checking whether it makes older facets redundant.
* :meth:`DoubleDescription.add_vertex` takes the convex hull with a new
  point.  Facets on the negative side are retired and a new facet is
  fitted through the point and every ridge on the horizon; the vertex
  list is allowed to become redundant.

Retired slots go to a spare pool and are reused; the slot lists are
compressed only when the pool grows past a threshold.  The pairwise
edge/ridge scan of both updates can be distributed over worker threads:
workers read the frozen adjacency bitsets only, candidate results are
merged in canonical pair order by the single owning thread, so the
outcome is bit-identical for every worker count.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSpan,
    InvalidAdd,
    InvalidCut,
    MolpError,
    NumericalFailure,
)
from .geometry import DEFAULT_TOL, Halfspace, HomPoint, Side, Tolerance, \
    intersect_edge, side_of

__all__ = [
    "CutReport",
    "AddReport",
    "DoubleDescription",
    "new_facet_through",
]

# below this many candidate pairs the scan is not worth distributing
_PARALLEL_MIN = 32


def _bits(mask: int):
    """Yield the positions of the set bits of a nonnegative int."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _scan(count, probe, workers):
    """Collect non-None ``probe(k)`` results for ``k < count`` in index order.

    Contiguous chunks are handed to a thread pool; chunk results are
    concatenated in chunk order, which keeps the overall order identical
    to the sequential scan for any worker count.
    """
    if workers <= 1 or count < _PARALLEL_MIN:
        out = []
        for k in range(count):
            hit = probe(k)
            if hit is not None:
                out.append(hit)
        return out
    nworkers = min(workers, count)
    step = -(-count // nworkers)
    spans = [range(lo, min(lo + step, count)) for lo in range(0, count, step)]

    def run(span):
        part = []
        for k in span:
            hit = probe(k)
            if hit is not None:
                part.append(hit)
        return part

    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        parts = list(pool.map(run, spans))
    return [hit for part in parts for hit in part]


def new_facet_through(v: HomPoint, ridge_vertices, orient=None,
                      tol: Tolerance = DEFAULT_TOL) -> Halfspace:
    """Hyperplane through a point and the vertices of a ridge.

    Solves the homogeneous fit ``normal . q = intercept`` for ordinary
    points and ``normal . d = 0`` for ideal ones.  The inputs must have a
    one-dimensional nullspace, i.e. affinely span a hyperplane, otherwise
    :class:`DegenerateSpan` is raised.

    ``orient`` is a sequence of points that must end up on the
    positive-or-boundary side; the one farthest from the hyperplane
    decides the sign.  Without it the halfspace is oriented so that the
    origin is not on the negative side.
    """
    pts = [v, *ridge_vertices]
    rows = np.array([[*pt.coords, -pt.weight] for pt in pts])
    p = v.coords.size
    _, sv, vt = np.linalg.svd(rows)
    scale = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > max(tol.eps_zero, scale * 1e-12 * max(rows.shape))))
    if rank < p:
        raise DegenerateSpan(f"inputs span a flat of rank {rank} < {p}")
    nullvec = vt[-1]
    normal, intercept = nullvec[:p], nullvec[p]
    if np.max(np.abs(normal)) <= tol.eps_zero:
        raise DegenerateSpan("fit produced the hyperplane at infinity")
    # canonical sign first: SVD sign is arbitrary
    lead = normal[np.flatnonzero(np.abs(normal) > tol.eps_zero)[0]]
    if lead < 0:
        normal, intercept = -normal, -intercept
    hs = Halfspace(normal, intercept, tol=tol)
    if orient is None:
        if -hs.intercept < -tol.eps_side:  # origin on the negative side
            hs = hs.flipped()
        return hs
    vals = [hs.value_at(w) for w in orient]
    best = int(np.argmax(np.abs(vals)))
    if abs(vals[best]) <= tol.eps_side:
        raise DegenerateSpan("no orientation witness off the hyperplane")
    if vals[best] < 0:
        hs = hs.flipped()
    return hs


@dataclass
class CutReport:
    """What :meth:`DoubleDescription.cut_with_halfspace` did."""

    removed_vertices: int
    new_vertices: list = field(default_factory=list)
    kept_on_boundary: int = 0


@dataclass
class AddReport:
    """What :meth:`DoubleDescription.add_vertex` did."""

    removed_facets: int
    new_facets: list = field(default_factory=list)
    kept_through_point: int = 0


class DoubleDescription:
    """Mutable vertex/facet double description with adjacency bitsets.

    Single-owner mutable state: one thread drives the updates, the
    internal pair scan may fan out to ``workers`` reader threads.
    Elements carry a monotone creation stamp (``seq``) that survives
    compaction, and a ``final`` flag that the engine never clears for
    surviving elements.
    """

    def __init__(self, dim: int, tol: Tolerance = DEFAULT_TOL, workers: int = 1):
        if dim < 1:
            raise MolpError("dimension must be positive")
        self.dim = dim
        self.tol = tol
        self.workers = max(1, int(workers))
        #: spare slots beyond this count trigger compaction
        self.compact_base = 64
        self._next_seq = 0
        # vertex side
        self._vpts: list = []
        self._vlive: list = []
        self._vfinal: list = []
        self._vseq: list = []
        self._vdata: list = []
        self._vadj: list = []  # bitset over facet slots
        self._vspare: list = []
        self._nlive_v = 0
        # facet side
        self._fhs: list = []
        self._flive: list = []
        self._ffinal: list = []
        self._fseq: list = []
        self._fadj: list = []  # bitset over vertex slots
        self._fspare: list = []
        self._nlive_f = 0

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_lists(cls, vertices, facets, tol: Tolerance = DEFAULT_TOL,
                   workers: int = 1) -> "DoubleDescription":
        """Build a description from explicit vertex and facet lists.

        Adjacency is derived by side classification; a vertex on the
        strictly negative side of any facet is rejected.
        """
        if not vertices or not facets:
            raise MolpError("need at least one vertex and one facet")
        dim = vertices[0].dim
        dd = cls(dim, tol=tol, workers=workers)
        for pt in vertices:
            dd._alloc_vertex(pt, None)
        for hs in facets:
            slot = dd._alloc_facet(hs)
            mask = 0
            for v, pt in enumerate(dd._vpts):
                s = side_of(pt, hs, tol)
                if s is Side.NEGATIVE:
                    raise MolpError("vertex on the negative side of a facet")
                if s is Side.ON:
                    mask |= 1 << v
                    dd._vadj[v] |= 1 << slot
            dd._fadj[slot] = mask
        return dd

    def clone(self) -> "DoubleDescription":
        """Independent deep copy (shares the immutable geometry values)."""
        dup = DoubleDescription(self.dim, tol=self.tol, workers=self.workers)
        dup.compact_base = self.compact_base
        dup._next_seq = self._next_seq
        for name in ("_vpts", "_vlive", "_vfinal", "_vseq", "_vdata", "_vadj",
                     "_vspare", "_fhs", "_flive", "_ffinal", "_fseq", "_fadj",
                     "_fspare"):
            setattr(dup, name, list(getattr(self, name)))
        dup._nlive_v = self._nlive_v
        dup._nlive_f = self._nlive_f
        return dup

    # ------------------------------------------------------------------
    # slot bookkeeping

    def _take_seq(self) -> int:
        seq = self._next_seq
        self._next_seq += 1
        return seq

    def _alloc_vertex(self, pt: HomPoint, data) -> int:
        if self._vspare:
            slot = heapq.heappop(self._vspare)
            self._vpts[slot] = pt
            self._vlive[slot] = True
            self._vfinal[slot] = False
            self._vseq[slot] = self._take_seq()
            self._vdata[slot] = data
            self._vadj[slot] = 0
        else:
            slot = len(self._vpts)
            self._vpts.append(pt)
            self._vlive.append(True)
            self._vfinal.append(False)
            self._vseq.append(self._take_seq())
            self._vdata.append(data)
            self._vadj.append(0)
        self._nlive_v += 1
        return slot

    def _alloc_facet(self, hs: Halfspace) -> int:
        if self._fspare:
            slot = heapq.heappop(self._fspare)
            self._fhs[slot] = hs
            self._flive[slot] = True
            self._ffinal[slot] = False
            self._fseq[slot] = self._take_seq()
            self._fadj[slot] = 0
        else:
            slot = len(self._fhs)
            self._fhs.append(hs)
            self._flive.append(True)
            self._ffinal.append(False)
            self._fseq.append(self._take_seq())
            self._fadj.append(0)
        self._nlive_f += 1
        return slot

    def _retire_vertex(self, slot: int):
        for h in _bits(self._vadj[slot]):
            self._fadj[h] &= ~(1 << slot)
        self._vadj[slot] = 0
        self._vpts[slot] = None
        self._vdata[slot] = None
        self._vlive[slot] = False
        self._vfinal[slot] = False
        heapq.heappush(self._vspare, slot)
        self._nlive_v -= 1

    def _retire_facet(self, slot: int):
        for v in _bits(self._fadj[slot]):
            self._vadj[v] &= ~(1 << slot)
        self._fadj[slot] = 0
        self._fhs[slot] = None
        self._flive[slot] = False
        self._ffinal[slot] = False
        heapq.heappush(self._fspare, slot)
        self._nlive_f -= 1

    def _maybe_compact(self):
        if (len(self._vspare) > max(self.compact_base, len(self._vpts) // 2)
                or len(self._fspare) > max(self.compact_base, len(self._fhs) // 2)):
            self.compact()

    # ------------------------------------------------------------------
    # read access

    @property
    def vertex_count(self) -> int:
        return self._nlive_v

    @property
    def facet_count(self) -> int:
        return self._nlive_f

    def live_vertices(self) -> list:
        return [i for i, alive in enumerate(self._vlive) if alive]

    def live_facets(self) -> list:
        return [i for i, alive in enumerate(self._flive) if alive]

    def vertex(self, slot: int) -> HomPoint:
        return self._vpts[slot]

    def facet(self, slot: int) -> Halfspace:
        return self._fhs[slot]

    def vertex_data(self, slot: int):
        return self._vdata[slot]

    def set_vertex_data(self, slot: int, data):
        self._vdata[slot] = data

    def vertex_is_final(self, slot: int) -> bool:
        return self._vfinal[slot]

    def facet_is_final(self, slot: int) -> bool:
        return self._ffinal[slot]

    def mark_vertex_final(self, slot: int):
        self._vfinal[slot] = True

    def mark_facet_final(self, slot: int):
        self._ffinal[slot] = True

    def vertex_seq(self, slot: int) -> int:
        return self._vseq[slot]

    def facet_seq(self, slot: int) -> int:
        return self._fseq[slot]

    def find_vertex_by_seq(self, seq: int):
        for i, alive in enumerate(self._vlive):
            if alive and self._vseq[i] == seq:
                return i
        return None

    def find_facet_by_seq(self, seq: int):
        for i, alive in enumerate(self._flive):
            if alive and self._fseq[i] == seq:
                return i
        return None

    def vertex_facets(self, slot: int) -> list:
        """Facet slots whose boundary contains the vertex."""
        return list(_bits(self._vadj[slot]))

    def facet_vertices(self, slot: int) -> list:
        """Vertex slots on the facet boundary."""
        return list(_bits(self._fadj[slot]))

    def _live_vertex_mask(self) -> int:
        mask = 0
        for i, alive in enumerate(self._vlive):
            if alive:
                mask |= 1 << i
        return mask

    def _live_facet_mask(self) -> int:
        mask = 0
        for i, alive in enumerate(self._flive):
            if alive:
                mask |= 1 << i
        return mask

    # ------------------------------------------------------------------
    # queries

    def partition_vertices(self, hs: Halfspace):
        """Split the live vertices by side against ``hs``.

        Returns ``(positive, negative, boundary)`` slot lists, each in
        ascending slot order.
        """
        pos, neg, on = [], [], []
        for i, alive in enumerate(self._vlive):
            if not alive:
                continue
            s = side_of(self._vpts[i], hs, self.tol)
            (pos if s is Side.POSITIVE else neg if s is Side.NEGATIVE else on).append(i)
        return pos, neg, on

    def partition_facets(self, pt: HomPoint):
        """Split the live facets by the side of ``pt`` against each."""
        pos, neg, on = [], [], []
        for i, alive in enumerate(self._flive):
            if not alive:
                continue
            s = side_of(pt, self._fhs[i], self.tol)
            (pos if s is Side.POSITIVE else neg if s is Side.NEGATIVE else on).append(i)
        return pos, neg, on

    def is_edge(self, v1: int, v2: int) -> bool:
        """Whether the segment between two live vertices is a 1-face.

        The cheap necessary condition (at least ``dim - 1`` shared
        facets) filters first; then the exact test checks that the
        vertices on every shared facet are exactly ``{v1, v2}``.
        """
        shared = self._vadj[v1] & self._vadj[v2]
        if shared.bit_count() < self.dim - 1:
            return False
        goal = (1 << v1) | (1 << v2)
        acc = self._live_vertex_mask()
        rest = shared
        while rest and acc != goal:
            h = (rest & -rest).bit_length() - 1
            acc &= self._fadj[h]
            rest &= rest - 1
        return acc == goal

    def is_ridge(self, f1: int, f2: int) -> bool:
        """Whether two live facets meet in a (dim-2)-face.

        Dual of :meth:`is_edge`: at least ``dim - 1`` shared vertices,
        and the facets through every shared vertex are exactly
        ``{f1, f2}``.
        """
        shared = self._fadj[f1] & self._fadj[f2]
        if shared.bit_count() < self.dim - 1:
            return False
        goal = (1 << f1) | (1 << f2)
        acc = self._live_facet_mask()
        rest = shared
        while rest and acc != goal:
            v = (rest & -rest).bit_length() - 1
            acc &= self._vadj[v]
            rest &= rest - 1
        return acc == goal

    # ------------------------------------------------------------------
    # updates

    def cut_with_halfspace(self, hs: Halfspace) -> CutReport:
        """Intersect the polytope with ``hs``.

        Requires a proper cut: both sides of the boundary must hold at
        least one live vertex.  Vertices strictly negative are retired,
        each crossed edge contributes one new vertex on the boundary,
        and ``hs`` joins the facet list (older facets are never checked
        for redundancy).  Final flags of surviving elements persist.
        """
        self._maybe_compact()
        pos, neg, on = self.partition_vertices(hs)
        if not neg or not pos:
            raise InvalidCut(
                f"improper cut: |V+|={len(pos)}, |V-|={len(neg)}")
        for b in neg:
            if self._vfinal[b]:
                raise NumericalFailure("cut would remove a final vertex")

        dim = self.dim
        vadj = self._vadj
        fadj = self._fadj
        vpts = self._vpts
        live_mask = self._live_vertex_mask()
        pairs = [(a, b) for a in pos for b in neg]

        def probe(k):
            a, b = pairs[k]
            shared = vadj[a] & vadj[b]
            if shared.bit_count() < dim - 1:
                return None
            goal = (1 << a) | (1 << b)
            acc = live_mask
            rest = shared
            while rest and acc != goal:
                h = (rest & -rest).bit_length() - 1
                acc &= fadj[h]
                rest &= rest - 1
            if acc != goal:
                return None
            return k, intersect_edge(vpts[a], vpts[b], hs), shared

        hits = _scan(len(pairs), probe, self.workers)

        # merge phase: single owner mutates, in canonical pair order
        fslot = self._alloc_facet(hs)
        fbit = 1 << fslot
        boundary_mask = 0
        for v in on:
            self._vadj[v] |= fbit
            boundary_mask |= 1 << v
        for b in neg:
            self._retire_vertex(b)
        created = []
        for _, pt, shared in hits:
            vslot = self._alloc_vertex(pt, None)
            self._vadj[vslot] = shared | fbit
            for h in _bits(shared):
                self._fadj[h] |= 1 << vslot
            boundary_mask |= 1 << vslot
            created.append(pt)
        self._fadj[fslot] = boundary_mask
        return CutReport(removed_vertices=len(neg), new_vertices=created,
                         kept_on_boundary=len(on))

    def add_vertex(self, pt: HomPoint, data=None) -> AddReport:
        """Grow the polytope to the convex hull with ``pt``.

        Requires ``pt`` strictly outside at least one facet.  Facets
        with ``pt`` on their negative side are retired; every horizon
        ridge (a positive/negative facet pair passing :meth:`is_ridge`)
        yields one new facet through ``pt``, oriented by the retained
        vertices.  The vertex list keeps all old entries, so it may
        become redundant.  Final flags of surviving elements persist.
        """
        self._maybe_compact()
        pos, neg, on = self.partition_facets(pt)
        if not neg:
            raise InvalidAdd("point is not outside any facet")
        if not pos:
            raise InvalidAdd("no facet keeps its positive side")
        for b in neg:
            if self._ffinal[b]:
                raise NumericalFailure("step would remove a final facet")

        dim = self.dim
        tol = self.tol
        vadj = self._vadj
        fadj = self._fadj
        vpts = self._vpts
        live_fmask = self._live_facet_mask()
        orient_pts = [vpts[i] for i, alive in enumerate(self._vlive) if alive]
        pairs = [(a, b) for a in pos for b in neg]

        def probe(k):
            a, b = pairs[k]
            shared = fadj[a] & fadj[b]
            if shared.bit_count() < dim - 1:
                return None
            goal = (1 << a) | (1 << b)
            acc = live_fmask
            rest = shared
            while rest and acc != goal:
                v = (rest & -rest).bit_length() - 1
                acc &= vadj[v]
                rest &= rest - 1
            if acc != goal:
                return None
            ridge = [vpts[v] for v in _bits(shared)]
            hs = new_facet_through(pt, ridge, orient=orient_pts, tol=tol)
            return k, hs, shared

        hits = _scan(len(pairs), probe, self.workers)

        vslot = self._alloc_vertex(pt, data)
        vbit = 1 << vslot
        through_mask = 0
        for f in on:
            self._fadj[f] |= vbit
            through_mask |= 1 << f
        for b in neg:
            self._retire_facet(b)
        created = []
        for _, hs, shared in hits:
            fslot = self._alloc_facet(hs)
            self._fadj[fslot] = shared | vbit
            for v in _bits(shared):
                self._vadj[v] |= 1 << fslot
            through_mask |= 1 << fslot
            created.append(hs)
        self._vadj[vslot] = through_mask
        return AddReport(removed_facets=len(neg), new_facets=created,
                         kept_through_point=len(on))

    def compact(self):
        """Drop retired slots and reindex the bitsets.

        Live elements keep their relative order, creation stamps and
        final flags; only slot numbers change.  Idempotent.
        """
        vkeep = [i for i, alive in enumerate(self._vlive) if alive]
        fkeep = [i for i, alive in enumerate(self._flive) if alive]
        vmap = {old: new for new, old in enumerate(vkeep)}
        fmap = {old: new for new, old in enumerate(fkeep)}

        def remap(mask, table):
            out = 0
            for b in _bits(mask):
                out |= 1 << table[b]
            return out

        self._vpts = [self._vpts[i] for i in vkeep]
        self._vfinal = [self._vfinal[i] for i in vkeep]
        self._vseq = [self._vseq[i] for i in vkeep]
        self._vdata = [self._vdata[i] for i in vkeep]
        self._vadj = [remap(self._vadj[i], fmap) for i in vkeep]
        self._vlive = [True] * len(vkeep)
        self._vspare = []

        self._fhs = [self._fhs[i] for i in fkeep]
        self._ffinal = [self._ffinal[i] for i in fkeep]
        self._fseq = [self._fseq[i] for i in fkeep]
        self._fadj = [remap(self._fadj[i], vmap) for i in fkeep]
        self._flive = [True] * len(fkeep)
        self._fspare = []

    # ------------------------------------------------------------------
    # consistency checking (tests lean on this heavily)

    def check(self):
        """Validate the structural invariants; raises on violation."""
        for v in self.live_vertices():
            for h in _bits(self._vadj[v]):
                if not self._flive[h]:
                    raise AssertionError("vertex adjacency references dead facet")
                if not self._fadj[h] >> v & 1:
                    raise AssertionError("adjacency bitsets are not transposes")
        for h in self.live_facets():
            for v in _bits(self._fadj[h]):
                if not self._vlive[v]:
                    raise AssertionError("facet adjacency references dead vertex")
                if not self._vadj[v] >> h & 1:
                    raise AssertionError("adjacency bitsets are not transposes")
        for v in self.live_vertices():
            pt = self._vpts[v]
            for h in self.live_facets():
                s = side_of(pt, self._fhs[h], self.tol)
                bit = bool(self._vadj[v] >> h & 1)
                if s is Side.NEGATIVE:
                    raise AssertionError(
                        f"vertex {v} on the negative side of facet {h}")
                if bit != (s is Side.ON):
                    raise AssertionError(
                        f"adjacency bit disagrees with side test at ({v}, {h})")
            if self._vadj[v].bit_count() < self.dim:
                raise AssertionError(f"vertex {v} lies on too few facets")
        for h in self.live_facets():
            if self._fhs[h].is_ideal:
                continue
            if self._fadj[h].bit_count() < self.dim:
                raise AssertionError(f"facet {h} holds too few vertices")

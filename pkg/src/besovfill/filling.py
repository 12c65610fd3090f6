"""Hyperbolic fillings of finite metric measure spaces.

Level ``n`` of a filling is a maximal ``2**(-n-1)``-separated set of sample
points, found greedily in ascending point-id order.  Each chosen center
``c`` becomes a vertex with ball ``B(c, 2**-n)``.  Two distinct vertices on
equal or adjacent levels are joined when their balls intersect, which is
decided from the center distance (``d < r + r'``) so that sparse samples do
not lose edges the underlying continuous balls would have.

Vertex ids are contiguous per level, coarse to fine, and ordered by center
id inside a level.
"""

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from ._validation import DomainError, FillingWarning, ParseError, check_int

__all__ = [
    "HyperbolicFilling",
    "PartitionOfUnity",
    "StructureReport",
    "build_filling",
    "check_filling",
    "partition_of_unity",
    "greedy_net",
    "save_filling",
    "load_filling",
]


def greedy_net(distances, separation, candidates=None):
    """Maximal ``separation``-separated subset, scanned in ascending id order.

    A candidate is kept iff its distance to every previously kept point is at
    least ``separation``.
    """
    n = distances.shape[0]
    order = np.arange(n) if candidates is None else np.sort(candidates)
    nearest = np.full(n, np.inf)
    chosen = []
    for i in order:
        if nearest[i] >= separation:
            chosen.append(i)
            np.minimum(nearest, distances[i], out=nearest)
    return np.array(chosen, dtype=np.intp)


class HyperbolicFilling:
    """Leveled vertex sets, ball memberships and the oriented edge list.

    Attributes
    ----------
    n_min, n_max : int
        Inclusive level range.
    level, center, radius, measure : ndarray, shape (n_vertices,)
        Per-vertex level, center point id, ball radius ``2**-level`` and ball
        mass.
    membership : scipy.sparse.csr_matrix, shape (n_vertices, n_points)
        0/1 indicator of ``B(x)``.
    tail, head : ndarray, shape (n_edges,)
        Oriented edges.  Cross-level edges point to the finer level; edges on
        one level point from the smaller to the larger vertex id.
    """

    def __init__(self, space, n_min, n_max, level, center, tail, head):
        self.space = space
        self.n_min = int(n_min)
        self.n_max = int(n_max)
        self.level = np.asarray(level, dtype=np.int64)
        self.center = np.asarray(center, dtype=np.intp)
        self.radius = np.ldexp(1.0, -self.level)
        self.tail = np.asarray(tail, dtype=np.intp)
        self.head = np.asarray(head, dtype=np.intp)

        d = space.distances[self.center]
        rows, cols = np.nonzero(d < self.radius[:, None])
        self.membership = sparse.csr_matrix(
            (np.ones(rows.shape[0]), (rows, cols)),
            shape=(self.n_vertices, space.n_points))
        self.measure = np.asarray(self.membership @ space.weights).reshape(-1)

        starts = np.searchsorted(self.level, np.arange(self.n_min, self.n_max + 2))
        self._slices = {
            n: slice(int(starts[k]), int(starts[k + 1]))
            for k, n in enumerate(range(self.n_min, self.n_max + 1))
        }
        ones = np.ones(self.n_edges)
        adj = sparse.coo_matrix(
            (np.r_[ones, ones], (np.r_[self.tail, self.head], np.r_[self.head, self.tail])),
            shape=(self.n_vertices, self.n_vertices)).tocsr()
        adj.sum_duplicates()
        self.adjacency = adj
        self.degree = np.diff(adj.indptr)
        self._cache = {}

    def __repr__(self):
        return (f"HyperbolicFilling(levels=[{self.n_min}, {self.n_max}], "
                f"vertices={self.n_vertices}, edges={self.n_edges}, "
                f"max_degree={self.max_degree})")

    @property
    def levels(self):
        return range(self.n_min, self.n_max + 1)

    @property
    def n_vertices(self):
        return self.level.shape[0]

    @property
    def n_edges(self):
        return self.tail.shape[0]

    @property
    def max_degree(self):
        return int(self.degree.max()) if self.n_vertices else 0

    def level_slice(self, n):
        """Vertex-id slice of ``X_n``."""
        if n not in self._slices:
            raise DomainError(
                f"level {n} outside filling range [{self.n_min}, {self.n_max}]")
        return self._slices[n]

    def vertices_at(self, n):
        s = self.level_slice(n)
        return np.arange(s.start, s.stop)

    def neighbors(self, v):
        a = self.adjacency
        return a.indices[a.indptr[v]:a.indptr[v + 1]]

    def members(self, v):
        m = self.membership
        return m.indices[m.indptr[v]:m.indptr[v + 1]]

    @cached_property
    def edge_level(self):
        """``|e|``: the smaller endpoint level of each edge."""
        return np.minimum(self.level[self.tail], self.level[self.head])

    @cached_property
    def edge_membership(self):
        """0/1 indicator of ``B(e) = B(x) U B(x')``, shape (n_edges, n_points)."""
        m = self.membership
        union = m[self.tail] + m[self.head]
        union.data = np.ones_like(union.data)
        return union.tocsr()

    @cached_property
    def edge_measure(self):
        return np.asarray(self.edge_membership @ self.space.weights).reshape(-1)

    def intersecting(self, a, b):
        """Center-distance ball-intersection mask between vertex arrays."""
        d = self.space.distances[np.ix_(self.center[a], self.center[b])]
        return d < self.radius[a][:, None] + self.radius[b][None, :]

    def to_dict(self):
        return {
            "levels": [self.n_min, self.n_max],
            "vertices": [
                {"id": int(v), "level": int(self.level[v]),
                 "center": int(self.center[v]), "radius": float(self.radius[v]),
                 "measure": float(self.measure[v])}
                for v in range(self.n_vertices)
            ],
            "edges": [[int(t), int(h)] for t, h in zip(self.tail, self.head)],
            "max_degree": self.max_degree,
        }


def _build_edges(space, level, center, n_min, n_max, starts):
    d = space.distances
    tails, heads = [], []
    for k, n in enumerate(range(n_min, n_max + 1)):
        lo, hi = starts[k], starts[k + 1]
        ids = np.arange(lo, hi)
        r = np.ldexp(1.0, -n)
        block = d[np.ix_(center[ids], center[ids])]
        i, j = np.nonzero(np.triu(block < 2 * r, k=1))
        tails.append(ids[i])
        heads.append(ids[j])
        if n < n_max:
            fine = np.arange(hi, starts[k + 2])
            block = d[np.ix_(center[ids], center[fine])]
            i, j = np.nonzero(block < r + r / 2)
            tails.append(ids[i])
            heads.append(fine[j])
    tail = np.concatenate(tails) if tails else np.zeros(0, dtype=np.intp)
    head = np.concatenate(heads) if heads else np.zeros(0, dtype=np.intp)
    order = np.lexsort((head, tail))
    return tail[order], head[order]


def build_filling(space, n_min, n_max):
    """Construct the hyperbolic filling of `space` on levels ``[n_min, n_max]``."""
    n_min = check_int(n_min, "n_min")
    n_max = check_int(n_max, "n_max")
    if space.n_points == 0:
        raise DomainError("cannot build a filling of an empty space")
    if n_min > n_max:
        raise DomainError(f"n_min={n_min} exceeds n_max={n_max}")
    if space.n_points > 1:
        if 2.0 ** -n_min < space.diameter / 2:
            warnings.warn(
                f"coarsest radius 2^-{n_min} is below half the diameter "
                f"{space.diameter:.6g}", FillingWarning, stacklevel=2)
        if 2.0 ** -n_max < space.min_distance:
            warnings.warn(
                f"finest radius 2^-{n_max} is below the minimal point "
                f"distance {space.min_distance:.6g}", FillingWarning, stacklevel=2)

    d = space.distances
    levels, centers, starts = [], [], [0]
    for n in range(n_min, n_max + 1):
        net = greedy_net(d, np.ldexp(1.0, -n - 1))
        centers.append(net)
        levels.append(np.full(net.shape[0], n, dtype=np.int64))
        starts.append(starts[-1] + net.shape[0])
    level = np.concatenate(levels)
    center = np.concatenate(centers)
    tail, head = _build_edges(space, level, center, n_min, n_max, starts)
    return HyperbolicFilling(space, n_min, n_max, level, center, tail, head)


@dataclass
class StructureReport:
    """Per-level structural diagnostics of a filling."""

    levels: list
    separation_margin: list
    covering_deficiency: list
    disjointness_violations: list
    max_overlap: list
    max_degree: int
    sparse_edges: int = 0
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return (min(self.separation_margin) >= 0
                and sum(self.covering_deficiency) == 0
                and sum(self.disjointness_violations) == 0)

    def to_dict(self):
        return {
            "levels": self.levels,
            "separation_margin": self.separation_margin,
            "covering_deficiency": self.covering_deficiency,
            "disjointness_violations": self.disjointness_violations,
            "max_overlap": self.max_overlap,
            "max_degree": self.max_degree,
            "sparse_edges": self.sparse_edges,
            "ok": self.ok,
        }


def check_filling(filling):
    """Measure separation, covering, disjointness, overlap and valency.

    ``sparse_edges`` counts edges whose balls share no sample point even
    though their centers are close enough for the continuous balls to meet.
    """
    d = filling.space.distances
    sep, cover, disjoint, overlap = [], [], [], []
    for n in filling.levels:
        ids = filling.vertices_at(n)
        c = filling.center[ids]
        half = np.ldexp(1.0, -n - 1)
        block = d[np.ix_(c, c)]
        if ids.shape[0] > 1:
            off = block[~np.eye(ids.shape[0], dtype=bool)]
            sep.append(float(off.min() - half))
        else:
            sep.append(float("inf"))
        to_centers = d[c]
        cover.append(int(np.sum(to_centers.min(axis=0) >= half)))
        quarter_hits = (to_centers < half / 2).sum(axis=0)
        disjoint.append(int(np.sum(quarter_hits > 1)))
        counts = np.asarray(filling.membership[ids].sum(axis=0)).reshape(-1)
        overlap.append(int(counts.max()))
    m = filling.membership
    shared = np.asarray(m[filling.tail].multiply(m[filling.head]).sum(axis=1)).reshape(-1)
    return StructureReport(
        levels=list(filling.levels),
        separation_margin=sep,
        covering_deficiency=cover,
        disjointness_violations=disjoint,
        max_overlap=overlap,
        max_degree=filling.max_degree,
        sparse_edges=int(np.sum(shared == 0)),
    )


@dataclass
class PartitionOfUnity:
    """Tent partition of unity on one level.

    ``values`` is a sparse ``(len(X_n), n_points)`` matrix whose row ``i``
    holds ``psi_x`` for the ``i``-th vertex of the level.
    """

    level: int
    vertices: np.ndarray
    values: sparse.csr_matrix
    space: object = field(repr=False)

    @cached_property
    def lipschitz_bound(self):
        """Largest measured quotient ``|psi_x(a) - psi_x(b)| / d(a, b)``."""
        d = self.space.distances
        vals = self.values
        worst = 0.0
        for i in range(vals.shape[0]):
            lo, hi = vals.indptr[i], vals.indptr[i + 1]
            support = vals.indices[lo:hi]
            if support.size == 0:
                continue
            row = np.zeros(d.shape[0])
            row[support] = vals.data[lo:hi]
            dist = d[support]
            diff = np.abs(row[support][:, None] - row[None, :])
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(dist > 0, diff / dist, 0.0)
            worst = max(worst, float(q.max()))
        return worst

    def dense(self):
        return self.values.toarray()


def partition_of_unity(filling, space, n):
    """Normalized tents ``max(0, 1 - 2**n d(., c_x))`` on level ``n``.

    The half-radius balls cover every point, so the normalizing sum is
    always at least one half.
    """
    n = check_int(n, "n")
    if ("pou", n) in filling._cache:
        return filling._cache[("pou", n)]
    ids = filling.vertices_at(n)
    m = filling.membership[ids].tocsr()
    rows = np.repeat(np.arange(ids.shape[0]), np.diff(m.indptr))
    cols = m.indices
    dist = space.distances[filling.center[ids][rows], cols]
    tent = np.maximum(0.0, 1.0 - np.ldexp(dist, n))
    total = np.bincount(cols, weights=tent, minlength=space.n_points)
    if np.any(total <= 0):
        raise DomainError(f"level {n} tents do not cover every point")
    psi = sparse.csr_matrix((tent / total[cols], (rows, cols)),
                            shape=(ids.shape[0], space.n_points))
    psi.eliminate_zeros()
    pou = PartitionOfUnity(level=n, vertices=ids, values=psi, space=space)
    filling._cache[("pou", n)] = pou
    return pou


def save_filling(filling, path):
    Path(path).write_text(json.dumps(filling.to_dict(), indent=1))


def load_filling(path_or_dict, space):
    """Rebuild a filling from its JSON export over `space`.

    Members and measures are recomputed from the space; a recorded measure
    that disagrees with the recomputed one is a parse error.
    """
    if isinstance(path_or_dict, dict):
        data = path_or_dict
    else:
        try:
            data = json.loads(Path(path_or_dict).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path_or_dict}: invalid JSON ({exc})") from exc
    try:
        n_min, n_max = data["levels"]
        verts = sorted(data["vertices"], key=lambda v: v["id"])
        level = np.array([v["level"] for v in verts], dtype=np.int64)
        center = np.array([v["center"] for v in verts], dtype=np.intp)
        recorded = np.array([v.get("measure", np.nan) for v in verts])
        edges = np.array(data["edges"], dtype=np.intp).reshape(-1, 2)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed filling description: {exc}") from exc
    if np.any(np.diff(level) < 0):
        raise ParseError("vertex ids must be ordered by level")
    if center.size and (center.min() < 0 or center.max() >= space.n_points):
        raise ParseError("vertex center outside the space")
    filling = HyperbolicFilling(space, n_min, n_max, level, center,
                                edges[:, 0], edges[:, 1])
    known = ~np.isnan(recorded)
    if not np.allclose(recorded[known], filling.measure[known], rtol=1e-12, atol=0):
        raise ParseError("recorded ball measures do not match the space")
    return filling

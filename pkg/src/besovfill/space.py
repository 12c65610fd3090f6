"""Finite sampled metric measure spaces.

A :class:`PointCloudSpace` is a finite set of points carrying a metric and
positive atomic weights.  Balls are open everywhere in the package:
``B(c, r)`` holds the points at distance strictly less than ``r`` from ``c``.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ._validation import DomainError, ParseError, check_int, check_positive

__all__ = [
    "PointCloudSpace",
    "DoublingEstimate",
    "load_point_cloud",
    "generate_space",
    "parse_space_spec",
    "ball_measure",
    "estimate_doubling",
]

METRICS = ("euclidean", "matrix", "circle")

# exhaustive triangle check up to this many points, sampled beyond
_TRIANGLE_EXHAUSTIVE = 512
_TRIANGLE_SAMPLES = 100_000


class PointCloudSpace:
    """Finite metric measure space with atomic weights.

    Parameters
    ----------
    metric : {'euclidean', 'matrix', 'circle'}
        How distances are obtained.
    weights : array_like, shape (n,)
        Positive mass of each point.
    points : array_like, optional
        Coordinates, shape ``(n, d)`` for 'euclidean' or positions along the
        circle, shape ``(n,)``, for 'circle'.
    distances : array_like, optional
        Full ``(n, n)`` distance matrix, required for 'matrix'.
    perimeter : float
        Circumference used by the 'circle' metric.
    validate : bool
        Check the metric axioms on construction.
    """

    def __init__(self, metric, weights, points=None, distances=None,
                 perimeter=1.0, validate=True):
        if metric not in METRICS:
            raise DomainError(f"unknown metric {metric!r}; expected one of {METRICS}")
        self.metric = metric
        self.perimeter = float(perimeter)
        self.weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        n = self.weights.shape[0]
        if n == 0:
            raise DomainError("space has no points")
        self.points = None
        self._distances = None
        if metric == "matrix":
            if distances is None:
                raise DomainError("metric 'matrix' requires a distance matrix")
            dist = np.asarray(distances, dtype=np.float64)
            if dist.shape != (n, n):
                raise DomainError(
                    f"distance matrix shape {dist.shape} does not match {n} weights")
            self._distances = dist
        else:
            if points is None:
                raise DomainError(f"metric {metric!r} requires points")
            pts = np.asarray(points, dtype=np.float64)
            if metric == "euclidean" and pts.ndim == 1:
                pts = pts[:, None]
            if metric == "circle":
                pts = pts.reshape(-1)
                if self.perimeter <= 0:
                    raise DomainError("perimeter must be positive")
                pts = np.mod(pts, self.perimeter)
            if pts.shape[0] != n:
                raise DomainError(
                    f"{pts.shape[0]} points but {n} weights")
            if not np.all(np.isfinite(pts)):
                raise DomainError("point coordinates must be finite")
            self.points = pts
        if validate:
            self.validate()

    def __len__(self):
        return self.weights.shape[0]

    def __repr__(self):
        return (f"PointCloudSpace(metric={self.metric!r}, n={len(self)}, "
                f"total_mass={self.total_mass:.6g})")

    @property
    def n_points(self):
        return len(self)

    @property
    def total_mass(self):
        return float(self.weights.sum())

    @property
    def distances(self):
        """Dense ``(n, n)`` distance matrix, computed on first access."""
        if self._distances is None:
            if self.metric == "euclidean":
                self._distances = squareform(pdist(self.points))
            else:
                delta = np.abs(self.points[:, None] - self.points[None, :])
                self._distances = np.minimum(delta, self.perimeter - delta)
            self._distances.setflags(write=False)
        return self._distances

    @property
    def diameter(self):
        return float(self.distances.max())

    @property
    def min_distance(self):
        """Smallest distance between distinct points (inf for one point)."""
        if len(self) < 2:
            return math.inf
        d = self.distances
        return float(d[~np.eye(len(self), dtype=bool)].min())

    def coordinate(self, axis=0):
        """Scalar coordinate used to evaluate test functions."""
        if self.metric == "matrix":
            raise DomainError("a 'matrix' space has no coordinates")
        if self.metric == "circle":
            return self.points.copy()
        return self.points[:, axis].copy()

    def validate(self):
        """Raise :class:`DomainError` unless weights and metric are sound."""
        w = self.weights
        if not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite")
        bad = np.flatnonzero(w <= 0)
        if bad.size:
            raise DomainError(
                f"weights must be strictly positive; offending points {bad[:10].tolist()}")
        d = self.distances
        n = len(self)
        if not np.all(np.isfinite(d)):
            raise DomainError("distances must be finite")
        if not np.array_equal(d, d.T):
            i, j = np.argwhere(d != d.T)[0]
            raise DomainError(f"distance matrix is not symmetric at ({i}, {j})")
        if np.any(np.diag(d) != 0):
            raise DomainError("distance matrix must vanish on the diagonal")
        off = d[~np.eye(n, dtype=bool)]
        if np.any(off <= 0):
            i, j = np.argwhere((d <= 0) & ~np.eye(n, dtype=bool))[0]
            raise DomainError(f"points {i} and {j} are at distance {d[i, j]}")
        if self.metric == "matrix":
            self._check_triangle()

    def _check_triangle(self, seed=0):
        d = self.distances
        n = len(self)
        tol = 1e-12 * max(1.0, float(d.max()))
        if n <= _TRIANGLE_EXHAUSTIVE:
            for k in range(n):
                viol = d > d[:, k][:, None] + d[k, :][None, :] + tol
                if viol.any():
                    i, j = np.argwhere(viol)[0]
                    raise DomainError(
                        f"triangle inequality fails for ({i}, {j}) via {k}")
        else:
            rng = np.random.default_rng(seed)
            i, j, k = rng.integers(0, n, size=(3, _TRIANGLE_SAMPLES))
            viol = d[i, j] > d[i, k] + d[k, j] + tol
            if viol.any():
                t = np.flatnonzero(viol)[0]
                raise DomainError(
                    f"triangle inequality fails for ({i[t]}, {j[t]}) via {k[t]}")

    def to_dict(self):
        out = {"metric": self.metric, "weights": self.weights.tolist()}
        if self.metric == "matrix":
            out["distances"] = self.distances.tolist()
        else:
            out["points"] = self.points.tolist()
        if self.metric == "circle":
            out["perimeter"] = self.perimeter
        return out

    @classmethod
    def from_dict(cls, data):
        try:
            metric = data.get("metric", "euclidean")
            points = data.get("points")
            distances = data.get("distances")
            if metric == "matrix":
                n = len(distances)
            else:
                n = len(points)
            weights = data.get("weights")
            if weights is None:
                weights = np.ones(n)
            perimeter = data.get("perimeter", 1.0)
        except (AttributeError, TypeError) as exc:
            raise ParseError(f"malformed space description: {exc}") from exc
        return cls(metric, weights, points=points, distances=distances,
                   perimeter=perimeter)


@dataclass(frozen=True)
class DoublingEstimate:
    """Constants with ``mu(B(c, lam r)) <= C lam**Q mu(B(c, r))``."""

    C: float
    Q: float
    sample_count: int

    def bound(self, lam):
        return self.C * np.asarray(lam, dtype=np.float64) ** self.Q


def _read_csv_rows(path):
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
                continue
            rows.append((lineno, cells))
    return rows


def load_point_cloud(path, format=None, metric="euclidean", weights=None):
    """Read a space from CSV or JSON.

    CSV rows are ``x1,...,xd[,weight]``.  An optional header naming a
    ``weight`` column decides whether weights are present; without a header
    the last column is read as the weight whenever a row has two or more
    columns, unless ``weights`` is given explicitly.  With
    ``metric='matrix'`` each row is a row of the distance matrix, optionally
    followed by a weight.

    JSON follows :meth:`PointCloudSpace.to_dict`.
    """
    path = Path(path)
    if format is None:
        format = path.suffix.lstrip(".").lower()
    if format == "json":
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ParseError(f"{path}: expected a JSON object")
        return PointCloudSpace.from_dict(data)
    if format != "csv":
        raise ParseError(f"unsupported format {format!r}")

    rows = _read_csv_rows(path)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    has_weight = weights
    _, first = rows[0]
    try:
        [float(c) for c in first]
    except ValueError:
        header = [c.lower() for c in first]
        rows = rows[1:]
        if has_weight is None:
            has_weight = bool(header) and header[-1] in ("weight", "w", "mass")
    if not rows:
        raise ParseError(f"{path}: no data rows")

    values = []
    width = None
    for lineno, cells in rows:
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise ParseError(f"{path}: row {lineno}: {exc}") from exc
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ParseError(
                f"{path}: row {lineno}: expected {width} columns, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(f"{path}: row {lineno}: non-finite value")
        values.append(vals)
    table = np.array(values, dtype=np.float64)
    n = table.shape[0]

    if metric == "matrix":
        if has_weight is None:
            has_weight = width == n + 1
        if has_weight:
            w, dist = table[:, -1], table[:, :-1]
        else:
            w, dist = np.ones(n), table
        _check_weight_rows(path, w, rows)
        return PointCloudSpace("matrix", w, distances=dist)

    if has_weight is None:
        has_weight = width >= 2
    if has_weight:
        if width < 2:
            raise ParseError(f"{path}: weight column requires at least 2 columns")
        w, pts = table[:, -1], table[:, :-1]
    else:
        w, pts = np.ones(n), table
    _check_weight_rows(path, w, rows)
    if metric == "circle":
        pts = pts[:, 0]
    return PointCloudSpace(metric, w, points=pts)


def _check_weight_rows(path, w, rows):
    bad = np.flatnonzero(w <= 0)
    if bad.size:
        lines = [rows[i][0] for i in bad[:10]]
        raise DomainError(f"{path}: non-positive weight on row(s) {lines}")


def generate_space(kind, *args):
    """Build a test space.

    ``generate_space('grid1d', n)``, ``generate_space('gridd', n, d)``,
    ``generate_space('circle', n)`` and ``generate_space('cantor', depth)``.
    Weights are uniform with total mass 1.
    """
    if kind == "grid1d":
        (n,) = args
        n = check_int(n, "n", minimum=2)
        pts = np.arange(n, dtype=np.float64) / (n - 1)
        return PointCloudSpace("euclidean", np.full(n, 1.0 / n), points=pts)
    if kind == "gridd":
        n, d = args
        n = check_int(n, "n", minimum=2)
        d = check_int(d, "d", minimum=1)
        axis = np.arange(n, dtype=np.float64) / (n - 1)
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
        return PointCloudSpace("euclidean", np.full(n ** d, 1.0 / n ** d),
                               points=pts)
    if kind == "circle":
        (n,) = args
        n = check_int(n, "n", minimum=2)
        pts = np.arange(n, dtype=np.float64) / n
        return PointCloudSpace("circle", np.full(n, 1.0 / n), points=pts)
    if kind == "cantor":
        (depth,) = args
        depth = check_int(depth, "depth", minimum=1)
        left = np.array([0.0])
        for level in range(1, depth + 1):
            left = np.concatenate([left, left + 2.0 / 3.0 ** level])
        left.sort()
        m = left.shape[0]
        return PointCloudSpace("euclidean", np.full(m, 1.0 / m), points=left)
    raise DomainError(f"unknown generator {kind!r}")


def parse_space_spec(text):
    """Parse ``'grid1d:512'``, ``'gridd:32:2'``, ``'circle:64'``, ``'cantor:6'``."""
    kind, *rest = text.strip().split(":")
    try:
        args = [int(a) for a in rest]
    except ValueError as exc:
        raise DomainError(f"bad space spec {text!r}") from exc
    try:
        return generate_space(kind, *args)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"bad space spec {text!r}: {exc}") from exc


def ball_measure(space, center, r):
    """Mass of the open ball ``B(center, r)``."""
    r = check_positive(r, "r", allow_inf=True)
    center = check_int(center, "center", minimum=0)
    if center >= len(space):
        raise DomainError(f"center {center} out of range")
    inside = space.distances[center] < r
    return float(space.weights[inside].sum())


def _sorted_ball_profile(space, center):
    """Distinct distances from `center` and cumulative closed-ball masses."""
    d = space.distances[center]
    order = np.argsort(d, kind="stable")
    ds, ws = d[order], space.weights[order]
    radii, start = np.unique(ds, return_index=True)
    cum = np.cumsum(ws)
    closed = cum[np.r_[start[1:] - 1, len(ds) - 1]]
    return radii, closed


def _center_doubling_sup(radii, closed, Q):
    """sup over 0 < r <= R of mu(B(R)) (r/R)**Q / mu(B(r)) for one center.

    The mass of an open ball is a step function of the radius, so the
    supremum is approached with ``R`` just above a distance value and ``r``
    equal to the next distance above a smaller one.
    """
    if radii.shape[0] < 2:
        return 1.0
    # a_j = radii[j+1]**Q / closed[j], prefix max over j < i
    a = radii[1:] ** Q / closed[:-1]
    prefix = np.maximum.accumulate(a)
    ratio = closed[1:] / radii[1:] ** Q * prefix
    return max(1.0, float(ratio.max()))


def estimate_doubling(space, trials=2000, seed=0, max_dilation=8.0,
                      max_scale=0.5, exact_centers=2048):
    """Fit doubling constants ``(C, Q)`` for a finite space.

    ``Q`` is the least-squares slope of ``log mu(B(c, lam r)) -
    log mu(B(c, r))`` against ``log lam`` over ``trials`` random triples,
    with ``lam`` log-uniform in ``[1, max_dilation]`` and ``r`` log-uniform
    between the smallest distance and ``max_scale * diameter / lam``, so the
    dilated ball rarely saturates at the whole space.

    ``C`` is then the exact supremum of ``mu(B(c, lam r)) / (lam**Q mu(B(c, r)))``
    over every radius pair, evaluated for every center when the space has at
    most ``exact_centers`` points and for the sampled centers otherwise.  In
    particular the inequality holds on every sampled triple.
    """
    trials = check_int(trials, "trials", minimum=1)
    n = len(space)
    if n < 2:
        raise DomainError("doubling estimate needs at least two points")
    rng = np.random.default_rng(seed)
    d = space.distances
    r_lo, diam = space.min_distance, space.diameter

    centers = rng.integers(0, n, size=trials)
    log_lam = rng.uniform(0.0, math.log(max_dilation), size=trials)
    lam = np.exp(log_lam)
    r_hi = np.maximum(max_scale * diam / lam, r_lo * (1 + 1e-9))
    r = np.exp(rng.uniform(math.log(r_lo), np.log(r_hi)))
    w = space.weights
    rows = d[centers]
    small = (np.where(rows < r[:, None], w[None, :], 0.0)).sum(axis=1)
    large = (np.where(rows < (lam * r)[:, None], w[None, :], 0.0)).sum(axis=1)
    y = np.log(large) - np.log(small)
    x = log_lam
    A = np.stack([np.ones_like(x), x], axis=1)
    (_, slope), *_ = np.linalg.lstsq(A, y, rcond=None)
    Q = max(float(slope), 1e-6)

    exact = np.arange(n) if n <= exact_centers else np.unique(centers)
    C = 1.0
    for c in exact:
        radii, closed = _sorted_ball_profile(space, int(c))
        C = max(C, _center_doubling_sup(radii, closed, Q))
    sampled = float(np.max(large / (lam ** Q * small)))
    C = max(C, sampled)
    return DoublingEstimate(C=C, Q=Q, sample_count=trials)

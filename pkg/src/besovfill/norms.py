"""Sequence quasi-norms on vertices and edges, Besov and Hajlasz norms.

Two computations of the sequence quasi-norm are provided.  The ``overlap``
form takes, on each level ``k``, the ``L^p`` norm of ``sum |u(x)| 1_{B(x)}``
over the sample atoms; the ``weighted`` form replaces it with
``(sum mu(B(x)) |u(x)|**p) ** (1/p)``.  On each level both are multiplied by
``2**(k s)`` and then combined with an ``l^q`` norm.  For ``p <= 1`` and
``p >= 1`` they differ by at most a power of the ball overlap count.
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ._validation import DomainError, check_positive, check_vector
from .calculus import poisson_extend, vertex_derivative

__all__ = [
    "NormParams",
    "HajlaszGradient",
    "HajlaszCheck",
    "level_terms",
    "seq_norm_X",
    "seq_norm_E",
    "combine_levels",
    "dilated_measure",
    "besov_norm",
    "tail_norm",
    "quasi_triangle_constant",
    "hajlasz_explicit_gradient",
    "hajlasz_validate",
    "hajlasz_norm",
    "annulus_index",
]

FORMS = ("overlap", "weighted")


@dataclass(frozen=True)
class NormParams:
    """Smoothness ``s``, integrability ``p`` and summability ``q``.

    ``p`` and ``q`` may be ``math.inf``.  When the doubling exponent ``Q`` is
    supplied, :attr:`admissible` reports whether ``p > Q / (Q + s)``.
    """

    s: float
    p: float
    q: float
    Q: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "s", check_positive(self.s, "s"))
        object.__setattr__(self, "p", check_positive(self.p, "p", allow_inf=True))
        object.__setattr__(self, "q", check_positive(self.q, "q", allow_inf=True))
        if self.Q is not None:
            object.__setattr__(self, "Q", check_positive(self.Q, "Q"))

    @property
    def admissible(self):
        if self.Q is None:
            return None
        return self.p > self.Q / (self.Q + self.s)

    def with_Q(self, Q):
        return NormParams(self.s, self.p, self.q, Q)

    @classmethod
    def parse(cls, text, Q=None):
        """Parse ``'s,p,q'``; ``inf`` is accepted for ``p`` and ``q``."""
        try:
            s, p, q = (float(t) for t in text.split(","))
        except ValueError as exc:
            raise DomainError(f"expected 's,p,q', got {text!r}") from exc
        return cls(s, p, q, Q)

    def to_dict(self):
        return {"s": self.s, "p": _encode(self.p), "q": _encode(self.q)}


def _encode(x):
    return "inf" if math.isinf(x) else x


def _lp(values, weights, p):
    if math.isinf(p):
        return float(values.max()) if values.size else 0.0
    return float(weights @ values ** p) ** (1.0 / p)


def combine_levels(terms, q):
    """``l^q`` norm of the per-level terms."""
    terms = np.asarray(terms, dtype=np.float64)
    if terms.size == 0:
        return 0.0
    if math.isinf(q):
        return float(terms.max())
    top = terms.max()
    if top == 0:
        return 0.0
    # scaled to avoid overflow of 2**(k s q) for fine levels
    return float(top * np.sum((terms / top) ** q) ** (1.0 / q))


def level_terms(group, measure, membership, weights, u, params, form,
                levels):
    """Per-level terms ``2**(k s) * ||level k part of u||`` for ``k in levels``."""
    if form not in FORMS:
        raise DomainError(f"form must be one of {FORMS}, got {form!r}")
    a = np.abs(u)
    out = np.zeros(len(levels))
    for i, k in enumerate(levels):
        idx = np.flatnonzero(group == k)
        if idx.size == 0:
            continue
        if form == "weighted":
            inner = _lp(a[idx], measure[idx], params.p)
        else:
            stacked = membership[idx].T @ a[idx]
            inner = _lp(stacked, weights, params.p)
        out[i] = 2.0 ** (k * params.s) * inner
    return out


def seq_norm_X(filling, u, params, form="weighted", measure=None,
               return_levels=False):
    """Quasi-norm of a vertex sequence.

    ``measure`` replaces the ball masses ``mu(B(x))`` in the weighted form,
    e.g. with :func:`dilated_measure`.
    """
    u = check_vector(u, filling.n_vertices, "u")
    mu = filling.measure if measure is None else np.asarray(measure, dtype=np.float64)
    levels = list(filling.levels)
    terms = level_terms(filling.level, mu, filling.membership,
                        filling.space.weights, u, params, form, levels)
    total = combine_levels(terms, params.q)
    return (total, dict(zip(levels, terms.tolist()))) if return_levels else total


def seq_norm_E(filling, u, params, form="weighted", return_levels=False):
    """Quasi-norm of an edge sequence, grouping edges by ``min`` endpoint level."""
    u = check_vector(u, filling.n_edges, "u")
    levels = list(filling.levels)
    terms = level_terms(filling.edge_level, filling.edge_measure,
                        filling.edge_membership, filling.space.weights, u,
                        params, form, levels)
    total = combine_levels(terms, params.q)
    return (total, dict(zip(levels, terms.tolist()))) if return_levels else total


def dilated_measure(filling, factors):
    """``mu(B(c_x, f_x r_x))`` for per-vertex dilation factors ``f_x``."""
    factors = np.broadcast_to(np.asarray(factors, dtype=np.float64),
                              (filling.n_vertices,))
    space = filling.space
    d = space.distances[filling.center]
    inside = d < (factors * filling.radius)[:, None]
    return inside.astype(np.float64) @ space.weights


def besov_norm(space, filling, f, params, form="weighted", return_levels=False):
    """``|| |d(Pf)| ||`` in the sequence space with parameters `params`."""
    if params.admissible is False:
        warnings.warn(
            f"p={params.p} is not above Q/(Q+s)={params.Q / (params.Q + params.s):.4g}",
            RuntimeWarning, stacklevel=2)
    du = vertex_derivative(filling, poisson_extend(space, filling, f))
    return seq_norm_X(filling, du, params, form=form, return_levels=return_levels)


def tail_norm(filling, u, params, start, form="overlap"):
    """``l^q`` norm of the level terms with ``k >= start``."""
    _, per_level = seq_norm_X(filling, u, params, form=form, return_levels=True)
    return combine_levels([t for k, t in per_level.items() if k >= start], params.q)


def quasi_triangle_constant(p, q):
    """Constant ``K`` in ``||u + v|| <= K (||u|| + ||v||)``."""
    return 2.0 ** (max(1.0 / min(p, q, 1.0) - 1.0, 0.0) + 1.0)


# -- Hajlasz gradients ------------------------------------------------------

def annulus_index(d):
    """Integer ``k`` with ``2**(-k-1) <= d < 2**-k`` (elementwise, ``d > 0``)."""
    _, e = np.frexp(np.asarray(d, dtype=np.float64))
    return -e


@dataclass
class HajlaszGradient:
    """Candidate fractional gradient: ``values[i]`` is ``g_k`` for ``k = ks[i]``."""

    ks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.ks = np.asarray(self.ks, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape[0] != self.ks.shape[0]:
            raise DomainError("one gradient row is needed per k")
        if np.any(self.values < 0):
            raise DomainError("gradient values must be nonnegative")

    def __mul__(self, c):
        return HajlaszGradient(self.ks.copy(), self.values * float(c))

    __rmul__ = __mul__

    def row(self, k):
        hit = np.flatnonzero(self.ks == k)
        if hit.size == 0:
            raise DomainError(f"gradient has no component for k={k}")
        return self.values[hit[0]]


class HajlaszCheck(NamedTuple):
    valid: bool
    ratio: float
    pair: tuple


def _default_ks(filling, space):
    lo = filling.n_min
    hi = filling.n_max
    if space.n_points > 1:
        lo = min(lo, int(annulus_index(space.diameter)))
        hi = max(hi, int(annulus_index(space.min_distance)))
    return np.arange(lo, hi + 1)


def hajlasz_explicit_gradient(filling, space, f, s, ks=None):
    """``g_k = 2**(k s) sum over |x| >= k of |d(Pf)(x)| 1_{B(x)}``.

    The sum runs over the levels present in the filling.  By default ``k``
    covers the level range together with every annulus index realised by a
    pair of sample points.
    """
    s = check_positive(s, "s")
    if s > 1:
        raise DomainError(f"s must lie in (0, 1], got {s}")
    du = vertex_derivative(filling, poisson_extend(space, filling, f))
    levels = list(filling.levels)
    per_level = np.stack([
        filling.membership[filling.vertices_at(n)].T @ du[filling.vertices_at(n)]
        for n in levels
    ])
    suffix = np.cumsum(per_level[::-1], axis=0)[::-1]
    ks = _default_ks(filling, space) if ks is None else np.asarray(ks, dtype=np.int64)
    values = np.zeros((ks.shape[0], space.n_points))
    for i, k in enumerate(ks):
        if k <= filling.n_max:
            values[i] = 2.0 ** (k * s) * suffix[max(k, filling.n_min) - filling.n_min]
    return HajlaszGradient(ks, values)


def hajlasz_validate(space, f, g, s, max_pairs=1_000_000, exhaustive_limit=1024,
                     seed=0):
    """Worst ratio ``|f(a) - f(b)| / (d**s (g_k(a) + g_k(b)))`` over point pairs.

    All pairs are scanned when the space has at most `exhaustive_limit`
    points; otherwise `max_pairs` random pairs.  The gradient is valid when
    the ratio is at most one, and the ratio itself is the smallest factor
    making ``ratio * g`` valid.
    """
    n = space.n_points
    f = check_vector(f, n, "f")
    if n <= exhaustive_limit:
        i, j = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        i, j = rng.integers(0, n, size=(2, max_pairs))
        keep = i != j
        i, j = i[keep], j[keep]
    if i.size == 0:
        return HajlaszCheck(True, 0.0, ())
    d = space.distances[i, j]
    k = annulus_index(d)
    missing = np.setdiff1d(np.unique(k), g.ks)
    if missing.size:
        raise DomainError(f"gradient lacks components for populated annuli k={missing.tolist()}")
    row = np.searchsorted(g.ks, k) if np.all(np.diff(g.ks) > 0) else \
        np.array([np.flatnonzero(g.ks == kk)[0] for kk in k])
    num = np.abs(f[i] - f[j])
    den = d ** s * (g.values[row, i] + g.values[row, j])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / den, np.where(num > 0, np.inf, 0.0))
    w = int(np.argmax(ratio))
    worst = float(ratio[w])
    return HajlaszCheck(worst <= 1.0 + 1e-12, worst, (int(i[w]), int(j[w])))


def hajlasz_norm(space, g, p, q):
    """``l^q`` over ``k`` of ``||g_k||_{L^p}`` for one candidate gradient."""
    p = check_positive(p, "p", allow_inf=True)
    q = check_positive(q, "q", allow_inf=True)
    terms = [_lp(row, space.weights, p) for row in g.values]
    return combine_levels(terms, q)

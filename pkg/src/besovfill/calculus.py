"""Operators between sample functions, vertex sequences and edge sequences.

Sequences are plain 1-D numpy arrays: a vertex sequence is indexed by vertex
id, an edge sequence by edge index (the order of ``filling.tail``), and a
sample function by point id.  Every operator is linear and accepts real or
complex input.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, check_int, check_vector
from .filling import partition_of_unity

__all__ = [
    "ConvergenceDiagnostics",
    "poisson_extend",
    "vertex_derivative",
    "edge_derivative",
    "discrete_convolution",
    "trace",
    "t_operator",
    "level_integral",
    "integrate_edges",
]


def poisson_extend(space, filling, f):
    """Ball averages ``Pf(x)`` of a sample function."""
    f = check_vector(f, space.n_points, "f")
    return (filling.membership @ (space.weights * f)) / filling.measure


def vertex_derivative(filling, u):
    """``|du(x)| = (sum over neighbours x' of |u(x') - u(x)|**2) ** 0.5``."""
    u = check_vector(u, filling.n_vertices, "u")
    sq = np.abs(u[filling.head] - u[filling.tail]) ** 2
    acc = (np.bincount(filling.tail, weights=sq, minlength=filling.n_vertices)
           + np.bincount(filling.head, weights=sq, minlength=filling.n_vertices))
    return np.sqrt(acc)


def edge_derivative(filling, u):
    """Head value minus tail value on every oriented edge."""
    u = check_vector(u, filling.n_vertices, "u")
    return u[filling.head] - u[filling.tail]


def discrete_convolution(filling, space, u, n):
    """``T_n u = sum over x in X_n of u(x) psi_x``, as a sample function."""
    u = check_vector(u, filling.n_vertices, "u")
    pou = partition_of_unity(filling, space, n)
    return pou.values.T @ u[pou.vertices]


@dataclass
class ConvergenceDiagnostics:
    """Increments of ``T_n u`` between consecutive levels.

    ``l1[i]`` is ``||T_{n+1} u - T_n u||_{L^1}`` and ``sup[i]`` the sup norm of
    the same difference, for ``n = levels[i]``.
    """

    levels: list
    l1: np.ndarray
    sup: np.ndarray

    @property
    def total_l1(self):
        return float(np.sum(self.l1))

    def to_dict(self):
        return {"levels": self.levels, "l1": self.l1.tolist(),
                "sup": self.sup.tolist()}


def trace(filling, space, u):
    """``T_{n_max} u`` with the per-level increment diagnostics."""
    u = check_vector(u, filling.n_vertices, "u")
    levels = list(filling.levels)
    prev = discrete_convolution(filling, space, u, levels[0])
    l1, sup = [], []
    for n in levels[1:]:
        cur = discrete_convolution(filling, space, u, n)
        delta = np.abs(cur - prev)
        l1.append(float(space.weights @ delta))
        sup.append(float(delta.max()))
        prev = cur
    diag = ConvergenceDiagnostics(levels=levels[:-1], l1=np.array(l1),
                                  sup=np.array(sup))
    return prev, diag


def t_operator(filling, u):
    """``Tu(x) = sum of mu(B(y)) / mu(B(x)) u(y)`` over intersecting ``|y| >= |x|``.

    Truncated at the finest level of the filling.
    """
    u = check_vector(u, filling.n_vertices, "u")
    mu = filling.measure
    weighted = mu * u
    out = np.zeros(filling.n_vertices, dtype=weighted.dtype)
    levels = list(filling.levels)
    for i, a in enumerate(levels):
        ia = filling.vertices_at(a)
        for b in levels[i:]:
            ib = filling.vertices_at(b)
            out[ia] += filling.intersecting(ia, ib) @ weighted[ib]
    return out / mu


def _cross_kernel(filling, space, n):
    """Sparse rows ``psi_y * psi_y'`` for the edges from ``X_n`` to ``X_{n+1}``."""
    key = ("cross", n)
    if key in filling._cache:
        return filling._cache[key]
    lo = partition_of_unity(filling, space, n)
    hi = partition_of_unity(filling, space, n + 1)
    lvl_t, lvl_h = filling.level[filling.tail], filling.level[filling.head]
    edges = np.flatnonzero((lvl_t == n) & (lvl_h == n + 1))
    rows_t = filling.tail[edges] - lo.vertices[0]
    rows_h = filling.head[edges] - hi.vertices[0]
    kernel = lo.values[rows_t].multiply(hi.values[rows_h]).tocsr()
    filling._cache[key] = (edges, kernel)
    return edges, kernel


def level_integral(filling, space, u, n):
    """``I_n u = sum of u(e) psi_y psi_y'`` over edges ``y ~ y'`` from level n to n+1."""
    u = check_vector(u, filling.n_edges, "u")
    n = check_int(n, "n")
    if not filling.n_min <= n < filling.n_max:
        raise DomainError(
            f"level {n} needs levels {n} and {n + 1} inside "
            f"[{filling.n_min}, {filling.n_max}]")
    edges, kernel = _cross_kernel(filling, space, n)
    return kernel.T @ u[edges]


def integrate_edges(filling, space, u, basepoint=0):
    """Integrate an edge sequence back to a sample function.

    Sums ``I_n u`` over ``n_min <= n < n_max`` and subtracts the values at
    ``basepoint`` of the terms with negative ``n``.  The result is defined up
    to an additive constant.
    """
    u = check_vector(u, filling.n_edges, "u")
    basepoint = check_int(basepoint, "basepoint", minimum=0)
    if basepoint >= space.n_points:
        raise DomainError(f"basepoint {basepoint} out of range")
    if filling.n_max - filling.n_min < 1:
        raise DomainError("edge integration needs at least two levels")
    total = np.zeros(space.n_points, dtype=u.dtype)
    offset = 0.0
    for n in range(filling.n_min, filling.n_max):
        term = level_integral(filling, space, u, n)
        total = total + term
        if n < 0:
            offset = offset + term[basepoint]
    return total - offset

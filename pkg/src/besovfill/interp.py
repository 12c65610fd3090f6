"""Calderon products of sequence spaces.

:func:`calderon_factorize` splits a sequence ``u`` into nonnegative factors
``u0, u1`` with ``|u| = u0**(1-theta) * u1**theta`` and
``||u0||**(1-theta) ||u1||**theta`` controlled by ``||u||`` in the
interpolated space.  Norms here use the weighted form, for which the control
is an equality up to rounding.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._validation import DomainError, check_vector
from .norms import NormParams, seq_norm_E, seq_norm_X

__all__ = [
    "FactorizationCertificate",
    "interp_params",
    "calderon_factorize",
    "calderon_verify",
    "factorization_error",
]


def _recip(x):
    return Fraction(0) if math.isinf(x) else 1 / Fraction(x)


def _from_recip(r):
    return math.inf if r == 0 else float(1 / r)


def interp_params(params0, params1, theta):
    """Interpolated ``(s, p, q)``: harmonic in ``p, q`` and affine in ``s``.

    The arithmetic is carried out exactly on the binary values of the inputs
    and rounded once.
    """
    if not 0 < theta < 1:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    t = Fraction(theta)
    p = _from_recip((1 - t) * _recip(params0.p) + t * _recip(params1.p))
    q = _from_recip((1 - t) * _recip(params0.q) + t * _recip(params1.q))
    s = float((1 - t) * Fraction(params0.s) + t * Fraction(params1.s))
    Q = params0.Q if params0.Q is not None else params1.Q
    return NormParams(s, p, q, Q)


@dataclass
class FactorizationCertificate:
    u0: np.ndarray
    u1: np.ndarray
    theta: float
    params0: NormParams
    params1: NormParams
    params: NormParams
    max_pointwise_error: float
    norm_u0: float
    norm_u1: float
    norm_u: float
    bound_ratio: float
    on: str = "vertices"

    def to_dict(self, u=None):
        out = {
            "u0": self.u0.tolist(),
            "u1": self.u1.tolist(),
            "theta": self.theta,
            "params0": self.params0.to_dict(),
            "params1": self.params1.to_dict(),
            "params": self.params.to_dict(),
            "on": self.on,
            "max_pointwise_error": self.max_pointwise_error,
            "norms": {"u0": self.norm_u0, "u1": self.norm_u1, "u": self.norm_u},
            "bound_ratio": self.bound_ratio,
        }
        if u is not None:
            out["u"] = np.abs(np.asarray(u)).tolist()
        return out


def _lattice(filling, on):
    if on == "vertices":
        return filling.level, filling.measure, filling.n_vertices, seq_norm_X
    if on == "edges":
        return filling.edge_level, filling.edge_measure, filling.n_edges, seq_norm_E
    raise DomainError(f"'on' must be 'vertices' or 'edges', got {on!r}")


def _level_sums(group, measure, a, p):
    """Per-element value of the level aggregate: ``sum mu |u|**p`` or ``max |u|``."""
    out = np.zeros_like(a)
    for k in np.unique(group):
        idx = group == k
        if math.isinf(p):
            out[idx] = a[idx].max()
        else:
            out[idx] = measure[idx] @ a[idx] ** p
    return out


def _power(base, expo):
    # zero bases raised to zero give one, to a positive power give zero
    with np.errstate(divide="ignore"):
        return np.where(base > 0, base ** expo, np.where(expo == 0, 1.0, 0.0))


def factorization_error(u, u0, u1, theta):
    """Largest ``| |u| - u0**(1-theta) u1**theta |``."""
    prod = _power(np.asarray(u0), 1 - theta) * _power(np.asarray(u1), theta)
    return float(np.max(np.abs(np.abs(u) - prod))) if np.size(u) else 0.0


def calderon_factorize(filling, u, params0, params1, theta, on="vertices"):
    """Factor ``|u| = u0**(1-theta) u1**theta`` level by level.

    With ``S_k`` the level aggregate ``sum over level k of mu |u|**p`` the
    factors are ``2**((q/q_i) s k - s_i k) |u|**(p/p_i) S_k**(q/(q_i p) - 1/p_i)``
    when ``min(q0, q1)`` is finite, and
    ``2**((s - s_i) k) |u|**(p/p_i) S_k**(1/p - 1/p_i)`` when ``q0 = q1 = inf``.
    When ``p0 = p1 = inf`` the aggregate is the level maximum ``M_k`` and the
    factors are ``2**((q/q_i) s k - s_i k) |u| M_k**(q/q_i - 1)`` (reducing to
    ``2**((s - s_i) k) |u|`` for ``q0 = q1 = inf``).  Levels where ``u``
    vanishes get zero factors.
    """
    group, measure, size, norm = _lattice(filling, on)
    u = check_vector(u, size, "u")
    a = np.abs(u)
    if not np.any(a > 0):
        raise DomainError("cannot factor the zero sequence")
    params = interp_params(params0, params1, theta)
    s, p, q = params.s, params.p, params.q
    k = group.astype(np.float64)
    both_q_inf = math.isinf(params0.q) and math.isinf(params1.q)

    factors = []
    for pi in (params0, params1):
        if math.isinf(p):
            agg = _level_sums(group, measure, a, math.inf)
            if both_q_inf:
                ui = 2.0 ** ((s - pi.s) * k) * a
            else:
                r = 0.0 if math.isinf(pi.q) else q / pi.q
                ui = 2.0 ** ((r * s - pi.s) * k) * a * _power(agg, r - 1.0)
        else:
            agg = _level_sums(group, measure, a, p)
            inv_pi = 0.0 if math.isinf(pi.p) else 1.0 / pi.p
            if both_q_inf:
                scale, expo = s - pi.s, 1.0 / p - inv_pi
            else:
                r = 0.0 if math.isinf(pi.q) else q / pi.q
                scale, expo = r * s - pi.s, r / p - inv_pi
            ui = 2.0 ** (scale * k) * _power(a, p * inv_pi) * _power(agg, expo)
        ui = np.where(agg > 0, ui, 0.0)
        factors.append(ui)
    u0, u1 = factors

    err = factorization_error(a, u0, u1, theta)
    n0 = norm(filling, u0, params0)
    n1 = norm(filling, u1, params1)
    nu = norm(filling, a, params)
    ratio = n0 ** (1 - theta) * n1 ** theta / nu
    return FactorizationCertificate(
        u0=u0, u1=u1, theta=theta, params0=params0, params1=params1,
        params=params, max_pointwise_error=err, norm_u0=n0, norm_u1=n1,
        norm_u=nu, bound_ratio=ratio, on=on)


def calderon_verify(filling, u, v0, v1, params0, params1, theta, on="vertices"):
    """``sup |u| / (v0**(1-theta) v1**theta)`` after normalizing each witness.

    An upper bound for the Calderon-product quasi-norm of ``u`` witnessed by
    ``(v0, v1)``.  Zero over zero counts as zero; a positive value over zero
    as infinity.
    """
    _, _, size, norm = _lattice(filling, on)
    u = check_vector(u, size, "u")
    v0 = np.abs(check_vector(v0, size, "v0"))
    v1 = np.abs(check_vector(v1, size, "v1"))
    n0, n1 = norm(filling, v0, params0), norm(filling, v1, params1)
    if n0 == 0 or n1 == 0:
        raise DomainError("witnesses must be nonzero")
    den = _power(v0 / n0, 1 - theta) * _power(v1 / n1, theta)
    a = np.abs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, a / den, np.where(a > 0, np.inf, 0.0))
    return float(ratio.max()) if ratio.size else 0.0

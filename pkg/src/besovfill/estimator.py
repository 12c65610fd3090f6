"""scikit-learn transformer over a fixed sampled space.

:class:`FillingTransformer` treats each row of ``X`` as a function sampled on
the points of ``space`` and maps it to filling coordinates:

- ``output='edge'``: the discrete derivative ``d(Pf)`` on oriented edges,
  inverted (up to a constant) by edge integration;
- ``output='poisson'``: the Poisson extension ``Pf``, inverted by the trace;
- ``output='gradient'``: the magnitudes ``|d(Pf)|`` per vertex (no inverse).

Because the geometry is a constructor parameter, the transformer drops into
a :class:`sklearn.pipeline.Pipeline` like any feature extractor.

>>> import numpy as np
>>> from besovfill import FillingTransformer
>>> ft = FillingTransformer(space="grid1d:64", n_min=0, n_max=6)
>>> F = ft.fit_transform(np.random.default_rng(0).normal(size=(3, 64)))
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import DomainError
from .calculus import (edge_derivative, integrate_edges, poisson_extend,
                       trace, vertex_derivative)
from .filling import build_filling
from .norms import NormParams, besov_norm
from .space import PointCloudSpace, parse_space_spec

__all__ = ["FillingTransformer", "check_functions"]

OUTPUTS = ("edge", "poisson", "gradient")


def check_functions(X, n_points, name="X"):
    """Validate a batch of sampled functions, shape ``(n_samples, n_points)``."""
    X = check_array(X, dtype=np.float64, ensure_2d=False, input_name=name)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n_points:
        raise ValueError(
            f"{name} has {X.shape[1]} columns but the space has {n_points} points")
    return X


class FillingTransformer(TransformerMixin, BaseEstimator):
    """Map sampled functions to hyperbolic-filling coordinates.

    Parameters
    ----------
    space : PointCloudSpace or str
        The sampled space, or a generator string such as ``'grid1d:512'``.
    n_min, n_max : int
        Level range of the filling.
    output : {'edge', 'poisson', 'gradient'}
        Which representation :meth:`transform` returns.
    basepoint : int
        Point id used to normalize edge integration.

    Attributes
    ----------
    space_ : PointCloudSpace
    filling_ : HyperbolicFilling
    n_features_in_ : int
    """

    def __init__(self, space=None, n_min=0, n_max=9, output="edge", basepoint=0):
        self.space = space
        self.n_min = n_min
        self.n_max = n_max
        self.output = output
        self.basepoint = basepoint

    def _resolve_space(self):
        if isinstance(self.space, PointCloudSpace):
            return self.space
        if isinstance(self.space, str):
            return parse_space_spec(self.space)
        raise DomainError("space must be a PointCloudSpace or a generator string")

    def fit(self, X=None, y=None):
        if self.output not in OUTPUTS:
            raise ValueError(f"output must be one of {OUTPUTS}, got {self.output!r}")
        self.space_ = self._resolve_space()
        self.filling_ = build_filling(self.space_, self.n_min, self.n_max)
        self.n_features_in_ = self.space_.n_points
        if X is not None:
            check_functions(X, self.n_features_in_)
        return self

    def transform(self, X):
        check_is_fitted(self, "filling_")
        X = check_functions(X, self.n_features_in_)
        sp, fl = self.space_, self.filling_
        rows = []
        for f in X:
            pf = poisson_extend(sp, fl, f)
            if self.output == "poisson":
                rows.append(pf)
            elif self.output == "edge":
                rows.append(edge_derivative(fl, pf))
            else:
                rows.append(vertex_derivative(fl, pf))
        return np.vstack(rows)

    def inverse_transform(self, X):
        """Trace (``'poisson'``) or edge integration (``'edge'``).

        Edge integration recovers functions only up to an additive constant.
        """
        check_is_fitted(self, "filling_")
        sp, fl = self.space_, self.filling_
        if self.output == "poisson":
            X = check_array(X, dtype=np.float64)
            return np.vstack([trace(fl, sp, u)[0] for u in X])
        if self.output == "edge":
            X = check_array(X, dtype=np.float64)
            return np.vstack([integrate_edges(fl, sp, u, self.basepoint) for u in X])
        raise ValueError("output='gradient' has no inverse")

    def besov_norm(self, X, s=0.5, p=2.0, q=2.0):
        """Besov quasi-norm of every row of `X`."""
        check_is_fitted(self, "filling_")
        X = check_functions(X, self.n_features_in_)
        params = NormParams(s, p, q)
        return np.array([besov_norm(self.space_, self.filling_, f, params) for f in X])

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "filling_")
        fl = self.filling_
        if self.output == "edge":
            return np.array([f"e{t}_{h}" for t, h in zip(fl.tail, fl.head)], dtype=object)
        return np.array([f"x{v}" for v in range(fl.n_vertices)], dtype=object)

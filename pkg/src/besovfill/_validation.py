"""Exceptions and small input-validation helpers shared by every module."""

import math
import numbers

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class ParseError(ValueError):
    """An input file could not be parsed."""


class FillingWarning(UserWarning):
    """The requested level range is poorly matched to the sampled space."""


def check_positive(value, name, allow_inf=False):
    if not isinstance(value, numbers.Real) or math.isnan(value):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    if value <= 0:
        raise DomainError(f"{name} must be positive, got {value!r}")
    if math.isinf(value) and not allow_inf:
        raise DomainError(f"{name} must be finite, got {value!r}")
    return float(value)


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_vector(values, size, name, allow_complex=True):
    """Return `values` as a finite 1-D array of length `size`."""
    arr = np.asarray(values)
    if arr.dtype == object:
        raise DomainError(f"{name} must be numeric")
    if np.iscomplexobj(arr):
        if not allow_complex:
            raise DomainError(f"{name} must be real-valued")
        arr = arr.astype(np.complex128)
    else:
        arr = arr.astype(np.float64)
    if arr.ndim != 1 or arr.shape[0] != size:
        raise DomainError(
            f"{name} must have shape ({size},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr

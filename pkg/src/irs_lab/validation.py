"""Input validation helpers shared by every module."""

import numbers

import numpy as np

from .exceptions import ConfigError, MatrixError


def as_cmatrix(A, name="A"):
    """Return ``A`` as a finite, 2-D ``complex128`` array.

    Raises
    ------
    MatrixError
        If ``A`` is not 2-D, has an empty dimension, or holds NaN/Inf.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise MatrixError(f"{name} must be 2-D, got ndim={A.ndim}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise MatrixError(f"{name} must have at least one row and column, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise MatrixError(f"{name} has non-finite entries")
    return A


def as_cvector(x, name="x"):
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 2 and 1 in x.shape:
        x = x.ravel()
    if x.ndim != 1 or x.size < 1:
        raise MatrixError(f"{name} must be a non-empty vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise MatrixError(f"{name} has non-finite entries")
    return x


def as_square(A, name="A"):
    A = as_cmatrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise MatrixError(f"{name} must be square, got {A.shape}")
    return A


def check_rel_tol(rel_tol):
    if not (0.0 < rel_tol < 1.0):
        raise MatrixError(f"rel_tol must lie in (0, 1), got {rel_tol!r}")
    return float(rel_tol)


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_finite(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a real number, got {value!r}") from None
    if not np.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value}")
    return value


def check_point(p, name):
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ConfigError(f"{name} must be a finite 3-D coordinate, got {p!r}")
    return p

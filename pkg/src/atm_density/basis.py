"""Univariate feature families and their tensor products.

Degree 0 is always the constant function 1. For the Hermite-function family
degree ``n >= 1`` is ``P_n(x) exp(-x**2/4)`` where ``P_n`` is the probabilists'
Hermite polynomial normalized to unit norm under the standard Gaussian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .multiindex import DimensionError, DownwardClosedSet

FAMILIES = ("hermite_function", "linear", "constant_only")
_MAX_DEGREE = {"hermite_function": None, "linear": 1, "constant_only": 0}


def check_family(family: str) -> str:
    if family not in FAMILIES:
        raise ValueError(f"unknown feature family {family!r}; expected one of {FAMILIES}")
    return family


def admissible(family: str, alpha) -> bool:
    """Whether a multi-index names a feature of ``family``.

    The linear family is restricted to total degree one, so that every
    fitted component stays affine.
    """
    cap = _MAX_DEGREE[check_family(family)]
    return cap is None or sum(alpha) <= cap


def _check_degree(family, degree):
    cap = _MAX_DEGREE[check_family(family)]
    if degree < 0 or (cap is not None and degree > cap):
        raise ValueError(f"degree {degree} is invalid for family {family!r}")


def _hermite_rows(x, maxdeg: int) -> np.ndarray:
    """Degree-major recurrence: row ``n`` holds ``P_n`` at the flattened ``x``."""
    out = np.empty((maxdeg + 1, x.size))
    out[0] = 1.0
    if maxdeg >= 1:
        out[1] = x
    for n in range(1, maxdeg):
        np.multiply(x, out[n], out=out[n + 1])
        out[n + 1] -= math.sqrt(n) * out[n - 1]
        out[n + 1] *= 1.0 / math.sqrt(n + 1)
    return out


def hermite_polynomials(x, maxdeg: int) -> np.ndarray:
    """Orthonormal probabilists' Hermite polynomials, shape ``x.shape + (maxdeg+1,)``.

    Uses the normalized recurrence so no factorials appear.
    """
    x = np.asarray(x, dtype=float)
    return _hermite_rows(x.reshape(-1), maxdeg).T.reshape(x.shape + (maxdeg + 1,))


def univariate_table(family: str, x, maxdeg: int, deriv: bool = False) -> np.ndarray:
    """Values (or derivatives) of degrees ``0..maxdeg`` at ``x``.

    Returns an array of shape ``x.shape + (maxdeg + 1,)``.
    """
    _check_degree(family, maxdeg)
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    rows = np.zeros((maxdeg + 1, flat.size))
    if not deriv:
        rows[0] = 1.0
    if maxdeg >= 1 and family == "linear":
        rows[1] = 1.0 if deriv else flat
    elif maxdeg >= 1:
        # hermite_function; degree 0 stays the constant 1
        poly = _hermite_rows(flat, maxdeg)
        weight = np.exp(-0.25 * flat * flat)
        with np.errstate(over="ignore", invalid="ignore"):
            if deriv:
                n = np.sqrt(np.arange(1, maxdeg + 1))[:, None]
                vals = (n * poly[:-1] - (0.5 * flat) * poly[1:]) * weight
            else:
                vals = poly[1:] * weight
        # far tails: the Gaussian weight underflows before the polynomial overflows
        tail = weight == 0.0
        if tail.any():
            vals[:, tail] = 0.0
        rows[1:] = vals
    return np.ascontiguousarray(rows.T).reshape(x.shape + (maxdeg + 1,))


def eval_univariate(family: str, degree: int, x):
    _check_degree(family, degree)
    val = univariate_table(family, x, degree)[..., degree]
    return val if np.ndim(val) else float(val)


def eval_univariate_deriv(family: str, degree: int, x):
    _check_degree(family, degree)
    val = univariate_table(family, x, degree, deriv=True)[..., degree]
    return val if np.ndim(val) else float(val)


def _as_points(x, k):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != k:
        raise DimensionError(f"points have dimension {x.shape[1]}, expected {k}")
    return x, single


def _index_array(index_set) -> np.ndarray:
    members = list(index_set)
    dim = index_set.dim if hasattr(index_set, "dim") else len(members[0])
    return np.array(members, dtype=int).reshape(len(members), dim)


def offdiag_rows(family: str, alphas: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Products of univariate features over all but the last coordinate.

    ``alphas`` is an ``(m, k)`` integer array and ``x`` is ``(n, k)``; the
    last column of ``x`` is ignored. Returns an ``(n, m)`` array.
    """
    n, k = x.shape
    out = np.ones((n, alphas.shape[0]))
    for j in range(k - 1):
        degs = alphas[:, j]
        top = int(degs.max()) if degs.size else 0
        if top == 0:
            continue
        out *= univariate_table(family, x[:, j], top)[:, degs]
    return out


def feature_rows(index_set, family: str, x):
    """Feature values ``psi_alpha(x)`` and last-coordinate partials.

    ``x`` may be a single point or an ``(n, k)`` batch; columns follow the
    lexicographic member order of ``index_set``.
    """
    check_family(family)
    alphas = _index_array(index_set)
    x, single = _as_points(x, alphas.shape[1])
    off = offdiag_rows(family, alphas, x)
    last = alphas[:, -1]
    top = int(last.max()) if last.size else 0
    rows = off * univariate_table(family, x[:, -1], top)[:, last]
    partial = off * univariate_table(family, x[:, -1], top, deriv=True)[:, last]
    if single:
        return rows[0], partial[0]
    return rows, partial


@dataclass(frozen=True, eq=False)
class FeatureExpansion:
    """Linear combination ``f = sum_alpha c_alpha psi_alpha`` over a downward-closed set."""

    index_set: DownwardClosedSet
    coeffs: np.ndarray
    family: str = "hermite_function"

    def __post_init__(self):
        check_family(self.family)
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size != len(self.index_set):
            raise ValueError(
                f"{c.size} coefficients for {len(self.index_set)} features")
        for a in self.index_set:
            if not admissible(self.family, a):
                raise ValueError(f"{a} is not a {self.family} feature")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.index_set.dim

    @classmethod
    def zero(cls, dim: int, family: str = "hermite_function") -> "FeatureExpansion":
        return cls(DownwardClosedSet(dim), np.zeros(0), family)

    def alphas(self) -> np.ndarray:
        return _index_array(self.index_set)

    def __call__(self, x):
        return eval_expansion(self, x)


def eval_expansion(f: FeatureExpansion, x):
    x, single = _as_points(x, f.dim)
    if len(f.index_set) == 0:
        val = np.zeros(x.shape[0])
    else:
        rows, _ = feature_rows(f.index_set, f.family, x)
        val = rows @ f.coeffs
    return float(val[0]) if single else val


def eval_expansion_partial_k(f: FeatureExpansion, x):
    x, single = _as_points(x, f.dim)
    if len(f.index_set) == 0:
        val = np.zeros(x.shape[0])
    else:
        _, partial = feature_rows(f.index_set, f.family, x)
        val = partial @ f.coeffs
    return float(val[0]) if single else val

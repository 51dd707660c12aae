"""Rectified monotone functions.

A smooth expansion ``f`` becomes a function increasing in its last variable,

    S(x) = f(x_<k, 0) + int_0^{x_k} g(d_k f(x_<k, t)) dt,

where ``g`` is the base-2 soft-plus (positive, invertible, ``g(0) = 1``) or,
for comparison only, the square function.

Every feature factors as ``off_alpha(x_<k) * psi_{alpha_k}(x_k)``, so the
integrand along the line only needs the univariate basis in the last
variable once the off-diagonal factors are known. ``ComponentEvaluator``
exploits this: it caches the off-diagonal factors for a fixed batch of points
and re-integrates only a ``(degree + 1)``-vector per sample per node.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .basis import FeatureExpansion, eval_expansion_partial_k, offdiag_rows, univariate_table
from .multiindex import DimensionError

LN2 = np.log(2.0)
G_KINDS = ("softplus", "square")


def check_g(kind: str) -> str:
    if kind not in G_KINDS:
        raise ValueError(f"unknown rectifier {kind!r}; expected one of {G_KINDS}")
    return kind


def _out(val):
    return val if np.ndim(val) else float(val)


def g_and_deriv(kind: str, xi):
    """``(g(xi), g'(xi))`` sharing one exponential; arrays in, arrays out."""
    xi = np.asarray(xi, dtype=float)
    if check_g(kind) == "square":
        return xi * xi, 2.0 * xi
    u = xi * LN2
    e = np.exp(-np.abs(u))
    val = (np.maximum(u, 0.0) + np.log1p(e)) / LN2
    inv = 1.0 / (1.0 + e)
    return val, np.where(u >= 0, inv, e * inv)


def g_eval(kind: str, xi):
    xi = np.asarray(xi, dtype=float)
    if check_g(kind) == "square":
        return _out(xi * xi)
    return _out(np.logaddexp(0.0, xi * LN2) / LN2)


def g_deriv(kind: str, xi):
    xi = np.asarray(xi, dtype=float)
    if check_g(kind) == "square":
        return _out(2.0 * xi)
    u = xi * LN2
    # logistic(u), written to avoid exp overflow on either side
    e = np.exp(-np.abs(u))
    return _out(np.where(u >= 0, 1.0 / (1.0 + e), e / (1.0 + e)))


def log_g(kind: str, xi):
    """``log g(xi)``; for the square function this is ``-inf`` at zero."""
    xi = np.asarray(xi, dtype=float)
    if check_g(kind) == "square":
        with np.errstate(divide="ignore"):
            return _out(2.0 * np.log(np.abs(xi)))
    u = xi * LN2
    with np.errstate(divide="ignore"):
        # softplus(u) ~ exp(u) far left; take the log analytically there
        val = np.where(u < -30.0, u, np.log(np.logaddexp(0.0, np.minimum(u, 700.0))))
        val = np.where(u > 700.0, np.log(np.maximum(u, 1.0)), val)
    return _out(val - np.log(LN2))


def g_inv(kind: str, y):
    """Inverse of the soft-plus rectifier, defined for ``y > 0``."""
    if check_g(kind) == "square":
        raise NotImplementedError("the square rectifier is not invertible")
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise ValueError("g_inv is only defined for positive arguments")
    u = y * LN2
    with np.errstate(over="ignore"):
        small = np.log(np.expm1(np.minimum(u, 1.0)))
    large = u + np.log(-np.expm1(-np.maximum(u, 1.0)))
    return _out(np.where(u > 1.0, large, small) / LN2)


@dataclass(frozen=True, eq=False)
class MapComponent:
    """``S = R(f)``: monotone in the last of its ``dim`` inputs."""

    f: FeatureExpansion
    g: str = "softplus"
    quad_tol: float = 1e-3

    def __post_init__(self):
        check_g(self.g)
        if not self.quad_tol > 0:
            raise ValueError("quadrature tolerance must be positive")

    @property
    def dim(self) -> int:
        return self.f.dim

    def __call__(self, x):
        return eval_component(self, x)


@dataclass
class Evaluation:
    """Per-sample values of a rectified function over a batch.

    ``value_grad``/``partial_grad`` are ``(n, m)`` and only present when
    gradients were requested.
    """

    value: np.ndarray
    xi: np.ndarray               # d_k f at the sample points
    partial: np.ndarray          # g(xi)
    value_grad: np.ndarray | None = None
    partial_grad: np.ndarray | None = None
    intervals: np.ndarray | None = field(default=None, repr=False)


_CACHE_BYTES = 256 * 2 ** 20


class ComponentEvaluator:
    """Evaluate ``R(f)`` for many coefficient vectors on a fixed batch.

    ``alphas`` is an ``(m, k)`` array of multi-indices; coefficient vectors
    passed to :meth:`evaluate` are ordered like its rows.
    """

    def __init__(self, alphas, x, family="hermite_function", g="softplus",
                 quad_tol=1e-3, atol=1e-10, max_intervals=2 ** 12):
        self.alphas = np.asarray(alphas, dtype=int).reshape(-1, np.shape(x)[-1])
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.alphas.shape[1]:
            raise DimensionError(f"batch of shape {x.shape} does not match {self.alphas.shape[1]} inputs")
        self.x = x
        self.family = family
        self.g = check_g(g)
        self.quad_tol = quad_tol
        self.atol = atol
        self.max_intervals = max_intervals
        self.last = self.alphas[:, -1]
        self.top = int(self.last.max()) if self.last.size else 0
        self.off = offdiag_rows(family, self.alphas, x)
        self.at_zero = self.off * univariate_table(family, 0.0, self.top)[self.last]
        self.dpsi = self.off * univariate_table(family, x[:, -1], self.top, deriv=True)[:, self.last]
        # derivative tables at the first-level quadrature nodes never change
        self._nodes0 = quadrature.nodes(np.zeros(x.shape[0]), x[:, -1])
        self._table0 = univariate_table(family, self._nodes0, self.top, deriv=True)
        # one-hot map from features to their last-coordinate degree
        self._onehot = np.zeros((self.alphas.shape[0], self.top + 1))
        self._onehot[np.arange(self.alphas.shape[0]), self.last] = 1.0
        # refined subintervals recur across coefficient vectors; keep their tables
        self._cache = {}
        self._cache_limit = max(1, _CACHE_BYTES // (15 * (self.top + 1) * 8))

    def _tables(self, owner, t):
        """Derivative tables at the nodes ``t`` of refined intervals, cached."""
        keys = list(zip(owner.tolist(), t[:, 0].tolist(), t[:, -1].tolist()))
        cache = self._cache
        missing = [i for i, key in enumerate(keys) if key not in cache]
        if not missing:
            return np.stack([cache[key] for key in keys])
        fresh = univariate_table(self.family, t[missing], self.top, deriv=True)
        if len(missing) == len(keys):
            out = fresh
        else:
            out = np.empty(t.shape + (self.top + 1,))
            hit = np.ones(len(keys), dtype=bool)
            hit[missing] = False
            out[hit] = np.stack([cache[key] for key, h in zip(keys, hit) if h])
            out[missing] = fresh
        if len(cache) + len(missing) > self._cache_limit:
            cache.clear()
        if len(missing) <= self._cache_limit:
            for i, table in zip(missing, fresh):
                cache[keys[i]] = table
        return out

    def evaluate(self, c, grad=False) -> Evaluation:
        c = np.asarray(c, dtype=float).reshape(-1)
        n = self.x.shape[0]
        top = self.top
        # B[i, q]: coefficient of psi'_q(t) in d_k f(x_i,<k, t)
        B = (self.off * c) @ self._onehot
        g = self.g

        nodes0 = self._nodes0
        xi0 = np.einsum("ijq,iq->ij", self._table0, B)

        def integrand(owner, t):
            if t is nodes0:
                return np.atleast_1d(g_eval(g, xi0))[..., None]
            D = self._tables(owner, t)
            return np.atleast_1d(g_eval(g, np.einsum("ijq,iq->ij", D, B[owner])))[..., None]

        ints, _, counts, part = quadrature.integrate(
            integrand, np.zeros(n), self.x[:, -1], rtol=self.quad_tol,
            atol=self.atol, max_intervals=self.max_intervals,
            initial=integrand(None, nodes0), return_partition=True)
        xi = self.dpsi @ c
        ev = Evaluation(value=self.at_zero @ c + ints[:, 0], xi=xi,
                        partial=np.atleast_1d(g_eval(g, xi)), intervals=counts)
        if grad:
            # d/dc of the line integral, on the partition chosen for the value
            w = part.weights()
            orig = part.original
            G = np.zeros((n, top + 1))
            o = part.owner[orig]
            G[o] = np.einsum("ij,ijq->iq", w[orig] * np.atleast_1d(g_deriv(g, xi0[o])),
                             self._table0[o])
            if not orig.all():
                rest = ~orig
                o = part.owner[rest]
                D = self._tables(o, quadrature.nodes(part.lo[rest], part.hi[rest]))
                xr = np.einsum("ijq,iq->ij", D, B[o])
                contrib = np.einsum("ij,ijq->iq", w[rest] * np.atleast_1d(g_deriv(g, xr)), D)
                for j in range(top + 1):
                    G[:, j] += np.bincount(o, weights=contrib[:, j], minlength=n)
            ev.value_grad = self.at_zero + self.off * G[:, self.last]
            ev.partial_grad = np.atleast_1d(g_deriv(g, xi))[:, None] * self.dpsi
        return ev

    def line(self, c, t):
        """Value and last partial with the last coordinate replaced by ``t``.

        Only the cached off-diagonal factors are used, so this is cheap to
        call repeatedly from a root finder.
        """
        c = np.asarray(c, dtype=float).reshape(-1)
        t = np.asarray(t, dtype=float).reshape(-1)
        top, family, g = self.top, self.family, self.g
        B = (self.off * c) @ self._onehot
        base = self.at_zero @ c

        def integrand(owner, nodes):
            D = univariate_table(family, nodes, top, deriv=True)
            return np.atleast_1d(g_eval(g, np.einsum("ijq,iq->ij", D, B[owner])))[..., None]

        ints, _, _ = quadrature.integrate(
            integrand, np.zeros(t.size), t, rtol=self.quad_tol,
            atol=self.atol, max_intervals=self.max_intervals)
        D = univariate_table(family, t, top, deriv=True)
        partial = np.atleast_1d(g_eval(g, np.einsum("ij,ij->i", D, B)))
        return base + ints[:, 0], partial


def _points(x, k):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != k:
        raise DimensionError(f"points have dimension {x.shape[1]}, expected {k}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input point")
    return x, single


def _evaluator(c: MapComponent, x) -> ComponentEvaluator:
    return ComponentEvaluator(c.f.alphas(), x, c.f.family, c.g, c.quad_tol)


def eval_component(c: MapComponent, x):
    """``S(x)`` for one point or an ``(n, k)`` batch."""
    x, single = _points(x, c.dim)
    val = _evaluator(c, x).evaluate(c.f.coeffs).value
    return float(val[0]) if single else val


def eval_component_partial_k(c: MapComponent, x):
    """``d_k S(x) = g(d_k f(x))``; no quadrature involved."""
    x, single = _points(x, c.dim)
    xi = np.atleast_1d(eval_expansion_partial_k(c.f, x))
    val = np.atleast_1d(g_eval(c.g, xi))
    return float(val[0]) if single else val


def eval_component_with_coeff_grad(c: MapComponent, x):
    """Value, coefficient gradient, last partial and its coefficient gradient."""
    x, single = _points(x, c.dim)
    ev = _evaluator(c, x).evaluate(c.f.coeffs, grad=True)
    out = (ev.value, ev.value_grad, ev.partial, ev.partial_grad)
    if single:
        return float(out[0][0]), out[1][0], float(out[2][0]), out[3][0]
    return out


class RectifierInverse:
    """``h = R^{-1}(S)`` evaluated pointwise by quadrature.

    ``h(x) = S(x_<k, 0) + int_0^{x_k} g^{-1}(d_k S(x_<k, t)) dt``.
    """

    def __init__(self, component: MapComponent, check_positive: bool = True):
        if component.g != "softplus":
            raise NotImplementedError("only the soft-plus rectifier is invertible")
        self.component = component
        self.check_positive = check_positive

    def __call__(self, x):
        c = self.component
        x, single = _points(x, c.dim)
        base = x.copy()
        base[:, -1] = 0.0
        start = np.atleast_1d(eval_component(c, base))

        def integrand(owner, t):
            pts = np.repeat(x[owner], t.shape[1], axis=0)
            pts[:, -1] = t.reshape(-1)
            partial = np.atleast_1d(eval_component_partial_k(c, pts))
            if self.check_positive and not np.all(partial > 0):
                raise ValueError("d_k S is not positive along the integration path")
            return np.atleast_1d(g_inv(c.g, partial)).reshape(t.shape + (1,))

        ints, _, _ = quadrature.integrate(integrand, np.zeros(len(x)), x[:, -1],
                                          rtol=c.quad_tol)
        val = start + ints[:, 0]
        return float(val[0]) if single else val


def inverse_rectify(component: MapComponent, check_positive: bool = True) -> RectifierInverse:
    return RectifierInverse(component, check_positive)

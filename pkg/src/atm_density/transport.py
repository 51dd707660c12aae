"""Lower-triangular transport maps built from rectified components."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Standardization
from .rectifier import ComponentEvaluator, MapComponent, log_g


class InversionError(RuntimeError):
    """Root bracketing failed while inverting a map component."""


def _batch(x, width):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if width == 1 and x.shape[0] == 1 and x.shape[1] != 1 and single:
        x = x.T
        single = False
    if x.shape[1] != width:
        raise ValueError(f"expected {width} columns, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return x, single


@dataclass(frozen=True, eq=False)
class TriangularMap:
    """``S(x) = (S^1(x_1), S^2(x_1:2), ...)`` acting on standardized inputs.

    For a conditional map the first ``m_y`` inputs are covariates: only the
    components for the remaining ``d`` inputs are stored, component ``i``
    reading the first ``m_y + i + 1`` standardized inputs.
    """

    components: tuple[MapComponent, ...]
    standardization: Standardization
    m_y: int = 0
    traces: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for i, comp in enumerate(self.components):
            if comp.dim != self.m_y + i + 1:
                raise ValueError(f"component {i} has {comp.dim} inputs, expected {self.m_y + i + 1}")
        if len(self.standardization.mean) != self.n_inputs:
            raise ValueError("standardization does not match the number of inputs")

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def n_inputs(self) -> int:
        return self.m_y + self.d

    def _std(self, x):
        return self.standardization.apply(x)

    def forward(self, x):
        """Reference-space image of original-space inputs (all ``n_inputs`` columns)."""
        return self.forward_with_logdet(x)[0]

    def forward_with_logdet(self, x, adjust=True):
        """``(S(x), log det grad S(x))``; ``adjust`` adds the standardization Jacobian."""
        x, single = _batch(x, self.n_inputs)
        z_in = self._std(x)
        out = np.empty((x.shape[0], self.d))
        logdet = np.zeros(x.shape[0])
        for i, comp in enumerate(self.components):
            ev = ComponentEvaluator(comp.f.alphas(), z_in[:, :self.m_y + i + 1],
                                    comp.f.family, comp.g, comp.quad_tol).evaluate(comp.f.coeffs)
            out[:, i] = ev.value
            logdet += log_g(comp.g, ev.xi)
        if adjust:
            logdet -= float(np.sum(np.log(self.standardization.std[self.m_y:])))
        if single:
            return out[0], float(logdet[0])
        return out, logdet

    def inverse(self, z, y=None, tol=1e-10):
        """Original-space ``x`` with ``S(y, x) = z``, solved component by component."""
        z, single = _batch(z, self.d)
        n = z.shape[0]
        cols = np.zeros((n, self.n_inputs))
        if self.m_y:
            if y is None:
                raise ValueError("conditional map needs covariates y")
            y = np.atleast_2d(np.asarray(y, dtype=float))
            if y.shape[0] == 1 and n > 1:
                y = np.repeat(y, n, axis=0)
            if y.shape != (n, self.m_y):
                raise ValueError(f"covariates must have shape ({n}, {self.m_y})")
            cols[:, :self.m_y] = (y - self.standardization.mean[:self.m_y]) / self.standardization.std[:self.m_y]
        for i, comp in enumerate(self.components):
            k = self.m_y + i + 1
            ev = ComponentEvaluator(comp.f.alphas(), cols[:, :k], comp.f.family, comp.g, comp.quad_tol)
            cols[:, k - 1] = _solve_monotone(lambda t: ev.line(comp.f.coeffs, t), z[:, i], tol)
        x = self.standardization.invert(cols)[:, self.m_y:]
        return x[0] if single else x


def _solve_monotone(line, target, tol=1e-10, max_iter=200, limit=1e6):
    """Safeguarded Newton/bisection for increasing ``t -> line(t)[0]``, per row.

    The bracket starts at ``[-1, 1]`` and is doubled until the sign changes.
    """
    lo = -np.ones(target.size)
    hi = np.ones(target.size)
    while True:
        below = line(lo)[0] > target
        if not below.any():
            break
        hi[below] = lo[below]
        lo[below] *= 2.0
        if np.abs(lo).max() > limit:
            raise InversionError("could not bracket the root within |t| <= 1e6")
    while True:
        above = line(hi)[0] < target
        if not above.any():
            break
        lo[above] = hi[above]
        hi[above] *= 2.0
        if np.abs(hi).max() > limit:
            raise InversionError("could not bracket the root within |t| <= 1e6")
    t = 0.5 * (lo + hi)
    active = np.ones(target.size, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        val, der = line(t)
        res = val - target
        done = np.abs(res) <= tol
        pos = res > 0
        hi = np.where(pos, t, hi)
        lo = np.where(pos, lo, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t - res / der
        inside = (newton > lo) & (newton < hi)
        step = np.where(inside, newton, 0.5 * (lo + hi))
        collapsed = (hi - lo) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(t))
        active &= ~(done | collapsed)
        t = np.where(active, step, t)
    return t


@dataclass(frozen=True, eq=False)
class ComposedMap:
    """``S = S_last o ... o S_first``; each stage sees the previous stage's output."""

    stages: tuple

    @property
    def d(self) -> int:
        return self.stages[-1].d

    @property
    def m_y(self) -> int:
        return 0

    @property
    def n_inputs(self) -> int:
        return self.stages[0].n_inputs

    @property
    def standardization(self) -> Standardization:
        return self.stages[0].standardization

    def forward(self, x):
        return self.forward_with_logdet(x)[0]

    def forward_with_logdet(self, x, adjust=True):
        x = np.asarray(x, dtype=float)
        total = 0.0
        for i, stage in enumerate(self.stages):
            x, ld = stage.forward_with_logdet(x, adjust=adjust if i == 0 else True)
            total = total + ld
        return x, total

    def inverse(self, z, y=None, tol=1e-10):
        for stage in reversed(self.stages):
            z = stage.inverse(z, tol=tol)
        return z

"""Sample-average objectives for a single map component.

For a component ``s`` monotone in its last input the empirical objective is

    J(s) = mean_i [ s(x_i)**2 / 2 - log d_k s(x_i) ]

and for ``s = R(f)`` it becomes a smooth, unconstrained function of the
expansion coefficients. A conditional component is the same objective on
the concatenated columns ``(y, x_1:k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rectifier import ComponentEvaluator, MapComponent, g_deriv, g_eval, log_g


@dataclass(frozen=True)
class ObjectiveConfig:
    l2_penalty: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.l2_penalty) and self.l2_penalty >= 0):
            raise ValueError("l2 penalty must be finite and non-negative")


def as_batch(x, k: int | None = None) -> np.ndarray:
    """Validate a sample matrix: 2-d, finite, at least one row."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("a sample batch needs at least one row")
    if k is not None and x.shape[1] != k:
        raise ValueError(f"batch has {x.shape[1]} columns, expected {k}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample batch contains NaN or Inf")
    return x


def raw_objective(s_values, s_partials) -> float:
    s_values = np.asarray(s_values, dtype=float)
    s_partials = np.asarray(s_partials, dtype=float)
    if np.any(~(s_partials > 0)):
        raise ValueError("partials must be strictly positive")
    return float(np.mean(0.5 * s_values ** 2 - np.log(s_partials)))


class ComponentObjective:
    """Objective and gradient in the coefficients on a fixed batch.

    Reuses one :class:`ComponentEvaluator`, so repeated calls from an
    optimizer only pay for the line integrals.
    """

    def __init__(self, alphas, batch, family="hermite_function", g="softplus",
                 config: ObjectiveConfig | None = None, quad_tol=1e-3):
        batch = as_batch(batch)
        self.config = config or ObjectiveConfig()
        self.g = g
        self.evaluator = ComponentEvaluator(alphas, batch, family, g, quad_tol)
        self.n = batch.shape[0]

    def value(self, c) -> float:
        c = np.asarray(c, dtype=float)
        ev = self.evaluator.evaluate(c)
        lam = self.config.l2_penalty
        return float(np.mean(0.5 * ev.value ** 2 - log_g(self.g, ev.xi)) + lam * c @ c)

    def value_and_grad(self, c):
        c = np.asarray(c, dtype=float)
        ev = self.evaluator.evaluate(c, grad=True)
        lam = self.config.l2_penalty
        val = np.mean(0.5 * ev.value ** 2 - log_g(self.g, ev.xi)) + lam * c @ c
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.atleast_1d(g_deriv(self.g, ev.xi)) / np.atleast_1d(g_eval(self.g, ev.xi))
        per_sample = ev.value[:, None] * ev.value_grad - ratio[:, None] * self.evaluator.dpsi
        grad = per_sample.mean(axis=0) + 2.0 * lam * c
        return float(val), grad

    __call__ = value_and_grad


def _component_objective(c: MapComponent, batch, cfg):
    batch = as_batch(batch, c.dim)
    return ComponentObjective(c.f.alphas(), batch, c.f.family, c.g, cfg, c.quad_tol)


def rectified_objective(c: MapComponent, batch, cfg: ObjectiveConfig | None = None) -> float:
    return _component_objective(c, batch, cfg).value(c.f.coeffs)


def rectified_objective_grad(c: MapComponent, batch, cfg: ObjectiveConfig | None = None):
    return _component_objective(c, batch, cfg).value_and_grad(c.f.coeffs)


def reduced_margin_scores(c: MapComponent, batch, candidates, cfg: ObjectiveConfig | None = None):
    """``|dL/dc_alpha|`` for each candidate, with its coefficient held at zero.

    Returns a dict keyed by candidate multi-index.
    """
    candidates = [tuple(int(v) for v in a) for a in candidates]
    for a in candidates:
        if a in c.f.index_set:
            raise ValueError(f"candidate {a} is already active")
    if not candidates:
        return {}
    active = c.f.alphas()
    alphas = np.vstack([active, np.array(candidates, dtype=int)])
    coeffs = np.concatenate([c.f.coeffs, np.zeros(len(candidates))])
    batch = as_batch(batch, c.dim)
    obj = ComponentObjective(alphas, batch, c.f.family, c.g, cfg, c.quad_tol)
    _, grad = obj.value_and_grad(coeffs)
    return {a: float(abs(v)) for a, v in zip(candidates, grad[len(active):])}

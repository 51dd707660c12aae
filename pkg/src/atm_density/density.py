"""Pullback densities, likelihood scoring, inversion and sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import make_rng

LOG_2PI = math.log(2.0 * math.pi)


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("density evaluation at non-finite input")
    return x


def _log_reference(z):
    return -0.5 * np.sum(z * z, axis=-1) - 0.5 * z.shape[-1] * LOG_2PI


def pullback_log_density(tmap, x, adjust=True):
    """``log eta(S(x)) + log det grad S(x)`` for a joint map.

    With ``adjust`` the value refers to the original (unstandardized)
    variables. Accepts one point or an ``(n, d)`` batch.
    """
    if tmap.m_y:
        raise ValueError("conditional map: use conditional_log_density")
    x = _check_finite(x)
    z, logdet = tmap.forward_with_logdet(x, adjust=adjust)
    val = _log_reference(np.asarray(z)) + logdet
    return float(val) if np.ndim(val) == 0 else val


def conditional_log_density(tmap, y, x, adjust=True):
    """``log pi(x | y)`` from the target block of a conditional map."""
    x = np.atleast_1d(_check_finite(x))
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if tmap.m_y == 0:
        val = pullback_log_density(tmap, x, adjust)
    else:
        y = np.atleast_2d(_check_finite(y))
        if y.shape[0] == 1 and x.shape[0] > 1:
            y = np.repeat(y, x.shape[0], axis=0)
        z, logdet = tmap.forward_with_logdet(np.hstack([y, x]), adjust=adjust)
        val = _log_reference(z) + logdet
    val = np.atleast_1d(val)
    return float(val[0]) if single else val


@dataclass
class LogDensityReport:
    """``log_density`` is per sample, in standardized coordinates."""

    log_density: np.ndarray
    mean_nll: float
    adjusted: bool
    log_std_sum: float

    def to_dict(self, per_sample=False) -> dict:
        out = {"mean_nll": self.mean_nll, "adjusted": self.adjusted,
               "log_std_sum": self.log_std_sum, "n": int(self.log_density.size)}
        if per_sample:
            out["log_density"] = [float(v) for v in self.log_density]
        return out


def negative_log_likelihood(tmap, batch, adjust=True) -> LogDensityReport:
    """Mean NLL over a test batch (all ``n_inputs`` columns, covariates first)."""
    batch = _check_finite(batch)
    if batch.ndim == 1:
        batch = batch[:, None]
    if batch.shape[0] == 0:
        raise ValueError("empty test batch")
    if batch.shape[1] != tmap.n_inputs:
        raise ValueError(f"test batch has {batch.shape[1]} columns, map expects {tmap.n_inputs}")
    z, logdet = tmap.forward_with_logdet(batch, adjust=False)
    logdens = _log_reference(z) + logdet
    log_std = float(np.sum(np.log(tmap.standardization.std[tmap.m_y:])))
    nll = -float(np.mean(logdens))
    if adjust:
        nll += log_std
    return LogDensityReport(logdens, nll, adjust, log_std)


def invert(tmap, z, y=None):
    """``x`` with ``S(x) = z`` (``S(y, x) = z`` for conditional maps)."""
    return tmap.inverse(_check_finite(z), y=y)


def sample(tmap, count: int, seed=0, y=None):
    """Draw ``count`` samples by pushing reference normals through ``S^{-1}``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return np.empty((0, tmap.d))
    z = make_rng(seed).standard_normal((count, tmap.d))
    return np.atleast_2d(tmap.inverse(z, y=y)).reshape(count, tmap.d)

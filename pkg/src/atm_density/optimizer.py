"""BFGS with a strong-Wolfe line search.

The objective is any callable returning ``(value, gradient)``. Convergence is
declared when the max-norm of the gradient drops below ``grad_tol``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericalError(ArithmeticError):
    """Objective or gradient is not finite where it has to be."""


@dataclass(frozen=True)
class OptimOptions:
    grad_tol: float = 1e-6
    max_iters: int = 500
    c1: float = 1e-4
    c2: float = 0.9
    max_ls_trials: int = 40
    refine: bool = True

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("need 0 < c1 < c2 < 1")
        if not (self.grad_tol > 0 and self.max_iters >= 0 and self.max_ls_trials > 0):
            raise ValueError("tolerances and budgets must be positive")


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str = ""
    history: list | None = None
    inv_hessian: np.ndarray | None = None


def _norm(g):
    return float(np.max(np.abs(g))) if g.size else 0.0


def _interpolate(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi):
    """Cubic minimizer on ``[a_lo, a_hi]``, bisection when it is unusable."""
    lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
    if np.isfinite(f_hi) and np.isfinite(d_hi):
        d1 = d_lo + d_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi)
        rad = d1 * d1 - d_lo * d_hi
        if rad >= 0:
            d2 = np.sign(a_hi - a_lo) * np.sqrt(rad)
            a = a_hi - (a_hi - a_lo) * (d_hi + d2 - d1) / (d_hi - d_lo + 2.0 * d2)
            width = hi - lo
            if np.isfinite(a):
                return float(np.clip(a, lo + 0.01 * width, hi - 0.01 * width))
    elif np.isfinite(f_hi):
        # quadratic through f_lo, d_lo and f_hi
        step = a_hi - a_lo
        curv = f_hi - f_lo - d_lo * step
        if curv > 0:
            a = a_lo - d_lo * step * step / (2.0 * curv)
            width = hi - lo
            return float(np.clip(a, lo + 0.01 * width, hi - 0.01 * width))
    return 0.5 * (a_lo + a_hi)


def _cubic_min(a, f, d, d0, f0):
    """Minimizer of the cubic through ``(0, f0, d0)`` and ``(a, f, d)``."""
    d1 = d0 + d - 3.0 * (f0 - f) / (0.0 - a)
    rad = d1 * d1 - d0 * d
    if rad < 0:
        return None
    d2 = np.sqrt(rad)
    denom = d - d0 + 2.0 * d2
    if denom == 0:
        return None
    a_star = a - a * (d + d2 - d1) / denom
    if not (np.isfinite(a_star) and 0 < a_star < 20.0 * a):
        return None
    return float(a_star)


def line_search(fun, x, f0, g0, p, opts: OptimOptions, a_init=1.0):
    """Strong-Wolfe step along ``p``. Returns ``(a, f, g)`` or ``None``."""
    d0 = float(g0 @ p)
    trials = 0

    def phi(a):
        nonlocal trials
        trials += 1
        f, g = fun(x + a * p)
        g = np.asarray(g, dtype=float)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            return np.inf, np.inf, g
        return float(f), float(g @ p), g

    def zoom(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi, g_lo):
        floor = 8.0 * np.finfo(float).eps * max(1.0, abs(f0))
        while trials < opts.max_ls_trials:
            # predicted change below the resolution of f: nothing left to find
            if abs(a_hi - a_lo) * abs(d0) <= floor:
                break
            a = _interpolate(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            f, d, g = phi(a)
            if f > f0 + opts.c1 * a * d0 or f >= f_lo:
                a_hi, f_hi, d_hi = a, f, d
            else:
                if abs(d) <= -opts.c2 * d0:
                    return refine(a, f, d, g)
                if d * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo, g_lo = a, f, d, g
        # budget gone: settle for sufficient decrease if we have it
        if a_lo > 0 and f_lo < f0:
            return a_lo, f_lo, g_lo
        return None

    def refine(a, f, d, g):
        # One cubic step towards the line minimum. Near-exact line searches
        # keep the finite-termination behaviour of BFGS on quadratics.
        if not opts.refine or trials >= opts.max_ls_trials or abs(d) <= 1e-4 * abs(d0):
            return a, f, g
        a_star = _cubic_min(a, f, d, d0, f0)
        if a_star is None or abs(a_star - a) <= 1e-6 * a:
            return a, f, g
        f2, d2, g2 = phi(a_star)
        if f2 <= f and f2 <= f0 + opts.c1 * a_star * d0 and abs(d2) <= -opts.c2 * d0:
            return a_star, f2, g2
        return a, f, g

    a_prev, f_prev, d_prev, g_prev = 0.0, f0, d0, g0
    a = a_init
    while trials < opts.max_ls_trials:
        f, d, g = phi(a)
        if f > f0 + opts.c1 * a * d0 or (a_prev > 0 and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, a, f, d, g_prev)
        if abs(d) <= -opts.c2 * d0:
            return refine(a, f, d, g)
        if d >= 0:
            return zoom(a, f, d, a_prev, f_prev, d_prev, g)
        a_prev, f_prev, d_prev, g_prev = a, f, d, g
        guess = _cubic_min(a, f, d, d0, f0)
        a = 4.0 * a if guess is None else min(max(guess, 2.0 * a), 10.0 * a)
    return None


def minimize(fun, x0, opts: OptimOptions | None = None, record=False, inv_hessian=None) -> OptimResult:
    """Minimize ``fun`` from ``x0``.

    ``inv_hessian`` optionally seeds the inverse-Hessian approximation (it
    must be symmetric positive definite); otherwise the identity is used and
    rescaled after the first accepted step.
    """
    opts = opts or OptimOptions()
    x = np.array(x0, dtype=float).reshape(-1)
    f, g = fun(x)
    g = np.asarray(g, dtype=float)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise NumericalError("objective or gradient is not finite at the initial point")
    f = float(f)
    history = [f] if record else None
    n = x.size
    if inv_hessian is None:
        H = np.eye(n)
        first = True
    else:
        H = np.array(inv_hessian, dtype=float)
        if H.shape != (n, n):
            raise ValueError("inverse Hessian seed has the wrong shape")
        first = False
    for it in range(opts.max_iters + 1):
        gn = _norm(g)
        if gn <= opts.grad_tol:
            return OptimResult(x, f, gn, it, True, "gradient tolerance reached", history, H)
        if it == opts.max_iters:
            break
        p = -H @ g
        if not g @ p < 0:
            H = np.eye(n)
            p = -g
        # the first step of a call is capped at unit length in the max-norm
        a0 = min(1.0, 1.0 / max(_norm(p), 1e-300)) if it == 0 else 1.0
        step = line_search(fun, x, f, g, p, opts, a0)
        if step is None:
            return OptimResult(x, f, gn, it, False, "line search failed", history, H)
        a, f_new, g_new = step
        s = a * p
        y = g_new - g
        x = x + s
        f, g = f_new, g_new
        if record:
            history.append(f)
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            if first:
                H = np.eye(n) * (sy / float(y @ y))
                first = False
            rho = 1.0 / sy
            Hy = H @ y
            H = H + ((sy + y @ Hy) * rho * rho) * np.outer(s, s) - rho * (np.outer(Hy, s) + np.outer(s, Hy))
    return OptimResult(x, f, _norm(g), opts.max_iters, False, "iteration limit", history, H)

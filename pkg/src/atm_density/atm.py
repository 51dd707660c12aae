"""Greedy adaptive transport maps (ATM).

Each map component is grown one feature at a time. The next multi-index is
the reduced-margin candidate with the largest objective gradient magnitude;
after every insertion all coefficients are re-optimized from a warm start.
The number of features is chosen by K-fold cross-validation over
``m = 1..ceil(sqrt(n))``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import FeatureExpansion, admissible, check_family
from .data import Standardization, fit_standardization, kfold
from .multiindex import DownwardClosedSet
from .objective import ComponentObjective, ObjectiveConfig, as_batch, reduced_margin_scores
from .optimizer import OptimOptions, minimize
from .rectifier import MapComponent, check_g
from .transport import ComposedMap, TriangularMap

SCORE_FLOOR = 1e-12


class ConfigError(ValueError):
    """Inconsistent fitting configuration."""


@dataclass(frozen=True)
class AtmConfig:
    max_features: int | None = None     # None: ceil(sqrt(n))
    folds: int = 5
    family: str = "hermite_function"
    g: str = "softplus"
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    optim: OptimOptions = field(default_factory=OptimOptions)
    seed: int = 0
    quad_tol: float = 1e-3
    standardize: bool = True
    n_jobs: int = 1
    cv_patience: int | None = 10        # None or 0: grow every fold path to the budget

    def __post_init__(self):
        check_family(self.family)
        check_g(self.g)
        if self.max_features is not None and self.max_features < 1:
            raise ConfigError("max_features must be at least 1")
        if self.folds < 2:
            raise ConfigError("cross-validation needs at least 2 folds")
        if self.cv_patience is not None and self.cv_patience < 0:
            raise ConfigError("cv_patience must be non-negative")

    def feature_budget(self, n: int) -> int:
        return self.max_features if self.max_features is not None else math.ceil(math.sqrt(n))


@dataclass
class FitTrace:
    selected: list = field(default_factory=list)
    train_objective: list = field(default_factory=list)
    validation_objective: list = field(default_factory=list)
    fold_validation: np.ndarray | None = None
    mean_validation: np.ndarray | None = None
    chosen_m: int | None = None
    truncated: bool = False

    def to_dict(self) -> dict:
        out = {
            "selected": [list(a) for a in self.selected],
            "train_objective": list(self.train_objective),
            "chosen_m": self.chosen_m,
            "truncated": self.truncated,
        }
        if self.mean_validation is not None:
            out["mean_validation"] = [float(v) for v in self.mean_validation]
            out["fold_validation"] = [[float(v) for v in row] for row in self.fold_validation]
        return out


def _component(index_set, coeffs, cfg):
    return MapComponent(FeatureExpansion(index_set, coeffs, cfg.family), cfg.g, cfg.quad_tol)


def _objective(index_set, batch, cfg):
    return ComponentObjective(np.array(index_set.members, dtype=int).reshape(-1, index_set.dim),
                              batch, cfg.family, cfg.g, cfg.objective, cfg.quad_tol)


class GreedyPath:
    """One run of the greedy enrichment loop, advanced one insertion at a time.

    ``step`` inserts the reduced-margin candidate with the largest gradient
    score (smallest multi-index on ties) and re-optimizes every coefficient
    from a warm start. It returns False once the path cannot grow.
    """

    def __init__(self, batch, cfg: AtmConfig, validation=None):
        self.batch = as_batch(batch)
        if self.batch.shape[0] < 2:
            raise ConfigError("need at least two samples to fit a component")
        self.cfg = cfg
        self.validation = None if validation is None else as_batch(validation, self.batch.shape[1])
        self.active = DownwardClosedSet(self.batch.shape[1])
        self.coeffs = np.zeros(0)
        self.trace = FitTrace()
        self._hess = None
        self.done = False

    def component(self) -> MapComponent:
        return _component(self.active, self.coeffs, self.cfg)

    def step(self) -> bool:
        if self.done:
            return False
        cfg = self.cfg
        cands = [a for a in self.active.reduced_margin() if admissible(cfg.family, a)]
        if not cands:
            return self._stop()
        scores = reduced_margin_scores(self.component(), self.batch, cands, cfg.objective)
        best, best_score = cands[0], scores[cands[0]]
        for a in cands[1:]:        # candidates are sorted: ties keep the smallest
            if scores[a] > best_score:
                best, best_score = a, scores[a]
        if len(self.active) and best_score < SCORE_FLOOR:
            return self._stop()
        new = self.active.insert(best)
        pos = new.index(best)
        init = np.insert(self.coeffs, pos, 0.0)
        H0 = None
        if self._hess is not None:
            # keep the curvature learned so far; the new direction starts at unit scale
            H0 = np.insert(np.insert(self._hess, pos, 0.0, axis=0), pos, 0.0, axis=1)
            H0[pos, pos] = np.mean(np.diag(self._hess))
        res = minimize(_objective(new, self.batch, cfg), init, cfg.optim, inv_hessian=H0)
        self.active, self.coeffs, self._hess = new, res.x, res.inv_hessian
        self.trace.selected.append(best)
        self.trace.train_objective.append(res.fun)
        if self.validation is not None:
            val_obj = _objective(self.active, self.validation, replace(cfg, objective=ObjectiveConfig()))
            self.trace.validation_objective.append(val_obj.value(self.coeffs))
        return True

    def _stop(self):
        self.done = True
        self.trace.truncated = True
        return False


def fit_component(batch, m: int, cfg: AtmConfig | None = None, validation=None):
    """Greedy enrichment for one component; returns ``(MapComponent, FitTrace)``.

    Starts from the empty set and inserts ``m`` features unless every
    candidate score vanishes first. If ``validation`` is given, its
    (unpenalized) objective is recorded after every insertion.
    """
    cfg = cfg or AtmConfig()
    if m < 1:
        raise ConfigError("need at least one feature")
    path = GreedyPath(batch, cfg, validation)
    for _ in range(m):
        if not path.step():
            break
    return path.component(), path.trace


@dataclass
class CrossValidation:
    chosen_m: int
    mean_validation: np.ndarray
    component: MapComponent
    trace: FitTrace


def cross_validate_m(batch, cfg: AtmConfig | None = None, n_total: int | None = None) -> CrossValidation:
    """Pick the feature count by K-fold validation, then refit on all rows.

    One greedy path per fold is grown in lockstep with the others; the
    validation objective after each insertion gives the curve over ``m``.
    Growth stops at ``ceil(sqrt(n))`` features, or earlier once the
    fold-mean curve has not improved for ``cfg.cv_patience`` insertions.
    A path that cannot grow further keeps its last validation value.
    """
    cfg = cfg or AtmConfig()
    batch = as_batch(batch)
    n = batch.shape[0]
    if cfg.folds > n:
        raise ConfigError(f"{cfg.folds} folds but only {n} samples")
    plan = kfold(n, cfg.folds, cfg.seed)
    if n - max(len(f) for f in plan.folds) < 2:
        raise ConfigError("training folds are too small to fit")
    m_max = cfg.feature_budget(n_total or n)
    paths = []
    for i in range(plan.k):
        train, val = plan.split(i)
        paths.append(GreedyPath(batch[train], cfg, validation=batch[val]))
    rows, best, best_m = [], np.inf, 0
    for m in range(1, m_max + 1):
        for path in paths:
            path.step()
        row = [p.trace.validation_objective[-1] for p in paths]
        rows.append(row)
        mean_m = float(np.mean(row))
        if mean_m < best:
            best, best_m = mean_m, m
        if all(p.done for p in paths):
            break
        if cfg.cv_patience and m - best_m >= cfg.cv_patience:
            break
    curves = np.array(rows).T
    mean = curves.mean(axis=0)
    chosen = int(np.argmin(mean)) + 1
    comp, trace = fit_component(batch, chosen, cfg)
    trace.fold_validation = curves
    trace.mean_validation = mean
    trace.chosen_m = chosen
    return CrossValidation(chosen, mean, comp, trace)


def _prepare(batch, cfg):
    batch = as_batch(batch)
    if cfg.standardize:
        stats = fit_standardization(batch)
    else:
        stats = Standardization.identity(batch.shape[1])
    return batch, stats, stats.apply(batch)


def _cv_job(args):
    z, cfg, n = args
    res = cross_validate_m(z, cfg, n)
    return res.component, res.trace


def _run(jobs, cfg):
    if cfg.n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            return list(pool.map(_cv_job, jobs))
    return [_cv_job(j) for j in jobs]


def fit_conditional(batch, m_y: int, cfg: AtmConfig | None = None) -> TriangularMap:
    """Fit the components for the columns after the first ``m_y`` covariates.

    Component ``i`` reads all covariates and the first ``i + 1`` targets; it
    is monotone in its own target. Components are fitted independently.
    """
    cfg = cfg or AtmConfig()
    batch, stats, z = _prepare(batch, cfg)
    if not 0 <= m_y < batch.shape[1]:
        raise ConfigError("conditional split must leave at least one target column")
    n = batch.shape[0]
    jobs = [(z[:, :k], cfg, n) for k in range(m_y + 1, batch.shape[1] + 1)]
    results = _run(jobs, cfg)
    return TriangularMap(tuple(r[0] for r in results), stats, m_y, tuple(r[1] for r in results))


def fit_map(batch, cfg: AtmConfig | None = None) -> TriangularMap:
    """Joint map: component ``k`` fitted by cross-validated ATM on columns ``1..k``."""
    return fit_conditional(batch, 0, cfg)


def fit_fixed_total_degree(batch, p: int, cfg: AtmConfig | None = None, m_y: int = 0) -> TriangularMap:
    """Non-adaptive baseline: every component uses all features with ``|alpha|_1 <= p``."""
    cfg = cfg or AtmConfig()
    if p < 0:
        raise ConfigError("degree must be non-negative")
    batch, stats, z = _prepare(batch, cfg)
    comps, traces = [], []
    for k in range(m_y + 1, batch.shape[1] + 1):
        full = DownwardClosedSet.total_degree(k, p)
        index_set = DownwardClosedSet(k, [a for a in full if admissible(cfg.family, a)])
        res = minimize(_objective(index_set, z[:, :k], cfg), np.zeros(len(index_set)), cfg.optim)
        comps.append(_component(index_set, res.x, cfg))
        traces.append(FitTrace(selected=list(index_set.members), train_objective=[res.fun],
                               chosen_m=len(index_set)))
    return TriangularMap(tuple(comps), stats, m_y, tuple(traces))


def fit_linear_then_atm(batch, cfg: AtmConfig | None = None) -> ComposedMap:
    """Linear ATM map first, then Hermite-function ATM on the pushed-forward samples."""
    cfg = cfg or AtmConfig()
    if cfg.g != "softplus":
        raise ConfigError("the two-stage fit needs an invertible rectifier")
    batch = as_batch(batch)
    linear = fit_map(batch, replace(cfg, family="linear"))
    pushed = linear.forward(batch)
    second = fit_map(pushed, replace(cfg, family="hermite_function"))
    return ComposedMap((linear, second))

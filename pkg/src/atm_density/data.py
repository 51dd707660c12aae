"""Datasets, standardization, fold plans and synthetic targets."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .optimizer import NumericalError


class InputError(ValueError):
    """Malformed or unusable input data."""


def make_rng(seed) -> np.random.Generator:
    """Philox (counter-based) generator, reproducible across platforms."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class Dataset:
    values: np.ndarray
    names: list[str] | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Standardization:
    """Per-column affine map ``z = (x - mean) / std``."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def identity(cls, d: int) -> "Standardization":
        return cls(np.zeros(d), np.ones(d))

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def invert(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean

    def log_scale(self) -> float:
        return float(np.sum(np.log(self.std)))


def _values(data):
    return data.values if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, dtype=float))


def fit_standardization(data) -> Standardization:
    x = _values(data)
    if x.shape[0] < 2:
        raise InputError("standardization needs at least two rows")
    std = x.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(std > 0))
    if bad.size:
        raise InputError(f"column {int(bad[0])} is constant")
    return Standardization(x.mean(axis=0), std)


def standardize(train):
    """Standardize with the sample mean and (n-1) standard deviation."""
    stats = fit_standardization(train)
    return apply_statistics(stats, train), stats


def apply_statistics(stats: Standardization, other):
    if isinstance(other, Dataset):
        return Dataset(stats.apply(other.values), other.names, dict(other.info))
    return stats.apply(other)


def load_csv(path, has_header=False, log_transform=False) -> Dataset:
    """Read a numeric rectangle; optionally take the natural log of every cell."""
    rows, names = [], None
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if has_header and names is None:
                names = [cell.strip() for cell in row]
                continue
            parsed = []
            for col, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise InputError(f"row {lineno}, column {col}: {cell!r} is not a number") from None
            if rows and len(parsed) != len(rows[0]):
                raise InputError(f"row {lineno} has {len(parsed)} columns, expected {len(rows[0])}")
            rows.append(parsed)
    if not rows:
        raise InputError(f"{path}: no data rows")
    x = np.array(rows)
    if not np.all(np.isfinite(x)):
        r, c = np.argwhere(~np.isfinite(x))[0]
        raise InputError(f"row {r + 1}, column {c + 1}: non-finite value")
    if log_transform:
        bad = np.argwhere(x <= 0)
        if bad.size:
            r, c = bad[0]
            raise InputError(f"data row {r + 1}, column {c + 1}: log of non-positive value {x[r, c]}")
        x = np.log(x)
    return Dataset(x, names)


def write_csv(path_or_file, x, names=None):
    """Write rows with 17 significant digits (round-trip precision)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    names = names or [f"x{j + 1}" for j in range(x.shape[1])]
    close = False
    fh = path_or_file
    if not hasattr(fh, "write"):
        fh = open(Path(path_or_file), "w", newline="")
        close = True
    try:
        fh.write(",".join(names) + "\n")
        for row in x:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    finally:
        if close:
            fh.close()


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[np.ndarray, ...]
    seed: int | None

    @property
    def k(self) -> int:
        return len(self.folds)

    def split(self, i: int):
        """``(train_rows, validation_rows)`` for fold ``i``."""
        val = self.folds[i]
        train = np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))
        return train, val


def kfold(n: int, k: int, seed=0) -> FoldPlan:
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= K <= n, got K={k}, n={n}")
    perm = make_rng(seed).permutation(n)
    return FoldPlan(tuple(np.sort(part) for part in np.array_split(perm, k)), seed)


def gen_mog3(n: int, seed=0, dim: int = 3, weight_seed=None) -> Dataset:
    """Gaussian mixture on the vertices of ``[-4, 4]^dim`` with identity covariances.

    Mixture weights are uniform draws, normalized, from their own stream keyed
    by ``weight_seed`` (default ``seed``), so a test set drawn with another
    ``seed`` but the same ``weight_seed`` follows the same density. Weights and
    component labels are kept in ``info``.
    """
    w = mog3_weights(seed if weight_seed is None else weight_seed, dim)
    vertices = np.array(list(itertools.product([-4.0, 4.0], repeat=dim)))
    rng = make_rng(seed)
    labels = rng.choice(len(vertices), size=n, p=w)
    x = vertices[labels] + rng.standard_normal((n, dim))
    return Dataset(x, info={"weights": w, "labels": labels, "means": vertices})


def mog3_weights(weight_seed, dim: int = 3) -> np.ndarray:
    w = make_rng([int(weight_seed), 2 ** dim]).uniform(size=2 ** dim)
    return w / w.sum()


def mog3_logpdf(x, weights, dim: int = 3):
    """Exact log density of the vertex mixture, for checking fitted models."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    vertices = np.array(list(itertools.product([-4.0, 4.0], repeat=dim)))
    sq = ((x[:, None, :] - vertices[None]) ** 2).sum(-1)
    comp = -0.5 * sq - 0.5 * dim * math.log(2 * math.pi) + np.log(weights)[None]
    return np.logaddexp.reduce(comp, axis=1)


def gen_fig1_mixture(n: int, seed=0) -> Dataset:
    """Equal-weight 1-d mixture of N(-2, 0.5) and N(2, 2) (variances)."""
    rng = make_rng(seed)
    pick = rng.uniform(size=n) < 0.5
    z = rng.standard_normal(n)
    x = np.where(pick, -2.0 + math.sqrt(0.5) * z, 2.0 + math.sqrt(2.0) * z)
    return Dataset(x[:, None])


def gen_gauss(n: int, cov, seed=0, mean=None) -> Dataset:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    mean = np.zeros(cov.shape[0]) if mean is None else np.asarray(mean, dtype=float)
    chol = np.linalg.cholesky(cov)
    z = make_rng(seed).standard_normal((n, cov.shape[0]))
    return Dataset(mean + z @ chol.T)


def lorenz96_rhs(x, forcing):
    """``dX_j/dt = (X_{j+1} - X_{j-2}) X_{j-1} - X_j + F`` on a periodic lattice."""
    return (np.roll(x, -1, axis=-1) - np.roll(x, 2, axis=-1)) * np.roll(x, 1, axis=-1) - x + forcing


def rk4(x, forcing, dt, steps):
    """Classical fourth-order Runge-Kutta, vectorized over leading axes."""
    x = np.array(x, dtype=float)
    for _ in range(steps):
        k1 = lorenz96_rhs(x, forcing)
        k2 = lorenz96_rhs(x + 0.5 * dt * k1, forcing)
        k3 = lorenz96_rhs(x + 0.5 * dt * k2, forcing)
        k4 = lorenz96_rhs(x + dt * k3, forcing)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def gen_lorenz96(n: int, d: int = 20, forcing: float = 8.0, dt: float = 0.01,
                 steps: int = 2000, seed=0) -> Dataset:
    """Final states of ``n`` Lorenz-96 trajectories from standard-normal starts.

    Row ``i`` of the Philox stream is the initial condition of trajectory ``i``.
    """
    if d < 4:
        raise ValueError("Lorenz-96 needs at least 4 lattice sites")
    if steps < 1:
        raise ValueError("steps must be positive")
    x0 = make_rng(seed).standard_normal((n, d))
    with np.errstate(over="ignore", invalid="ignore"):
        x = rk4(x0, forcing, dt, steps)
    bad = np.flatnonzero(~np.all(np.isfinite(x), axis=1))
    if bad.size:
        raise NumericalError(f"Lorenz-96 trajectory {int(bad[0])} blew up")
    return Dataset(x)

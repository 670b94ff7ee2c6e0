"""Synthetic panels with planted structure.

Acceptance of this package is oracle-based: the generators here plant known
block factors, exact sample correlations, or nonlinear factor laws so tests
can compare pipeline output against ground truth.
"""

from __future__ import annotations

import datetime as dt

import numpy as np

from .errors import PanelError
from .panel import ReturnPanel


def business_dates(n: int, start: dt.date = dt.date(2010, 1, 1)) -> tuple[dt.date, ...]:
    """n consecutive weekdays starting at ``start``."""
    out, day = [], start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return tuple(out)


def panel_from_values(values: np.ndarray, labels=None, categories=None,
                      start: dt.date = dt.date(2010, 1, 1)) -> ReturnPanel:
    values = np.asarray(values, dtype=np.float64)
    n, d = values.shape
    if labels is None:
        labels = tuple(f"X{j + 1}" for j in range(d))
    return ReturnPanel(business_dates(n, start), tuple(labels), values, categories)


def exact_correlation_data(rng: np.random.Generator, n: int,
                           target: np.ndarray) -> np.ndarray:
    """Data whose *sample* correlation matrix equals ``target`` exactly.

    Draw Gaussian noise, whiten it against its own sample covariance, then
    colour it with the Cholesky factor of the target. PCA eigenvalues of the
    result are exactly the eigenvalues of ``target``.
    """
    target = np.asarray(target, dtype=np.float64)
    d = target.shape[0]
    if n <= d:
        raise PanelError("need n > d for exact-correlation construction")
    raw = rng.standard_normal((n, d))
    raw -= raw.mean(axis=0)
    cov = raw.T @ raw / (n - 1)
    raw = raw @ np.linalg.inv(np.linalg.cholesky(cov)).T
    data = raw @ np.linalg.cholesky(target).T
    return data / data.std(axis=0, ddof=1)


def equicorrelated(rng: np.random.Generator, n: int, d: int, rho: float) -> np.ndarray:
    target = np.full((d, d), rho)
    np.fill_diagonal(target, 1.0)
    return exact_correlation_data(rng, n, target)


def block_correlation(sizes: list[int], rho_within: float,
                      rho_between: float = 0.0) -> np.ndarray:
    d = sum(sizes)
    target = np.full((d, d), rho_between)
    offset = 0
    for size in sizes:
        target[offset:offset + size, offset:offset + size] = rho_within
        offset += size
    np.fill_diagonal(target, 1.0)
    return target


def block_factor_data(rng: np.random.Generator, n: int, sizes: list[int],
                      rho_within: float, rho_between: float = 0.0
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columns driven by one latent factor per block.

    Column j in block k is sqrt(rho_within) * f_k + noise, and the block
    factors share a global component so that cross-block correlation is
    ``rho_between``. Returns (values, factors, block index per column).
    """
    if not 0 < rho_within <= 1 or not 0 <= rho_between < rho_within:
        raise PanelError("need 0 < rho_between < rho_within <= 1")
    gamma = rho_between / rho_within
    g = rng.standard_normal(n)
    values = np.empty((n, sum(sizes)))
    factors = np.empty((n, len(sizes)))
    blocks = np.empty(sum(sizes), dtype=np.int64)
    col = 0
    for k, size in enumerate(sizes):
        f = np.sqrt(gamma) * g + np.sqrt(1 - gamma) * rng.standard_normal(n)
        factors[:, k] = f
        for _ in range(size):
            values[:, col] = np.sqrt(rho_within) * f \
                + np.sqrt(1 - rho_within) * rng.standard_normal(n)
            blocks[col] = k
            col += 1
    return values, factors, blocks


def quadratic_factor_data(rng: np.random.Generator, n: int, d: int,
                          linear_weight: float = 0.7,
                          quad_weight: float = 0.6,
                          noise: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Columns that are a linear plus quadratic function of one factor.

    x_j = a_j f + b_j (f^2 - 1)/sqrt(2) + noise_j, with alternating signs on
    the quadratic term so it cannot be absorbed by a single linear score.
    Returns (values, factor).
    """
    f = rng.standard_normal(n)
    quad = (f ** 2 - 1.0) / np.sqrt(2.0)
    values = np.empty((n, d))
    for j in range(d):
        b = quad_weight if j % 2 == 0 else -quad_weight
        values[:, j] = linear_weight * f + b * quad \
            + noise * rng.standard_normal(n)
    return values, f


def factor_universe(rng: np.random.Generator, n: int, n_assets: int,
                    factor_cov: np.ndarray, betas: np.ndarray,
                    alphas: np.ndarray, noise: float = 0.0
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Asset returns generated exactly from a linear factor model.

    Returns (asset values, factor draws); factors are centred multivariate
    Gaussian with the given covariance.
    """
    chol = np.linalg.cholesky(factor_cov)
    factors = rng.standard_normal((n, factor_cov.shape[0])) @ chol.T
    assets = alphas + factors @ betas.T
    if noise:
        assets = assets + noise * rng.standard_normal((n, n_assets))
    return assets, factors


def price_path(rng: np.random.Generator, n: int, d: int,
               scale: float = 0.01) -> np.ndarray:
    """Strictly positive synthetic price levels (for return-conversion demos)."""
    increments = scale * rng.standard_normal((n, d))
    return 100.0 * np.exp(np.cumsum(increments, axis=0))

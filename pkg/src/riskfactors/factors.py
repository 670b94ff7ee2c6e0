"""Aggregated factor series and linear asset factor models.

Aggregation routes: global PCA scores, first-PC-per-cluster (clustered PCA),
or clustered-autoencoder codes. Asset models are per-asset OLS regressions of
returns on the factor series, r_i = alpha_i + sum_j beta_ij F_j + eps_i, with
the factor mean vector and covariance estimated from the same series. The
factor-based covariance approximation B Omega B' drops the residual
variances.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cluster import ClusterAssignment
from .errors import CollinearityError, NumericalError, PanelError
from .nnet.clustered import ClusteredAe, encode_clustered
from .panel import ReturnPanel, StandardizedPanel
from .pca import fit_pca

GLOBAL_PCA = "global-pca"
CLUSTERED_PCA = "clustered-pca"
CLUSTERED_AE = "clustered-ae"


@dataclass(frozen=True)
class AggregatedFactors:
    """A dated factor score matrix plus the statistics scenario shocks are
    sized with. ``mean``/``std`` are recorded at construction and survive
    windowing, so shocks stay calibrated to the full history."""

    labels: tuple[str, ...]
    dates: tuple[dt.date, ...]
    series: np.ndarray
    provenance: str
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        series = np.asarray(self.series, dtype=np.float64)
        if series.ndim != 2 or series.shape[1] != len(self.labels):
            raise PanelError("factor series shape does not match labels")
        if len(self.dates) != series.shape[0]:
            raise PanelError("factor series shape does not match dates")
        if not np.all(np.isfinite(series)):
            raise NumericalError("factor series contains non-finite values")
        for name in ("series", "mean", "std"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "dates", tuple(self.dates))

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return self.series.shape[0]

    def window(self, start: int, stop: int) -> "AggregatedFactors":
        """Row slice with the original mean/std statistics preserved."""
        return AggregatedFactors(self.labels, self.dates[start:stop],
                                 np.array(self.series[start:stop]),
                                 self.provenance, self.mean, self.std)

    def select_dates(self, dates: Sequence[dt.date]) -> "AggregatedFactors":
        index = {d: i for i, d in enumerate(self.dates)}
        missing = [d for d in dates if d not in index]
        if missing:
            raise PanelError(f"factor series lacks dates {missing[:3]}...")
        rows = [index[d] for d in dates]
        return AggregatedFactors(self.labels, tuple(dates),
                                 np.array(self.series[rows]),
                                 self.provenance, self.mean, self.std)


def _with_stats(labels, dates, series, provenance) -> AggregatedFactors:
    series = np.asarray(series, dtype=np.float64)
    return AggregatedFactors(tuple(labels), tuple(dates), series, provenance,
                             series.mean(axis=0), series.std(axis=0, ddof=1))


def global_pca_factors(panel: StandardizedPanel, k: int) -> AggregatedFactors:
    """First k global PC scores as factors (labels PC1..PCk)."""
    model = fit_pca(panel)
    if not 1 <= k <= model.d:
        raise ValueError(f"k must be in [1, {model.d}], got {k}")
    return _with_stats([f"PC{i}" for i in range(1, k + 1)], panel.dates,
                       model.scores[:, :k], GLOBAL_PCA)


def clustered_pca_factors(panel: StandardizedPanel,
                          assignment: ClusterAssignment) -> AggregatedFactors:
    """One factor per cluster: the first-PC score series of the cluster's
    sub-panel (a single-column cluster passes the column through), with the
    same largest-entry-positive sign convention as the global fit."""
    series = []
    for cid in range(1, assignment.n_clusters + 1):
        members = [lab for lab in panel.labels
                   if assignment.by_label.get(lab) == cid]
        if not members:
            raise PanelError(f"cluster {cid} is empty")
        if len(members) == 1:
            j = panel.labels.index(members[0])
            series.append(panel.values[:, j])
        else:
            sub = panel.select(members)
            series.append(fit_pca(sub).scores[:, 0])
    missing = [lab for lab in panel.labels if lab not in assignment.by_label]
    if missing:
        raise PanelError(f"columns without cluster: {missing}")
    return _with_stats(assignment.names, panel.dates,
                       np.column_stack(series), CLUSTERED_PCA)


def clustered_ae_factors(cae: ClusteredAe,
                         panel: StandardizedPanel) -> AggregatedFactors:
    """Clustered-AE codes of the panel as factors."""
    if panel.labels != cae.labels:
        raise PanelError("panel columns do not match the trained model")
    codes = encode_clustered(cae, panel.values)
    return _with_stats(cae.cluster_names, panel.dates, codes, CLUSTERED_AE)


def clustered_pca_mse(panel: StandardizedPanel,
                      assignment: ClusterAssignment) -> float:
    """Reconstruction MSE of the panel from one PC per cluster (the
    clustered-PCA analogue of a bottleneck-K autoencoder's full-data MSE)."""
    total = 0.0
    for cid in range(1, assignment.n_clusters + 1):
        members = [lab for lab in panel.labels
                   if assignment.by_label.get(lab) == cid]
        if len(members) == 1:
            continue  # a pass-through column reconstructs itself exactly
        sub = panel.select(members)
        model = fit_pca(sub)
        approx = model.scores[:, :1] @ model.loadings[:, :1].T
        total += float(np.sum((sub.values - approx) ** 2))
    return total / (panel.n * panel.d)


@dataclass(frozen=True)
class FactorModel:
    """Per-asset intercepts and betas plus the factor frame (mean vector,
    covariance, and the per-factor standard deviations shocks are sized in).
    """

    asset_labels: tuple[str, ...]
    alphas: np.ndarray
    betas: np.ndarray
    residual_variances: np.ndarray
    factor_labels: tuple[str, ...]
    factor_means: np.ndarray
    factor_cov: np.ndarray
    factor_std: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        for name in ("alphas", "betas", "residual_variances", "factor_means",
                     "factor_cov", "factor_std"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        cov = self.factor_cov
        if cov.shape != (self.k, self.k):
            raise PanelError("factor covariance has the wrong shape")
        if np.max(np.abs(cov - cov.T)) > 1e-10:
            raise NumericalError("factor covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-8:
            raise NumericalError("factor covariance is not PSD")
        if np.any(self.residual_variances < 0):
            raise NumericalError("negative residual variance")

    @property
    def p(self) -> int:
        return len(self.asset_labels)

    @property
    def k(self) -> int:
        return len(self.factor_labels)

    def factor_index(self, label: str) -> int:
        try:
            return self.factor_labels.index(label)
        except ValueError:
            raise PanelError(f"unknown factor label {label!r}") from None


def _collinear_columns(design: np.ndarray, labels: Sequence[str]) -> list[str]:
    """Labels of factor columns that are (numerically) linear combinations of
    the preceding ones, found by successive orthogonal projection."""
    q: list[np.ndarray] = [design[:, 0] / np.linalg.norm(design[:, 0])]  # intercept
    offending = []
    for j in range(1, design.shape[1]):
        v = design[:, j].copy()
        norm0 = np.linalg.norm(v)
        for u in q:
            v -= (u @ v) * u
        if np.linalg.norm(v) <= 1e-10 * max(norm0, 1.0):
            offending.append(labels[j - 1])
        else:
            q.append(v / np.linalg.norm(v))
    return offending


def fit_factor_model(assets: ReturnPanel, factors: AggregatedFactors) -> FactorModel:
    """Per-asset OLS of returns on (1, F_1..F_K).

    Rows of the asset panel and the factor series must already be aligned;
    residual variances use the n-K-1 denominator.
    """
    if assets.n != factors.n:
        raise PanelError(f"asset rows ({assets.n}) do not match factor rows "
                         f"({factors.n})")
    n, k = factors.n, factors.k
    if n <= k + 1:
        raise PanelError(f"need more than {k + 1} rows to fit {k} factors")
    design = np.column_stack([np.ones(n), factors.series])
    if np.linalg.matrix_rank(design) < k + 1:
        offending = _collinear_columns(design, factors.labels)
        raise CollinearityError(offending or list(factors.labels))
    coeffs, *_ = np.linalg.lstsq(design, assets.values, rcond=None)
    residuals = assets.values - design @ coeffs
    res_var = np.maximum((residuals ** 2).sum(axis=0) / (n - k - 1), 0.0)
    cov = np.cov(factors.series, rowvar=False, ddof=1).reshape(k, k)
    cov = 0.5 * (cov + cov.T)
    return FactorModel(assets.labels, coeffs[0], coeffs[1:].T, res_var,
                       factors.labels, factors.series.mean(axis=0), cov,
                       factors.std, factors.provenance)


def approx_covariance(model: FactorModel) -> np.ndarray:
    """Factor-implied asset covariance B Omega B' (residual variances
    ignored)."""
    out = model.betas @ model.factor_cov @ model.betas.T
    return 0.5 * (out + out.T)

"""Stress scenario evaluation on factor models.

Core factors are shocked in units of their historical standard deviation;
peripheral factors respond through the conditional-Gaussian estimator
E(F_u | F_s) = E(F_u) + Cov_us Cov_ss^{-1} (F_s - E(F_s)) (covariance held
fixed under stress), or through a small decoder-type network trained on the
historical clustered-AE codes. The global worst case minimises the linear
portfolio map over a Mahalanobis ellipsoid, where the optimum has the closed
form s* = mu - r * Sigma w / sqrt(w' Sigma w).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._util import substream
from .errors import PanelError, SingularCovarianceError, NumericalError
from .factors import AggregatedFactors, FactorModel
from .nnet.clustered import ClusteredAe, encode_clustered
from .nnet.network import Activation, DenseLayer, LayerSpec, stack_forward
from .nnet.train import TrainConfig, fit_stack
from .panel import StandardizedPanel

_COND_GUARD = 1e12
TRADING_DAYS_PER_YEAR = 250


class Propagation(str, enum.Enum):
    CONDITIONAL_GAUSSIAN = "conditional-gaussian"
    AE_DECODER = "ae-decoder"
    NONE = "none"


@dataclass(frozen=True)
class StressScenario:
    """Shocks on a non-empty subset of core factors, in standard deviations."""

    name: str
    core_labels: tuple[str, ...]
    shifts_sd: tuple[float, ...]
    propagation: Propagation = Propagation.CONDITIONAL_GAUSSIAN

    def __post_init__(self):
        if not self.core_labels:
            raise PanelError("scenario needs at least one core factor")
        if len(set(self.core_labels)) != len(self.core_labels):
            raise PanelError("core factor labels must be distinct")
        if len(self.shifts_sd) != len(self.core_labels):
            raise PanelError("one shift per core factor required")
        if not all(np.isfinite(self.shifts_sd)):
            raise PanelError("shifts must be finite")


@dataclass(frozen=True)
class EllipsoidScenario:
    """Worst-case solution on the Mahalanobis ellipsoid of given radius."""

    subset_labels: tuple[str, ...]
    radius: float
    solution: np.ndarray
    binding: bool


@dataclass(frozen=True)
class PortfolioImpact:
    per_asset: np.ndarray
    portfolio: float


@dataclass(frozen=True)
class ScenarioResult:
    scenario: StressScenario
    factor_vector: np.ndarray
    per_asset_impact: np.ndarray
    portfolio_impact: float
    tail_frequencies: dict[str, float]


def _core_indices(model: FactorModel, labels: Sequence[str]) -> list[int]:
    return [model.factor_index(lab) for lab in labels]


def _propagate(model: FactorModel, idx_s: list[int], core_values: np.ndarray,
               propagation: Propagation) -> np.ndarray:
    """Assemble the full factor vector given core values; peripherals get the
    conditional-Gaussian mean or stay at their unconditional means."""
    idx_u = [j for j in range(model.k) if j not in idx_s]
    f = model.factor_means.copy()
    f[idx_s] = core_values
    if idx_u and propagation is Propagation.CONDITIONAL_GAUSSIAN:
        cov_ss = model.factor_cov[np.ix_(idx_s, idx_s)]
        if np.linalg.cond(cov_ss) > _COND_GUARD:
            raise SingularCovarianceError(
                "core-factor covariance is numerically singular")
        cov_us = model.factor_cov[np.ix_(idx_u, idx_s)]
        delta = f[idx_s] - model.factor_means[idx_s]
        f[idx_u] = model.factor_means[idx_u] + cov_us @ np.linalg.solve(cov_ss, delta)
    return f


def conditional_stress(model: FactorModel, scenario: StressScenario) -> np.ndarray:
    """Full factor vector under the scenario.

    Core entries are mu_s + shift * sd; peripheral entries follow the
    conditional-Gaussian estimator (or stay at their means when propagation
    is 'none'). The factor covariance is held fixed under the stress.
    """
    if scenario.propagation is Propagation.AE_DECODER:
        raise PanelError("use ae_stress_propagation for decoder-based scenarios")
    idx_s = _core_indices(model, scenario.core_labels)
    shifts = np.asarray(scenario.shifts_sd, dtype=np.float64)
    core = model.factor_means[idx_s] + shifts * model.factor_std[idx_s]
    return _propagate(model, idx_s, core, scenario.propagation)


def _normalized_weights(weights, p: int) -> np.ndarray:
    if weights is None:
        return np.full(p, 1.0 / p)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (p,):
        raise PanelError(f"need {p} weights, got shape {w.shape}")
    total = w.sum()
    if not np.isfinite(total) or total == 0:
        raise PanelError("weights must sum to a nonzero finite value")
    return w / total


def worst_case_ellipsoid(model: FactorModel, subset_labels: Sequence[str],
                         radius: float = 2.0, weights=None,
                         check_points: int = 512) -> EllipsoidScenario:
    """Worst outcome for the weighted portfolio over all factor-subset values
    within the given Mahalanobis radius of the mean.

    The linear objective makes the constraint binding whenever the mean beta
    vector is nonzero, and the closed-form optimum is cross-checked against
    random boundary points. Weights are normalised internally, so rescaling
    them does not move the solution.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    idx = _core_indices(model, subset_labels)
    w = _normalized_weights(weights, model.p)
    wbar = model.betas[:, idx].T @ w
    cov = model.factor_cov[np.ix_(idx, idx)]
    mu = model.factor_means[idx]
    evals = np.linalg.eigvalsh(cov)
    if evals.min() <= 0 or evals.max() / evals.min() > _COND_GUARD:
        raise SingularCovarianceError("subset covariance is not positive definite")

    scale = max(1.0, float(np.abs(model.betas[:, idx]).max()))
    if np.linalg.norm(wbar) <= 1e-12 * scale:
        return EllipsoidScenario(tuple(subset_labels), float(radius),
                                 mu.copy(), False)

    cw = cov @ wbar
    denom = np.sqrt(float(wbar @ cw))
    solution = mu - radius * cw / denom

    # sanity: no random boundary point may beat the closed form
    rng = np.random.default_rng(1861)
    chol = np.linalg.cholesky(cov)
    dirs = rng.standard_normal((check_points, len(idx)))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    candidates = mu + radius * dirs @ chol.T
    best_grid = float(np.min(candidates @ wbar))
    if float(solution @ wbar) > best_grid + 1e-9:
        raise NumericalError("ellipsoid optimum failed its boundary cross-check")
    return EllipsoidScenario(tuple(subset_labels), float(radius), solution, True)


def mahalanobis(model: FactorModel, subset_labels: Sequence[str],
                values: np.ndarray) -> float:
    """Mahalanobis distance of subset values from the subset mean."""
    idx = _core_indices(model, subset_labels)
    cov = model.factor_cov[np.ix_(idx, idx)]
    delta = np.asarray(values, dtype=np.float64) - model.factor_means[idx]
    return float(np.sqrt(delta @ np.linalg.solve(cov, delta)))


def ellipsoid_vector(model: FactorModel, scenario: EllipsoidScenario,
                     propagation: Propagation = Propagation.NONE) -> np.ndarray:
    """Full factor vector for a worst-case solution: the subset at s*, the
    remaining factors at their means or at their conditional-mean response."""
    idx_s = _core_indices(model, scenario.subset_labels)
    return _propagate(model, idx_s, scenario.solution, propagation)


def ae_stress_propagation(cae: ClusteredAe, panel: StandardizedPanel,
                          scenario: StressScenario,
                          config: TrainConfig) -> np.ndarray:
    """Factor vector under an AE-code scenario.

    A decoder-type network (same shape as the clustered-AE joint decoder,
    hidden width rescaled by the output/width ratio, floor 1) is trained to
    map the historical core codes to the peripheral codes and evaluated at
    the shocked core value. Shocks are sized in the codes' own standard
    deviations.
    """
    codes = encode_clustered(cae, panel.values)
    names = list(cae.cluster_names)
    idx_s = []
    for lab in scenario.core_labels:
        if lab not in names:
            raise PanelError(f"unknown code label {lab!r}")
        idx_s.append(names.index(lab))
    idx_u = [j for j in range(len(names)) if j not in idx_s]

    mean = codes.mean(axis=0)
    std = codes.std(axis=0, ddof=1)
    f = mean.copy()
    shifts = np.asarray(scenario.shifts_sd, dtype=np.float64)
    f[idx_s] = mean[idx_s] + shifts * std[idx_s]
    if not idx_u:
        return f

    hidden = max(1, round(cae.decoder_hidden * len(idx_u) / len(cae.labels)))
    specs = [LayerSpec(len(idx_s), hidden, cae.decoder_activation),
             LayerSpec(hidden, len(idx_u), Activation.IDENTITY)]
    init_rng = substream(config.seed, f"stress:{scenario.name}:init")
    layers = [DenseLayer.initialize(s, init_rng) for s in specs]
    fit = fit_stack(layers, codes[:, idx_s], codes[:, idx_u], config,
                    rng=substream(config.seed, f"stress:{scenario.name}:batches"))
    f[idx_u] = stack_forward(fit.layers, f[idx_s][None, :])[0]
    return f


def portfolio_impact(model: FactorModel, factor_vector: np.ndarray,
                     weights=None) -> PortfolioImpact:
    """Per-asset and weighted-mean returns at a scenario factor vector.

    The idiosyncratic terms enter at their mean of zero: the stress impact is
    a conditional expectation.
    """
    f = np.asarray(factor_vector, dtype=np.float64)
    if f.shape != (model.k,):
        raise PanelError(f"factor vector must have {model.k} entries")
    if weights is None:
        w = np.full(model.p, 1.0 / model.p)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (model.p,):
            raise PanelError(f"need {model.p} weights, got shape {w.shape}")
        if abs(w.sum() - 1.0) > 1e-9:
            raise PanelError(f"weights sum to {w.sum()}, expected 1")
    per_asset = model.alphas + model.betas @ f
    return PortfolioImpact(per_asset, float(w @ per_asset))


def tail_frequency(series: np.ndarray, threshold_sd: float,
                   mean: float | None = None, std: float | None = None) -> float:
    """Fraction of history at least as extreme as a threshold in sd units.

    Negative thresholds count observations at or below mu + t*sd, positive
    ones at or above. Mean/sd default to the series' own moments; pass the
    long-history values to keep shocks calibrated consistently.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise PanelError("empty series")
    mu = float(x.mean()) if mean is None else float(mean)
    sd = float(x.std(ddof=1)) if std is None else float(std)
    level = mu + threshold_sd * sd
    if threshold_sd > 0:
        return float(np.mean(x >= level))
    return float(np.mean(x <= level))


def tail_days_per_year(fraction: float) -> float:
    return fraction * TRADING_DAYS_PER_YEAR


def evaluate_scenario(model: FactorModel, scenario: StressScenario,
                      factors: AggregatedFactors, weights=None,
                      cae: ClusteredAe | None = None,
                      panel: StandardizedPanel | None = None,
                      config: TrainConfig | None = None) -> ScenarioResult:
    """Full bump-scenario evaluation: factor vector, impacts, tail history."""
    if scenario.propagation is Propagation.AE_DECODER:
        if cae is None or panel is None or config is None:
            raise PanelError("ae-decoder propagation needs the trained model, "
                             "the panel and a training config")
        vector = ae_stress_propagation(cae, panel, scenario, config)
    else:
        vector = conditional_stress(model, scenario)
    impact = portfolio_impact(model, vector, weights)
    tails = {}
    for lab, shift in zip(scenario.core_labels, scenario.shifts_sd):
        j = factors.labels.index(lab)
        tails[lab] = tail_frequency(factors.series[:, j], shift,
                                    mean=factors.mean[j], std=factors.std[j])
    return ScenarioResult(scenario, vector, impact.per_asset,
                          impact.portfolio, tails)

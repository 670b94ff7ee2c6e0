"""PCA via eigendecomposition, the feature/observation duality check, and
relevance diagnostics (Kaiser-Guttman, participation ratio, category verdicts).

All fits act on standardised panels, so the decomposed matrix is the sample
correlation matrix and eigenvalues sum to the column count. Scores are the
latent factor series Z = X Phi.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import EigensolverError, NumericalError, PanelError
from .panel import StandardizedPanel

_EIG_CLIP = -1e-10
_DUAL_N_GUARD = 5000


@dataclass(frozen=True)
class PcaModel:
    """Eigendecomposition of a correlation matrix plus the derived scores.

    ``loadings`` columns are the principal components (orthonormal, sorted by
    descending eigenvalue, sign-fixed so the largest-magnitude entry of each
    column is positive); ``scores`` is X @ loadings. The standardisation
    statistics of the fitted panel are kept so the model can be re-applied
    out of window.
    """

    labels: tuple[str, ...]
    loadings: np.ndarray
    eigenvalues: np.ndarray
    scores: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        for name in ("loadings", "eigenvalues", "scores", "mean", "std"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def d(self) -> int:
        return self.loadings.shape[0]

    @property
    def n(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class DualityReport:
    """Agreement between the feature-space (X'X) and observation-space (XX')
    eigendecompositions, after column sign alignment."""

    eigenvalue_max_rel_error: float
    loading_max_abs_error: float
    scores_max_abs_error: float


class Verdict(str, enum.Enum):
    STRONG_IN = "StrongIn"
    WEAK_IN = "WeakIn"
    WEAK_OUT = "WeakOut"
    STRONG_OUT = "StrongOut"


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the entry of largest magnitude in each is positive."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        j = int(np.argmax(np.abs(out[:, k])))
        if out[j, k] < 0:
            out[:, k] = -out[:, k]
    return out


def _sorted_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        evals, evecs = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(evals)[::-1]
    return evals[order], evecs[:, order]


def fit_pca(panel: StandardizedPanel) -> PcaModel:
    """PCA of a standardised panel via eigh of X'X / (n - 1)."""
    X = panel.values
    n, d = X.shape
    if d < 2 or n < 2:
        raise PanelError(f"need at least a 2x2 panel, got {n}x{d}")
    if not np.all(np.isfinite(X)):
        raise PanelError("panel contains non-finite values")
    evals, evecs = _sorted_eigh((X.T @ X) / (n - 1))
    if evals[-1] < _EIG_CLIP:
        raise NumericalError(f"correlation matrix not PSD: min eigenvalue {evals[-1]}")
    evals = np.maximum(evals, 0.0)
    loadings = _fix_signs(evecs)
    return PcaModel(panel.labels, loadings, evals, X @ loadings,
                    panel.mean, panel.std)


def fit_pca_dual(panel: StandardizedPanel) -> tuple[PcaModel, DualityReport]:
    """Fit PCA and cross-check it against the observation-space route.

    The nonzero eigenvalues of X'X and XX' coincide, the XX' eigenvectors are
    the scaled scores Z L^{-1/2}, and the X'X eigenvectors are recoverable as
    X' (XX' eigenvectors) L^{-1/2}. This computes both decompositions
    independently and reports the worst disagreement; errors are meaningful
    for non-degenerate spectra (random panels), where eigenvectors are unique
    up to sign.
    """
    X = panel.values
    n, d = X.shape
    if n > _DUAL_N_GUARD:
        raise PanelError(f"n={n} exceeds the n x n eigendecomposition guard "
                         f"({_DUAL_N_GUARD})")
    model = fit_pca(panel)

    l_feat, _ = _sorted_eigh(X.T @ X)
    l_obs, phi_obs = _sorted_eigh(X @ X.T)
    l_feat = np.maximum(l_feat, 0.0)
    l_obs = np.maximum(l_obs, 0.0)

    # compare only eigenvalues that are meaningfully nonzero on either route
    cutoff = max(l_feat[0], l_obs[0], 0.0) * 1e-12
    r = min(d, n)
    mask = (l_feat[:r] > cutoff) | (l_obs[:r] > cutoff)
    if not np.any(mask):
        return model, DualityReport(0.0, 0.0, 0.0)
    idx = np.where(mask)[0]
    ev_err = float(np.max(np.abs(l_feat[idx] - l_obs[idx])
                          / np.maximum(l_feat[idx], l_obs[idx])))

    inv_sqrt = 1.0 / np.sqrt(l_obs[idx])
    loadings_rec = X.T @ phi_obs[:, idx] * inv_sqrt       # Phi = X' Phi~ L^(-1/2)
    scores_rec = phi_obs[:, idx] * np.sqrt(l_obs[idx])    # Z = Phi~ L^(1/2)

    load_err = scores_err = 0.0
    for c, k in enumerate(idx):
        ref = model.loadings[:, k]
        sign = 1.0 if float(loadings_rec[:, c] @ ref) >= 0 else -1.0
        load_err = max(load_err, float(np.max(np.abs(sign * loadings_rec[:, c] - ref))))
        zref = model.scores[:, k]
        zsign = 1.0 if float(scores_rec[:, c] @ zref) >= 0 else -1.0
        scores_err = max(scores_err, float(np.max(np.abs(zsign * scores_rec[:, c] - zref))))
    return model, DualityReport(ev_err, load_err, scores_err)


def reconstruct(model: PcaModel, k: int) -> tuple[np.ndarray, float]:
    """Rank-k reconstruction X ~ Z[:, :k] Phi[:, :k]' and its entrywise MSE."""
    if not 1 <= k <= model.d:
        raise ValueError(f"k must be in [1, {model.d}], got {k}")
    approx = model.scores[:, :k] @ model.loadings[:, :k].T
    X = model.scores @ model.loadings.T
    mse = float(np.mean((X - approx) ** 2))
    return approx, mse


def factor_correlations(model: PcaModel, absolute: bool = False) -> np.ndarray:
    """Correlation of each data column with each score: entry (j, i) is
    loading (j, i) scaled by the score standard deviation sqrt(lambda_i).

    With ``absolute=True`` returns magnitudes (heatmap form; PC signs are not
    uniquely specified). Columns with zero eigenvalue yield zero correlations.
    """
    corr = model.loadings * np.sqrt(model.eigenvalues)
    return np.abs(corr) if absolute else corr


def kaiser_guttman(model: PcaModel) -> int:
    """Number of PCs whose normalised eigenvalue strictly exceeds 1/d."""
    total = float(model.eigenvalues.sum())
    if total <= 0:
        return 0
    shares = model.eigenvalues / total
    return int(np.sum(shares > 1.0 / model.d))


def participation_ratio(model: PcaModel, pc: int) -> tuple[float, float]:
    """(IPR, PR) of a principal component (``pc`` is 1-based).

    IPR = sum_j loading_j^4 interpolates between 1/d (all columns contribute
    equally) and 1 (single column); PR = 1/IPR counts contributing columns.
    """
    if not 1 <= pc <= model.d:
        raise ValueError(f"pc must be in [1, {model.d}], got {pc}")
    phi = model.loadings[:, pc - 1]
    ipr = float(np.sum(phi ** 4))
    return ipr, 1.0 / ipr


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def pr_group(model: PcaModel, pc: int) -> tuple[str, ...]:
    """The PR labels most correlated (in magnitude) with the given PC.

    Group size is PR rounded to the nearest integer (half away from zero) and
    clamped to [1, d]; ties in correlation break by ascending column index.
    """
    _, pr = participation_ratio(model, pc)
    size = min(max(_round_half_away(pr), 1), model.d)
    strength = np.abs(factor_correlations(model))[:, pc - 1]
    order = sorted(range(model.d), key=lambda j: (-strength[j], j))
    chosen = sorted(order[:size])
    return tuple(model.labels[j] for j in chosen)


def classify_categories(model: PcaModel, pc: int,
                        categories: Mapping[str, str]) -> dict[str, Verdict]:
    """Associate every category with a PC in one of four ways.

    A category is StrongIn when all of its members are in the PR group,
    StrongOut when none are; otherwise WeakIn when strictly more than half
    are, else WeakOut.
    """
    missing = [lab for lab in model.labels if lab not in categories]
    if missing:
        raise PanelError(f"labels without category: {missing}")
    group = set(pr_group(model, pc))
    members: dict[str, list[str]] = {}
    for lab in model.labels:
        members.setdefault(categories[lab], []).append(lab)
    out: dict[str, Verdict] = {}
    for cat, labs in members.items():
        inside = sum(lab in group for lab in labs)
        if inside == len(labs):
            out[cat] = Verdict.STRONG_IN
        elif inside == 0:
            out[cat] = Verdict.STRONG_OUT
        elif inside * 2 > len(labs):
            out[cat] = Verdict.WEAK_IN
        else:
            out[cat] = Verdict.WEAK_OUT
    return out

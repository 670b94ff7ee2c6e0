"""riskfactors: aggregate observable financial risk factors into
interpretable latent factors (PCA, clustered PCA, clustered autoencoders),
diagnose factor relevance, and evaluate stress scenarios on asset portfolios.

Modules
-------
panel     return-panel ingestion, standardisation, rolling windows
pca       eigendecomposition PCA, duality check, relevance diagnostics
cluster   Ward hierarchical clustering of factor columns
nnet      dense autoencoder engine (ADAM + L2) and the clustered variant
factors   aggregated factor series, OLS factor models, B Omega B'
stress    conditional-Gaussian and decoder-based scenario propagation
cli       batch pipeline frontend
"""

__version__ = "0.1.0"

from . import cluster, factors, nnet, panel, pca, stress  # noqa: F401
from .errors import InputError, NumericalError, RiskfactorsError  # noqa: F401

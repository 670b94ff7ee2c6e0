import numpy as np
import pytest

from riskfactors.panel import standardize
from riskfactors.synthetic import panel_from_values


@pytest.fixture
def rng():
    return np.random.default_rng(2024031)


def std_panel(values, labels=None, categories=None):
    """Standardised panel straight from a value matrix."""
    return standardize(panel_from_values(values, labels, categories))

"""Finite-dimensional model: Hermitian paths, parametrices and V^2/U^q."""
from .operators import *  # noqa: F401,F403
from .parametrix import *  # noqa: F401,F403
from .variation import *  # noqa: F401,F403

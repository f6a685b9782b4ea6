"""Rotation-based iterative Gaussianization (RBIG) and information-theoretic
estimators built on it: total correlation, entropy, KL divergence and mutual
information, with Gaussian plug-in and nearest-neighbour baselines.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DataError,
    DegenerateMarginalError,
    DomainError,
    FitError,
    GenerationError,
    ModelFormatError,
    RbigError,
    UsageError,
)
from .estimators import (  # noqa: E402
    MeasureEstimate,
    estimate_entropy,
    estimate_kl,
    estimate_mutual_information,
    estimate_total_correlation,
)
from .rbig import RbigConfig, RbigModel, fit, load_model, save_model  # noqa: E402

__all__ = [
    "__version__",
    "RbigConfig",
    "RbigModel",
    "fit",
    "save_model",
    "load_model",
    "MeasureEstimate",
    "estimate_total_correlation",
    "estimate_entropy",
    "estimate_kl",
    "estimate_mutual_information",
    "RbigError",
    "DomainError",
    "DataError",
    "DegenerateMarginalError",
    "FitError",
    "GenerationError",
    "ModelFormatError",
    "UsageError",
]

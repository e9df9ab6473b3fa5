"""Twin-beam four-wave-mixing simulator: noise algebra, cell model,
probe sources, detection emulation and squeezing analysis."""

from .noise_core import (
    NoiseRatio,
    TwinBeamModel,
    ideal_noise_ratio,
    ideal_output_powers,
    lossy_noise_ratio,
    mc_noise_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "NoiseRatio",
    "TwinBeamModel",
    "ideal_noise_ratio",
    "ideal_output_powers",
    "lossy_noise_ratio",
    "mc_noise_ratio",
    "__version__",
]

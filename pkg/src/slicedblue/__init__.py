"""Blue-noise sampling of discrete measures on curved spaces.

Sliced-transport descent on the sphere, the hyperbolic plane (hyperboloid
model), and the real projective plane, with an intrinsic triangle-mesh
sampling pipeline and spectral/spatial quality diagnostics.
"""

__version__ = "0.1.0"

from .measures import DiscreteMeasure, subsample
from .sampler import SamplerConfig, RunTrace, geometric_median, nesots_run, projective_run

__all__ = [
    "DiscreteMeasure",
    "subsample",
    "SamplerConfig",
    "RunTrace",
    "geometric_median",
    "nesots_run",
    "projective_run",
    "__version__",
]

"""In-motion initial alignment for strapdown inertial navigation.

Static alignment solves for the constant attitude at the start of the
data with a batch eigenvalue method over integrated velocity
observations; dynamic alignment tracks the current attitude and the
gyro bias with an unscented quaternion filter fed by the same windowed
observations. A trajectory/sensor simulator and a CLI harness tie the
methods together for side-by-side comparison.
"""

__version__ = "0.1.0"

from .davenport import (
    DavenportAccumulator,
    StaticAlignment,
    davenport_quat,
    reconstruct_attitude,
    run_static_alignment,
)
from .errors import (
    AlignmentError,
    AmbiguousAverageError,
    ConfigError,
    CovarianceSqrtError,
    DiscontinuityError,
    ExtrapolationError,
    GrpSingularityError,
    InvalidRotationError,
    PolarSingularityError,
    RankDeficiencyError,
    WindowError,
)
from .observations import ChainState, EpochInput, ObservationPair, epochs_from_streams
from .runner import RunConfig, build_scenario, load_config, run_comparison
from .ukf import NoiseConfig, UkfConfig, run_dynamic_alignment

__all__ = [
    "AlignmentError",
    "AmbiguousAverageError",
    "ChainState",
    "ConfigError",
    "CovarianceSqrtError",
    "DavenportAccumulator",
    "DiscontinuityError",
    "EpochInput",
    "ExtrapolationError",
    "GrpSingularityError",
    "InvalidRotationError",
    "NoiseConfig",
    "ObservationPair",
    "PolarSingularityError",
    "RankDeficiencyError",
    "RunConfig",
    "StaticAlignment",
    "UkfConfig",
    "WindowError",
    "build_scenario",
    "davenport_quat",
    "epochs_from_streams",
    "load_config",
    "reconstruct_attitude",
    "run_comparison",
    "run_dynamic_alignment",
    "run_static_alignment",
    "__version__",
]

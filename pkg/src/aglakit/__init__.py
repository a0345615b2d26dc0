"""Phase retrieval from Gabor magnitudes: GLA, FGLA, AGLA, RAAR and DM."""

from .algo import (
    AlgoConfig,
    AlgoState,
    Algorithm,
    DivergedError,
    RunTrace,
    agla_step,
    dm_step,
    fgla_step,
    gla_step,
    init_coefficients,
    raar_step,
    run,
    run_chain,
)
from .frame import (
    FrameError,
    GaborSystem,
    analyze,
    canonical_dual_window,
    dense_operator,
    nuttall_window,
    synthesize,
)
from .metric import SSNR_INF, ssnr
from .proj import (
    dist_magnitude,
    objective,
    proj_magnitude,
    proj_range,
    reflect_magnitude,
    reflect_range,
)

__version__ = "0.1.0"

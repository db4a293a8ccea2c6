"""Entangling position and spin of a one-dimensional quantum walk by optimizing its coins."""

__version__ = "0.1.0"

from .walk_core import (  # noqa: E402
    BlochAngles,
    CoinParams,
    CoinSchedule,
    Spin,
    WalkState,
    apply_coin,
    apply_shift,
    coin_matrix,
    evolve,
    make_initial_state,
)
from .entanglement_metrics import (  # noqa: E402
    CostSetup,
    EntanglementCost,
    NVector,
    SchmidtReport,
    cost,
    gradient_fd,
    n_vector,
    participation_ratio,
    schmidt_norm_svd,
    schmidt_report,
)
from .basin_hopper import OptimizerConfig, OptResult, basin_hop, local_minimize  # noqa: E402

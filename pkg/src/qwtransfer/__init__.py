"""Entanglement transfer in a two-photon, one-walker quantum walk.

Alice holds one polarization qubit; Bob's photon carries a polarization
coin and a time-bin position that is driven by a coined quantum walk.
"""

from .errors import (
    DegenerateCounts,
    EmptyPosition,
    ImaginaryResidue,
    MissingSetting,
    NonUnitaryCoin,
    QWTransferError,
    ZeroInitialEntanglement,
    ZeroSuccess,
)
from .hilbert import (
    ALICE,
    BOB_COIN,
    Ensemble,
    PositionDistribution,
    TripartiteState,
    condition_on_position,
    make_bell_initial,
    make_werner_initial,
    project_polarization,
    werner_visibility_for,
)
from .walk import CoinSpec, WalkConfig, evolve, position_distribution
from .entanglement import (
    chsh_quantifier,
    correlation_tensor,
    entanglement_curve,
    purity,
)

__version__ = "0.1.0"

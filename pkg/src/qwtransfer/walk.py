"""Coined discrete-time quantum walk on Bob's coin and position.

One step is ``S C``: the coin rotates Bob's polarization at each position,
then the shift moves H one site right and V one site left.  Alice's qubit is
never touched.

Two step orderings are supported by :class:`WalkConfig`:

``"coin_first"``
    ``U(t) = (S C)^t``, the textbook ordering.
``"shift_first"``
    ``S (C S)^(t-1)``, the order in which a time-multiplexed loop hands
    photons to the detector when the out-coupler sits between the shift
    and the coin.  Step one is a bare shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import NonUnitaryCoin
from .hilbert import (
    Ensemble,
    PositionDistribution,
    StateLike,
    TripartiteState,
    as_ensemble,
    support,
)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
IDENTITY = np.eye(2, dtype=complex)
ORDERS = ("coin_first", "shift_first")


def _check_unitary(u, tol: float = 1e-10) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise NonUnitaryCoin(f"coin block must be 2x2, got {u.shape}")
    if np.max(np.abs(u.conj().T @ u - IDENTITY)) > tol:
        raise NonUnitaryCoin("coin block is not unitary")
    return u


@dataclass(frozen=True, eq=False)
class CoinSpec:
    """Position-dependent coin ``c_{p,q}(x)``; positions not listed use ``default``."""

    default: np.ndarray = field(default_factory=lambda: HADAMARD.copy())
    by_position: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "default", _check_unitary(self.default))
        object.__setattr__(
            self, "by_position", {int(x): _check_unitary(u) for x, u in self.by_position.items()}
        )

    @classmethod
    def hadamard(cls) -> "CoinSpec":
        return cls()

    @classmethod
    def identity(cls) -> "CoinSpec":
        return cls(IDENTITY)

    @property
    def kind(self) -> str:
        if not self.by_position and np.allclose(self.default, HADAMARD, atol=1e-15):
            return "hadamard"
        return "general"

    def blocks(self, positions) -> np.ndarray:
        """Stack of coin unitaries, shape ``(len(positions), 2, 2)``."""
        out = np.broadcast_to(self.default, (len(positions), 2, 2)).copy()
        for k, x in enumerate(positions):
            u = self.by_position.get(int(x))
            if u is not None:
                out[k] = u
        return out


@dataclass(frozen=True)
class WalkConfig:
    steps: int
    coin: CoinSpec = field(default_factory=CoinSpec)
    order: str = "coin_first"

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a nonnegative integer, got {self.steps!r}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")


def apply_coin(state: TripartiteState, coin: CoinSpec | np.ndarray) -> TripartiteState:
    if not isinstance(coin, CoinSpec):
        coin = CoinSpec(coin)
    if not coin.by_position:
        psi = np.einsum("pq,aqx->apx", coin.default, state.psi)
    else:
        psi = np.einsum("xpq,aqx->apx", coin.blocks(state.positions), state.psi)
    return state.with_psi(psi, state.x_min)


def _shift_array(psi: np.ndarray, x_min: int) -> tuple[np.ndarray, int]:
    n = psi.shape[2]
    out = np.zeros((2, 2, n + 2), dtype=complex)
    out[:, 0, 2:] = psi[:, 0, :]
    out[:, 1, :n] = psi[:, 1, :]
    return out, x_min - 1


def apply_shift(state: TripartiteState) -> TripartiteState:
    """H moves x -> x+1, V moves x -> x-1.  The step counter is left alone."""
    psi, x_min = _shift_array(state.psi, state.x_min)
    return state.with_psi(psi, x_min)


def step(state: TripartiteState, coin: CoinSpec | np.ndarray | None = None) -> TripartiteState:
    """One walk step: coin, then shift, step counter +1."""
    shifted = apply_shift(apply_coin(state, CoinSpec() if coin is None else coin))
    return shifted.with_psi(shifted.psi, shifted.x_min, state.step + 1)


def _bare_shift_step(state: TripartiteState) -> TripartiteState:
    shifted = apply_shift(state)
    return shifted.with_psi(shifted.psi, shifted.x_min, state.step + 1)


def _advance(state: TripartiteState, config: WalkConfig, k: int) -> TripartiteState:
    if k == 0 and config.order == "shift_first":
        return _bare_shift_step(state)
    return step(state, config.coin)


def _evolve_state(state: TripartiteState, config: WalkConfig) -> TripartiteState:
    for k in range(config.steps):
        state = _advance(state, config, k)
    return state


def evolve(initial: StateLike, config: WalkConfig | int) -> StateLike:
    """Apply ``config.steps`` walk steps to a state or to every ensemble branch."""
    if not isinstance(config, WalkConfig):
        config = WalkConfig(int(config))
    if isinstance(initial, Ensemble):
        return initial.map(lambda s: _evolve_state(s, config))
    if isinstance(initial, TripartiteState):
        return _evolve_state(initial, config)
    raise TypeError(f"cannot evolve {type(initial).__name__}")


def iter_evolution(initial: StateLike, config: WalkConfig):
    """Yield ``(t, state)`` for ``t = 0..config.steps``, evolving incrementally."""
    ens = as_ensemble(initial)
    current = ens
    yield 0, initial
    for k in range(config.steps):
        current = current.map(lambda s: _advance(s, config, k))
        yield k + 1, current if isinstance(initial, Ensemble) else current.branches[0][1]


def position_distribution(obj: StateLike) -> PositionDistribution:
    """``P(x) = sum over polarizations (and weighted branches) of |psi|^2``."""
    ens = as_ensemble(obj)
    lo, hi = support(ens)
    probs = np.zeros(hi - lo + 1)
    for w, s in ens:
        probs += w * np.sum(np.abs(s.window(lo, hi)) ** 2, axis=(0, 1))
    return PositionDistribution(np.arange(lo, hi + 1), probs, ens.step)

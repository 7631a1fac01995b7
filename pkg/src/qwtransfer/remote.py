"""Remote conditioning: how Alice's polarization choice steers Bob's walk.

Bob's coin is projected on ``cos(beta)|H> + sin(beta)|V>``, Alice's photon on
``cos(alpha)|H> + sin(alpha)|V>``, and the surviving position distribution of
Bob's photon is summarized by its variance.  The state is a mixture

    entangled_weight * |Phi(t)><Phi(t)| + (1 - entangled_weight) * q(t)

of the walked Bell state and a classically correlated (dephased) reference.

By default the walk runs in ``"shift_first"`` order (see :mod:`.walk`):
the detected step-one state has seen a single shift and no coin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import ZeroSuccess
from .hilbert import (
    Ensemble,
    PositionDistribution,
    StateLike,
    TripartiteState,
    as_ensemble,
    make_bell_initial,
    polarization_vector,
    support,
)
from .walk import CoinSpec, WalkConfig, evolve, iter_evolution

ZERO_SUCCESS_TOL = 1e-14
DEFAULT_ORDER = "shift_first"


@dataclass(frozen=True)
class DephasedBellSpec:
    """Classically correlated reference: anti-correlated in the basis at ``basis_angle``."""

    basis_angle: float = 0.0
    name: str = ""


THEORY_A = DephasedBellSpec(0.0, "theory_a")
THEORY_B = DephasedBellSpec(np.pi / 4, "theory_b")
THEORY_C = DephasedBellSpec(np.deg2rad(24.0), "theory_c")
THEORIES = (THEORY_A, THEORY_B, THEORY_C)


def make_classical_reference(spec: DephasedBellSpec = THEORY_A) -> Ensemble:
    """Equal mixture of ``|th, th+90, 0>`` and ``|th+90, th, 0>``."""
    u = polarization_vector(spec.basis_angle)
    w = polarization_vector(spec.basis_angle + np.pi / 2)
    branches = []
    for a_vec, c_vec in ((u, w), (w, u)):
        psi = np.einsum("a,c->ac", a_vec, c_vec)[:, :, None]
        branches.append((0.5, TripartiteState(psi, 0, 0)))
    return Ensemble(tuple(branches))


def default_grid(step_deg: float = 2.0) -> np.ndarray:
    """Projection angles ``0, step, ..., < 180`` degrees, returned in radians."""
    if not 0 < step_deg <= 180:
        raise ValueError("grid resolution must lie in (0, 180] degrees")
    return np.deg2rad(np.arange(0.0, 180.0, step_deg))


def _masses(ens: Ensemble, alphas, betas, lo: int, hi: int) -> np.ndarray:
    """Unnormalized projected weights, shape ``(n_alpha, n_beta, hi - lo + 1)``."""
    a_vecs = np.stack([polarization_vector(a) for a in np.atleast_1d(alphas)]).conj()
    b_vecs = np.stack([polarization_vector(b) for b in np.atleast_1d(betas)]).conj()
    out = np.zeros((len(a_vecs), len(b_vecs), hi - lo + 1))
    for w, s in ens:
        amp = np.einsum("ia,jc,acx->ijx", a_vecs, b_vecs, s.window(lo, hi))
        out += w * np.abs(amp) ** 2
    return out


def _mixture_masses(ent: Ensemble, cl: Ensemble, entangled_weight: float, alphas, betas):
    lo_e, hi_e = support(ent)
    lo_c, hi_c = support(cl)
    lo, hi = min(lo_e, lo_c), max(hi_e, hi_c)
    masses = np.zeros((len(np.atleast_1d(alphas)), len(np.atleast_1d(betas)), hi - lo + 1))
    if entangled_weight > 0:
        masses += entangled_weight * _masses(ent, alphas, betas, lo, hi)
    if entangled_weight < 1:
        masses += (1 - entangled_weight) * _masses(cl, alphas, betas, lo, hi)
    return np.arange(lo, hi + 1), masses


def _check_weight(entangled_weight: float) -> float:
    g = float(entangled_weight)
    if not 0 <= g <= 1:
        raise ValueError(f"entangled_weight must lie in [0, 1], got {entangled_weight!r}")
    return g


def projected_masses(
    entangled: StateLike,
    classical: StateLike,
    entangled_weight: float,
    alpha: float,
    beta: float,
    t: int,
    order: str = DEFAULT_ORDER,
    coin: CoinSpec | None = None,
) -> PositionDistribution:
    """Unnormalized ``<A, B, x| rho_mix(t) |A, B, x>`` for every position."""
    g = _check_weight(entangled_weight)
    config = WalkConfig(t, coin or CoinSpec(), order)
    ent = as_ensemble(evolve(entangled, config))
    cl = as_ensemble(evolve(classical, config))
    positions, masses = _mixture_masses(ent, cl, g, alpha, beta)
    return PositionDistribution(positions, masses[0, 0], t)


def conditioned_distribution(
    entangled: StateLike,
    classical: StateLike,
    entangled_weight: float,
    alpha: float,
    beta: float,
    t: int,
    order: str = DEFAULT_ORDER,
    coin: CoinSpec | None = None,
) -> tuple[PositionDistribution, float]:
    """Bob's post-selected position distribution and the joint success probability.

    ``entangled_weight`` is the weight of the entangled component (1 = fully
    entangled, 0 = fully classical).
    """
    raw = projected_masses(entangled, classical, entangled_weight, alpha, beta, t, order, coin)
    total = raw.total()
    if total < ZERO_SUCCESS_TOL:
        raise ZeroSuccess(f"projected mass {total:.3g} at alpha={alpha!r}, beta={beta!r}, t={t}")
    return PositionDistribution(raw.positions, raw.probs / total, t), total


def variance(dist: PositionDistribution) -> float:
    if not dist.is_normalized():
        raise ValueError(f"distribution sums to {dist.total()!r}, not 1")
    x = dist.positions.astype(float)
    mean = float(np.dot(x, dist.probs))
    return max(0.0, float(np.dot(x**2, dist.probs)) - mean**2)


def _grid_variances(positions: np.ndarray, masses: np.ndarray):
    total = masses.sum(axis=-1)
    present = total >= ZERO_SUCCESS_TOL
    safe = np.where(present, total, 1.0)
    probs = masses / safe[..., None]
    x = positions.astype(float)
    mean = probs @ x
    var = np.clip(probs @ x**2 - mean**2, 0.0, None)
    return np.where(present, var, np.nan), total, present


def minmax_normalize(raw: np.ndarray) -> np.ndarray:
    """Per-grid min-max scaling over the present (non-NaN) cells.

    A grid whose present cells all share one value maps to zeros.
    """
    out = np.full_like(raw, np.nan)
    present = ~np.isnan(raw)
    if not present.any():
        return out
    lo, hi = raw[present].min(), raw[present].max()
    span = hi - lo
    out[present] = (raw[present] - lo) / span if span > 1e-15 else 0.0
    return out


@dataclass(frozen=True)
class ConditioningScan:
    alpha_grid: np.ndarray = field(default_factory=default_grid)
    beta_grid: np.ndarray = field(default_factory=default_grid)
    steps: int = 3
    gamma: float = 1.0
    reference: DephasedBellSpec = THEORY_A
    order: str = DEFAULT_ORDER

    def __post_init__(self):
        object.__setattr__(self, "alpha_grid", np.atleast_1d(np.asarray(self.alpha_grid, dtype=float)))
        object.__setattr__(self, "beta_grid", np.atleast_1d(np.asarray(self.beta_grid, dtype=float)))
        if self.alpha_grid.size == 0 or self.beta_grid.size == 0:
            raise ValueError("angle grids must be non-empty")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError("steps must be a nonnegative integer")
        _check_weight(self.gamma)


@dataclass(frozen=True, eq=False)
class VarianceSurface:
    alphas: np.ndarray
    betas: np.ndarray
    steps: np.ndarray
    raw: np.ndarray  # (n_steps, n_alpha, n_beta); NaN where the projection never succeeds
    normalized: np.ndarray
    success: np.ndarray

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.raw)

    def max_raw(self, step: int) -> float:
        return float(np.nanmax(self.raw[self._index(step)]))

    def argmax(self, step: int) -> tuple[float, float]:
        """(alpha, beta) in radians of the largest raw variance at ``step``."""
        grid = np.where(self.present[self._index(step)], self.raw[self._index(step)], -np.inf)
        i, j = np.unravel_index(np.argmax(grid), grid.shape)
        return float(self.alphas[i]), float(self.betas[j])

    def _index(self, step: int) -> int:
        hit = np.flatnonzero(self.steps == step)
        if not hit.size:
            raise KeyError(f"step {step} not in surface")
        return int(hit[0])

    def rows(self) -> Iterator[tuple]:
        """Long format: step, alpha, beta, raw, normalized, success, present."""
        for k, t in enumerate(self.steps):
            for i, a in enumerate(self.alphas):
                for j, b in enumerate(self.betas):
                    yield (
                        int(t), float(a), float(b),
                        float(self.raw[k, i, j]), float(self.normalized[k, i, j]),
                        float(self.success[k, i, j]), bool(self.present[k, i, j]),
                    )


def run_scan(
    scan: ConditioningScan,
    entangled_initial: StateLike | None = None,
    classical_spec: DephasedBellSpec | None = None,
    coin: CoinSpec | None = None,
) -> VarianceSurface:
    """Variance of the conditioned distribution over the angle grid, steps 0..scan.steps."""
    entangled_initial = make_bell_initial() if entangled_initial is None else entangled_initial
    classical = make_classical_reference(classical_spec or scan.reference)
    config = WalkConfig(scan.steps, coin or CoinSpec(), scan.order)

    raws, norms, succ = [], [], []
    evolutions = zip(iter_evolution(entangled_initial, config), iter_evolution(classical, config))
    for (t, ent), (_, cl) in evolutions:
        positions, masses = _mixture_masses(
            as_ensemble(ent), as_ensemble(cl), scan.gamma, scan.alpha_grid, scan.beta_grid
        )
        var, total, _ = _grid_variances(positions, masses)
        raws.append(var)
        norms.append(minmax_normalize(var))
        succ.append(total)
    return VarianceSurface(
        scan.alpha_grid, scan.beta_grid, np.arange(scan.steps + 1),
        np.array(raws), np.array(norms), np.array(succ),
    )

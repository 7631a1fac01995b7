"""Correlation tensor, generalized CHSH quantifier and averaged entanglement."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyPosition, ImaginaryResidue, ZeroInitialEntanglement
from .hilbert import StateLike, as_ensemble, condition_on_position
from .walk import WalkConfig, iter_evolution, position_distribution

log = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# kron(P_i, P_j) for all nine pairs, shape (3, 3, 4, 4)
_PAULI_PAIRS = np.array([[np.kron(a, b) for b in PAULIS] for a in PAULIS])

IMAG_TOL = 1e-6
LOW_PROBABILITY = 1e-12


def correlation_tensor(rho) -> np.ndarray:
    """``T[i, j] = tr[rho (sigma_i x sigma_j)]`` for i, j in (x, y, z)."""
    rho = np.asarray(rho, dtype=complex)
    traces = np.einsum("ijab,ba->ij", _PAULI_PAIRS, rho)
    if np.max(np.abs(traces.imag)) >= IMAG_TOL:
        raise ImaginaryResidue(f"correlation trace has imaginary part {np.max(np.abs(traces.imag)):.3g}")
    return traces.real


def chsh_quantifier(rho, method: str = "svd") -> float:
    """Generalized CHSH entanglement score in [0, 1].

    ``tr[rho L]`` is maximized over the optimized alignment ``L``.  With
    ``method="svd"`` that maximum is the sum of singular values of the
    correlation tensor (free local rotations); ``method="diagonal"`` keeps
    ``L`` diagonal in the lab frame with ``L_i = sign(T_ii)``.
    """
    t = correlation_tensor(rho)
    if method == "svd":
        s = float(np.linalg.svd(t, compute_uv=False).sum())
    elif method == "diagonal":
        s = float(np.abs(np.diag(t)).sum())
    else:
        raise ValueError(f"unknown method {method!r}")
    q = (s - 1) / 4
    return min(1.0, q + abs(q))


def purity(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.einsum("ij,ji->", rho, rho).real)


@dataclass(frozen=True)
class PositionRecord:
    position: int
    probability: float
    entanglement: float
    purity: float
    flagged: bool = False


@dataclass(frozen=True)
class StepRecord:
    step: int
    e_avg: float
    e_normalized: float
    positions: tuple[PositionRecord, ...]

    def recomputed_average(self) -> float:
        return float(sum(p.probability * p.entanglement for p in self.positions))


@dataclass(frozen=True)
class EntanglementCurve:
    records: tuple[StepRecord, ...]

    @property
    def steps(self) -> np.ndarray:
        return np.array([r.step for r in self.records])

    @property
    def e_avg(self) -> np.ndarray:
        return np.array([r.e_avg for r in self.records])

    @property
    def e_normalized(self) -> np.ndarray:
        return np.array([r.e_normalized for r in self.records])


def _step_record(state: StateLike, t: int, method: str) -> tuple[float, list[PositionRecord]]:
    dist = position_distribution(state)
    rows = []
    for x, p in zip(dist.positions, dist.probs):
        if p == 0:
            continue
        x = int(x)
        if p < LOW_PROBABILITY:
            log.info("step %d position %d: probability %.3g too low, contributes 0", t, x, p)
            rows.append(PositionRecord(x, float(p), 0.0, float("nan"), True))
            continue
        try:
            rho, prob = condition_on_position(state, x)
        except EmptyPosition:
            rows.append(PositionRecord(x, float(p), 0.0, float("nan"), True))
            continue
        rows.append(PositionRecord(x, prob, chsh_quantifier(rho, method), purity(rho)))
    e_avg = float(sum(r.probability * r.entanglement for r in rows))
    return e_avg, rows


def entanglement_curve(
    initial: StateLike,
    config: WalkConfig,
    normalize: bool = True,
    method: str = "svd",
) -> EntanglementCurve:
    """Probability-weighted entanglement ``E(t) = sum_x P_t(x) E(x, t)`` for t = 0..steps.

    ``e_normalized`` is ``E(t) / E(0)``; it is NaN when ``normalize`` is off.
    """
    as_ensemble(initial)
    records = []
    e0 = None
    for t, state in iter_evolution(initial, config):
        e_avg, rows = _step_record(state, t, method)
        if e0 is None:
            e0 = e_avg
            if normalize and e0 < 1e-12:
                raise ZeroInitialEntanglement(f"initial average entanglement is {e0:.3g}")
        e_norm = e_avg / e0 if normalize else float("nan")
        records.append(StepRecord(t, e_avg, e_norm, tuple(rows)))
    return EntanglementCurve(tuple(records))

"""Tripartite states over (Alice polarization, Bob coin, Bob position).

A pure state is stored as a dense complex block ``psi[a, c, k]`` where ``a``
is Alice's qubit, ``c`` Bob's coin (index 0 = H, 1 = V) and ``k`` runs over a
contiguous window of positions starting at ``x_min``.  The window is trimmed
to the occupied support after every operation, so it never grows beyond
``2 * step + 1`` columns for walk-generated states.

Mixed states are ensembles of such pure states.  Two-qubit densities are
plain ``(4, 4)`` complex arrays in the basis (HH, HV, VH, VV), Alice first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

import numpy as np

from .errors import EmptyPosition

H, V = 0, 1
LABELS = ("H", "V")
ALICE = "alice"
BOB_COIN = "bob_coin"

AMPLITUDE_FLOOR = 1e-14
NORM_TOL = 1e-10
EMPTY_POSITION_TOL = 1e-12
ZERO_PROBABILITY = AMPLITUDE_FLOOR**2

SQRT1_2 = 1 / np.sqrt(2)
PSI_PLUS = np.array([0, SQRT1_2, SQRT1_2, 0], dtype=complex)


def polarization_vector(theta: float) -> np.ndarray:
    """Jones vector cos(theta)|H> + sin(theta)|V> (theta in radians)."""
    return np.array([np.cos(theta), np.sin(theta)], dtype=complex)


def pure_density(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


def check_density(rho, tol: float = NORM_TOL) -> np.ndarray:
    """Validate a two-qubit density matrix and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density contains NaN or Inf")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density trace {np.trace(rho).real!r} != 1")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise ValueError("density has negative eigenvalues")
    return rho


def _label_index(label) -> int:
    if label in (0, 1):
        return int(label)
    try:
        return LABELS.index(str(label).upper())
    except ValueError:
        raise ValueError(f"unknown polarization label {label!r}") from None


def _compact(psi: np.ndarray, x_min: int) -> tuple[np.ndarray, int]:
    psi = np.where(np.abs(psi) < AMPLITUDE_FLOOR, 0, psi)
    occupied = np.flatnonzero(np.any(psi != 0, axis=(0, 1)))
    if occupied.size == 0:
        return psi[:, :, :0], x_min
    lo, hi = occupied[0], occupied[-1] + 1
    return psi[:, :, lo:hi], x_min + int(lo)


@dataclass(frozen=True, eq=False)
class TripartiteState:
    """Normalized pure state ``sum psi[a, c, x] |a>_A |c, x>_B``."""

    psi: np.ndarray
    x_min: int = 0
    step: int = 0

    def __post_init__(self):
        psi = np.array(self.psi, dtype=complex)
        if psi.ndim != 3 or psi.shape[:2] != (2, 2):
            raise ValueError(f"psi must have shape (2, 2, n), got {psi.shape}")
        if not np.all(np.isfinite(psi)):
            raise ValueError("amplitudes must be finite")
        if self.step < 0:
            raise ValueError("step must be nonnegative")
        psi, x_min = _compact(psi, int(self.x_min))
        norm2 = float(np.sum(np.abs(psi) ** 2))
        if abs(norm2 - 1) > NORM_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm2!r})")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "x_min", x_min)

    @classmethod
    def from_amplitudes(cls, amplitudes: Mapping, step: int | None = None) -> "TripartiteState":
        """Build a state from ``{(alice, coin, x): amplitude}``.

        Labels may be ``"H"``/``"V"`` or 0/1.  ``step`` defaults to the
        largest occupied ``|x|``.
        """
        if not amplitudes:
            raise ValueError("no amplitudes given")
        xs = [int(x) for (_, _, x) in amplitudes]
        x_min = min(xs)
        psi = np.zeros((2, 2, max(xs) - x_min + 1), dtype=complex)
        for (a, c, x), amp in amplitudes.items():
            psi[_label_index(a), _label_index(c), int(x) - x_min] += amp
        if step is None:
            step = max(abs(x) for x in xs)
        return cls(psi, x_min, step)

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_min + self.psi.shape[2])

    @property
    def amplitudes(self) -> dict:
        """Nonzero amplitudes keyed by ``(alice, coin, x)`` with H/V labels."""
        out = {}
        for a, c, k in zip(*np.nonzero(self.psi)):
            out[(LABELS[a], LABELS[c], int(self.x_min + k))] = complex(self.psi[a, c, k])
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2)))

    def block(self, x: int) -> np.ndarray:
        """The (Alice, coin) 4-vector at position ``x`` (unnormalized)."""
        k = x - self.x_min
        if 0 <= k < self.psi.shape[2]:
            return self.psi[:, :, k].reshape(4)
        return np.zeros(4, dtype=complex)

    def window(self, x_min: int, x_max: int) -> np.ndarray:
        """Copy of ``psi`` zero-padded onto positions ``x_min..x_max``."""
        out = np.zeros((2, 2, x_max - x_min + 1), dtype=complex)
        lo = self.x_min - x_min
        if self.psi.shape[2]:
            if lo < 0 or lo + self.psi.shape[2] > out.shape[2]:
                raise ValueError("window does not cover the state's support")
            out[:, :, lo : lo + self.psi.shape[2]] = self.psi
        return out

    def with_psi(self, psi: np.ndarray, x_min: int, step: int | None = None) -> "TripartiteState":
        return TripartiteState(psi, x_min, self.step if step is None else step)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Convex mixture of pure tripartite states."""

    branches: tuple = field(default_factory=tuple)

    def __post_init__(self):
        branches = tuple((float(w), s) for w, s in self.branches)
        if not branches:
            raise ValueError("an ensemble needs at least one branch")
        for w, s in branches:
            if not 0 < w <= 1 + NORM_TOL:
                raise ValueError(f"branch weight {w!r} outside (0, 1]")
            if not isinstance(s, TripartiteState):
                raise TypeError("ensemble branches must be TripartiteState values")
        total = sum(w for w, _ in branches)
        if abs(total - 1) > NORM_TOL:
            raise ValueError(f"ensemble weights sum to {total!r}, not 1")
        object.__setattr__(self, "branches", branches)

    @classmethod
    def pure(cls, state: TripartiteState) -> "Ensemble":
        return cls(((1.0, state),))

    def __iter__(self) -> Iterator[tuple[float, TripartiteState]]:
        return iter(self.branches)

    def __len__(self) -> int:
        return len(self.branches)

    @property
    def step(self) -> int:
        return max(s.step for _, s in self.branches)

    def map(self, fn) -> "Ensemble":
        return Ensemble(tuple((w, fn(s)) for w, s in self.branches))


StateLike = Union[TripartiteState, Ensemble]


def as_ensemble(obj: StateLike) -> Ensemble:
    if isinstance(obj, Ensemble):
        return obj
    if isinstance(obj, TripartiteState):
        return Ensemble.pure(obj)
    raise TypeError(f"expected TripartiteState or Ensemble, got {type(obj).__name__}")


def support(obj: StateLike) -> tuple[int, int]:
    """Smallest position window ``(x_min, x_max)`` covering every branch."""
    ens = as_ensemble(obj)
    lows = [s.x_min for _, s in ens if s.psi.shape[2]]
    highs = [s.x_min + s.psi.shape[2] - 1 for _, s in ens if s.psi.shape[2]]
    return min(lows), max(highs)


def make_bell_initial() -> TripartiteState:
    """(|H>_A |V,0>_B + |V>_A |H,0>_B) / sqrt(2)."""
    return TripartiteState.from_amplitudes({("H", "V", 0): SQRT1_2, ("V", "H", 0): SQRT1_2}, step=0)


def make_werner_initial(visibility: float) -> Ensemble:
    """``v |Psi+><Psi+| + (1 - v) I/4`` at the origin, as up to five branches."""
    v = float(visibility)
    if not 0 <= v <= 1:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility!r}")
    branches = []
    if v > 0:
        branches.append((v, make_bell_initial()))
    if v < 1:
        for a in LABELS:
            for c in LABELS:
                state = TripartiteState.from_amplitudes({(a, c, 0): 1.0}, step=0)
                branches.append(((1 - v) / 4, state))
    return Ensemble(tuple(branches))


def werner_visibility_for(target: float) -> float:
    """Visibility whose Werner state scores ``target`` on the CHSH quantifier.

    Inverts ``E = max(0, (3v - 1) / 2)``; valid for ``0 < target <= 1``.
    """
    if not 0 < target <= 1:
        raise ValueError("target entanglement must lie in (0, 1]")
    return (2 * target + 1) / 3


def condition_on_position(obj: StateLike, x: int) -> tuple[np.ndarray, float]:
    """Renormalized (Alice, coin) density at position ``x`` and its weight."""
    rho = np.zeros((4, 4), dtype=complex)
    for w, s in as_ensemble(obj):
        b = s.block(x)
        rho += w * np.outer(b, b.conj())
    prob = float(np.trace(rho).real)
    if prob < EMPTY_POSITION_TOL:
        raise EmptyPosition(f"position {x} has probability {prob:.3g}")
    rho /= prob
    return (rho + rho.conj().T) / 2, prob


def _projector_vector(angle) -> np.ndarray:
    if np.ndim(angle) == 0:
        return polarization_vector(float(angle))
    vec = np.asarray(angle, dtype=complex)
    if vec.shape != (2,):
        raise ValueError("a projection state must be an angle or a length-2 vector")
    return vec / np.linalg.norm(vec)


def _project_state(state: TripartiteState, axis: int, vec: np.ndarray):
    contracted = np.tensordot(vec.conj(), state.psi, axes=([0], [axis]))
    prob = float(np.sum(np.abs(contracted) ** 2))
    if prob < ZERO_PROBABILITY:
        return None, 0.0
    post = np.expand_dims(contracted / np.sqrt(prob), axis)
    shape = [1, 1, 1]
    shape[axis] = 2
    post = post * vec.reshape(shape)
    return state.with_psi(post, state.x_min), prob


def project_polarization(obj: StateLike, party: str, angle):
    """Project one polarization qubit onto a pure state.

    ``angle`` is a linear-polarization angle in radians or an explicit Jones
    vector.  Returns ``(post, probability)`` where ``post`` is the
    renormalized post-measurement state (the projected qubit left in the
    target state) or ``None`` when the outcome has zero probability.
    """
    axis = {ALICE: 0, BOB_COIN: 1}.get(party)
    if axis is None:
        raise ValueError(f"party must be {ALICE!r} or {BOB_COIN!r}, got {party!r}")
    vec = _projector_vector(angle)
    if isinstance(obj, TripartiteState):
        return _project_state(obj, axis, vec)

    outcomes = []
    total = 0.0
    for w, s in as_ensemble(obj):
        post, p = _project_state(s, axis, vec)
        if post is not None:
            outcomes.append((w * p, post))
            total += w * p
    if total < ZERO_PROBABILITY:
        return None, 0.0
    return Ensemble(tuple((wp / total, post) for wp, post in outcomes)), total


@dataclass(frozen=True, eq=False)
class PositionDistribution:
    positions: np.ndarray
    probs: np.ndarray
    step: int = 0

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=int)
        probs = np.asarray(self.probs, dtype=float)
        if positions.shape != probs.shape:
            raise ValueError("positions and probs must have equal length")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_dict(cls, probs: Mapping[int, float], step: int = 0) -> "PositionDistribution":
        xs = sorted(probs)
        return cls(np.array(xs, dtype=int), np.array([probs[x] for x in xs], dtype=float), step)

    def as_dict(self) -> dict[int, float]:
        return {int(x): float(p) for x, p in zip(self.positions, self.probs) if p > 0}

    def total(self) -> float:
        return float(self.probs.sum())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.total() - 1) <= tol

    def __getitem__(self, x: int) -> float:
        hit = np.flatnonzero(self.positions == x)
        return float(self.probs[hit[0]]) if hit.size else 0.0

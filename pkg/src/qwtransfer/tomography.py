"""Two-qubit polarization tomography on (Alice, Bob coin) at one position.

Measurements are the 36 product projectors built from the six Pauli
eigenstates.  Each setting is sampled independently with a binomial draw,
inverted linearly onto the Pauli basis and then mapped to the nearest
physical density matrix in Frobenius norm.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .entanglement import PAULIS, chsh_quantifier, purity
from .errors import DegenerateCounts, MissingSetting
from .hilbert import StateLike, condition_on_position
from .walk import WalkConfig, evolve

_S = 1 / np.sqrt(2)
POLARIZATIONS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_S, _S], dtype=complex),
    "A": np.array([_S, -_S], dtype=complex),
    "R": np.array([_S, 1j * _S], dtype=complex),
    "L": np.array([_S, -1j * _S], dtype=complex),
}
PARTNER = {"H": "V", "V": "H", "D": "A", "A": "D", "R": "L", "L": "R"}

_BASIS = (np.eye(2, dtype=complex),) + PAULIS
# sigma_i x sigma_j for i, j in (I, X, Y, Z), flattened to 16 entries
_PAULI_BASIS = np.array([np.kron(a, b) for a in _BASIS for b in _BASIS])


@dataclass(frozen=True)
class MeasurementSetting:
    alice: str
    bob: str

    @property
    def label(self) -> str:
        return self.alice + self.bob

    @property
    def projector(self) -> np.ndarray:
        vec = np.kron(POLARIZATIONS[self.alice], POLARIZATIONS[self.bob])
        return np.outer(vec, vec.conj())


def standard_settings() -> list[MeasurementSetting]:
    """All 36 settings, ordered HH, HV, HD, ..., LL."""
    return [MeasurementSetting(a, b) for a, b in itertools.product(POLARIZATIONS, repeat=2)]


def born_probabilities(rho, settings=None) -> np.ndarray:
    settings = standard_settings() if settings is None else settings
    rho = np.asarray(rho, dtype=complex)
    probs = np.array([np.trace(rho @ s.projector).real for s in settings])
    return np.clip(probs, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class CountRecord:
    settings: tuple[MeasurementSetting, ...]
    counts: np.ndarray
    shots: int
    seed: int | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.settings),):
            raise ValueError("one count per setting is required")
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        if np.any(counts < 0) or np.any(counts > self.shots):
            raise ValueError("counts must lie in [0, shots]")
        object.__setattr__(self, "settings", tuple(self.settings))
        object.__setattr__(self, "counts", counts)

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots


def sample_counts(rho, settings=None, shots: int = 10**6, seed=None) -> CountRecord:
    """Independent binomial coincidence counts per setting.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    settings = standard_settings() if settings is None else list(settings)
    rng = np.random.default_rng(seed)
    counts = rng.binomial(shots, born_probabilities(rho, settings))
    return CountRecord(tuple(settings), counts, int(shots), seed if isinstance(seed, int) else None)


def cell_seed(master_seed: int, step: int, position: int) -> np.random.SeedSequence:
    """Independent stream for one (step, position) cell."""
    zigzag = 2 * position if position >= 0 else -2 * position - 1
    return np.random.SeedSequence([int(master_seed), int(step), zigzag])


def _design_matrix(settings) -> np.ndarray:
    return np.array([[np.trace(s.projector @ b).real / 4 for b in _PAULI_BASIS] for s in settings])


def linear_inversion(frequencies, settings=None) -> np.ndarray:
    """Least-squares Pauli coefficients from frequencies, with unit trace imposed."""
    settings = standard_settings() if settings is None else list(settings)
    design = _design_matrix(settings)
    rhs = np.asarray(frequencies, dtype=float) - design[:, 0]
    coeffs, *_ = np.linalg.lstsq(design[:, 1:], rhs, rcond=None)
    coeffs = np.concatenate([[1.0], coeffs])
    rho = np.einsum("k,kab->ab", coeffs, _PAULI_BASIS) / 4
    return (rho + rho.conj().T) / 2


def _project_simplex(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(values)[::-1]
    css = np.cumsum(u) - 1
    idx = np.arange(1, len(u) + 1)
    rho = idx[u - css / idx > 0][-1]
    shift = css[rho - 1] / rho
    return np.clip(values - shift, 0.0, None)


def nearest_density(matrix) -> np.ndarray:
    """Closest unit-trace positive semidefinite matrix in Frobenius distance."""
    matrix = np.asarray(matrix, dtype=complex)
    evals, evecs = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    if evals.min() >= 0 and abs(evals.sum() - 1) < 1e-15:
        return (matrix + matrix.conj().T) / 2
    evals = _project_simplex(evals)
    return (evecs * evals) @ evecs.conj().T


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(m)
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    s = _psd_sqrt(np.asarray(rho, dtype=complex))
    inner = np.linalg.eigvalsh(s @ np.asarray(sigma, dtype=complex) @ s)
    return float(min(1.0, np.sum(np.sqrt(np.clip(inner, 0.0, None))) ** 2))


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    rho_hat: np.ndarray
    fidelity_to_truth: float
    purity: float
    chsh: float
    position_probability: float = float("nan")


def _report(rho_hat, truth, position_probability=float("nan")) -> ReconstructionReport:
    fid = fidelity(truth, rho_hat) if truth is not None else float("nan")
    return ReconstructionReport(rho_hat, fid, purity(rho_hat), chsh_quantifier(rho_hat), position_probability)


def reconstruct_frequencies(frequencies, settings=None, truth=None) -> ReconstructionReport:
    rho_hat = nearest_density(linear_inversion(frequencies, settings))
    return _report(rho_hat, truth)


def reconstruct(counts: CountRecord, truth=None) -> ReconstructionReport:
    """Linear inversion + physical projection of a full 36-setting record."""
    by_label = {s.label: k for k, s in enumerate(counts.settings)}
    missing = [s.label for s in standard_settings() if s.label not in by_label]
    if missing:
        raise MissingSetting(f"missing settings: {', '.join(missing)}")
    if not counts.counts.any():
        raise DegenerateCounts("every setting recorded zero coincidences")
    order = [by_label[s.label] for s in standard_settings()]
    return reconstruct_frequencies(counts.frequencies[order], standard_settings(), truth)


def tomography_pipeline(
    initial: StateLike,
    config: WalkConfig,
    x: int,
    t: int,
    shots: int | None = None,
    seed=None,
) -> ReconstructionReport:
    """Evolve to step ``t``, tomograph the (Alice, coin) state at ``x``.

    ``shots=None`` uses exact Born probabilities (the infinite-count limit).
    The walk's coin and step ordering are taken from ``config``.
    """
    state = evolve(initial, WalkConfig(t, config.coin, config.order))
    truth, prob = condition_on_position(state, x)
    settings = standard_settings()
    if shots is None:
        report = reconstruct_frequencies(born_probabilities(truth, settings), settings, truth)
    else:
        report = reconstruct(sample_counts(truth, settings, shots, seed), truth)
    return ReconstructionReport(
        report.rho_hat, report.fidelity_to_truth, report.purity, report.chsh, prob
    )

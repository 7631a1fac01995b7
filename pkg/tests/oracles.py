"""Independent reference computations used by the tests.

Nothing here imports the package: walks are dense Kronecker-product
matrices over a fixed window of positions, quantifiers are recomputed from
scratch, and the CHSH alignment is found by brute-force optimization.
"""

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def shift_matrix(n):
    """Dense shift on coin x position (coin-major), positions -T..T with n = 2T+1."""
    right = np.eye(n, k=-1)  # |x+1><x|
    left = np.eye(n, k=1)  # |x-1><x|
    ph = np.diag([1, 0]).astype(complex)
    pv = np.diag([0, 1]).astype(complex)
    return np.kron(ph, right) + np.kron(pv, left)


def walk_operator(t, window, order="coin_first", coin=HAD):
    """Full (alice x coin x position) operator for t steps on positions -window..window."""
    n = 2 * window + 1
    s = shift_matrix(n)
    c = np.kron(coin, np.eye(n))
    sc = s @ c
    u = np.eye(2 * n, dtype=complex)
    for k in range(t):
        u = (s if (k == 0 and order == "shift_first") else sc) @ u
    return np.kron(np.eye(2), u)


def dense_initial(amps, window):
    """amps: {(a, c, x): value} with a, c in {0, 1}."""
    n = 2 * window + 1
    v = np.zeros(4 * n, dtype=complex)
    for (a, c, x), val in amps.items():
        v[a * 2 * n + c * n + (x + window)] = val
    return v


BELL_AMPS = {(0, 1, 0): 1 / np.sqrt(2), (1, 0, 0): 1 / np.sqrt(2)}


def dense_evolve(amps, t, order="coin_first", window=None):
    window = t if window is None else window
    v = walk_operator(t, window, order) @ dense_initial(amps, window)
    return v.reshape(2, 2, 2 * window + 1)


def corr_tensor(rho):
    p = (SX, SY, SZ)
    return np.array([[np.trace(rho @ np.kron(a, b)).real for b in p] for a in p])


def chsh_svd(rho):
    s = np.linalg.svd(corr_tensor(rho), compute_uv=False).sum()
    return max(0.0, (s - 1) / 2)


def chsh_bruteforce(rho, restarts=20, seed=0):
    """max over local rotations and sign choices of sum_i L_i (R_A T R_B^T)_ii."""
    t = corr_tensor(rho)
    rng = np.random.default_rng(seed)

    def neg(params):
        ra = Rotation.from_rotvec(params[:3]).as_matrix()
        rb = Rotation.from_rotvec(params[3:]).as_matrix()
        return -np.abs(np.diag(ra @ t @ rb.T)).sum()

    best = max(-minimize(neg, rng.normal(size=6), method="Nelder-Mead",
                         options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000}).fun
               for _ in range(restarts))
    return max(0.0, (best - 1) / 2)


def entanglement_average(psi):
    """sum_x P(x) E(x) for a (2, 2, n) pure tripartite array."""
    total = 0.0
    for k in range(psi.shape[2]):
        b = psi[:, :, k].reshape(4)
        p = np.vdot(b, b).real
        if p < 1e-12:
            continue
        total += p * chsh_svd(np.outer(b, b.conj()) / p)
    return total


def conditioned_masses(branches, alpha, beta, t, order="shift_first"):
    """Unnormalized projected weights per position for a weighted list of amplitude dicts."""
    a = np.array([np.cos(alpha), np.sin(alpha)])
    b = np.array([np.cos(beta), np.sin(beta)])
    proj = np.kron(np.kron(a, b), np.eye(2 * t + 1))  # <a, b| x 1_pos
    out = np.zeros(2 * t + 1)
    for w, amps in branches:
        v = walk_operator(t, t, order) @ dense_initial(amps, t)
        out += w * np.abs(proj @ v) ** 2
    return out


def grid_max_variance(branches, t, degrees, order="shift_first"):
    xs = np.arange(-t, t + 1)
    best = -np.inf
    for ad in degrees:
        for bd in degrees:
            m = conditioned_masses(branches, np.deg2rad(ad), np.deg2rad(bd), t, order)
            tot = m.sum()
            if tot < 1e-14:
                continue
            p = m / tot
            best = max(best, p @ xs**2 - (p @ xs) ** 2)
    return best


def dephased_branches(theta):
    u = np.array([np.cos(theta), np.sin(theta)])
    w = np.array([-np.sin(theta), np.cos(theta)])
    b1 = {(i, j, 0): u[i] * w[j] for i in range(2) for j in range(2)}
    b2 = {(i, j, 0): w[i] * u[j] for i in range(2) for j in range(2)}
    return [(0.5, b1), (0.5, b2)]


def random_density(rng, rank=4):
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_qubit_density(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, d=2):
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))

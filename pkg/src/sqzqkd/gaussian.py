"""Covariance-matrix algebra for multimode Gaussian states.

Quadratures are interleaved, (q1, p1, q2, p2, ...), and variances are in
shot-noise units, so the vacuum has covariance matrix identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SYMMETRY_TOL = 1e-9
PHYSICAL_TOL = 1e-9
ENTROPY_CLAMP = 1e-12


class UnphysicalStateError(ValueError):
    """Raised when a covariance matrix violates the uncertainty principle."""


class DegenerateMeasurementError(ValueError):
    """Raised when a homodyne conditioning divides by a zero variance."""


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Second moments of an n-mode Gaussian state.

    The array is symmetrized on construction and stored read-only.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError(f"covariance matrix must be 2n x 2n, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def block(self, i: int, j: int | None = None) -> np.ndarray:
        """2x2 block between modes ``i`` and ``j`` (default: the diagonal block)."""
        j = i if j is None else j
        return self.matrix[2 * i:2 * i + 2, 2 * j:2 * j + 2]

    def check_physical(self) -> None:
        nus = symplectic_eigenvalues(self)
        if nus[-1] < 1.0 - PHYSICAL_TOL:
            raise UnphysicalStateError(
                f"smallest symplectic eigenvalue {nus[-1]:.3e} is below 1")

    def __repr__(self):
        return f"CovarianceMatrix(n_modes={self.n_modes})"


@dataclass(frozen=True)
class SymplecticBS:
    """Beam splitter of transmissivity ``transmissivity`` acting on modes (i, j)."""

    transmissivity: float
    i: int
    j: int

    def __post_init__(self):
        if not 0.0 <= self.transmissivity <= 1.0:
            raise ValueError(f"transmissivity must lie in [0, 1], got {self.transmissivity}")
        if self.i == self.j:
            raise ValueError("beam splitter needs two distinct modes")

    def block_matrix(self) -> np.ndarray:
        t = np.sqrt(self.transmissivity)
        r = np.sqrt(1.0 - self.transmissivity)
        eye = np.eye(2)
        return np.block([[t * eye, r * eye], [-r * eye, t * eye]])


def vacuum(n_modes: int = 1) -> CovarianceMatrix:
    return CovarianceMatrix(np.eye(2 * n_modes))


def thermal(variance: float) -> CovarianceMatrix:
    if variance < 1.0:
        raise UnphysicalStateError(f"thermal variance {variance} is below shot noise")
    return CovarianceMatrix(variance * np.eye(2))


def tmsv_cm(variance: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum with local quadrature variance ``variance``."""
    if variance < 1.0:
        raise UnphysicalStateError(f"TMSV variance {variance} is below 1")
    c = np.sqrt(variance * variance - 1.0)
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    return CovarianceMatrix(np.block([[variance * eye, c * z], [c * z, variance * eye]]))


def omega(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _check_modes(cm: CovarianceMatrix, modes: Sequence[int]) -> None:
    for k in modes:
        if not 0 <= k < cm.n_modes:
            raise IndexError(f"mode {k} out of range for {cm.n_modes}-mode state")


def _mode_indices(modes: Sequence[int]) -> list[int]:
    return [2 * k + s for k in modes for s in (0, 1)]


def apply_symplectic(cm: CovarianceMatrix, s: np.ndarray) -> CovarianceMatrix:
    """Return S^T M S."""
    return CovarianceMatrix(s.T @ cm.matrix @ s)


def embed_symplectic(block: np.ndarray, modes: Sequence[int], n_modes: int) -> np.ndarray:
    """Full 2n x 2n symplectic acting as ``block`` on ``modes``, identity elsewhere."""
    s = np.eye(2 * n_modes)
    idx = _mode_indices(modes)
    s[np.ix_(idx, idx)] = block
    return s


def apply_beam_splitter(cm: CovarianceMatrix, bs: SymplecticBS) -> CovarianceMatrix:
    _check_modes(cm, (bs.i, bs.j))
    return apply_symplectic(cm, embed_symplectic(bs.block_matrix(), (bs.i, bs.j), cm.n_modes))


def two_mode_squeezer(r: float) -> np.ndarray:
    """4x4 symplectic; S(r)^T S(r) is the TMSV of variance cosh(2r)."""
    c, s = np.cosh(r), np.sinh(r)
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    return np.block([[c * eye, s * z], [s * z, c * eye]])


def direct_sum(*cms: CovarianceMatrix) -> CovarianceMatrix:
    dim = sum(c.matrix.shape[0] for c in cms)
    out = np.zeros((dim, dim))
    k = 0
    for c in cms:
        d = c.matrix.shape[0]
        out[k:k + d, k:k + d] = c.matrix
        k += d
    return CovarianceMatrix(out)


def reorder_modes(cm: CovarianceMatrix, permutation: Sequence[int]) -> CovarianceMatrix:
    """New mode ``k`` is old mode ``permutation[k]``."""
    perm = list(permutation)
    if sorted(perm) != list(range(cm.n_modes)):
        raise ValueError(f"{perm} is not a permutation of {cm.n_modes} modes")
    idx = _mode_indices(perm)
    return CovarianceMatrix(cm.matrix[np.ix_(idx, idx)])


def trace_out(cm: CovarianceMatrix, modes: Sequence[int]) -> CovarianceMatrix:
    drop = set(modes)
    if len(drop) != len(list(modes)):
        raise ValueError("duplicate modes in trace_out")
    _check_modes(cm, drop)
    keep = [k for k in range(cm.n_modes) if k not in drop]
    if not keep:
        raise ValueError("cannot trace out every mode")
    idx = _mode_indices(keep)
    return CovarianceMatrix(cm.matrix[np.ix_(idx, idx)])


def symplectic_eigenvalues(cm: CovarianceMatrix) -> np.ndarray:
    """Symplectic spectrum, descending.

    With M = L L^T, the Hermitian matrix L^T (i Omega) L has the same spectrum
    as i Omega M, and eigvalsh keeps the degenerate nu = 1 eigenvalues of pure
    states accurate to machine precision even when M has large entries.
    """
    try:
        chol = np.linalg.cholesky(cm.matrix)
    except np.linalg.LinAlgError:
        return symplectic_eigenvalues_general(cm)
    h = chol.T @ (1j * omega(cm.n_modes)) @ chol
    ev = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    return np.sort(ev[ev.size // 2:])[::-1].copy()


def symplectic_eigenvalues_general(cm: CovarianceMatrix) -> np.ndarray:
    """Moduli of eig(i Omega M) from a general complex eigensolver."""
    ev = np.linalg.eigvals(1j * omega(cm.n_modes) @ cm.matrix)
    # eigenvalues come in +/- pairs; keep one of each
    return np.sort(np.abs(ev))[::2][::-1].copy()


def symplectic_eigenvalues_two_mode(cm: CovarianceMatrix) -> np.ndarray:
    """Closed form for two modes via the seralian Delta = det A + det B + 2 det C."""
    if cm.n_modes != 2:
        raise ValueError("closed form needs a two-mode state")
    a, b, c = cm.block(0), cm.block(1), cm.block(0, 1)
    delta = np.linalg.det(a) + np.linalg.det(b) + 2.0 * np.linalg.det(c)
    det = np.linalg.det(cm.matrix)
    root = np.sqrt(max(delta * delta - 4.0 * det, 0.0))
    return np.sqrt(np.array([(delta + root) / 2.0, max((delta - root) / 2.0, 0.0)]))


def g_function(x: float) -> float:
    """Entropy in bits of a thermal mode with symplectic eigenvalue ``x``."""
    if x < 1.0 - PHYSICAL_TOL:
        raise UnphysicalStateError(f"symplectic eigenvalue {x} is below 1")
    if x <= 1.0 + ENTROPY_CLAMP:
        return 0.0
    up, down = (x + 1.0) / 2.0, (x - 1.0) / 2.0
    # up log2 up - down log2 down, rearranged to avoid cancellation at large x
    return float(math.log2(up) + down * math.log1p(1.0 / down) / math.log(2.0))


def von_neumann_entropy(cm: CovarianceMatrix) -> float:
    # looked up at call time so a patched g_function reaches every caller
    return float(sum(g_function(nu) for nu in symplectic_eigenvalues(cm)))


def condition_on_homodyne(cm: CovarianceMatrix, measured_mode: int,
                          quadrature: str = "q") -> CovarianceMatrix:
    """State of the remaining modes after homodyne detection of one mode.

    X M X with X = diag(1, 0) has pseudoinverse diag(1/V, 0), so only the
    measured quadrature's column of the correlation block contributes.
    """
    _check_modes(cm, (measured_mode,))
    if cm.n_modes < 2:
        raise ValueError("need at least one unmeasured mode")
    if quadrature not in ("q", "p"):
        raise ValueError(f"quadrature must be 'q' or 'p', got {quadrature!r}")
    rest = [k for k in range(cm.n_modes) if k != measured_mode]
    idx = _mode_indices(rest)
    col = 2 * measured_mode + (0 if quadrature == "q" else 1)
    var = cm.matrix[col, col]
    if var <= 0.0:
        raise DegenerateMeasurementError("measured quadrature has zero variance")
    m_rest = cm.matrix[np.ix_(idx, idx)]
    sigma = cm.matrix[idx, col]
    return CovarianceMatrix(m_rest - np.outer(sigma, sigma) / var)

"""Spatial covariance estimation, Toeplitz-Hermitian-PSD cone projection, first-column codec."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz


class NotToeplitzError(ValueError):
    """Raised when a matrix expected to be Toeplitz has non-constant diagonals."""


class NonConvergenceWarning(RuntimeWarning):
    """Emitted when the alternating projection hits its iteration cap with a large residual."""


@dataclass
class CovarianceMatrix:
    """Hermitian N x N spatial covariance. Symmetrized on construction so the
    Hermitian invariant holds exactly regardless of roundoff in the input."""

    data: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.data, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"covariance must be square, got shape {m.shape}")
        self.data = 0.5 * (m + m.conj().T)

    @property
    def n(self) -> int:
        return self.data.shape[0]


@dataclass
class ToeplitzColumn:
    """First column of a Hermitian Toeplitz matrix; entry 0 is a diagonal value
    and therefore real (enforced within 1e-10)."""

    col: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.col, dtype=np.complex128).copy()
        if c.ndim != 1:
            raise ValueError("column must be a 1-D vector")
        if abs(c[0].imag) > 1e-10 * max(1.0, abs(c[0])):
            raise ValueError(f"col[0] must be real, got {c[0]}")
        c[0] = c[0].real
        self.col = c

    @property
    def n(self) -> int:
        return self.col.shape[0]


def comm_covariance(ch, n_vehicle: int) -> CovarianceMatrix:
    """Infrastructure-side covariance of a wideband channel.

    R = (1/K) sum_k (1/N_v) H[k]^H H[k], averaging the per-subcarrier covariance
    over all subcarriers. PSD by construction. `ch` is a ChannelFreq or a raw
    (K, N_v, N_rsu) array.
    """
    resp = np.asarray(getattr(ch, "response", ch))
    if resp.ndim != 3:
        raise ValueError(f"expected (K, N_v, N_rsu) responses, got shape {resp.shape}")
    k = resp.shape[0]
    if k < 1:
        raise ValueError("need at least one subcarrier")
    acc = np.einsum("kva,kvb->ab", resp.conj(), resp)
    return CovarianceMatrix(acc / (k * n_vehicle))


def sample_covariance(y: np.ndarray) -> CovarianceMatrix:
    """Snapshot covariance estimate R = (1/I) Y Y^H from an N x I sample matrix."""
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2 or y.shape[1] < 1:
        raise ValueError(f"expected N x I snapshot matrix, got shape {y.shape}")
    return CovarianceMatrix((y @ y.conj().T) / y.shape[1])


_DIAG_INDEX_CACHE = {}


def _diag_index(n: int):
    """Flattened (i - j) offsets shifted to [0, 2n-2], plus per-offset counts."""
    cached = _DIAG_INDEX_CACHE.get(n)
    if cached is None:
        i = np.arange(n)
        offsets = (i[:, None] - i[None, :]).ravel() + (n - 1)
        counts = np.bincount(offsets, minlength=2 * n - 1).astype(np.float64)
        cached = _DIAG_INDEX_CACHE[n] = (offsets, counts)
    return cached


def _diag_means(m: np.ndarray) -> np.ndarray:
    """Mean of every diagonal, indexed by offset i - j in [-(n-1), n-1]."""
    n = m.shape[0]
    offsets, counts = _diag_index(n)
    flat = m.ravel()
    sums = np.bincount(offsets, weights=flat.real, minlength=2 * n - 1) + \
        1j * np.bincount(offsets, weights=flat.imag, minlength=2 * n - 1)
    return sums / counts


def _project_toeplitz_hermitian(m: np.ndarray) -> np.ndarray:
    """Least-squares projection onto Hermitian Toeplitz matrices: average each
    diagonal of the Hermitian part."""
    n = m.shape[0]
    h = 0.5 * (m + m.conj().T)
    col = _diag_means(h)[n - 1:]
    col[0] = col[0].real
    return toeplitz(col, col.conj())


def _project_psd(m: np.ndarray) -> np.ndarray:
    """Projection of a Hermitian matrix onto the PSD cone: clip negative
    eigenvalues to 0 (no floor lift; eigh reads one triangle, so roundoff
    asymmetry is harmless)."""
    w, v = np.linalg.eigh(m)
    return (v * np.maximum(w, 0.0)) @ v.conj().T


def project_toeplitz_psd(r: CovarianceMatrix, tol: float = 1e-9, max_iter: int = 500) -> CovarianceMatrix:
    """Project onto the cone of Toeplitz, Hermitian, positive semi-definite matrices.

    Dykstra's alternating projections between the PSD cone (eigenvalue clipping)
    and the Toeplitz-Hermitian subspace (diagonal averaging); with the correction
    terms the limit is the metric projection onto the intersection, not just some
    feasible point. Stops once both the iterate step and the cone feasibility gap
    fall below tol * max(1, ||R||_F) in Frobenius norm, or at max_iter.

    When the optimum sits on the cone boundary the gap can decay slowly, so the
    final (exactly Toeplitz) iterate gets a feasibility finish: its spectrum is
    shifted up by however far it dips below the cone. The shift is bounded by
    the residual, hence below tol on converged runs, and the output is always
    exactly Toeplitz-Hermitian and PSD.

    Emits NonConvergenceWarning when max_iter is reached with residual
    > 100 * tol * scale; the finished iterate is still returned.
    """
    x = r.data
    n = r.n
    scale = max(1.0, np.linalg.norm(x))
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    y = x
    residual = np.inf
    for _ in range(max_iter):
        y_prev = y
        z = _project_psd(x + p)
        p = x + p - z
        y = _project_toeplitz_hermitian(z + q)
        q = z + q - y
        x = y
        step = np.linalg.norm(y - y_prev)
        gap = np.linalg.norm(y - z)
        residual = max(step, gap)
        if residual < tol * scale:
            break
    else:
        if residual > 100 * tol * scale:
            warnings.warn(
                f"Toeplitz-PSD projection stopped at max_iter={max_iter} "
                f"with residual {residual:.3e}",
                NonConvergenceWarning,
            )
    lam_min = float(np.linalg.eigvalsh(y)[0])
    if lam_min < 0.0:
        y = y + (-lam_min) * np.eye(n)  # keeps the Toeplitz-Hermitian structure
    return CovarianceMatrix(y)


def first_column(r: CovarianceMatrix, tol: float = 1e-6) -> ToeplitzColumn:
    """Extract column 0 of a Toeplitz covariance. Rejects inputs whose diagonals
    vary by more than `tol` (relative to the largest entry magnitude)."""
    m = r.data
    n = r.n
    scale = max(1.0, np.abs(m).max())
    means = _diag_means(m)
    offsets, _ = _diag_index(n)
    dev = np.abs(m.ravel() - means[offsets]).max()
    if dev > tol * scale:
        raise NotToeplitzError(f"diagonals vary by up to {dev:.3e} (tol {tol * scale:.3e})")
    return ToeplitzColumn(m[:, 0].copy())


def toeplitz_from_column(r: ToeplitzColumn) -> CovarianceMatrix:
    """Hermitian Toeplitz embedding of a first column: entry (i, j) is
    col[i-j] for i >= j and conj(col[j-i]) above the diagonal. PSD is not
    guaranteed; that is the caller's concern."""
    return CovarianceMatrix(toeplitz(r.col, r.col.conj()))

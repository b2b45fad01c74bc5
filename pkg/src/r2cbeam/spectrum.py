"""Angular grid, azimuth power spectrum extraction, log scaling, windowed similarity."""

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceMatrix

LINEAR = "linear"
LOG_DB = "log_db"


@dataclass
class DftGrid:
    """Bank of array response vectors on an angle grid.

    matrix[:, i] is the response at angles[i]; with half-wavelength spacing and
    the sine-spaced grid the columns are orthogonal (F^H F = N I), so spectrum
    bins partition signal energy and line up one-to-one with the beam codebook.
    """

    matrix: np.ndarray
    angles: np.ndarray


@dataclass
class Aps:
    """Azimuth power spectrum over the grid bins.

    Linear-scale values are powers and get clamped at 0 on construction;
    log-scale values are dB. The scale tag keeps the two from mixing silently.
    """

    values: np.ndarray
    scale: str = LINEAR

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).copy()
        if v.ndim != 1:
            raise ValueError("spectrum must be a 1-D vector")
        if self.scale not in (LINEAR, LOG_DB):
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.scale == LINEAR:
            v = np.maximum(v, 0.0)
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]


def dft_grid(n: int, spacing: float = 0.5, sine_spaced: bool = True) -> DftGrid:
    """Angle grid covering the sector [-pi/2, pi/2) with bin-centered points.

    Default places the bins uniformly in sin(theta), theta_i = arcsin(-1 + (2i+1)/n),
    which makes the bank orthogonal for spacing 0.5 and aligns bins with the
    arcsin beam codebook. sine_spaced=False gives bin-centered uniform-in-theta
    points instead (no orthogonality).
    """
    if n < 2:
        raise ValueError("grid needs at least 2 points")
    i = np.arange(n)
    if sine_spaced:
        angles = np.arcsin(-1.0 + (2.0 * i + 1.0) / n)
    else:
        angles = -np.pi / 2 + (2.0 * i + 1.0) * np.pi / (2.0 * n)
    phase = 2.0 * np.pi * spacing * np.sin(angles)
    matrix = np.exp(1j * np.outer(np.arange(n), phase))
    return DftGrid(matrix=matrix, angles=angles)


def aps(r: CovarianceMatrix, grid: DftGrid) -> Aps:
    """Power spectrum d[i] = Re(f_i^H R f_i) over the grid bins.

    For Hermitian R the quadratic form is real; the imaginary residual is
    asserted below 1e-9 of the trace as a numerical self-check. Roundoff
    negatives are clamped by the Aps constructor.
    """
    f = grid.matrix
    if r.n != f.shape[0]:
        raise ValueError(f"covariance is {r.n}x{r.n} but grid has {f.shape[0]} elements")
    quad = np.einsum("ni,nm,mi->i", f.conj(), r.data, f, optimize=True)
    trace = max(np.abs(np.trace(r.data).real), 1.0)
    resid = np.abs(quad.imag).max()
    if resid > 1e-9 * trace:
        raise AssertionError(f"non-Hermitian input: imaginary residual {resid:.3e}")
    return Aps(quad.real, LINEAR)


def aps_linear_map(grid: DftGrid) -> np.ndarray:
    """Matrix M mapping a 2-channel first column [Re r; Im r] to the spectrum of
    its Hermitian Toeplitz embedding.

    diag(F^H T(r) F)[i] = N r0 + 2 sum_k (N-k) Re(r_k e^{-j k w_i}) is linear in
    (Re r, Im r), so the spectrum of a Toeplitz matrix -- and hence the column
    prediction loss -- reduces to one (N x 2N) matrix. Column N (Im r0) is zero:
    the diagonal of a Hermitian matrix has no imaginary part.
    """
    n = grid.angles.shape[0]
    omega = np.angle(grid.matrix[1, :])  # per-element phase increment, mod 2pi is harmless
    k = np.arange(n)
    kw = np.outer(k, omega)  # (k, i)
    weight = np.where(k == 0, float(n), 2.0 * (n - k))[:, None]
    m_re = (weight * np.cos(kw)).T
    m_im = (weight * np.sin(kw)).T
    m_im[:, 0] = 0.0
    return np.concatenate([m_re, m_im], axis=1)


def to_log_scale(d: Aps, floor_db: float = -80.0) -> Aps:
    """10 log10 of the spectrum with values floored at floor_db."""
    if d.scale != LINEAR:
        raise ValueError("expected a linear-scale spectrum")
    floor = 10.0 ** (floor_db / 10.0)
    return Aps(10.0 * np.log10(np.maximum(d.values, floor)), LOG_DB)


def from_log_scale(d: Aps) -> Aps:
    """Inverse of to_log_scale; exact above the floor."""
    if d.scale != LOG_DB:
        raise ValueError("expected a log-scale spectrum")
    return Aps(10.0 ** (d.values / 10.0), LINEAR)


def top_indices(d: Aps, window: int) -> np.ndarray:
    """Indices of the `window` largest bins, ties broken toward the lower index."""
    if not 1 <= window <= d.n:
        raise ValueError(f"window must be in [1, {d.n}], got {window}")
    order = np.argsort(-d.values, kind="stable")
    return order[:window]


def similarity(d1: Aps, d2: Aps, window: int) -> float:
    """Windowed overlap score between two spectra.

    S = (sum of d2 over the top-`window` bins of d1) / (sum of d2 over its own
    top-`window` bins). Lives in [0, 1] because the denominator set maximizes
    the window sum of d2; equals 1 when d2 is identically zero (nothing to miss).
    """
    if d1.n != d2.n:
        raise ValueError("spectra must have the same length")
    if d1.scale != LINEAR or d2.scale != LINEAR:
        raise ValueError("similarity is defined on linear-scale spectra")
    # summing in index order makes identical windows give bit-identical sums
    i1 = np.sort(top_indices(d1, window))
    i2 = np.sort(top_indices(d2, window))
    denom = float(d2.values[i2].sum())
    if denom == 0.0:
        return 1.0
    return min(float(d2.values[i1].sum()) / denom, 1.0)

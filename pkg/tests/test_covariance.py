import numpy as np
import pytest

from r2cbeam.covariance import (
    CovarianceMatrix,
    NotToeplitzError,
    ToeplitzColumn,
    comm_covariance,
    first_column,
    project_toeplitz_psd,
    sample_covariance,
    toeplitz_from_column,
)
from r2cbeam.scenario import UlaConfig, steering_vector


def random_hermitian(rng, n, scale=0.25):
    a = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return CovarianceMatrix(a)


def test_covariance_matrix_symmetrized_on_construction():
    m = np.array([[1.0, 2.0 + 1j], [0.0, 3.0]])
    r = CovarianceMatrix(m)
    assert np.allclose(r.data, r.data.conj().T)
    with pytest.raises(ValueError):
        CovarianceMatrix(np.zeros((2, 3)))


def test_toeplitz_column_requires_real_head():
    ToeplitzColumn(np.array([1.0, 0.5j]))
    with pytest.raises(ValueError):
        ToeplitzColumn(np.array([1.0 + 0.1j, 0.5]))


def test_comm_covariance_single_flat_path():
    # H[k] = alpha a_v(phi) a_rsu(theta)^H for all k collapses to |alpha|^2 a a^H
    rsu, veh = UlaConfig(8), UlaConfig(4)
    a_r = steering_vector(rsu, 0.3)
    a_v = steering_vector(veh, -0.2)
    alpha = 0.7 - 0.4j
    h = alpha * np.outer(a_v, a_r.conj())
    resp = np.stack([h] * 5)
    r = comm_covariance(resp, veh.num_antennas)
    assert np.allclose(r.data, abs(alpha) ** 2 * np.outer(a_r, a_r.conj()), atol=1e-12)


def test_comm_covariance_zero_channel_and_single_subcarrier():
    resp = np.zeros((3, 4, 8), dtype=complex)
    assert np.allclose(comm_covariance(resp, 4).data, 0.0)
    rng = np.random.default_rng(0)
    h = rng.standard_normal((1, 4, 8)) + 1j * rng.standard_normal((1, 4, 8))
    r1 = comm_covariance(h, 4)
    expect = h[0].conj().T @ h[0] / 4
    assert np.allclose(r1.data, expect, atol=1e-12)


def test_sample_covariance_fixtures():
    a = np.array([1.0 + 1j, 2.0, -1j])
    y = np.tile(a[:, None], (1, 6))
    assert np.allclose(sample_covariance(y).data, np.outer(a, a.conj()), atol=1e-12)
    n = 5
    assert np.allclose(sample_covariance(np.eye(n)).data, np.eye(n) / n, atol=1e-15)


def test_sample_covariance_psd_and_trace():
    rng = np.random.default_rng(1)
    for _ in range(20):
        y = rng.standard_normal((6, 9)) + 1j * rng.standard_normal((6, 9))
        r = sample_covariance(y)
        assert np.linalg.eigvalsh(r.data).min() >= -1e-12
        assert np.isclose(np.trace(r.data).real, np.linalg.norm(y) ** 2 / 9)


def test_projection_fixed_points():
    eye = CovarianceMatrix(np.eye(4))
    out = project_toeplitz_psd(eye)
    assert np.allclose(out.data, np.eye(4), atol=1e-9)
    # rank-1 steering covariances are already Toeplitz-Hermitian-PSD on a ULA
    a = steering_vector(UlaConfig(8), 0.41)
    r = CovarianceMatrix(np.outer(a, a.conj()))
    out = project_toeplitz_psd(r)
    assert np.allclose(out.data, r.data, atol=1e-8)


def test_projection_2x2_closed_form():
    # least squares over {[[d, t], [conj(t), d]] : d >= |t|} gives d=1, t=0
    r = CovarianceMatrix(np.array([[2.0, 0.0], [0.0, 0.0]]))
    out = project_toeplitz_psd(r)
    assert np.allclose(out.data, np.eye(2), atol=1e-9)


def test_projection_feasibility_and_idempotence():
    rng = np.random.default_rng(7)
    tol = 1e-9
    for _ in range(40):
        r = random_hermitian(rng, 16)
        out = project_toeplitz_psd(r, tol=tol, max_iter=150)
        m = out.data
        # exactly Toeplitz by construction
        for k in range(1, 16):
            d = np.diagonal(m, offset=-k)
            assert np.abs(d - d[0]).max() <= 1e-10
        assert np.linalg.eigvalsh(m).min() >= -1e-10
        again = project_toeplitz_psd(out, tol=tol, max_iter=150)
        assert np.linalg.norm(again.data - m) <= 2 * tol * max(1.0, np.linalg.norm(m))


def test_first_column_and_embedding_round_trips():
    assert np.allclose(first_column(CovarianceMatrix(np.eye(5))).col,
                       np.array([1, 0, 0, 0, 0.0]))
    col = ToeplitzColumn(np.array([2.0, 0.3 - 0.2j, 0.1j, -0.4]))
    t = toeplitz_from_column(col)
    assert np.allclose(first_column(t).col, col.col)
    # Hermitian Toeplitz rule by hand at n=2
    t2 = toeplitz_from_column(ToeplitzColumn(np.array([1.0, 0.5j])))
    assert np.allclose(t2.data, np.array([[1.0, -0.5j], [0.5j, 1.0]]))


def test_toeplitz_from_column_identity():
    col = ToeplitzColumn(np.array([1.0, 0, 0]))
    assert np.allclose(toeplitz_from_column(col).data, np.eye(3))


def test_first_column_rejects_non_toeplitz():
    m = CovarianceMatrix(np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(NotToeplitzError):
        first_column(m)

import numpy as np
import pytest

from r2cbeam.covariance import CovarianceMatrix, ToeplitzColumn, toeplitz_from_column
from r2cbeam.scenario import UlaConfig, steering_vector
from r2cbeam.spectrum import (
    Aps,
    aps,
    aps_linear_map,
    dft_grid,
    from_log_scale,
    similarity,
    to_log_scale,
    top_indices,
)


def test_grid_angles_and_structure():
    g = dft_grid(2)
    assert np.allclose(g.angles, [np.arcsin(-0.5), np.arcsin(0.5)])
    g = dft_grid(16)
    assert np.all(np.diff(g.angles) > 0)
    assert g.angles[0] >= -np.pi / 2 and g.angles[-1] < np.pi / 2
    assert np.allclose(np.abs(g.matrix), 1.0)
    assert np.allclose(np.sum(np.abs(g.matrix) ** 2, axis=0), 16.0)
    # sine spacing at half-wavelength makes the bank orthogonal
    assert np.allclose(g.matrix.conj().T @ g.matrix, 16 * np.eye(16), atol=1e-9)


def test_grid_uniform_angle_option():
    g = dft_grid(8, sine_spaced=False)
    assert np.allclose(np.diff(g.angles), np.pi / 8)
    assert np.isclose(g.angles[0], -np.pi / 2 + np.pi / 16)


def test_aps_on_identity_zero_and_gridded_source():
    n = 16
    g = dft_grid(n)
    d = aps(CovarianceMatrix(np.eye(n)), g)
    assert np.allclose(d.values, n)
    d0 = aps(CovarianceMatrix(np.zeros((n, n))), g)
    assert np.allclose(d0.values, 0.0)
    for i in (0, 5, 15):
        a = steering_vector(UlaConfig(n), g.angles[i])
        d = aps(CovarianceMatrix(np.outer(a, a.conj())), g)
        assert np.argmax(d.values) == i
        assert np.isclose(d.values[i], n ** 2, rtol=1e-12)


def test_aps_linearity_and_energy_for_psd_inputs():
    rng = np.random.default_rng(3)
    n = 16
    g = dft_grid(n)
    for _ in range(10):
        b1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        r1 = CovarianceMatrix(b1 @ b1.conj().T)
        r2 = CovarianceMatrix(b2 @ b2.conj().T)
        al, be = rng.uniform(0, 2, size=2)
        mix = CovarianceMatrix(al * r1.data + be * r2.data)
        lhs = aps(mix, g).values
        rhs = al * aps(r1, g).values + be * aps(r2, g).values
        assert np.allclose(lhs, rhs, atol=1e-10 * max(1.0, rhs.max()))
        # orthogonal bank: bins partition n * trace
        assert np.isclose(aps(r1, g).values.sum(), n * np.trace(r1.data).real, rtol=1e-8)


def test_aps_linear_map_matches_quadratic_form():
    rng = np.random.default_rng(5)
    n = 12
    g = dft_grid(n)
    m = aps_linear_map(g)
    assert m.shape == (n, 2 * n)
    assert np.allclose(m[:, n], 0.0)  # Im r0 never contributes
    for _ in range(10):
        col = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        col[0] = col[0].real
        t = toeplitz_from_column(ToeplitzColumn(col))
        brute = np.einsum("ni,nm,mi->i", g.matrix.conj(), t.data, g.matrix).real
        vec = np.concatenate([col.real, col.imag])
        assert np.allclose(m @ vec, brute, atol=1e-9 * max(1.0, np.abs(brute).max()))


def test_log_scale_round_trip():
    d = Aps(np.array([1.0, 0.0, 2.5]))
    logd = to_log_scale(d, floor_db=-80.0)
    assert logd.scale == "log_db"
    assert np.isclose(logd.values[0], 0.0)
    assert np.isclose(logd.values[1], -80.0)
    rng = np.random.default_rng(0)
    vals = 10.0 ** rng.uniform(-7, 3, size=50)
    back = from_log_scale(to_log_scale(Aps(vals)))
    assert np.allclose(back.values, vals, rtol=1e-12)


def test_top_indices_tie_breaks():
    assert list(top_indices(Aps(np.array([4.0, 3, 2, 1])), 2)) == [0, 1]
    assert list(top_indices(Aps(np.array([1.0, 1, 1, 1])), 2)) == [0, 1]
    assert list(top_indices(Aps(np.array([0.0, 0, 5, 6])), 2)) == [3, 2]
    with pytest.raises(ValueError):
        top_indices(Aps(np.array([1.0, 2])), 3)


def test_similarity_fixtures():
    d1 = Aps(np.array([0.0, 0, 5, 6]))
    d2 = Aps(np.array([4.0, 3, 2, 1]))
    assert np.isclose(similarity(d1, d2, 2), 3.0 / 7.0, atol=1e-12)
    assert similarity(d2, d2, 2) == 1.0
    disjoint = Aps(np.array([0.0, 0, 0, 1]))
    support = Aps(np.array([1.0, 1, 0, 0]))
    assert similarity(disjoint, support, 1) == 0.0
    assert similarity(d1, Aps(np.zeros(4)), 2) == 1.0


def test_similarity_range_and_scale_invariance():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = rng.integers(4, 20)
        d1 = Aps(rng.uniform(0, 10, n))
        d2 = Aps(rng.uniform(0, 10, n))
        window = int(rng.integers(1, n + 1))
        s = similarity(d1, d2, window)
        assert 0.0 <= s <= 1.0
        c1, c2 = rng.uniform(0.1, 9, size=2)
        s_scaled = similarity(Aps(c1 * d1.values), Aps(c2 * d2.values), window)
        assert np.isclose(s, s_scaled, atol=1e-12)


def test_similarity_requires_linear_scale():
    d = to_log_scale(Aps(np.array([1.0, 2, 3])))
    with pytest.raises(ValueError):
        similarity(d, d, 1)

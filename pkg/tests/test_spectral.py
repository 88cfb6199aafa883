"""Zero-flux Laplacian spectra: analytic enumeration and the discrete check."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crossdiff import (
    ConfigError,
    Domain,
    discrete_laplacian_spectrum,
    eigenfunction,
    neumann_eigenvalues,
    spectrum_through,
)

PI = np.pi


def test_interval_modes_are_squares():
    spectrum = neumann_eigenvalues(Domain(kind="interval", lengths=(PI,)), 4)
    got = [(e.lambda_hat, e.M) for e in spectrum.entries]
    assert got == [(0.0, 1), (1.0, 1), (4.0, 1), (9.0, 1)]


def test_square_first_nonzero_mode_is_double():
    spectrum = neumann_eigenvalues(Domain(kind="rectangle", lengths=(PI, PI)), 3)
    entry = spectrum.entries[1]
    assert entry.lambda_hat == pytest.approx(1.0)
    assert entry.M == 2
    assert set(entry.mode_indices) == {(1, 0), (0, 1)}


def test_half_height_rectangle_values():
    # (0,pi) x (0,pi/2): eigenvalues are k1^2 + 4 k2^2.
    spectrum = neumann_eigenvalues(
        Domain(kind="rectangle", lengths=(PI, PI / 2)), 6
    )
    pairs = [(k1, k2) for k1 in range(6) for k2 in range(6)]
    exact = sorted({k1**2 + 4 * k2**2 for k1, k2 in pairs})[:6]
    np.testing.assert_allclose(spectrum.values[:6], exact, rtol=1e-12)
    # 4 = 2^2 + 0 = 0 + 4*1^2: an honest collision.
    entry = next(e for e in spectrum.entries if e.lambda_hat == pytest.approx(4.0))
    assert entry.M == 2


def test_entries_strictly_increasing_and_first_is_constant_mode():
    for lengths in [(PI,), (2.0, 3.0)]:
        kind = "interval" if len(lengths) == 1 else "rectangle"
        spectrum = neumann_eigenvalues(Domain(kind=kind, lengths=lengths), 8)
        values = spectrum.values
        assert values[0] == 0.0
        assert spectrum.entries[0].M == 1
        assert np.all(np.diff(values) > 0)


@given(st.floats(0.3, 4.0), st.integers(1, 6))
def test_interval_scaling_law(s, k):
    base = neumann_eigenvalues(Domain(kind="interval", lengths=(PI,)), 8)
    scaled = neumann_eigenvalues(Domain(kind="interval", lengths=(s * PI,)), 8)
    assert scaled.values[k] == pytest.approx(base.values[k] / s**2, rel=1e-12)


def test_spectrum_through_bound_is_inclusive_cover():
    domain = Domain(kind="interval", lengths=(PI,))
    spectrum = spectrum_through(domain, 10.0)
    assert [e.lambda_hat for e in spectrum.entries] == [0.0, 1.0, 4.0, 9.0]
    with_extra = spectrum_through(domain, 10.0, extra=2)
    assert [e.lambda_hat for e in with_extra.entries[-2:]] == [16.0, 25.0]


def test_min_gap_reports_closest_distinct_pair():
    spectrum = neumann_eigenvalues(Domain(kind="interval", lengths=(PI,)), 5)
    # distinct values 0,1,4,9,16: closest pair is (0,1).
    assert spectrum.min_gap == pytest.approx(1.0)


def test_eigenfunction_interval_and_square():
    domain = Domain(kind="interval", lengths=(PI,))
    x = np.linspace(0.0, PI, 7)
    np.testing.assert_allclose(eigenfunction(domain, (2,), x), np.cos(2 * x))
    square = Domain(kind="rectangle", lengths=(PI, PI))
    pts = np.array([[0.3, 1.1], [2.0, 0.4]])
    expected = np.cos(pts[:, 0]) * np.cos(2 * pts[:, 1])
    np.testing.assert_allclose(eigenfunction(square, (1, 2), pts), expected)
    np.testing.assert_allclose(eigenfunction(square, (0, 0), pts), [1.0, 1.0])


def test_discrete_interval_spectrum_converges():
    domain = Domain(kind="interval", lengths=(PI,))
    vals = discrete_laplacian_spectrum(domain, 256)
    exact = np.array([0.0, 1.0, 4.0, 9.0, 16.0])
    h = PI / 256
    assert vals[0] == 0.0
    # Second-order accuracy: |lambda_h - k^2| <= k^4 h^2 / 12 roughly.
    np.testing.assert_allclose(vals[:5], exact, atol=30 * h**2)


def test_discrete_dirichlet_spectrum_near_squares():
    domain = Domain(kind="interval", lengths=(PI,))
    vals = discrete_laplacian_spectrum(domain, 512, bc="dirichlet")
    np.testing.assert_allclose(vals[:3], [1.0, 4.0, 9.0], rtol=1e-3)


def test_discrete_minimum_grid():
    domain = Domain(kind="interval", lengths=(PI,))
    vals = discrete_laplacian_spectrum(domain, 3)
    assert len(vals) == 3
    assert vals[0] == 0.0
    with pytest.raises(ConfigError):
        discrete_laplacian_spectrum(domain, 2)


def test_discrete_matches_dense_assembly():
    # Dual route: eigenvalues from the tridiagonal solver against a
    # dense matrix assembled here from scratch.
    n, L = 24, PI
    h = L / n
    dense = np.zeros((n, n))
    for i in range(n):
        dense[i, i] = 2.0
        if i > 0:
            dense[i, i - 1] = -1.0
        if i < n - 1:
            dense[i, i + 1] = -1.0
    dense[0, 0] = 1.0
    dense[-1, -1] = 1.0
    dense /= h**2
    expected = np.sort(np.linalg.eigvalsh(dense))
    got = discrete_laplacian_spectrum(Domain(kind="interval", lengths=(L,)), n)
    np.testing.assert_allclose(got[1:], expected[1:], rtol=1e-10)
    assert got[0] == 0.0


def test_discrete_rectangle_is_pairwise_sum():
    domain = Domain(kind="rectangle", lengths=(PI, 2.0))
    vals = discrete_laplacian_spectrum(domain, (8, 12))
    a = discrete_laplacian_spectrum(Domain(kind="interval", lengths=(PI,)), 8)
    b = discrete_laplacian_spectrum(Domain(kind="interval", lengths=(2.0,)), 12)
    expected = np.sort((a[:, None] + b[None, :]).ravel())
    expected[0] = 0.0
    np.testing.assert_allclose(vals, expected, atol=1e-12)

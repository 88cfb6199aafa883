"""Numba and numpy kernel backends must agree bit-for-bit in behavior."""

from __future__ import annotations

import numpy as np
import pytest

from crossdiff import _kernels
from crossdiff._kernels import (
    HAS_NUMBA,
    bmo_scan,
    get_backend,
    residual_field,
    select_backend,
)

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not importable")


def model_arrays(m=2):
    d = np.array([0.6, 1.1][:m])
    alpha = np.array([[0.2, 1.3], [0.8, 0.1]])[:m, :m]
    r = np.array([1.0, 0.5][:m])
    c = np.array([[1.0, 0.4], [-0.3, 0.9]])[:m, :m]
    return d, alpha, r, c


def field_1d(n=40, m=2, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.2, 1.8, (n, m))


def field_2d(shape=(12, 10), m=2, seed=1):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.2, 1.8, shape + (m,))


@needs_numba
@pytest.mark.parametrize("dirichlet", [False, True])
@pytest.mark.parametrize("sigma", [1.0, 0.35])
def test_residual_backends_agree_1d(dirichlet, sigma):
    u = field_1d()
    d, alpha, r, c = model_arrays()
    args = (d, alpha, r, c, sigma, dirichlet)
    R_np = residual_field(u, (0.1,), *args, backend="numpy")
    R_nb = residual_field(u, (0.1,), *args, backend="numba")
    np.testing.assert_allclose(R_nb, R_np, rtol=1e-13, atol=1e-13)


@needs_numba
@pytest.mark.parametrize("dirichlet", [False, True])
def test_residual_backends_agree_2d(dirichlet):
    u = field_2d()
    d, alpha, r, c = model_arrays()
    args = (d, alpha, r, c, 0.7, dirichlet)
    R_np = residual_field(u, (0.11, 0.13), *args, backend="numpy")
    R_nb = residual_field(u, (0.11, 0.13), *args, backend="numba")
    np.testing.assert_allclose(R_nb, R_np, rtol=1e-13, atol=1e-13)


@needs_numba
def test_bmo_backends_agree():
    rng = np.random.default_rng(5)
    pts = np.linspace(0.05, 3.1, 48)[:, None]
    vals = rng.uniform(-1.0, 1.0, (48, 2))
    radii = np.array([0.2, 0.4, 0.8])
    b_np = bmo_scan(vals, pts, radii, backend="numpy")
    b_nb = bmo_scan(vals, pts, radii, backend="numba")
    assert b_nb == pytest.approx(b_np, rel=1e-13, abs=1e-14)


def test_residual_rejects_bad_rank():
    d, alpha, r, c = model_arrays()
    with pytest.raises(ValueError, match="1D or 2D"):
        residual_field(np.zeros((3, 3, 3, 2)), (0.1,), d, alpha, r, c, 1.0, False)


def test_env_flag_selects_backend(monkeypatch):
    monkeypatch.setenv("CROSSDIFF_NUMBA", "0")
    assert _kernels._env_backend() == "numpy"
    monkeypatch.setenv("CROSSDIFF_NUMBA", "off")
    assert _kernels._env_backend() == "numpy"
    monkeypatch.setenv("CROSSDIFF_NUMBA", "auto")
    assert _kernels._env_backend() == ("numba" if HAS_NUMBA else "numpy")
    if HAS_NUMBA:
        monkeypatch.setenv("CROSSDIFF_NUMBA", "1")
        assert _kernels._env_backend() == "numba"


def test_select_backend_round_trip():
    before = get_backend()
    try:
        select_backend("numpy")
        assert get_backend() == "numpy"
        with pytest.raises(ValueError, match="unknown backend"):
            select_backend("fortran")
        if HAS_NUMBA:
            select_backend("numba")
            assert get_backend() == "numba"
    finally:
        select_backend(before)


@needs_numba
def test_solver_results_backend_independent():
    # End-to-end: a full Newton solve must land on the same bits of the
    # coexistence state under either backend.
    from crossdiff import build_model, constant_field, make_grid, newton_solve

    model = build_model(
        {
            "m": 2,
            "d": [1.0, 1.0],
            "alpha": [[0.1, 0.4], [0.2, 0.0]],
            "r": [1.0, 1.0],
            "c": [[1.0, 0.5], [0.3, 1.0]],
            "domain": {"kind": "interval", "lengths": [np.pi]},
            "bc": "neumann",
        }
    )
    grid = make_grid(model.domain, 48)
    seed = constant_field(grid, [0.6, 0.8])
    before = get_backend()
    try:
        select_backend("numpy")
        res_np = newton_solve(model, grid, seed)
        select_backend("numba")
        res_nb = newton_solve(model, grid, seed)
    finally:
        select_backend(before)
    assert res_np.converged and res_nb.converged
    np.testing.assert_allclose(
        res_nb.field.values, res_np.field.values, rtol=1e-12, atol=1e-12
    )

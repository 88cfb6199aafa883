"""Model construction, coefficient evaluation, and structure validation."""

from __future__ import annotations

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from crossdiff import (
    ConfigError,
    Domain,
    ModelError,
    build_model,
    evaluate,
    validate_structure,
)


def lv_config(**overrides):
    config = {
        "m": 2,
        "d": [0.05, 1.0],
        "alpha": [[0.0, 0.0], [0.0, 0.0]],
        "r": [1.0, 1.0],
        "c": [[1.0, 0.5], [0.3, 1.0]],
        "domain": {"kind": "interval", "lengths": [np.pi]},
        "bc": "neumann",
    }
    config.update(overrides)
    return config


def test_diagonal_model_has_constant_diagonal_flux_matrix():
    model = build_model(lv_config())
    for u in ([0.0, 0.0], [1.0, 2.0], [5.0, 0.3]):
        np.testing.assert_array_equal(model.A(np.array(u)), np.diag([0.05, 1.0]))


def test_cross_term_flux_entries_by_hand():
    # P_1 = u_1 (1 + 3 u_2) => a_12 = 3 u_1, a_11 = 1 + 3 u_2.
    model = build_model(
        lv_config(d=[1.0, 1.0], alpha=[[0.0, 3.0], [0.0, 0.0]])
    )
    u = np.array([2.0, 5.0])
    A = model.A(u)
    assert A[0, 1] == 3.0 * u[0]
    assert A[0, 0] == 1.0 + 3.0 * u[1]
    assert A[1, 0] == 0.0
    assert A[1, 1] == 1.0


def test_zero_diffusion_rejected():
    with pytest.raises(ModelError, match="d.*positive"):
        build_model(lv_config(d=[0.0, 1.0]))


def test_negative_alpha_rejected():
    with pytest.raises(ModelError):
        build_model(lv_config(alpha=[[0.0, -0.1], [0.0, 0.0]]))


def test_shape_mismatch_rejected():
    with pytest.raises(ModelError):
        build_model(lv_config(r=[1.0]))


def test_unknown_config_keys_rejected():
    with pytest.raises(ConfigError, match="unknown"):
        build_model(lv_config(bogus=1))
    cfg = lv_config()
    cfg["domain"] = {"kind": "interval", "lengths": [np.pi], "units": "m"}
    with pytest.raises(ConfigError, match="unknown"):
        build_model(cfg)


def test_evaluate_at_origin():
    model = build_model(lv_config())
    A, f, J = evaluate(model, np.zeros(2))
    np.testing.assert_array_equal(f, np.zeros(2))
    np.testing.assert_array_equal(J, np.diag([1.0, 1.0]))


def test_evaluate_on_semitrivial_root():
    model = build_model(lv_config())
    _, f, _ = evaluate(model, np.array([1.0, 0.0]))
    np.testing.assert_array_equal(f, np.zeros(2))


def test_flux_entry_against_symbolic_differentiation():
    # a_11 at u=(1,2) for alpha=[[1,2],[0,1]], d=(1,1): oracle is the
    # symbolic Jacobian of P(u), evaluated exactly.
    model = build_model(lv_config(d=[1.0, 1.0], alpha=[[1.0, 2.0], [0.0, 1.0]]))
    u1, u2 = sympy.symbols("u1 u2")
    d = [1, 1]
    alpha = [[1, 2], [0, 1]]
    P = [
        ui * (di + sum(a * uj for a, uj in zip(row, (u1, u2))))
        for ui, di, row in zip((u1, u2), d, alpha)
    ]
    J_sym = sympy.Matrix(P).jacobian([u1, u2]).subs({u1: 1, u2: 2})
    A = model.A(np.array([1.0, 2.0]))
    assert A[0, 0] == 7.0
    np.testing.assert_array_equal(A, np.array(J_sym, dtype=float))


def test_flux_matrix_is_derivative_of_diffusion_polynomial():
    # Dual route: central finite differences of P recover A(u).
    model = build_model(
        lv_config(d=[0.7, 1.3], alpha=[[0.2, 1.5], [0.4, 0.1]])
    )
    rng = np.random.default_rng(3)
    for u in rng.uniform(0.0, 3.0, size=(5, 2)):
        A = model.A(u)
        eps = 1e-6
        fd = np.zeros((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = eps
            fd[:, j] = (model.P(u + e) - model.P(u - e)) / (2 * eps)
        np.testing.assert_allclose(A, fd, rtol=1e-6, atol=1e-6)


@given(
    st.floats(0.1, 5.0),
    st.floats(0.1, 5.0),
    st.floats(-3.0, 3.0),
)
def test_cross_entry_scaled_by_own_component_only(u1, u1_alt, u2):
    # a_12 / u_1 must not depend on u_1 (cross-diffusion form).
    model = build_model(
        lv_config(d=[1.0, 1.0], alpha=[[0.3, 2.0], [0.5, 0.0]])
    )
    a = model.A(np.array([u1, u2]))[0, 1] / u1
    b = model.A(np.array([u1_alt, u2]))[0, 1] / u1_alt
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@given(st.lists(st.floats(-1.0, 3.0), min_size=2, max_size=2))
def test_reaction_vanishes_at_origin_and_jacobian_is_growth_rates(r):
    model = build_model(lv_config(r=list(r)))
    np.testing.assert_array_equal(model.f(np.zeros(2)), np.zeros(2))
    np.testing.assert_array_equal(model.jacobian_f(np.zeros(2)), np.diag(r))


def test_evaluate_is_deterministic():
    model = build_model(lv_config(alpha=[[0.1, 0.9], [0.2, 0.3]]))
    u = np.array([0.37, 1.91])
    first = evaluate(model, u)
    second = evaluate(model, u)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a, b)


def test_restrict_keeps_selected_species():
    model = build_model(lv_config())
    sub = model.restrict((1,))
    assert sub.m == 1
    assert sub.d[0] == 1.0
    assert sub.r[0] == 1.0
    assert sub.c[0, 0] == 1.0


def test_config_round_trip():
    cfg = lv_config(alpha=[[0.1, 0.2], [0.3, 0.4]])
    model = build_model(cfg)
    again = build_model(model.to_config())
    np.testing.assert_array_equal(model.alpha, again.alpha)
    np.testing.assert_array_equal(model.c, again.c)
    assert model.domain == again.domain


def test_structure_report_diagonal_model():
    model = build_model(lv_config())
    report = validate_structure(model, [(0.0, 2.0), (0.0, 2.0)])
    assert report.lambda_floor == pytest.approx(0.05, rel=1e-12)
    assert report.sg_check == "vacuous"
    assert report.elliptic


def test_low_dimension_never_triggers_ratio_condition():
    model = build_model(lv_config(alpha=[[0.2, 0.4], [0.1, 0.3]]))
    report = validate_structure(model, [(0.0, 5.0), (0.0, 5.0)])
    assert report.sg_check == "vacuous"


def test_growth_exponent_for_affine_ellipticity():
    # lambda(u) = 1 + 10 u is affine, so the fitted exponent of
    # lambda ~ (1 + |u|)^k must come out near 1 on a wide box.
    model = build_model(
        {
            "m": 1,
            "d": [1.0],
            "alpha": [[5.0]],
            "r": [1.0],
            "c": [[1.0]],
            "domain": {"kind": "interval", "lengths": [np.pi]},
            "bc": "neumann",
        }
    )
    report = validate_structure(model, [(0.0, 200.0)], samples=2048)
    assert report.growth_exponent == pytest.approx(1.0, abs=0.15)


@given(
    st.lists(st.floats(0.1, 4.0), min_size=2, max_size=2),
    st.floats(0.5, 6.0),
)
@settings(max_examples=25, deadline=None)
def test_ellipticity_floor_for_plain_diffusion(d, hi):
    # Without cross terms A(u) = diag(d): the sampled floor is min d.
    model = build_model(lv_config(d=list(d)))
    report = validate_structure(model, [(0.0, hi)] * 2, samples=64)
    assert report.lambda_floor >= min(d) - 1e-12


def test_ellipticity_failure_is_loud():
    # Strong one-sided cross-diffusion makes the symmetric part
    # indefinite on part of the box; the report must say so.
    model = build_model(
        lv_config(d=[1.0, 1.0], alpha=[[0.0, 0.0], [10.0, 0.0]])
    )
    report = validate_structure(model, [(0.0, 2.0), (0.0, 2.0)], samples=512)
    assert not report.elliptic
    assert report.C_star == np.inf
    assert any("elliptic" in w for w in report.warnings)


def test_domain_diameter_and_volume():
    interval = Domain(kind="interval", lengths=(np.pi,))
    assert interval.diameter == pytest.approx(np.pi)
    rect = Domain(kind="rectangle", lengths=(3.0, 4.0))
    assert rect.diameter == pytest.approx(5.0)
    assert rect.volume == pytest.approx(12.0)

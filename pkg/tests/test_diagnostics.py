"""Norms, ball mean-oscillation, weak identities, nonexistence threshold."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossdiff import (
    DiscreteField,
    ModelError,
    bmo_seminorm,
    build_model,
    constant_field,
    diagnostics_report,
    identity_residuals,
    make_grid,
    newton_solve,
    nonexistence_threshold,
    norms,
)

PI = np.pi


def scalar_logistic(d=1.0, length=PI):
    return build_model(
        {
            "m": 1,
            "d": [d],
            "alpha": [[0.0]],
            "r": [1.0],
            "c": [[1.0]],
            "domain": {"kind": "interval", "lengths": [length]},
            "bc": "neumann",
        }
    )


def turing_model():
    return build_model(
        {
            "m": 2,
            "d": [0.4, 7.0],
            "alpha": [[0.0, 0.0], [0.0, 0.0]],
            "r": [1.0, 1.0],
            "c": [[-1.0, 2.0], [-3.0, 4.0]],
            "domain": {"kind": "interval", "lengths": [PI]},
            "bc": "neumann",
        }
    )


def cosine_field(n=256):
    model = scalar_logistic()
    grid = make_grid(model.domain, n)
    x = grid.points()[:, 0]
    return model, DiscreteField(grid=grid, values=np.cos(x)[:, None])


# -- norms --------------------------------------------------------------------


def test_norms_constant_field():
    model = turing_model()
    grid = make_grid(model.domain, 32)
    l1, grad_l2, grad_ln = norms(constant_field(grid, [3.0, 4.0]))
    assert l1 == pytest.approx(5.0 * PI, rel=1e-12)
    # np.gradient's nonuniform-spacing weights leave rounding residue.
    assert grad_l2 == pytest.approx(0.0, abs=1e-12)
    assert grad_ln == pytest.approx(0.0, abs=1e-12)


def test_norms_cosine_closed_forms():
    # integral |cos| = 2, integral sin^2 = pi/2, integral |sin| = 2.
    _, field = cosine_field(256)
    l1, grad_l2, grad_ln = norms(field)
    assert l1 == pytest.approx(2.0, rel=1e-3)
    assert grad_l2**2 == pytest.approx(PI / 2.0, rel=1e-3)
    assert grad_ln == pytest.approx(2.0, rel=1e-3)


def test_norm_quadrature_is_second_order():
    errs = []
    for n in (64, 128, 256):
        _, field = cosine_field(n)
        errs.append(abs(norms(field)[1] ** 2 - PI / 2.0))
    assert 3.0 < errs[0] / errs[1] < 5.0
    assert 3.0 < errs[1] / errs[2] < 5.0


def test_norms_product_cosine_on_rectangle():
    model = build_model(
        {
            "m": 1,
            "d": [1.0],
            "alpha": [[0.0]],
            "r": [0.0],
            "c": [[0.0]],
            "domain": {"kind": "rectangle", "lengths": [PI, PI]},
            "bc": "neumann",
        }
    )
    grid = make_grid(model.domain, (128, 128))
    pts = grid.points()
    vals = (np.cos(pts[..., 0]) * np.cos(pts[..., 1]))[..., None]
    _, grad_l2, _ = norms(DiscreteField(grid=grid, values=vals))
    # integral |D(cos x cos y)|^2 = pi^2 / 2.
    assert grad_l2**2 == pytest.approx(PI**2 / 2.0, rel=1e-3)


# -- ball mean oscillation ------------------------------------------------------


def test_bmo_constant_is_zero():
    grid = make_grid(turing_model().domain, 32)
    assert bmo_seminorm(constant_field(grid, [2.0, 5.0]), 1.0) == 0.0


def test_bmo_step_profile():
    model = scalar_logistic()
    grid = make_grid(model.domain, 128)
    x = grid.points()[:, 0]
    step = DiscreteField(grid=grid, values=(x > PI / 2).astype(float)[:, None])
    assert bmo_seminorm(step, PI / 4.0) == pytest.approx(0.5, abs=0.05)


def test_bmo_unresolvable_radius():
    grid = make_grid(scalar_logistic().domain, 16)
    field = constant_field(grid, [1.0])
    with pytest.raises(ModelError, match="unresolvable"):
        bmo_seminorm(field, 0.1)


@given(st.floats(0.1, 4.0), st.floats(-3.0, 3.0), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_bmo_axioms(scale, shift, seed):
    model = scalar_logistic()
    grid = make_grid(model.domain, 48)
    rng = np.random.default_rng(seed)
    vals = rng.uniform(-1.0, 1.0, (48, 1))
    field = DiscreteField(grid=grid, values=vals)
    radius = 0.5
    b0 = bmo_seminorm(field, radius)
    assert b0 <= 2.0 * np.abs(vals).max() + 1e-12
    shifted = bmo_seminorm(
        DiscreteField(grid=grid, values=vals + shift), radius
    )
    assert shifted == pytest.approx(b0, abs=1e-12 * (1.0 + abs(shift)))
    scaled = bmo_seminorm(DiscreteField(grid=grid, values=scale * vals), radius)
    assert scaled == pytest.approx(scale * b0, rel=1e-12, abs=1e-12)


# -- weak identities ------------------------------------------------------------


def test_identities_exact_zero_at_constant_root():
    model = turing_model()
    grid = make_grid(model.domain, 32)
    mass, energy = identity_residuals(model, constant_field(grid, [1.0, 1.0]))
    assert mass == 0.0
    assert energy == 0.0


def test_identities_hold_for_converged_solution():
    model = turing_model()
    grid = make_grid(model.domain, 64)
    result = newton_solve(model, grid, constant_field(grid, [1.0, 1.0]))
    mass, energy = identity_residuals(model, result.field)
    assert mass < 1e-8
    assert energy < 1e-8


def test_forcing_enters_the_identities():
    # u = 2 solves the forced logistic with forcing = -f(2) = 2; without
    # declaring the forcing the same field fails the mass identity by
    # exactly |f(2)| * |Omega|.
    model = scalar_logistic()
    grid = make_grid(model.domain, 32)
    field = constant_field(grid, [2.0])
    forcing = np.full((32, 1), 2.0)
    mass_f, energy_f = identity_residuals(model, field, forcing=forcing)
    assert mass_f == pytest.approx(0.0, abs=1e-14)
    assert energy_f == pytest.approx(0.0, abs=1e-13)
    mass, _ = identity_residuals(model, field)
    assert mass == pytest.approx(2.0 * PI, rel=1e-12)


# -- nonexistence threshold ------------------------------------------------------


def test_threshold_logistic_closed_form():
    # max |1 - 2u| over [0, 2] is 3, diameter pi: threshold = 3 pi^2.
    model = scalar_logistic()
    value = nonexistence_threshold(model, [[0.0, 2.0]])
    assert value == pytest.approx(3.0 * PI**2, rel=1e-12)


def test_threshold_zero_reaction():
    model = build_model(
        {
            "m": 1,
            "d": [1.0],
            "alpha": [[0.0]],
            "r": [0.0],
            "c": [[0.0]],
            "domain": {"kind": "interval", "lengths": [PI]},
            "bc": "neumann",
        }
    )
    assert nonexistence_threshold(model, [[0.0, 2.0]]) == 0.0


def test_threshold_scales_with_domain_diameter_squared():
    small = nonexistence_threshold(scalar_logistic(), [[0.0, 2.0]])
    large = nonexistence_threshold(
        scalar_logistic(length=2.0 * PI), [[0.0, 2.0]]
    )
    assert large == pytest.approx(4.0 * small, rel=1e-12)


def test_threshold_box_validation():
    model = scalar_logistic()
    with pytest.raises(ModelError, match="shape"):
        nonexistence_threshold(model, [[0.0, 2.0], [0.0, 2.0]])
    with pytest.raises(ModelError, match="empty box"):
        nonexistence_threshold(model, [[2.0, 0.0]])


# -- assembled report ------------------------------------------------------------


def test_report_for_converged_solution():
    model = build_model(
        {
            "m": 2,
            "d": [1.0, 1.0],
            "alpha": [[0.0, 0.0], [0.0, 0.0]],
            "r": [1.0, 1.0],
            "c": [[1.0, 0.5], [0.3, 1.0]],
            "domain": {"kind": "interval", "lengths": [PI]},
            "bc": "neumann",
        }
    )
    grid = make_grid(model.domain, 64)
    result = newton_solve(model, grid, constant_field(grid, [0.6, 0.8]))
    report = diagnostics_report(model, result.field)
    assert report.warnings == ()
    assert report.positivity_min == pytest.approx(10.0 / 17.0, abs=1e-9)
    assert max(report.identity_residuals) < 1e-8
    assert report.bmo_sup < 1e-9
    assert report.bmo_radius == pytest.approx(PI / 4.0)
    assert report.l1_norm == pytest.approx(
        PI * np.hypot(10.0 / 17.0, 14.0 / 17.0), rel=1e-9
    )


def test_report_flags_non_solutions():
    model = turing_model()
    grid = make_grid(model.domain, 32)
    report = diagnostics_report(model, constant_field(grid, [0.3, 0.9]))
    assert any("not a solution" in w for w in report.warnings)


def test_report_flags_negative_fields():
    model = scalar_logistic()
    grid = make_grid(model.domain, 32)
    x = grid.points()[:, 0]
    vals = (0.1 * np.cos(x) - 0.05)[:, None]
    report = diagnostics_report(model, DiscreteField(grid=grid, values=vals))
    assert any("positivity" in w for w in report.warnings)
    assert report.positivity_min < 0.0

import math

import numpy as np
import pytest

from gausscurv.curvature import ExactFamily, RadialPower
from gausscurv.errors import ParameterError
from gausscurv.growth import w0
from gausscurv.solver import (
    SolverOptions,
    laplacian_w0_check,
    normalize_t,
    pde_residual,
    picard_solve,
    super_sub_bracket,
    total_curvature,
)


def test_laplacian_w0_mass():
    assert abs(laplacian_w0_check()) < 1e-10


def test_normalize_t_fixed_point():
    # v chosen so that the weighted integral equals 2 alpha pi
    K = ExactFamily(1.0)
    t1 = normalize_t(K, 1.0, 0.0)
    assert normalize_t(K, 1.0, t1) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("lam", [0.25, 3.0, 40.0])
def test_normalize_t_scaling(lam):
    K = RadialPower(4.0)
    t = normalize_t(K, 0.5)
    assert normalize_t(K.scaled(lam), 0.5) == pytest.approx(t - 0.5 * math.log(lam), abs=1e-12)


def test_normalize_t_closed_form():
    K = ExactFamily(1.0)
    v = lambda x, y: 0.5 * np.log1p(x * x + y * y) - w0(np.hypot(x, y))  # noqa: E731
    assert abs(normalize_t(K, 1.0, v)) <= 1e-6


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_exact_family_solution(solutions, alpha):
    sol = solutions("exact", alpha)
    assert sol.converged
    r = np.concatenate([[0.0], np.geomspace(1e-2, 50.0, 60)])
    for th in (0.0, 1.3, 4.0):
        err = sol.u(r * math.cos(th), r * math.sin(th)) - 0.5 * alpha * np.log1p(r * r)
        assert np.max(np.abs(err)) <= 1e-3


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_total_curvature_of_solution(solutions, alpha):
    sol = solutions("exact", alpha)
    val = total_curvature(sol.K, sol).value
    assert val == pytest.approx(-2 * math.pi * alpha, rel=1e-2)


def test_total_curvature_closed_form():
    K = ExactFamily(1.0)
    val = total_curvature(K, lambda x, y: 0.5 * np.log1p(x * x + y * y))
    assert val.value == pytest.approx(-2 * math.pi, rel=1e-6)


def test_total_curvature_radial_power_half(solutions):
    sol = solutions("rp4", 0.5)
    assert total_curvature(sol.K, sol).value == pytest.approx(-math.pi, rel=1e-2)


class _ZeroCurvature:
    radial = False

    def evaluate(self, x, y):
        return np.zeros_like(np.asarray(x, float))

    def support_radius(self):
        return math.inf


def test_total_curvature_zero_field():
    assert total_curvature(_ZeroCurvature(), lambda x, y: 0.1 * x).value == 0.0


def test_pde_residual_small(solutions):
    assert pde_residual(solutions("exact", 1.0)) < 1e-3
    assert pde_residual(solutions("rp4", 0.5)) < 1e-3


def test_initialization_independence(solutions):
    tol = 1e-6
    a = solutions("rp4", 0.5)
    b = picard_solve(RadialPower(4.0), 0.5, SolverOptions(tol=tol), v0=0.5)
    x = np.array([0.0, 0.5, 2.0, 9.0, 40.0, 300.0])
    assert np.max(np.abs(a.u(x, 0 * x) - b.u(x, 0 * x))) <= 10 * tol


def test_bracket_width_is_constant():
    br = super_sub_bracket(ExactFamily(1.0), 1.0)
    x = np.array([0.0, 0.3, 2.0, 40.0, 300.0])
    y = np.array([0.0, -0.4, 1.0, 7.0, -20.0])
    diff = br.upper(x, y) - br.lower(x, y)
    assert np.allclose(diff, br.width, rtol=0, atol=1e-12)
    assert br.width == 2 * br.sup_norm


def test_closed_form_inside_bracket():
    br = super_sub_bracket(ExactFamily(1.0), 1.0)
    r = np.geomspace(1e-2, 500.0, 80)
    u = 0.5 * np.log1p(r * r)
    assert np.all(br.lower(r, 0 * r) <= u) and np.all(u <= br.upper(r, 0 * r))


@pytest.mark.parametrize("name,K,alpha", [("exact", ExactFamily(1.0), 1.0), ("rp4", RadialPower(4.0), 0.5)])
def test_solution_inside_bracket(name, K, alpha):
    sol = picard_solve(K, alpha, SolverOptions(bracket=True))
    assert sol.bracket is not None
    x = np.geomspace(1e-2, 500.0, 60)
    u = sol.u(x, 0 * x)
    assert np.all(sol.bracket.lower(x, 0 * x) <= u + 1e-9)
    assert np.all(u <= sol.bracket.upper(x, 0 * x) + 1e-9)
    assert all(rec["within_bracket"] for rec in sol.trace)


@pytest.mark.parametrize("alpha", [0.0, -0.5, 1.0, 3.0])
def test_alpha_range_guard(alpha):
    with pytest.raises(ParameterError):
        picard_solve(RadialPower(4.0), alpha)


def test_summary_is_plain_data(solutions):
    s = solutions("exact", 1.0).summary()
    assert s["converged"] is True and s["iterations"] >= 1

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gausscurv.asymptotics import (
    Thresholds,
    anisotropy_probe,
    classify,
    default_beta,
    driving_exponent,
    fit_log_growth,
    growth_probe,
    layer_check,
    remainder_decay_exponent,
)
from gausscurv.curvature import RadialPower, make_k0
from gausscurv.errors import ContractViolation, ParameterError
from gausscurv.solver import SolutionField

RADII = [10.0, 30.0, 100.0, 300.0, 1000.0]


def test_fit_exact_log():
    fit = fit_log_growth(lambda x, y: 2 * np.log(np.hypot(x, y)) + 3, RADII)
    assert fit.alpha == pytest.approx(2.0, abs=1e-10)
    assert fit.c == pytest.approx(3.0, abs=1e-10)
    assert not fit.anisotropic


@given(st.floats(0.1, 3.0), st.floats(-5.0, 5.0))
def test_fit_consistency_with_decaying_term(alpha, c):
    u = lambda x, y: alpha * np.log(np.hypot(x, y)) + c + 1 / np.hypot(x, y)  # noqa: E731
    fit = fit_log_growth(u, [100.0, 300.0, 1000.0, 3000.0, 10000.0])
    assert abs(fit.alpha - alpha) <= 1e-3
    assert abs(fit.c - c) <= 1e-3


def test_fit_flags_anisotropy():
    u = lambda x, y: np.log(np.hypot(x, y)) + np.sin(np.arctan2(y, x))  # noqa: E731
    fit = fit_log_growth(u, RADII)
    assert fit.alpha == pytest.approx(1.0, abs=1e-9)
    assert fit.anisotropic


def test_fit_needs_two_decades():
    with pytest.raises(ParameterError):
        fit_log_growth(lambda x, y: np.log(np.hypot(x, y)), [10.0, 20.0, 40.0, 80.0])
    with pytest.raises(ParameterError):
        fit_log_growth(lambda x, y: np.log(np.hypot(x, y)), [10.0, 100.0, 1000.0])


def test_fit_exact_family_solution(solutions):
    fit = fit_log_growth(solutions("exact", 1.0), RADII)
    assert abs(fit.alpha - 1.0) <= 1e-3
    assert abs(fit.c) <= 1e-3


def test_decay_closed_form():
    u = lambda x, y: 0.5 * np.log1p(x * x + y * y)  # noqa: E731
    d = remainder_decay_exponent(u, 1.0, 0.0, [10.0, 20.0, 40.0, 80.0, 160.0])
    assert d.status == "fit"
    assert d.gamma == pytest.approx(2.0, abs=0.01)


def test_decay_floor():
    u = lambda x, y: 0.7 * np.log(np.hypot(x, y)) + 1.5  # noqa: E731
    d = remainder_decay_exponent(u, 0.7, 1.5, [10.0, 100.0, 1000.0])
    assert d.status == "decay-floor" and d.gamma is None


def test_decay_exact_family_solution(solutions):
    sol = solutions("exact", 1.0)
    d = remainder_decay_exponent(sol, 1.0, 0.0, [10.0, 20.0, 40.0, 80.0, 160.0, 320.0])
    assert d.gamma >= 1.9


def test_decay_radial_power_solution(solutions):
    sol = solutions("rp4", 0.5)
    fit = fit_log_growth(sol, RADII)
    d = remainder_decay_exponent(sol, fit.alpha, fit.c, [10.0, 20.0, 40.0, 80.0, 160.0, 320.0], beta=0.25)
    assert d.target == pytest.approx(1 / 3)
    assert d.meets_target


def test_default_beta():
    assert default_beta(1.0, 0.5) == 0.25
    assert default_beta(5.0, 0.5) == 1.0
    assert default_beta(1.0, 0.5, 0.1) == pytest.approx(0.225)


def test_radial_gap_null(solutions):
    gaps = anisotropy_probe(solutions("rp4", 0.5), [3, 4, 5, 6])
    assert max(abs(g) for g in gaps) <= 1e-6


def test_probe_needs_converged_solution(solutions):
    sol = solutions("rp4", 0.5)
    fake = SolutionField(**{**sol.__dict__, "converged": False})
    with pytest.raises(ContractViolation):
        anisotropy_probe(fake, [3, 4])


def test_k0_gaps_shrink_below_threshold(solutions):
    mags = [abs(g) for g in anisotropy_probe(solutions("k0", 0.3), [3, 4, 5, 6])]
    assert all(b < a for a, b in zip(mags, mags[1:]))


def test_k0_gaps_at_threshold(solutions):
    gaps = anisotropy_probe(solutions("k0", 0.5), [3, 4, 5, 6])
    assert min(abs(g) for g in gaps) >= 0.05


def test_growth_probe_exponent(k0):
    gp = growth_probe(k0, 0.7, [3, 4, 5, 6])
    assert driving_exponent(k0, 0.7) == pytest.approx(0.4)
    # self-term n^-ell e^{2 alpha ln n} n^q up to a constant
    assert gp.exponent == pytest.approx(0.4, abs=1e-9)
    assert not gp.low_confidence
    ref = [n**0.4 / math.log(n) for n in gp.n]
    assert np.allclose(np.array(gp.ratios) / ref, gp.ratios[0] / ref[0], rtol=1e-12)


def test_growth_probe_low_confidence(k0):
    gp = growth_probe(k0, 0.55, [3, 4, 5, 6])
    assert gp.exponent == pytest.approx(0.1, abs=1e-9)
    assert gp.low_confidence


@pytest.mark.parametrize("alpha", [0.5, 0.3])
def test_growth_probe_regime_guard(k0, alpha):
    with pytest.raises(ParameterError):
        growth_probe(k0, alpha, [3, 4])


def test_growth_probe_needs_bumps():
    with pytest.raises(ParameterError):
        growth_probe(RadialPower(4.0), 0.7, [3, 4])


def test_layer_check(solutions):
    lo, hi = solutions("rp4", 0.2), solutions("rp4", 0.4)
    x = np.geomspace(1e-2, 300.0, 30)
    samples = (x, 0.3 * x)
    assert layer_check(lo, hi, samples).ordered
    same = layer_check(lo, lo, samples)
    assert not same.ordered and same.margin == 0.0
    swapped = layer_check(hi, lo, samples)
    assert not swapped.ordered and swapped.margin < 0


def test_layer_check_rejects_different_fields(solutions):
    with pytest.raises(ContractViolation):
        layer_check(solutions("rp4", 0.5), solutions("k0", 0.5), ([1.0], [0.0]))


def test_classify_rules():
    thr = Thresholds()
    assert classify([0.2, 0.1, 0.005], -0.4, thr) == "uniform"
    assert classify([-1.1, -1.0, -0.9], -0.4, thr) == "uniform"
    assert classify([-1.8, -1.7, -1.6], 0.0, thr) == "anisotropic-bounded"
    assert classify([-1.8, -1.7, -1.6], 0.4, thr) == "unbounded"
    assert classify([0.5, 0.6, 0.7], -0.4, thr) == "indeterminate"


def test_k0_trichotomy(solutions, k0):
    thr = Thresholds()
    n = [3, 4, 5, 6]
    verdicts = [
        classify(anisotropy_probe(solutions("k0", a), n), driving_exponent(k0, a), thr)
        for a in (0.3, 0.5, 0.7)
    ]
    assert verdicts == ["uniform", "anisotropic-bounded", "unbounded"]


def test_k0_fixture_matches_builder(k0):
    assert make_k0(3.0, 2.0, 6).parameters() == k0.parameters()

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import nonconstant_beta_model
from deblog.desing import (
    DesingularizedForm,
    check_coincidence,
    check_folded,
    check_symplectic,
    convergence_report,
    desingularize,
    fold_locus,
    invert_to_bivector,
    loglog_slope,
    symmetric_scan,
)
from deblog.errors import ChartDomainError, DegeneracyError, ParityMismatchError
from deblog.forms import ChartPoint, Form, FormValue, TrigPoly, exterior_derivative_residual
from deblog.model import LaurentModel, darboux_model
from deblog.profile import LITERAL_TAIL, build_odd_profile, eval_profile, reciprocal_derivative


def test_parity_and_eps_are_checked(even1, odd1):
    with pytest.raises(ParityMismatchError):
        DesingularizedForm(darboux_model(3, 1), even1, 0.1)
    with pytest.raises(ValueError):
        DesingularizedForm(darboux_model(2, 1), even1, 0.5)


def test_desingularize_examples(even1, odd1):
    d = darboux_model(2, 1)
    v = desingularize(d, even1, 0.45, ChartPoint(0.9, (0.0,)))
    assert v[(0, 1)] == pytest.approx(1 / 0.81, rel=1e-13)
    v = desingularize(d, even1, 0.45, ChartPoint(0.0, (0.0,)))
    assert v[(0, 1)] == pytest.approx(0.45 ** -2 * float(eval_profile(even1, 0.0, 1)), rel=1e-14)
    assert v[(0, 1)] > 0
    v = desingularize(darboux_model(3, 1), odd1, 0.1, ChartPoint(0.0, (1.0,)))
    assert v[(0, 1)] == 0.0


def test_top_split_matches_direct_power(even1):
    model = nonconstant_beta_model()
    df = DesingularizedForm(model, even1, 0.1)
    x = np.linspace(-0.5, 0.5, 11)[:, None]
    th = [np.array([0.3, 1.1]), np.array([2.0, 0.4]), np.array([5.0, 1.0])]
    assert np.allclose(df.top_grid(x, th), df.top_split(x, th), rtol=1e-13, atol=1e-10)


@pytest.mark.parametrize("model", [darboux_model(2, 1), darboux_model(2, 2)])
def test_check_symplectic_darboux(model, even1):
    r = check_symplectic(model, even1, 0.1, x_points=201)
    assert r.passed, r.text()
    fmin = float(np.min(eval_profile(even1, np.linspace(-1, 1, 2001), 1)))
    band = r.get("min |top(omega_eps^n)| for |x| <= eps")
    assert band == pytest.approx(model.n * 0.1 ** -2 * fmin, rel=1e-3)


def test_check_symplectic_nonconstant_beta(even1):
    model = nonconstant_beta_model()
    ladder = [0.2, 0.1, 0.05]
    mins = []
    for e in ladder:
        r = check_symplectic(model, even1, e)
        assert r.passed, r.text()
        mins.append(r.get("min |top(omega_eps^n)| for |x| <= eps"))
    assert abs(loglog_slope(ladder, mins) + 2) < 0.2


def test_check_symplectic_needs_even(odd1):
    with pytest.raises(ParityMismatchError):
        check_symplectic(darboux_model(3, 1), odd1, 0.1)


def test_coincidence_examples(even1, odd0):
    grid = np.linspace(0.12, 0.9, 50)
    r = check_coincidence(darboux_model(2, 1), even1, 0.1, grid)
    assert r.get("max |omega_eps - omega|") < 1e-12
    half = np.linspace(0.25, 0.9, 40)
    grid = np.concatenate([-half, half])
    assert check_coincidence(darboux_model(1, 1), odd0, 0.1, grid).get("max |omega_eps - omega|") < 1e-12
    lit = build_odd_profile(1, tail_mode=LITERAL_TAIL)
    r = check_coincidence(darboux_model(3, 1), lit, 0.1, grid)
    assert not r.passed and r.get("max |omega_eps - omega|") > 1.0
    with pytest.raises(ChartDomainError):
        check_coincidence(darboux_model(1, 1), odd0, 0.1, np.array([0.15, 0.5]))


def test_bivector_examples(even1):
    eps = 0.1
    model = darboux_model(2, 2)
    v = desingularize(model, even1, eps, ChartPoint(0.0, (0.0, 0.0, 0.0)))
    pi = invert_to_bivector(v)
    assert pi[0, 1] == pytest.approx(eps ** 2 * float(reciprocal_derivative(even1, 0.0)), rel=1e-13)
    assert abs(pi[2, 3]) == pytest.approx(1.0) and pi[3, 2] == -pi[2, 3]
    for x in (0.3, -0.6):
        v = desingularize(model, even1, eps, ChartPoint(x, (0.0, 0.0, 0.0)))
        assert invert_to_bivector(v)[0, 1] == pytest.approx(x ** 2, rel=1e-13)
    with pytest.raises(DegeneracyError):
        invert_to_bivector(FormValue(4, 2, {(0, 1): 1.0}))


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.95, 0.95), st.tuples(*[st.floats(0, 6.28)] * 3), st.sampled_from([0.2, 0.1, 0.05]))
def test_inverse_identity(x, th, eps):
    from deblog.profile import build_even_profile
    v = desingularize(nonconstant_beta_model(), build_even_profile(1), eps, ChartPoint(x, th))
    W = v.to_matrix()
    assert np.allclose(W @ invert_to_bivector(v), -np.eye(4), atol=1e-10)


def test_closedness_inside_and_outside_band(even1):
    form = DesingularizedForm(nonconstant_beta_model(), even1, 0.1).form()
    rng = np.random.default_rng(3)
    for x in list(rng.uniform(-0.1, 0.1, 4)) + list(rng.uniform(-0.9, 0.9, 4)):
        p = ChartPoint(float(x), tuple(rng.uniform(0, 6.28, 3)))
        r1 = exterior_derivative_residual(form, p, 1e-4)
        r2 = exterior_derivative_residual(form, p, 5e-5)
        assert r1 < 1e-5 and r2 <= r1 + 1e-9


@pytest.mark.parametrize("k,fixture", [(1, "even1"), (2, "even2")])
def test_convergence_slopes(k, fixture, request):
    p = request.getfixturevalue(fixture)
    table = convergence_report(p, [0.2, 0.1, 0.05, 0.025])
    for j in range(2 * k):
        assert table.slopes[j] >= 0.9 * (2 * k - j)
    assert max(table.outside_deviation.values()) < 1e-13
    assert all(s >= 0 for _, _, s in table.rows)


def test_convergence_errors(even1, odd1):
    with pytest.raises(ValueError):
        convergence_report(even1, [0.1, 0.2])
    with pytest.raises(ValueError):
        convergence_report(even1, [0.2, 0.1], j_max=2)
    with pytest.raises(ParityMismatchError):
        convergence_report(odd1, [0.2, 0.1])


def test_check_folded_darboux(odd1, odd0, even1):
    r = check_folded(darboux_model(3, 2), odd1, 0.1)
    assert r.passed
    assert r.get("max |top(omega_eps^n)| on Z") == 0.0
    assert r.get("min |d/dx top| on Z") == pytest.approx(2 * 2 * 0.1 ** -4, rel=1e-12)
    assert r.get("min |(i*omega_eps)^(n-1)| on Z") == 1.0
    r = check_folded(darboux_model(1, 1), odd0, 0.1)
    assert r.passed and r.get("min |(i*omega_eps)^(n-1)| on Z") == 1.0
    with pytest.raises(ParityMismatchError):
        check_folded(darboux_model(2, 1), even1, 0.1)


def test_fold_locus_k0(odd0):
    eps = 0.1
    roots = fold_locus(darboux_model(1, 1), odd0, eps, symmetric_scan(0.199, 401))
    assert len(roots) == 3 and all(r.transversal for r in roots)
    xs = sorted(r.x for r in roots)
    assert xs[1] == 0.0
    assert xs[2] == pytest.approx(-xs[0], abs=1e-12)
    assert 1.0 < xs[2] / eps < 2.0


def test_fold_locus_outside_band_is_empty(odd0):
    scan = np.concatenate([np.linspace(-0.9, -0.21, 50), np.linspace(0.21, 0.9, 50)])
    assert fold_locus(darboux_model(1, 1), odd0, 0.1, scan) == []


def test_fold_locus_depends_on_beta(odd0):
    base = darboux_model(1, 2)
    eps = 0.1
    scan = symmetric_scan(0.199, 401)
    assert len(fold_locus(base, odd0, eps, scan)) == 3
    # gamma = c dtheta_1 adds top(beta^2) = 2c, which lifts the whole curve for c large
    gamma = Form.basis(4, 1, coeff=TrigPoly.constant(100.0, 3))
    lifted = LaurentModel(1, 2, base.alphas, base.betas, gamma)
    assert len(fold_locus(lifted, odd0, eps, scan)) != 3
    roots = fold_locus(lifted, odd0, eps, scan, theta_sweep=2)
    assert len({r.thetas for r in roots}) <= 8

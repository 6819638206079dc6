import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg, special

from orbitctl import examples
from orbitctl.expr import parse
from orbitctl.floquet import (ConvergenceError, HypothesisError, MultiplierReport, Outcome, _hqr,
                              analytic_multipliers, classify, eigenvalues, liouville_check, monodromy,
                              pair_spectra, reduced_monodromy)
from orbitctl.system import DissipativeSystem, vector_field

TIGHT = dict(rtol=1e-12, atol=1e-14)
E_2PI = math.exp(-2 * math.pi)


def euler_period_oracle(p):
    # K from scipy, independent of the package's AGM
    K = special.ellipk(p.k2)
    return 4 * K * math.sqrt(p.I1 * p.I2 * p.I3) / math.sqrt(2 * (p.I2 - p.I3) * (p.h * p.I1 - p.c))


def as_multiset(values, digits=9):
    return sorted((round(v.real, digits), round(v.imag, digits)) for v in values)


@pytest.fixture(scope="module")
def reports():
    out = {}
    for name in examples.BUILTINS:
        sys, orbit = examples.builtin(name)
        out[name] = (sys, orbit, analytic_multipliers(sys, orbit, **TIGHT))
    return out


# --- eigenvalues --------------------------------------------------------------

def test_eigenvalue_examples():
    np.testing.assert_allclose(eigenvalues(np.eye(3)), [1, 1, 1], atol=1e-15)
    w = eigenvalues([[0, -1], [1, 0]])
    assert as_multiset(w) == as_multiset([1j, -1j])
    companion = [[6, -11, 6], [1, 0, 0], [0, 1, 0]]  # (l-1)(l-2)(l-3)
    np.testing.assert_allclose(eigenvalues(companion), [3, 2, 1], atol=1e-12)


def test_eigenvalue_errors():
    with pytest.raises(ValueError):
        eigenvalues(np.eye(17))
    with pytest.raises(ValueError):
        eigenvalues([[1, np.nan], [0, 1]])
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ConvergenceError):
        _hqr(np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [0.0, 7.0, 8.0]]), max_iter=0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.sampled_from([1e-3, 1.0, 1e4]))
def test_eigenvalues_match_lapack(n, seed, scale):
    rng = np.random.default_rng(seed)
    M = scale * rng.standard_normal((n, n))
    ours = eigenvalues(M)
    ref = np.linalg.eigvals(M)
    # every reference value has a partner, and moduli are sorted
    for pair in pair_spectra(list(ref), list(ours)):
        assert pair[2] <= 1e-9 * scale * max(1, n)
    assert np.all(np.diff(np.abs(ours)) <= 1e-12 * scale)


def test_badly_scaled_matrix():
    D = np.diag([1e-6, 1.0, 1e6])
    A = np.array([[2.0, 1.0, 0.0], [0.5, 3.0, 1.0], [0.0, 0.25, 4.0]])
    M = D @ A @ np.linalg.inv(D)
    np.testing.assert_allclose(sorted(eigenvalues(M).real), sorted(np.linalg.eigvals(A).real), rtol=1e-10)


# --- monodromy ----------------------------------------------------------------

def test_linear_monodromy_matches_matrix_exponential():
    sys, orbit = examples.harmonic_oscillator("zD", "-1")
    J = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, -1.0]])
    expected = linalg.expm(2 * math.pi * J)
    M = monodromy(vector_field(sys), orbit)
    np.testing.assert_allclose(M, expected, atol=1e-8)
    w = eigenvalues(M)
    assert as_multiset(w, 6) == as_multiset([1, 1, E_2PI], 6)


def test_monodromy_accepts_scalar_field_components():
    field = [parse("y", 3), parse("-x", 3), parse("-z", 3)]
    M = monodromy(field, examples.circle_orbit())
    np.testing.assert_allclose(np.sort(np.abs(eigenvalues(M))), [E_2PI, 1, 1], atol=1e-8)


def test_integrable_monodromy_is_unipotent():
    sys, orbit = examples.harmonic_oscillator("zD", "0")
    np.testing.assert_allclose(eigenvalues(monodromy(vector_field(sys), orbit)), [1, 1, 1], atol=1e-8)
    euler, orbit = examples.euler_rigid_body()
    w = eigenvalues(monodromy(list(euler.base_field), orbit))
    assert np.max(np.abs(w - 1)) <= 1e-5


def test_reduced_monodromy():
    sys, orbit = examples.harmonic_oscillator("zD", "-1")
    np.testing.assert_allclose(reduced_monodromy(sys, orbit, "analytic"), np.diag([1, E_2PI]), atol=1e-15)
    gap = np.abs(reduced_monodromy(sys, orbit, "numeric") - reduced_monodromy(sys, orbit, "analytic")).max()
    assert gap <= 1e-9
    with pytest.raises(ValueError):
        reduced_monodromy(sys, orbit, "symbolic")


def test_reduced_monodromy_without_dissipation():
    integrable = DissipativeSystem(3, [parse("x^2+y^2-1", 3), parse("z", 3)], [], [],
                                   rescale=parse("0.5", 3))
    orbit = examples.circle_orbit()
    for mode in ("analytic", "numeric"):
        np.testing.assert_allclose(reduced_monodromy(integrable, orbit, mode), np.eye(2), atol=1e-15)


# --- analytic multipliers -------------------------------------------------------

def test_harmonic_multipliers():
    sys, orbit = examples.harmonic_oscillator("zD", "-1")
    rep = analytic_multipliers(sys, orbit, numeric=False)
    assert as_multiset(rep.analytic) == as_multiset([1, 1, E_2PI])
    assert rep.analytic[-1].real == pytest.approx(1.86744273170799e-3, rel=1e-12)
    odd = analytic_multipliers(*examples.harmonic_oscillator("zD", "x"), numeric=False)
    np.testing.assert_allclose(np.array(odd.analytic).real, [1, 1, 1], atol=1e-12)


def test_euler_multipliers():
    params = examples.EulerParams()
    sys, orbit = examples.euler_rigid_body(params)
    T = euler_period_oracle(params)
    assert orbit.period == pytest.approx(T, rel=1e-14)
    rep = analytic_multipliers(sys, orbit, numeric=False, reduced=False)
    assert rep.integrals[0] == pytest.approx(-T, rel=1e-13)
    assert rep.analytic[-1].real == pytest.approx(math.exp(-T), rel=1e-12)


@pytest.mark.parametrize("name", examples.BUILTINS)
def test_numeric_spectrum_agrees_with_formula(reports, name):
    sys, _, rep = reports[name]
    assert rep.max_gap <= 1e-5
    assert rep.unit_cluster() >= sys.k + 1
    assert len(rep.pairing) == len(rep.analytic)


@pytest.mark.parametrize("name", examples.BUILTINS)
def test_reduced_spectrum_agrees_with_formula(reports, name):
    _, _, rep = reports[name]
    nonunit_a = sorted(v.real for v in rep.analytic if abs(v - 1) > 1e-4)
    nonunit_r = sorted(v.real for v in rep.reduced if abs(v - 1) > 1e-4)
    np.testing.assert_allclose(nonunit_r, nonunit_a, atol=1e-8)


@pytest.mark.parametrize("name", examples.BUILTINS)
def test_liouville_formula(name):
    sys, orbit = examples.builtin(name)
    M = monodromy(vector_field(sys), orbit)
    det, expected = liouville_check(vector_field(sys), orbit, M)
    assert det == pytest.approx(expected, rel=1e-6)


def test_hypotheses_are_checked():
    ho, _ = examples.harmonic_oscillator("zD")
    euler, euler_orbit = examples.euler_rigid_body()
    with pytest.raises(HypothesisError) as info:
        analytic_multipliers(ho, euler_orbit, numeric=False)
    assert {"ode_residual", "membership"} <= set(info.value.reasons)
    # the circle passes through (0, 1, 0), an equilibrium of the rigid body
    with pytest.raises(HypothesisError) as info:
        analytic_multipliers(euler, examples.circle_orbit(), numeric=False)
    assert "singular" in info.value.reasons


def test_pairing_is_minimal_gap():
    pairs = pair_spectra([1, 1, 0.5], [0.49, 1.01, 0.999])
    assert sorted(round(g, 12) for _, _, g in pairs) == [0.001, 0.01, 0.01]


# --- classification -------------------------------------------------------------

def make_report(integrals, errors=None, regular=True):
    errors = errors or [1e-14] * len(integrals)
    return MultiplierReport(
        k=1, p=len(integrals), period=2 * math.pi, integrals=tuple(integrals),
        integral_errors=tuple(errors), margins=tuple(10 * e for e in errors),
        analytic=(), regular_value_I=regular)


def test_classify_examples():
    stable = classify(make_report([-2 * math.pi]))
    assert stable.outcome is Outcome.STABLE_ON_MANIFOLD
    assert stable.witness["integrals"] == [-2 * math.pi]
    unstable = classify(make_report([+2 * math.pi]))
    assert unstable.outcome is Outcome.UNSTABLE and unstable.witness["index"] == 1
    assert classify(make_report([0.0])).outcome is Outcome.INCONCLUSIVE


def test_classify_regular_value_flag():
    assert classify(make_report([-1.0]), regular_value_I=False).outcome is Outcome.INCONCLUSIVE
    # instability does not need the regular-value hypothesis
    assert classify(make_report([-1.0, 2.0]), regular_value_I=False).outcome is Outcome.UNSTABLE
    assert classify(make_report([-1.0, 2.0])).witness["index"] == 2


def test_classify_respects_margins():
    assert classify(make_report([-1e-6], errors=[1e-6])).outcome is Outcome.INCONCLUSIVE
    assert classify(make_report([3e-6], errors=[1e-7])).outcome is Outcome.UNSTABLE


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=4), st.floats(1e-3, 1e3), st.booleans())
def test_classify_invariant_under_positive_scaling(integrals, rho, regular):
    # the margins scale with the rates, as quadrature errors do
    base = make_report(integrals, errors=[1e-9 * (1 + abs(s)) for s in integrals], regular=regular)
    scaled = make_report([rho * s for s in integrals], errors=[rho * 1e-9 * (1 + abs(s)) for s in integrals],
                         regular=regular)
    assert classify(base).outcome == classify(scaled).outcome


@pytest.mark.parametrize("rate, outcome", [("-1", Outcome.STABLE_ON_MANIFOLD), ("1", Outcome.UNSTABLE),
                                           ("x", Outcome.INCONCLUSIVE)])
def test_classify_builtin_rates(rate, outcome):
    rep = analytic_multipliers(*examples.harmonic_oscillator("zD", rate), numeric=False)
    verdict = classify(rep)
    assert verdict.outcome is outcome
    assert verdict.manifold == "I⁻¹({0}) cylinder x^2+y^2=1"

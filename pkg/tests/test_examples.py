import math

import numpy as np
import pytest
from scipy import special

from orbitctl import examples
from orbitctl.expr import parse
from orbitctl.orbit import verify_periodicity
from orbitctl.system import control_field_X0, vector_field, wedge_norm_squared

RATES = ["-1", "1+x*y-z^2", "sin(x)+cos(y*z)"]


def test_harmonic_zd_field():
    sys, _ = examples.harmonic_oscillator("zD", "-1")
    f = vector_field(sys)
    rng = np.random.default_rng(0)
    for x, y, z in rng.uniform(-3, 3, (20, 3)):
        np.testing.assert_allclose(f([x, y, z]), [y, -x, -z], atol=1e-14)


def test_harmonic_planar_field_at_point():
    # X = (0, -2, 0); X0 = -(4 - 1) / (2 * 4) * (2, 0, 0)
    sys, _ = examples.harmonic_oscillator("planar", "-1")
    np.testing.assert_allclose(vector_field(sys)([2.0, 0.0, 0.0]), [-0.75, -2.0, 0.0], atol=1e-15)
    assert sys.manifold == "I⁻¹({0}) plane z=0"


@pytest.mark.parametrize("case", ["zD", "planar"])
@pytest.mark.parametrize("rate", RATES)
def test_harmonic_x0_vanishes_on_orbit(case, rate):
    sys, orbit = examples.harmonic_oscillator(case, rate)
    for t in np.linspace(0, orbit.period, 25):
        assert np.max(np.abs(control_field_X0(sys, orbit(t)))) <= 1e-14


def test_unknown_cases():
    with pytest.raises(ValueError):
        examples.harmonic_oscillator("xyz")
    with pytest.raises(ValueError):
        examples.euler_rigid_body(case="spin")
    with pytest.raises(ValueError):
        examples.builtin("pendulum:zD")


def test_euler_default_parameters():
    p = examples.EulerParams()
    assert p.k2 == pytest.approx(1 / 3, rel=1e-15)
    T = 4 * special.ellipk(1 / 3) * math.sqrt(2)
    assert p.period == pytest.approx(T, rel=1e-14)
    assert p.period == pytest.approx(9.808515100637942, rel=1e-14)


@pytest.mark.parametrize("kw, fragment", [
    (dict(I1=1.0, I2=2.0, I3=3.0), "I1 > I2 > I3"),
    (dict(h=0.4), "h*I1 - c"),
    (dict(c=0.9), "c - h*I3"),
    (dict(c=2.5), "k^2"),
])
def test_euler_parameter_validation(kw, fragment):
    with pytest.raises(ValueError, match=fragment.replace("*", r"\*").replace("^", r"\^")):
        examples.EulerParams(**kw)


@pytest.mark.parametrize("params", [examples.EulerParams(),
                                    examples.EulerParams(I1=5.0, I2=2.5, I3=0.5, h=0.7, c=1.0)])
def test_euler_orbit_on_level_sets(params):
    orbit = examples.euler_orbit(params)
    F1 = parse(f"0.5*(x^2/{params.I1}+y^2/{params.I2}+z^2/{params.I3})", 3)
    F2 = parse("0.5*(x^2+y^2+z^2)", 3)
    for t in np.linspace(0, orbit.period, 50):
        assert F1(orbit(t)) == pytest.approx(params.h, abs=1e-10)
        assert F2(orbit(t)) == pytest.approx(params.c, abs=1e-10)


@pytest.mark.parametrize("params", [examples.EulerParams(),
                                    examples.EulerParams(I1=5.0, I2=2.5, I3=0.5, h=0.7, c=1.0)])
def test_euler_orbit_solves_the_equations(params):
    sys, orbit = examples.euler_rigid_body(params)
    base = list(sys.base_field)
    rep = verify_periodicity(orbit, lambda p: [f(p) for f in base], m=200, tol=1e-7)
    assert rep.passed
    assert rep.closure <= 1e-12


@pytest.mark.parametrize("case", ["energyI", "momentumI"])
def test_euler_x0_vanishes_on_orbit(case):
    sys, orbit = examples.euler_rigid_body(rate="1+x*y-z^2", case=case)
    for t in np.linspace(0, orbit.period, 25):
        assert np.max(np.abs(control_field_X0(sys, orbit(t)))) <= 1e-13


def _regular_points(sys, orbit, rng, count=100):
    out = []
    while len(out) < count:
        x = (np.array(orbit(rng.uniform(0, orbit.period))) + 0.5 * rng.standard_normal(3)).tolist()
        if wedge_norm_squared(sys, x) > 1e-6:
            out.append(x)
    return out


@pytest.mark.parametrize("name", examples.BUILTINS)
@pytest.mark.parametrize("rate", RATES)
def test_generic_x0_matches_closed_forms(name, rate):
    family, _, case = name.partition(":")
    sys, orbit = examples.builtin(name, rate)
    if family == "harmonic":
        closed = examples.harmonic_closed_form_x0(case, rate)
    else:
        closed = examples.euler_closed_form_x0(examples.EulerParams(), rate, case)
    rng = np.random.default_rng(10 * examples.BUILTINS.index(name) + RATES.index(rate))
    for x in _regular_points(sys, orbit, rng):
        a = np.array(control_field_X0(sys, x))
        b = np.array(closed(x))
        # relative, with a floor for points where the rate happens to vanish
        assert np.linalg.norm(a - b) <= 1e-10 * max(np.linalg.norm(b), 1e-8)

import math

import mpmath
import numpy as np
import pytest
from scipy import special as sps

from dsblowup import special
from dsblowup.special import TestFunctionContext


def test_sphere_area_and_ball_volume():
    assert special.sphere_area(1) == pytest.approx(2 * math.pi)
    assert special.sphere_area(2) == pytest.approx(4 * math.pi)
    assert special.ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_phi1_matches_closed_form_n3():
    ctx = TestFunctionContext(3)
    r = np.geomspace(0.01, 100, 500)
    rel = np.abs(special.phi1(r, ctx) / (4 * np.pi * np.sinh(r) / r) - 1)
    assert rel.max() < 1e-10


def test_phi1_matches_bessel_n2():
    ctx = TestFunctionContext(2)
    r = np.linspace(0.0, 50.0, 101)
    exact = 2 * np.pi * sps.i0e(r)
    assert np.allclose(special.phi1_scaled(r, ctx), exact, rtol=1e-12, atol=0)


def test_phi1_n4_against_mpmath():
    # n = 4: |S^2| int_0^pi e^{r cos} sin^2 = 4 pi^2 I_1(r)/r
    ctx = TestFunctionContext(4)
    for r in (0.3, 2.0, 17.0):
        ref = float(4 * mpmath.pi**2 * mpmath.besseli(1, r) / r)
        assert special.phi1(r, ctx) == pytest.approx(ref, rel=1e-12)


def test_phi1_origin_and_overflow():
    ctx = TestFunctionContext(3)
    assert special.phi1(0.0, ctx) == pytest.approx(4 * math.pi, rel=1e-15)
    assert np.isfinite(special.phi1_scaled(1e4, ctx))
    with pytest.raises(OverflowError):
        special.phi1(800.0, ctx)


def test_asymptotic_constant():
    for n in (2, 3, 5):
        ctx = TestFunctionContext(n)
        assert special.asymptotic_constant(5e3, ctx) == pytest.approx((2 * math.pi) ** ((n - 1) / 2), rel=1e-3)
    with pytest.raises(ValueError):
        special.asymptotic_constant(0.0, TestFunctionContext(3))


def test_psi_functions():
    ctx = TestFunctionContext(3, p=2.0, H=0.1)
    r = np.array([0.5, 1.5])
    assert np.allclose(special.psi1(2.0, r, ctx), math.exp(-2) * special.phi1(r, ctx), rtol=1e-14)
    rate = 3 * 1 * 0.1 / 4 + 1
    assert np.allclose(special.psi2(2.0, r, ctx), math.exp(-rate * 2) * special.phi1(r, ctx), rtol=1e-14)
    with pytest.raises(ValueError):
        special.psi2(1.0, r, TestFunctionContext(3, p=2.0, H=0.0))


def test_eigenfunction_residual_second_order():
    ctx = TestFunctionContext(3)
    a = special.verify_eigenfunction(np.arange(1.0, 5.0 + 1e-9, 0.02), ctx)
    b = special.verify_eigenfunction(np.arange(1.0, 5.0 + 1e-9, 0.01), ctx)
    assert 3.5 <= a.residual / b.residual <= 4.5
    assert not a.coarse


def test_eigenfunction_rejects_constant_field():
    r = np.linspace(1.0, 2.0, 101)
    chk = special.verify_eigenfunction(r, TestFunctionContext(3), values=np.ones_like(r))
    assert chk.residual == pytest.approx(1.0)
    assert special.verify_eigenfunction(np.linspace(1, 5, 10), TestFunctionContext(3)).coarse


@pytest.mark.parametrize("n,p", [(3, 2.0), (2, 1.5)])
def test_lemma23_ratio_bounded(n, p):
    ctx = TestFunctionContext(n, p=p)
    e = special.lemma23_bound_exponent(n, p)
    t = np.linspace(0, 50, 21)
    ratio = np.array([special.lemma23_integral(s, ctx) / (1 + s) ** e for s in t])
    assert np.all(np.isfinite(ratio))
    assert ratio[t > 25].max() <= ratio[t <= 25].max() * (1 + 1e-9)


def test_lemma23_domain():
    with pytest.raises(ValueError):
        special.lemma23_integral(1.0, TestFunctionContext(3))
    with pytest.raises(ValueError):
        special.lemma23_integral(-1.0, TestFunctionContext(3, p=2.0))


def test_phi1_examples():
    assert special.phi1(1.0, TestFunctionContext(3)) == pytest.approx(4 * math.pi * math.sinh(1.0), rel=1e-14)
    series = sum(1.0 / math.factorial(k) ** 2 for k in range(40))  # I0(2) = sum (r/2)^{2k}/(k!)^2
    assert special.phi1(2.0, TestFunctionContext(2)) == pytest.approx(2 * math.pi * series, rel=1e-14)


def test_psi_examples():
    ctx = TestFunctionContext(3, p=2.0, H=2 * 2 * 0.5 / 3)  # n(p-1)H/(2p) = 0.5
    r = np.array([0.0, 0.7, 3.0])
    assert np.allclose(special.psi1(0.0, r, ctx), special.phi1(r, ctx), rtol=1e-15)
    assert special.psi1(1.3, 0.0, ctx) == pytest.approx(4 * math.pi * math.exp(-1.3), rel=1e-15)
    assert special.psi2(1.0, 0.0, ctx) == pytest.approx(4 * math.pi * math.exp(-1.5), rel=1e-14)


def test_eigenfunction_residual_fine_grid():
    chk = special.verify_eigenfunction(np.arange(0.5, 10.0 + 1e-9, 1e-3), TestFunctionContext(3))
    assert chk.residual < 1e-4


def test_lemma23_at_zero_against_riemann_sum():
    ctx = TestFunctionContext(3, p=2.0)
    n_nodes = 10**6
    r = (np.arange(n_nodes) + 0.5) / n_nodes
    riemann = 4 * np.pi * np.sum((4 * np.pi * np.sinh(r) / r) ** 2 * r * r) / n_nodes
    assert special.lemma23_integral(0.0, ctx) == pytest.approx(riemann, rel=1e-10)


def test_lemma23_monotone_in_radius():
    ctx = TestFunctionContext(3, p=2.0)
    assert special.lemma23_integral(4.0, ctx, radius=4.5) < special.lemma23_integral(4.0, ctx)


def test_asymptotic_constant_examples():
    c3 = TestFunctionContext(3)
    a, b = special.asymptotic_constant(np.array([20.0, 40.0]), c3)
    assert abs(a / b - 1) < 0.01
    assert special.asymptotic_constant(1e4, TestFunctionContext(2)) == pytest.approx(math.sqrt(2 * math.pi), rel=1e-4)

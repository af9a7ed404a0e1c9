import math

import mpmath
import numpy as np
import pytest
from conftest import kappas, masses, vectors
from hypothesis import given
from hypothesis import strategies as st

from kappaosc import FourMomentum, KappaContext, compose, compose_flipped, compose_n, omega_kappa, shell_residual
from kappaosc.kinematics import arcsinh, omega_kappa_derivative

mpmath.mp.dps = 40


def test_omega_rest_energy_against_mpmath():
    expected = float(2 * mpmath.asinh(mpmath.mpf("0.5")))
    assert expected == pytest.approx(0.962423650119, abs=1e-12)
    assert omega_kappa((0, 0, 0), KappaContext(1.0, 1.0)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("kappa", [0.1, 1.0, 1e9])
def test_massless_zero_momentum_has_zero_energy(kappa):
    assert omega_kappa((0, 0, 0), KappaContext(kappa, 0.0)) == 0.0


def test_classical_example():
    assert omega_kappa((3, 0, 0), KappaContext(1e9, 4.0)) == pytest.approx(5.0, rel=1e-9)


@pytest.mark.parametrize("x", [0.0, 1e-300, 3e-9, 9.99e-5, 1e-4, 1.01e-4, 0.3, 1.0, 17.0, 1e8])
def test_arcsinh_against_mpmath(x):
    for s in (1, -1):
        assert arcsinh(s * x) == pytest.approx(float(mpmath.asinh(s * mpmath.mpf(x))), rel=2e-16, abs=0.0)


@given(vectors(5.0), kappas, masses)
def test_omega_against_mpmath(k, kappa, m0):
    ctx = KappaContext(kappa, m0)
    s = mpmath.sqrt(sum(mpmath.mpf(float(c)) ** 2 for c in k) + mpmath.mpf(m0) ** 2)
    ref = float(2 * kappa * mpmath.asinh(s / (2 * kappa)))
    assert omega_kappa(k, ctx) == pytest.approx(ref, rel=1e-14, abs=1e-300)


def test_shell_residual_examples():
    ctx0 = KappaContext(1.0, 0.0)
    assert shell_residual(FourMomentum(0.0, (1, 0, 0)), ctx0) == 1.0
    expected = float(4 * mpmath.sinh(mpmath.mpf("0.5")) ** 2)
    assert expected == pytest.approx(1.08616, abs=1e-5)
    assert shell_residual(FourMomentum(1.0, (0, 0, 0)), ctx0) == pytest.approx(expected, rel=1e-15)


def test_shell_residual_sign_of_mass_term():
    # the rest mass enters on the momentum side: k.k + m0^2 = (2 kappa sinh(e / 2 kappa))^2
    ctx = KappaContext(1.0, 1.0)
    e = float(2 * mpmath.asinh(mpmath.mpf("0.5")))
    assert shell_residual(FourMomentum(e, (0, 0, 0)), ctx) <= 1e-15


@given(vectors(10.0), kappas, st.floats(0.0, 10.0))
def test_on_shell_closure(k, kappa, m0):
    ctx = KappaContext(kappa, m0)
    p = FourMomentum.on_shell_from(k, ctx)
    assert p.on_shell(ctx)
    assert shell_residual(p, ctx) <= 1e-12


@given(st.floats(0.0, 20.0), st.floats(1e-6, 1.0), kappas, masses)
def test_omega_strictly_increasing(k, dk, kappa, m0):
    ctx = KappaContext(kappa, m0)
    assert omega_kappa((k + dk, 0, 0), ctx) > omega_kappa((k, 0, 0), ctx)


@pytest.mark.parametrize("kmag", [0.0, 0.3, 1.0, 4.0])
def test_omega_derivative_by_finite_differences(kmag):
    ctx = KappaContext(0.7, 0.4)
    h = 1e-6
    fd = (omega_kappa((kmag + h, 0, 0), ctx) - omega_kappa((kmag - h, 0, 0), ctx)) / (2 * h)
    assert omega_kappa_derivative(kmag, ctx) == pytest.approx(fd, abs=1e-6)


def test_compose_closed_form():
    ctx = KappaContext(1.0)
    r = compose(FourMomentum(1.0, (1, 0, 0)), FourMomentum(1.0, (0, 1, 0)), ctx)
    assert r.e == 2.0
    assert r.k == pytest.approx([math.exp(0.5), math.exp(-0.5), 0.0], rel=1e-15)
    assert r.k[:2] == pytest.approx([1.648721, 0.606531], abs=1e-6)


def test_compose_unit_and_classical_limit():
    ctx = KappaContext(1.0, 1.0)
    p = FourMomentum.on_shell_from((0.3, -0.2, 0.1), ctx)
    z = FourMomentum.zero()
    for r in (compose(p, z, ctx), compose(z, p, ctx)):
        assert r.e == p.e and np.array_equal(r.k, p.k)
    big = KappaContext(1e9, 1.0)
    p, q = FourMomentum.on_shell_from((1, 2, 3), big), FourMomentum.on_shell_from((-2, 0.5, 1), big)
    # the exponential weights deviate from 1 by about e / 2 kappa ~ 2e-9
    assert compose(p, q, big).k == pytest.approx(p.k + q.k, rel=1e-8)


def test_compose_flipped_is_reversed_compose_and_noncommutative():
    ctx = KappaContext(1.0)
    p, q = FourMomentum(1.0, (1, 0, 0)), FourMomentum(1.0, (0, 1, 0))
    assert np.array_equal(compose_flipped(p, q, ctx).k, compose(q, p, ctx).k)
    assert np.linalg.norm(compose(p, q, ctx).k - compose_flipped(p, q, ctx).k) > 0.1
    assert np.array_equal(compose(p, p, ctx).k, compose_flipped(p, p, ctx).k)


@given(vectors(), vectors(), vectors(), kappas, masses)
def test_compose_associative(a, b, c, kappa, m0):
    ctx = KappaContext(kappa, m0)
    p, q, r = (FourMomentum.on_shell_from(v, ctx) for v in (a, b, c))
    left = compose(compose(p, q, ctx), r, ctx).as_array()
    right = compose(p, compose(q, r, ctx), ctx).as_array()
    assert np.all(np.abs(left - right) <= 1e-12 * np.maximum(1.0, np.abs(right)))


@given(vectors(), vectors(), kappas)
def test_compose_energies_add_exactly(a, b, kappa):
    ctx = KappaContext(kappa, 0.5)
    p, q = FourMomentum.on_shell_from(a, ctx), FourMomentum.on_shell_from(b, ctx)
    assert compose(p, q, ctx).e == p.e + q.e == compose(q, p, ctx).e


def test_compose_n():
    ctx = KappaContext(2.0, 0.3)
    ps = [FourMomentum.on_shell_from(v, ctx) for v in ((0.1, 0.2, 0.3), (-0.4, 0, 1), (0.5, -0.5, 0))]
    with pytest.raises(ValueError, match="empty composition"):
        compose_n([], ctx)
    assert compose_n(ps[:1], ctx) is ps[0]
    right = compose(ps[0], compose(ps[1], ps[2], ctx), ctx)
    assert compose_n(ps, ctx).k == pytest.approx(right.k, rel=1e-12)
    big = KappaContext(1e9, 0.3)
    ps = [FourMomentum.on_shell_from(p.k, big) for p in ps]
    assert compose_n(ps, big).k == pytest.approx(sum(p.k for p in ps), rel=1e-9, abs=1e-9)


def test_context_validation_aggregates():
    with pytest.raises(ValueError) as exc:
        KappaContext(kappa=-1.0, m0=-2.0, tol_solver=0.0)
    msg = str(exc.value)
    assert "kappa" in msg and "m0" in msg and "tol_solver" in msg
    assert KappaContext(1e9).classical and not KappaContext(1e8).classical


def test_four_momentum_is_immutable_and_finite():
    p = FourMomentum(1.0, (1, 2, 3))
    with pytest.raises(ValueError):
        p.k[0] = 5.0
    with pytest.raises(ValueError):
        FourMomentum(float("nan"), (0, 0, 0))
    with pytest.raises(ValueError):
        FourMomentum(0.0, (0, float("inf"), 0))
    with pytest.raises(ValueError):
        FourMomentum(0.0, (1, 2))

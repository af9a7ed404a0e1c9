import math
from functools import reduce

import numpy as np
import pytest
from conftest import kappas, masses, vectors
from hypothesis import assume, given
from hypothesis import strategies as st

from kappaosc import KappaContext
from kappaosc.algebra import (
    ANNIHILATION,
    CREATION,
    RESCALE_SIGNS,
    SIDES,
    DeltaFactor,
    Monomial,
    OscFactor,
    TermSum,
    annihilation,
    binary_preimage,
    circ_binary,
    circ_commutator,
    circ_monomials,
    circ_nfold,
    circ_nfold_neighbor_rule,
    circ_relativistic,
    creation,
    max_label_deviation,
    mixed_nonassociativity_witness,
    nfold_exponents,
    nfold_preimage,
    normal_form,
    sector_factorization,
    word_momentum,
)
from kappaosc.kinematics import omega_kappa

KINDS = st.sampled_from([ANNIHILATION, CREATION])


def test_rescale_sign_table():
    assert RESCALE_SIGNS == {(1, 1): (-1, 1), (-1, -1): (1, -1), (-1, 1): (-1, -1), (1, -1): (1, 1)}


def test_annihilation_pair_closed_form():
    ctx = KappaContext(1.0, 1.0)
    x, y = annihilation((1, 0, 0), ctx), annihilation((0, 2, 0), ctx)
    w = circ_binary(x, y, ctx)
    ex, ey = omega_kappa((1, 0, 0), ctx), omega_kappa((0, 2, 0), ctx)
    assert w.factors[0].k == pytest.approx([math.exp(-ey / 2), 0, 0], rel=1e-15)
    assert w.factors[1].k == pytest.approx([0, 2 * math.exp(ex / 2), 0], rel=1e-15)
    assert (w.factors[0].e, w.factors[1].e) == (ex, ey)


@given(vectors(), vectors(), KINDS, KINDS, kappas, masses)
def test_binary_preimage_inverts(kp, kq, kl, kr, kappa, m0):
    ctx = KappaContext(kappa, m0)
    x, y = OscFactor.on_shell(kl, kp, ctx), OscFactor.on_shell(kr, kq, ctx)
    u, v = binary_preimage(circ_binary(x, y, ctx), ctx)
    assert u.close_to(x) and v.close_to(y)


@given(st.lists(vectors(), min_size=1, max_size=6), kappas, masses)
def test_nfold_matches_fold_of_binary_products(ks, kappa, m0):
    ctx = KappaContext(kappa, m0)
    fs = [creation(k, ctx) for k in ks]
    folded = reduce(lambda m, f: circ_monomials(m, Monomial(1.0, (f,)), ctx), fs[1:], Monomial(1.0, fs[:1]))
    right = reduce(lambda m, f: circ_monomials(Monomial(1.0, (f,)), m, ctx), fs[-2::-1], Monomial(1.0, fs[-1:]))
    n = circ_nfold(fs, ctx)
    assert max_label_deviation(n, folded) <= 1e-13
    assert max_label_deviation(n, right) <= 1e-13
    assert max_label_deviation(n, circ_nfold_neighbor_rule(fs, ctx)) <= 4e-15
    pre = nfold_preimage(n, ctx)
    assert all(a.close_to(b) for a, b in zip(pre, fs))


def test_nfold_exponent_pattern():
    ctx = KappaContext(0.5)
    assert nfold_exponents([1.0, 2.0, 3.0], ctx) == pytest.approx([5.0, 2.0, -3.0])
    assert nfold_exponents([], ctx) == []
    assert len(circ_nfold([], ctx)) == 0


@given(vectors(), vectors(), kappas, masses)
def test_two_creations_carry_abelian_momentum(kp, kq, kappa, m0):
    ctx = KappaContext(kappa, m0)
    p = word_momentum(circ_binary(creation(kp, ctx), creation(kq, ctx), ctx), ctx)
    assert p.e == pytest.approx(-(omega_kappa(kp, ctx) + omega_kappa(kq, ctx)), rel=1e-15)
    assert np.allclose(p.k, -(kp + kq), rtol=0, atol=1e-12)


@given(vectors(), vectors(), KINDS, kappas, masses)
def test_like_oscillators_commute(kp, kq, kind, kappa, m0):
    # labels closer than the label tolerance but not identical are ambiguous by construction
    gap = float(np.max(np.abs(kp - kq)))
    assume(gap == 0.0 or gap > 1e-9)
    ctx = KappaContext(kappa, m0)
    x, y = OscFactor.on_shell(kind, kp, ctx), OscFactor.on_shell(kind, kq, ctx)
    assert circ_commutator(x, y, ctx).is_zero()


def test_mixed_commutator_is_a_delta():
    ctx = KappaContext(1.0, 1.0)
    x, y = annihilation((0.3, 0, 0), ctx), creation((0, 0.2, 0), ctx)
    expected = TermSum.of(Monomial(-1.0, (), (DeltaFactor((-0.3, 0.2, 0)),)))
    assert circ_commutator(x, y, ctx).equals(expected)
    assert circ_commutator(y, x, ctx).equals(TermSum.of(Monomial(1.0, (), (DeltaFactor((0.3, -0.2, 0)),))))


def test_normal_form_merges_like_terms():
    ctx = KappaContext(1.0)
    x, y = creation((0.1, 0, 0), ctx), creation((0, 0.1, 0), ctx)
    ts = normal_form(TermSum.of(circ_binary(x, y, ctx), circ_binary(y, x, ctx)), ctx)
    assert len(ts) == 1 and ts.terms[0].coeff == 2.0


@given(vectors(0.4), vectors(0.4), st.sampled_from([(1, 1), (-1, -1), (-1, 1), (1, -1)]))
def test_classical_degeneration(kp, kq, kinds):
    ctx = KappaContext(1e9, 0.5)
    x, y = OscFactor.on_shell(kinds[0], kp, ctx), OscFactor.on_shell(kinds[1], kq, ctx)
    w = circ_binary(x, y, ctx)
    assert max_label_deviation(w, Monomial(1.0, (x, y))) <= 1e-9


def test_relativistic_factor():
    ctx = KappaContext(1.0, 1.0)
    x, y = annihilation((1, 0, 0), ctx), annihilation((0, 0, 0), ctx)
    w = circ_relativistic(x, y, ctx)
    assert w.coeff.real == pytest.approx(math.exp(1.5 * (x.e - y.e)), rel=1e-15)


@pytest.mark.parametrize("side", SIDES)
def test_sector_factorization_holds_with_shifted_inner_momenta(side):
    ctx = KappaContext(1.0, 1.0)
    r, p, q = (creation(k, ctx) for k in ((0.2, 0.1, 0), (0.4, 0, 0.1), (0, -0.3, 0.2)))
    sf = sector_factorization(r, p, q, side, ctx)
    assert sf.holds
    lhs, rhs = sf
    assert lhs.equals(rhs)
    if side == "left_plain":
        assert sf.shift_p == pytest.approx(1.0) and sf.shift_q == pytest.approx(1.0)
    elif side == "left_circ":
        assert sf.shift_p == pytest.approx(math.exp(-r.e / 2)) and sf.shift_q == pytest.approx(math.exp(-r.e / 2))
    else:
        assert sf.shift_p == pytest.approx(math.exp(r.e / 2)) and sf.shift_q == pytest.approx(math.exp(r.e / 2))
    with pytest.raises(ValueError, match="unknown side"):
        sector_factorization(r, p, q, "middle", ctx)


def test_mixed_nonassociativity_finite_vs_classical():
    rep = mixed_nonassociativity_witness(KappaContext(1.0, 1.0))
    assert not rep.equal and rep.max_deviation > 0.1
    assert mixed_nonassociativity_witness(KappaContext(1e9, 1.0)).equal
    assert set(rep.to_dict()) == {"full", "partial", "equal", "max_deviation"}


def test_creation_only_products_reject_annihilators():
    ctx = KappaContext(1.0)
    with pytest.raises(ValueError, match="unsupported factor kind"):
        circ_nfold([annihilation((0, 0, 0), ctx)], ctx)
    with pytest.raises(ValueError):
        OscFactor(0, (0, 0, 0), 1.0)

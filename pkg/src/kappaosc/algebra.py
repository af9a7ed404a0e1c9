"""The circle-product rewrite system on oscillator words.

Words are stored in *plain* form: the labels they carry after the
circle-product rescalings have been applied.  Energy labels are never
rescaled.  Oscillator kinds follow ``a = a^(+1)`` (annihilation) and
``a^dagger = a^(-1)`` (creation); under the adjoint action a factor of kind
``eps`` carries the four-momentum ``eps * (e, k)``.

The commutator convention puts the delta in ``[a^dagger(p), a(q)]``, with
coefficient ``+1``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .kinematics import FourMomentum, KappaContext, as_vector, compose_n, omega_kappa

ANNIHILATION = 1
CREATION = -1

#: Drop terms whose coefficient magnitude falls at or below this.
COEFF_EPS = 1e-14
#: Relative tolerance for label equality.
LABEL_RTOL = 1e-12

#: Exponent signs ``(s_left, s_right)`` of the binary circle product, keyed by
#: ``(kind_left, kind_right)``: the left label is multiplied by
#: ``exp(s_left * e_right / 2 kappa)`` and the right one by
#: ``exp(s_right * e_left / 2 kappa)``.
RESCALE_SIGNS: dict[tuple[int, int], tuple[int, int]] = {
    (ANNIHILATION, ANNIHILATION): (-1, +1),
    (CREATION, CREATION): (+1, -1),
    (CREATION, ANNIHILATION): (-1, -1),
    (ANNIHILATION, CREATION): (+1, +1),
}


def _close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def _vclose(a: np.ndarray, b: np.ndarray, rtol: float) -> bool:
    return all(_close(float(x), float(y), rtol) for x, y in zip(a, b))


@dataclass(frozen=True, eq=False)
class OscFactor:
    kind: int
    k: np.ndarray
    e: float

    def __post_init__(self) -> None:
        if self.kind not in (ANNIHILATION, CREATION):
            raise ValueError(f"oscillator kind must be +1 or -1, got {self.kind!r}")
        if not math.isfinite(self.e):
            raise ValueError(f"non-finite energy label {self.e!r}")
        v = as_vector(self.k)
        v.setflags(write=False)
        object.__setattr__(self, "k", v)
        object.__setattr__(self, "e", float(self.e))

    @classmethod
    def on_shell(cls, kind: int, k, ctx: KappaContext) -> "OscFactor":
        k = as_vector(k)
        return cls(kind, k, omega_kappa(k, ctx))

    def rescaled(self, factor: float) -> "OscFactor":
        return OscFactor(self.kind, self.k * factor, self.e)

    def carried(self) -> FourMomentum:
        """Four-momentum eigenvalue of this factor under the adjoint action."""
        return FourMomentum(self.kind * self.e, self.kind * self.k)

    def close_to(self, other: "OscFactor", rtol: float = LABEL_RTOL) -> bool:
        return (
            self.kind == other.kind
            and _close(self.e, other.e, rtol)
            and _vclose(self.k, other.k, rtol)
        )

    def key(self) -> tuple:
        return (self.kind, *self.k.tolist(), self.e)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": [float(x) for x in self.k], "e": self.e}

    def __repr__(self) -> str:
        name = "a" if self.kind == ANNIHILATION else "a+"
        return f"{name}({self.k.tolist()}, {self.e!r})"


def _label_cmp(x: OscFactor, y: OscFactor) -> int:
    """Lexicographic order on labels that treats rounding-level differences as ties."""
    for a, b in zip(x.key(), y.key()):
        if not _close(a, b, LABEL_RTOL):
            return -1 if a < b else 1
    return 0


#: Sort key for canonical factor order, stable under label round trips.
LABEL_ORDER = functools.cmp_to_key(_label_cmp)


def creation(k, ctx: KappaContext) -> OscFactor:
    return OscFactor.on_shell(CREATION, k, ctx)


def annihilation(k, ctx: KappaContext) -> OscFactor:
    return OscFactor.on_shell(ANNIHILATION, k, ctx)


@dataclass(frozen=True, eq=False)
class DeltaFactor:
    """``delta^3(arg)`` with its argument stored as a numeric 3-vector."""

    arg: np.ndarray

    def __post_init__(self) -> None:
        v = as_vector(self.arg)
        v.setflags(write=False)
        object.__setattr__(self, "arg", v)

    def supported(self, tol: float = 0.0) -> bool:
        return float(np.linalg.norm(self.arg)) <= tol

    def close_to(self, other: "DeltaFactor", rtol: float = LABEL_RTOL) -> bool:
        # delta^3(v) = delta^3(-v)
        return _vclose(self.arg, other.arg, rtol) or _vclose(self.arg, -other.arg, rtol)

    def key(self) -> tuple:
        v = self.arg
        for x in v:
            if x != 0:
                if x < 0:
                    v = -v
                break
        return tuple(v.tolist())

    def to_dict(self) -> dict:
        return {"arg": [float(x) for x in self.arg]}


@dataclass(frozen=True, eq=False)
class Monomial:
    coeff: complex = 1.0
    factors: tuple[OscFactor, ...] = ()
    deltas: tuple[DeltaFactor, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeff", complex(self.coeff))
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "deltas", tuple(self.deltas))

    def __len__(self) -> int:
        return len(self.factors)

    def __neg__(self) -> "Monomial":
        return self.scaled(-1.0)

    def scaled(self, c: complex) -> "Monomial":
        return Monomial(self.coeff * c, self.factors, self.deltas)

    def times(self, other: "Monomial") -> "Monomial":
        """Plain (concatenation) product."""
        return Monomial(self.coeff * other.coeff, self.factors + other.factors, self.deltas + other.deltas)

    def same_word(self, other: "Monomial", rtol: float = LABEL_RTOL) -> bool:
        if len(self.factors) != len(other.factors) or len(self.deltas) != len(other.deltas):
            return False
        if not all(f.close_to(g, rtol) for f, g in zip(self.factors, other.factors)):
            return False
        return all(d.close_to(g, rtol) for d, g in zip(sorted(self.deltas, key=DeltaFactor.key),
                                                       sorted(other.deltas, key=DeltaFactor.key)))

    def key(self) -> tuple:
        kinds = tuple(f.kind for f in self.factors)
        labels = tuple(x for f in self.factors for x in (*f.k.tolist(), f.e))
        deltas = tuple(sorted(d.key() for d in self.deltas))
        return (len(self.factors), kinds, labels, deltas)

    def to_dict(self) -> dict:
        return {
            "coeff": {"re": self.coeff.real, "im": self.coeff.imag},
            "factors": [f.to_dict() for f in self.factors],
            "deltas": [d.to_dict() for d in self.deltas],
        }


@dataclass(frozen=True, eq=False)
class TermSum:
    """Linear combination of monomials.  ``canonical()`` merges and sorts terms."""

    terms: tuple[Monomial, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def of(cls, *terms: Monomial) -> "TermSum":
        return cls(terms)

    def __add__(self, other: "TermSum") -> "TermSum":
        return TermSum(self.terms + other.terms)

    def __sub__(self, other: "TermSum") -> "TermSum":
        return TermSum(self.terms + tuple(-t for t in other.terms))

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return len(self.canonical().terms) == 0

    def canonical(self, rtol: float = LABEL_RTOL) -> "TermSum":
        merged: list[Monomial] = []
        for t in self.terms:
            for i, m in enumerate(merged):
                if m.same_word(t, rtol):
                    merged[i] = Monomial(m.coeff + t.coeff, m.factors, m.deltas)
                    break
            else:
                merged.append(t)
        kept = [m for m in merged if abs(m.coeff) > COEFF_EPS]
        return TermSum(tuple(sorted(kept, key=Monomial.key)))

    def equals(self, other: "TermSum", rtol: float = LABEL_RTOL) -> bool:
        a = self.canonical(rtol).terms
        b = other.canonical(rtol).terms
        if len(a) != len(b):
            return False
        return all(
            x.same_word(y, rtol) and abs(x.coeff - y.coeff) <= rtol * max(1.0, abs(x.coeff))
            for x, y in zip(a, b)
        )

    def to_dict(self) -> dict:
        return {"terms": [t.to_dict() for t in self.canonical().terms]}


def max_label_deviation(w1: Monomial, w2: Monomial) -> float:
    """Largest relative label difference between two words of the same shape."""
    if len(w1.factors) != len(w2.factors):
        return math.inf
    dev = 0.0
    for f, g in zip(w1.factors, w2.factors):
        if f.kind != g.kind:
            return math.inf
        scale = max(1.0, float(np.max(np.abs(f.k))), float(np.max(np.abs(g.k))))
        dev = max(dev, float(np.max(np.abs(f.k - g.k))) / scale)
        dev = max(dev, abs(f.e - g.e) / max(1.0, abs(f.e), abs(g.e)))
    return dev


# -- binary products --------------------------------------------------------

def circ_binary(x: OscFactor, y: OscFactor, ctx: KappaContext) -> Monomial:
    """Binary circle product: rescale both momentum labels, then concatenate."""
    s_left, s_right = RESCALE_SIGNS[(x.kind, y.kind)]
    two_k = 2.0 * ctx.kappa
    return Monomial(
        1.0,
        (x.rescaled(math.exp(s_left * y.e / two_k)), y.rescaled(math.exp(s_right * x.e / two_k))),
    )


def binary_preimage(word: Monomial, ctx: KappaContext) -> tuple[OscFactor, OscFactor]:
    """Undo :func:`circ_binary` on a two-factor word."""
    if len(word.factors) != 2:
        raise ValueError("binary preimage needs a two-factor word")
    u, v = word.factors
    s_left, s_right = RESCALE_SIGNS[(u.kind, v.kind)]
    two_k = 2.0 * ctx.kappa
    return u.rescaled(math.exp(-s_left * v.e / two_k)), v.rescaled(math.exp(-s_right * u.e / two_k))


def circ_relativistic(x: OscFactor, y: OscFactor, ctx: KappaContext) -> Monomial:
    """Binary product times ``exp(3 (omega(x) - omega(y)) / 2 kappa)``."""
    w = circ_binary(x, y, ctx)
    factor = math.exp(1.5 / ctx.kappa * (omega_kappa(x.k, ctx) - omega_kappa(y.k, ctx)))
    return w.scaled(factor)


def word_momentum(word: Monomial, ctx: KappaContext) -> FourMomentum:
    """Composed four-momentum eigenvalue of a word (identity for the empty word)."""
    if not word.factors:
        return FourMomentum.zero()
    return compose_n([f.carried() for f in word.factors], ctx)


# -- creation-sector products -----------------------------------------------

def _require_creation(factors: Iterable[OscFactor]) -> None:
    for f in factors:
        if f.kind != CREATION:
            raise ValueError("unsupported factor kind: monomial products are defined on creation factors only")


def circ_monomials(m1: Monomial, m2: Monomial, ctx: KappaContext) -> Monomial:
    """Circle product of two creation monomials.

    Left factors pick up ``exp(+sum e(m2) / 2 kappa)``, right factors
    ``exp(-sum e(m1) / 2 kappa)``; energy labels are the on-shell energies.
    """
    _require_creation(m1.factors)
    _require_creation(m2.factors)
    two_k = 2.0 * ctx.kappa
    up = math.exp(sum(f.e for f in m2.factors) / two_k)
    down = math.exp(-sum(f.e for f in m1.factors) / two_k)
    return Monomial(
        m1.coeff * m2.coeff,
        tuple(f.rescaled(up) for f in m1.factors) + tuple(f.rescaled(down) for f in m2.factors),
        m1.deltas + m2.deltas,
    )


def nfold_exponents(energies: Sequence[float], ctx: KappaContext) -> list[float]:
    """Per-position exponents ``(sum of right energies - sum of left energies) / 2 kappa``."""
    total = float(sum(energies))
    out = []
    left = 0.0
    for e in energies:
        right = total - left - e
        out.append((right - left) / (2.0 * ctx.kappa))
        left += e
    return out


def circ_nfold(factors: Sequence[OscFactor], ctx: KappaContext) -> Monomial:
    """Associative n-fold circle product of creation factors."""
    _require_creation(factors)
    if not factors:
        return Monomial(1.0)
    exps = nfold_exponents([f.e for f in factors], ctx)
    return Monomial(1.0, tuple(f.rescaled(math.exp(a)) for f, a in zip(factors, exps)))


def circ_nfold_neighbor_rule(factors: Sequence[OscFactor], ctx: KappaContext) -> Monomial:
    """Same product built neighbour by neighbour.

    Every oscillator to the left multiplies a label by ``exp(-e/2 kappa)``,
    every oscillator to the right by ``exp(+e/2 kappa)``.
    """
    _require_creation(factors)
    two_k = 2.0 * ctx.kappa
    out = []
    for i, f in enumerate(factors):
        scale = 1.0
        for j, g in enumerate(factors):
            if j < i:
                scale *= math.exp(-g.e / two_k)
            elif j > i:
                scale *= math.exp(g.e / two_k)
        out.append(f.rescaled(scale))
    return Monomial(1.0, tuple(out))


def nfold_preimage(word: Monomial, ctx: KappaContext) -> tuple[OscFactor, ...]:
    _require_creation(word.factors)
    exps = nfold_exponents([f.e for f in word.factors], ctx)
    return tuple(f.rescaled(math.exp(-a)) for f, a in zip(word.factors, exps))


# -- normal form ------------------------------------------------------------

def _normalize_term(term: Monomial, ctx: KappaContext) -> list[Monomial]:
    n = len(term.factors)
    if n == 2:
        x, y = binary_preimage(term, ctx)
        if x.kind == y.kind:
            x, y = sorted((x, y), key=LABEL_ORDER)
            return [Monomial(term.coeff, circ_binary(x, y, ctx).factors, term.deltas)]
        if x.kind == ANNIHILATION:
            # a(u) o a+(v) = a+(v) o a(u) - delta(v - u)
            swapped = Monomial(term.coeff, circ_binary(y, x, ctx).factors, term.deltas)
            contact = Monomial(-term.coeff, (), term.deltas + (DeltaFactor(y.k - x.k),))
            return [swapped, contact]
        return [term]
    if n >= 3 and all(f.kind == CREATION for f in term.factors):
        pre = sorted(nfold_preimage(term, ctx), key=LABEL_ORDER)
        return [Monomial(term.coeff, circ_nfold(pre, ctx).factors, term.deltas)]
    return [term]


def normal_form(ts: TermSum, ctx: KappaContext) -> TermSum:
    """Rewrite circle-product words into normal order and canonicalize.

    Every word with two or more factors is read as the circle product of its
    preimage labels: same-kind pairs and creation words are symmetric, and
    mixed pairs are ordered creation-first using the delta relation.
    """
    out: list[Monomial] = []
    for t in ts.terms:
        out.extend(_normalize_term(t, ctx))
    return TermSum(tuple(out)).canonical()


def circ_commutator(x: OscFactor, y: OscFactor, ctx: KappaContext) -> TermSum:
    """``[x, y] = x o y - y o x`` in normal form."""
    return normal_form(TermSum.of(circ_binary(x, y, ctx), -circ_binary(y, x, ctx)), ctx)


# -- multiparticle sectors ----------------------------------------------------

@dataclass(frozen=True)
class SectorFactorization:
    """Both sides of a bracketed binary relation inside the three-particle sector.

    ``inner_p`` / ``inner_q`` are the momenta the inner binary product
    effectively acts on; ``shift_p`` / ``shift_q`` are their ratios to the original momenta.
    """

    side: str
    lhs: TermSum
    rhs: TermSum
    inner_p: np.ndarray
    inner_q: np.ndarray
    shift_p: float
    shift_q: float

    @property
    def holds(self) -> bool:
        return self.lhs.equals(self.rhs)

    def __iter__(self):
        return iter((self.lhs, self.rhs))


SIDES = ("left_plain", "left_circ", "right_circ")


def sector_factorization(r: OscFactor, p: OscFactor, q: OscFactor, side: str, ctx: KappaContext) -> SectorFactorization:
    _require_creation((r, p, q))
    rm = Monomial(1.0, (r,))
    pq = circ_binary(p, q, ctx)
    qp = circ_binary(q, p, ctx)
    two_k = 2.0 * ctx.kappa
    if side == "left_plain":
        lhs = TermSum(tuple(rm.times(t) for t in normal_form(TermSum.of(pq), ctx).terms))
        rhs = TermSum(tuple(rm.times(t) for t in normal_form(TermSum.of(qp), ctx).terms))
        word = rm.times(pq)
        inner = word.factors[1:]
    elif side == "left_circ":
        word = circ_monomials(rm, pq, ctx)
        lhs = normal_form(TermSum.of(word), ctx)
        rhs = normal_form(TermSum.of(circ_monomials(rm, qp, ctx)), ctx)
        inner = word.factors[1:]
    elif side == "right_circ":
        word = circ_monomials(pq, rm, ctx)
        lhs = normal_form(TermSum.of(word), ctx)
        rhs = normal_form(TermSum.of(circ_monomials(qp, rm, ctx)), ctx)
        inner = word.factors[:2]
    else:
        raise ValueError(f"unknown side {side!r}; expected one of {SIDES}")
    s_left, s_right = RESCALE_SIGNS[(CREATION, CREATION)]
    inner_p = inner[0].k * math.exp(-s_left * q.e / two_k)
    inner_q = inner[1].k * math.exp(-s_right * p.e / two_k)
    return SectorFactorization(side, lhs, rhs, inner_p, inner_q, _ratio(inner_p, p.k), _ratio(inner_q, q.k))


def _ratio(scaled: np.ndarray, orig: np.ndarray) -> float:
    n2 = float(orig @ orig)
    return float(scaled @ orig) / n2 if n2 > 0 else 1.0


@dataclass(frozen=True)
class NonAssociativityReport:
    full: TermSum
    partial: TermSum
    equal: bool
    max_deviation: float

    def to_dict(self) -> dict:
        return {
            "full": self.full.to_dict(),
            "partial": self.partial.to_dict(),
            "equal": self.equal,
            "max_deviation": self.max_deviation,
        }


DEFAULT_WITNESS_MOMENTA = ((0.3, -0.2, 0.5), (-0.4, 0.1, 0.2), (0.6, 0.25, -0.1), (-0.15, 0.45, 0.35))


def mixed_nonassociativity_witness(ctx: KappaContext, momenta=DEFAULT_WITNESS_MOMENTA,
                                   rtol: float | None = None) -> NonAssociativityReport:
    """Compare ``(p1 p2) o (q1 q2)`` with ``p1 (p2 o q1) q2``.

    Plain and circle multiplication do not associate for finite kappa.
    """
    p1, p2, q1, q2 = (creation(k, ctx) for k in momenta)
    full = circ_monomials(Monomial(1.0, (p1, p2)), Monomial(1.0, (q1, q2)), ctx)
    partial = Monomial(1.0, (p1,)).times(circ_monomials(Monomial(1.0, (p2,)), Monomial(1.0, (q1,)), ctx)).times(
        Monomial(1.0, (q2,))
    )
    if rtol is None:
        # near the classical limit labels still move by up to (sum of energies) / 2 kappa
        total = sum(f.e for f in (p1, p2, q1, q2))
        rtol = max(LABEL_RTOL, total / ctx.kappa) if ctx.classical else LABEL_RTOL
    a, b = TermSum.of(full), TermSum.of(partial)
    return NonAssociativityReport(a.canonical(), b.canonical(), a.equals(b, rtol), max_label_deviation(full, partial))

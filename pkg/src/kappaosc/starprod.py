"""Deformed star product of plane waves, bilocal operator symbols, and the
circle/star equivalence, with the constant-theta (Moyal) product as contrast.

Plane waves inside bilocal kernels carry the phase
``exp(i (p.x + p0 x0 + q.y + q0 y0))``, so derivatives act as

* ``d^x_j -> i (star_spatial_x)_j`` and ``i d^x_0 -> -p0`` (same for ``y``);
* ``exp(i d^y_0 / kappa) -> exp(-q0/kappa)``, ``exp(-i d^x_0 / kappa) -> exp(p0/kappa)``;
* the deformed time operator ``(2 kappa sin(d_0 / 2 kappa))^2`` becomes
  ``-(2 kappa sinh(p0 / 2 kappa))^2``.

With this table a single bracket reduces to ``m0^2`` on the mass shell, so the
mass-augmented bracket (``... - m0^2``) vanishes for every mass.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import (
    ANNIHILATION,
    CREATION,
    Monomial,
    OscFactor,
    circ_nfold,
    circ_relativistic,
    max_label_deviation,
)
from .clusters import flip_frame_map
from .kinematics import FourMomentum, KappaContext, as_vector, omega_kappa
from .shells import ShellAssignment, solve_coupled

EQUIVALENCE_TOL = 1e-10
ANTISYMMETRY_TOL = 1e-12


# -- plane waves -------------------------------------------------------------

@dataclass(frozen=True)
class PlaneWavePair:
    """Two plane waves after the star product: labels and deformed spatial momenta."""

    p: FourMomentum
    q: FourMomentum
    star_spatial_x: np.ndarray
    star_spatial_y: np.ndarray

    def time_phase(self, x0: complex, y0: complex) -> complex:
        """``exp(i (p0 x0 + q0 y0))``; complex times are allowed."""
        return cmath.exp(1j * (self.p.e * x0 + self.q.e * y0))

    def to_dict(self) -> dict:
        return {
            "p": {"e": self.p.e, "k": self.p.k.tolist()},
            "q": {"e": self.q.e, "k": self.q.k.tolist()},
            "star_spatial_x": self.star_spatial_x.tolist(),
            "star_spatial_y": self.star_spatial_y.tolist(),
        }


def plane_wave_pair(p: FourMomentum, q: FourMomentum, ctx: KappaContext) -> PlaneWavePair:
    """Star product with the exponents taken from the supplied energies."""
    two_k = 2.0 * ctx.kappa
    return PlaneWavePair(p, q, p.k * math.exp(q.e / two_k), q.k * math.exp(-p.e / two_k))


def star_planewaves(p, q, ctx: KappaContext) -> PlaneWavePair:
    """``p e^{omega(q)/2k}`` and ``q e^{-omega(p)/2k}`` with on-shell energies."""
    return plane_wave_pair(FourMomentum.on_shell_from(p, ctx), FourMomentum.on_shell_from(q, ctx), ctx)


@dataclass(frozen=True)
class ModeMeasure:
    """Invariant mode weight ``Omega = 2 kappa sinh(omega / kappa)``."""

    omega_big: float


def mode_measure(k, ctx: KappaContext) -> ModeMeasure:
    return ModeMeasure(_big_omega(omega_kappa(k, ctx), ctx))


def _big_omega(energy: float, ctx: KappaContext) -> float:
    return 2.0 * ctx.kappa * math.sinh(energy / ctx.kappa)


# -- operator symbols ----------------------------------------------------------

@dataclass(frozen=True)
class OperatorSymbol:
    name: str
    eigenvalue: Callable[[PlaneWavePair, KappaContext], complex]


def _dalambert(e: float, ctx: KappaContext) -> complex:
    d = 2.0 * ctx.kappa * math.sinh(e / (2.0 * ctx.kappa))
    return complex(-d * d)


SYMBOLS: dict[str, OperatorSymbol] = {
    s.name: s
    for s in (
        OperatorSymbol("laplace_x", lambda w, ctx: complex(-float(w.star_spatial_x @ w.star_spatial_x))),
        OperatorSymbol("laplace_y", lambda w, ctx: complex(-float(w.star_spatial_y @ w.star_spatial_y))),
        OperatorSymbol("shift_y", lambda w, ctx: complex(math.exp(-w.q.e / ctx.kappa))),
        OperatorSymbol("shift_x", lambda w, ctx: complex(math.exp(w.p.e / ctx.kappa))),
        OperatorSymbol("dalambert_x", lambda w, ctx: _dalambert(w.p.e, ctx)),
        OperatorSymbol("dalambert_y", lambda w, ctx: _dalambert(w.q.e, ctx)),
    )
}


def symbol(name: str, pair: PlaneWavePair, ctx: KappaContext) -> complex:
    try:
        return SYMBOLS[name].eigenvalue(pair, ctx)
    except KeyError:
        raise ValueError(f"unknown operator symbol {name!r}; expected one of {sorted(SYMBOLS)}") from None


def bilocal_bracket_eigenvalues(pair: PlaneWavePair, ctx: KappaContext, massterm: bool = True) -> tuple[complex, complex]:
    """Eigenvalues of the two brackets of the bilocal field equation.

    ``bx = laplace_x * shift_y - dalambert_x`` and
    ``by = laplace_y * shift_x - dalambert_y``; with ``massterm`` each also
    subtracts ``m0^2``.
    """
    bx = symbol("laplace_x", pair, ctx) * symbol("shift_y", pair, ctx) - symbol("dalambert_x", pair, ctx)
    by = symbol("laplace_y", pair, ctx) * symbol("shift_x", pair, ctx) - symbol("dalambert_y", pair, ctx)
    if massterm:
        m2 = ctx.m0 * ctx.m0
        bx, by = bx - m2, by - m2
    return bx, by


# -- circle / star equivalence ---------------------------------------------------

#: Shell signs of the star side; they are those of the ``a a`` binary product.
STAR_SHELLS = ShellAssignment(sign_p=+1, sign_q=-1)


@dataclass(frozen=True)
class CircStarReport:
    """Label-level comparison of the two bilocal kernels at phase momenta ``(u, v)``.

    ``jacobian_offdiagonal`` is the part of the label-map Jacobian not carried
    by the relativistic factor; it is reported, not compared.
    """

    circ_word: Monomial
    star_word: Monomial
    circ_phase: tuple[np.ndarray, np.ndarray]
    star_phase: tuple[np.ndarray, np.ndarray]
    circ_coefficient: float
    star_coefficient: float
    jacobian_offdiagonal: float
    max_deviation: float

    @property
    def agrees(self) -> bool:
        return self.max_deviation <= EQUIVALENCE_TOL

    def to_dict(self) -> dict:
        return {
            "circ_word": self.circ_word.to_dict(),
            "star_word": self.star_word.to_dict(),
            "circ_phase": [v.tolist() for v in self.circ_phase],
            "star_phase": [v.tolist() for v in self.star_phase],
            "circ_coefficient": self.circ_coefficient,
            "star_coefficient": self.star_coefficient,
            "jacobian_offdiagonal": self.jacobian_offdiagonal,
            "max_deviation": self.max_deviation,
        }


def _rel_dev(a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def circ_star_equivalence(p, q, ctx: KappaContext) -> CircStarReport:
    """Compare the relativistic circle kernel with the star kernel on modified shells.

    ``p`` and ``q`` are the phase (integration) momenta of the circle side,
    on the standard shell.  The circle side multiplies the oscillators first:
    the word ``a(u) o_rel a(v)`` gives oscillator labels and a coefficient.
    The star side takes those oscillator labels, solves the coupled shells
    ``p0 = omega(p e^{q0/2k})``, ``q0 = omega(q e^{-p0/2k})`` for them, and
    forms the star plane wave.  Agreement means identical oscillator labels
    and energies, identical phase momenta, and a coefficient equal to the
    mode-measure ratio times the diagonal Jacobian of the label map.
    """
    u = as_vector(p)
    v = as_vector(q)
    u0 = omega_kappa(u, ctx)
    v0 = omega_kappa(v, ctx)
    circ = circ_relativistic(OscFactor(ANNIHILATION, u, u0), OscFactor(ANNIHILATION, v, v0), ctx)

    lab_p, lab_q = circ.factors[0].k, circ.factors[1].k
    sol = solve_coupled(lab_p, lab_q, STAR_SHELLS, ctx)
    pair = plane_wave_pair(FourMomentum(sol.p0, lab_p), FourMomentum(sol.q0, lab_q), ctx)
    three_half = 1.5 / ctx.kappa
    star_coeff = math.exp(three_half * (sol.p0 - sol.q0))
    label_scale = (math.exp(-v0 / (2.0 * ctx.kappa)), math.exp(u0 / (2.0 * ctx.kappa)))
    for circ_e, star_e, f in ((u0, sol.p0, label_scale[0]), (v0, sol.q0, label_scale[1])):
        if circ_e > 0.0 and star_e > 0.0:
            star_coeff *= _big_omega(circ_e, ctx) / _big_omega(star_e, ctx)
        else:
            # massless zero mode: both measures vanish and the ratio tends to |k| / |label|
            star_coeff /= f
    star = Monomial(star_coeff, (OscFactor(ANNIHILATION, lab_p, sol.p0), OscFactor(ANNIHILATION, lab_q, sol.q0)))

    # off-diagonal part of det d(p, q)/d(u, v) for p = u e^{-v0/2k}, q = v e^{u0/2k}
    cmap = flip_frame_map("aa", ctx)
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    offdiag = float(cmap.forward_jacobian(np.array(nu), np.array(nv), 3)) / math.exp(three_half * (u0 - v0))

    dev = max(
        max_label_deviation(circ, star),
        _rel_dev(pair.star_spatial_x, u),
        _rel_dev(pair.star_spatial_y, v),
        _rel_dev(circ.coeff.real, star_coeff),
    )
    return CircStarReport(circ, star, (u, v), (pair.star_spatial_x, pair.star_spatial_y),
                          float(circ.coeff.real), star_coeff, offdiag, dev)


def star_nfold(momenta, ctx: KappaContext) -> Monomial:
    """Oscillator labels of the n-fold star product of positive-frequency fields.

    At label level it is the n-fold circle product of the mode oscillators;
    only that identity is implemented.
    """
    return circ_nfold([OscFactor.on_shell(CREATION, k, ctx) for k in momenta], ctx)


# -- constant-theta contrast -----------------------------------------------------

def check_theta(theta) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if t.shape == (16,):
        t = t.reshape(4, 4)
    if t.shape != (4, 4):
        raise ValueError(f"theta must be a 4x4 matrix, got shape {t.shape}")
    if not np.all(np.abs(t + t.T) <= ANTISYMMETRY_TOL * max(1.0, float(np.max(np.abs(t))))):
        raise ValueError("theta not antisymmetric")
    return t


def moyal_star_planewaves(p: FourMomentum, q: FourMomentum, theta, ctx: KappaContext) -> complex:
    """Kernel phase ``exp(i p_mu theta^{mu nu} q_nu / kappa^2)`` on components ``(e, k)``."""
    t = check_theta(theta)
    return cmath.exp(1j * float(p.as_array() @ t @ q.as_array()) / ctx.kappa**2)


def classical_on_shell(k, ctx: KappaContext) -> FourMomentum:
    k = as_vector(k)
    return FourMomentum(math.sqrt(float(k @ k) + ctx.m0 * ctx.m0), k)


def moyal_bracket_eigenvalues(p: FourMomentum, q: FourMomentum, theta, ctx: KappaContext) -> tuple[complex, complex]:
    """Symbols of ``(box_x - m^2)`` and ``(box_y - m^2)`` on a Moyal bilocal mode.

    The kernel phase is a constant per mode, so each bracket sees only its own
    momentum: ``-|k|^2 + e^2 - m0^2``.
    """
    check_theta(theta)
    m2 = ctx.m0 * ctx.m0
    return (complex(-float(p.k @ p.k) + p.e * p.e - m2), complex(-float(q.k @ q.k) + q.e * q.e - m2))


__all__ = [
    "CircStarReport",
    "ModeMeasure",
    "OperatorSymbol",
    "PlaneWavePair",
    "STAR_SHELLS",
    "SYMBOLS",
    "bilocal_bracket_eigenvalues",
    "check_theta",
    "circ_star_equivalence",
    "classical_on_shell",
    "mode_measure",
    "moyal_bracket_eigenvalues",
    "moyal_star_planewaves",
    "plane_wave_pair",
    "star_nfold",
    "star_planewaves",
    "symbol",
]

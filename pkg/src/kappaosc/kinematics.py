"""Deformed dispersion relation and non-Abelian four-momentum composition.

Units are natural (hbar = c = 1); ``kappa`` carries energy units and every
momentum is expressed in the same unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

#: kappa at or above this value is treated as the undeformed regime in tests.
CLASSICAL_KAPPA = 1e9



@dataclass(frozen=True)
class KappaContext:
    """Deformation scale, rest mass and numeric tolerances.

    Threaded through every computation in the package.
    """

    kappa: float
    m0: float = 0.0
    tol_shell: float = 1e-12
    tol_solver: float = 1e-12
    max_iter: int = 200

    def __post_init__(self) -> None:
        problems = []
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            problems.append(f"kappa must be positive and finite, got {self.kappa!r}")
        if not (math.isfinite(self.m0) and self.m0 >= 0):
            problems.append(f"m0 must be nonnegative and finite, got {self.m0!r}")
        if not self.tol_shell > 0:
            problems.append(f"tol_shell must be positive, got {self.tol_shell!r}")
        if not self.tol_solver > 0:
            problems.append(f"tol_solver must be positive, got {self.tol_solver!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            problems.append(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def classical(self) -> bool:
        return self.kappa >= CLASSICAL_KAPPA

    def replace(self, **changes) -> "KappaContext":
        fields = dict(
            kappa=self.kappa,
            m0=self.m0,
            tol_shell=self.tol_shell,
            tol_solver=self.tol_solver,
            max_iter=self.max_iter,
        )
        fields.update(changes)
        return KappaContext(**fields)


def as_vector(k) -> np.ndarray:
    """Return ``k`` as a finite float 3-vector."""
    v = np.asarray(k, dtype=float).reshape(-1)
    if v.shape == (1,):
        v = np.array([v[0], 0.0, 0.0])
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite momentum component in {v}")
    return v


@dataclass(frozen=True, eq=False)
class FourMomentum:
    """Energy ``e`` and spatial momentum ``k``.

    A plain value: on-shell status is computed on demand, never stored,
    because labels are rescaled constantly downstream.
    """

    e: float
    k: np.ndarray

    def __post_init__(self) -> None:
        if not math.isfinite(self.e):
            raise ValueError(f"non-finite energy {self.e!r}")
        v = as_vector(self.k)
        v.setflags(write=False)
        object.__setattr__(self, "e", float(self.e))
        object.__setattr__(self, "k", v)

    @classmethod
    def zero(cls) -> "FourMomentum":
        return cls(0.0, np.zeros(3))

    @classmethod
    def on_shell_from(cls, k, ctx: KappaContext) -> "FourMomentum":
        k = as_vector(k)
        return cls(omega_kappa(k, ctx), k)

    def on_shell(self, ctx: KappaContext) -> bool:
        return shell_residual(self, ctx) <= ctx.tol_shell

    def __neg__(self) -> "FourMomentum":
        return FourMomentum(-self.e, -self.k)

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.e], self.k))

    def __repr__(self) -> str:
        return f"FourMomentum(e={self.e!r}, k={self.k.tolist()!r})"


def arcsinh(x: float) -> float:
    """Inverse hyperbolic sine, odd and accurate near zero."""
    return math.asinh(x)


def omega_kappa(k, ctx: KappaContext) -> float:
    """Positive-energy solution of the deformed mass shell, ``2 kappa arcsinh(|E|/2 kappa)``."""
    k = as_vector(k)
    s = math.hypot(*k, ctx.m0)
    return 2.0 * ctx.kappa * arcsinh(s / (2.0 * ctx.kappa))


def omega_kappa_derivative(kmag: float, ctx: KappaContext) -> float:
    """d omega / d|k| at momentum magnitude ``kmag``."""
    s2 = kmag * kmag + ctx.m0 * ctx.m0
    if s2 == 0.0:
        return 0.0
    return kmag / (math.sqrt(s2) * math.sqrt(1.0 + s2 / (4.0 * ctx.kappa**2)))


def shell_residual(p: FourMomentum, ctx: KappaContext) -> float:
    """Absolute violation of ``k.k + m0^2 = (2 kappa sinh(e / 2 kappa))^2``."""
    d = 2.0 * ctx.kappa * math.sinh(p.e / (2.0 * ctx.kappa))
    return abs(float(p.k @ p.k) + ctx.m0 * ctx.m0 - d * d)


def compose(p: FourMomentum, q: FourMomentum, ctx: KappaContext) -> FourMomentum:
    """Non-Abelian sum: ``p.k e^{q.e/2k} + q.k e^{-p.e/2k}``; energies add.

    Inputs may be off-shell; the result generally is.
    """
    two_k = 2.0 * ctx.kappa
    k = p.k * math.exp(q.e / two_k) + q.k * math.exp(-p.e / two_k)
    return FourMomentum(p.e + q.e, k)


def compose_flipped(p: FourMomentum, q: FourMomentum, ctx: KappaContext) -> FourMomentum:
    """Total momentum of the exchanged pair, identical to ``compose(q, p)``."""
    return compose(q, p, ctx)


def compose_n(momenta: Sequence[FourMomentum], ctx: KappaContext) -> FourMomentum:
    """Left fold of :func:`compose`; bracketing is irrelevant by coassociativity."""
    if len(momenta) == 0:
        raise ValueError("empty composition")
    return reduce(lambda a, b: compose(a, b, ctx), momenta)

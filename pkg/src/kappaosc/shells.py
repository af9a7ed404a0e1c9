"""Coupled deformed mass shells for the two partners of a binary product.

Each partner's energy depends on both three-momenta::

    p0 = omega(kp * exp(sign_p * q0 / 2 kappa))
    q0 = omega(kq * exp(sign_q * p0 / 2 kappa))

Solved by damped fixed-point iteration with a finite-difference Newton
fallback.  Only the principal, positive-energy branch is considered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import KappaContext, arcsinh, as_vector

FD_STEP = 1e-7
DAMPING = 0.5


class ShellSolverError(RuntimeError):
    """Raised when the coupled shells fail to converge.

    ``last`` holds the final iterate ``(p0, q0)`` and ``residual`` its residual.
    """

    def __init__(self, message: str, last: tuple[float, float], residual: float, iterations: int):
        last = (float(last[0]), float(last[1]))
        super().__init__(f"{message}: last iterate {last}, residual {residual:.3e} after {iterations} iterations")
        self.last = last
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class ShellAssignment:
    """Sign pair selecting which coupled dispersion relation each partner obeys."""

    sign_p: int
    sign_q: int

    def __post_init__(self) -> None:
        if self.sign_p not in (1, -1) or self.sign_q not in (1, -1):
            raise ValueError(f"shell signs must be +1 or -1, got ({self.sign_p}, {self.sign_q})")

    def __str__(self) -> str:
        return f"({'+' if self.sign_p > 0 else '-'},{'+' if self.sign_q > 0 else '-'})"


@dataclass(frozen=True)
class ShellSolution:
    p0: float
    q0: float
    iterations: int
    residual: float


def _omega_mag(kmag: float, ctx: KappaContext) -> float:
    return 2.0 * ctx.kappa * arcsinh(math.hypot(kmag, ctx.m0) / (2.0 * ctx.kappa))


class _PairMap:
    """The right-hand sides of the coupled system, on momentum magnitudes."""

    def __init__(self, kp_mag, kq_mag, sign_p, sign_q, scale, ctx):
        self.kp = kp_mag
        self.kq = kq_mag
        self.ap = sign_p * scale / ctx.kappa
        self.aq = sign_q * scale / ctx.kappa
        self.ctx = ctx

    def f(self, q0: float) -> float:
        return _omega_mag(self.kp * math.exp(self.ap * q0), self.ctx)

    def g(self, p0: float) -> float:
        return _omega_mag(self.kq * math.exp(self.aq * p0), self.ctx)

    def raw(self, p0: float, q0: float) -> np.ndarray:
        return np.array([p0 - self.f(q0), q0 - self.g(p0)])

    def residual(self, p0: float, q0: float) -> float:
        r = self.raw(p0, q0)
        return float(max(abs(r[0]) / max(1.0, abs(p0)), abs(r[1]) / max(1.0, abs(q0))))


def solve_pair(kp, kq, sign_p: int, sign_q: int, ctx: KappaContext, scale: float = 0.5) -> ShellSolution:
    """Solve the coupled shells with exponents ``sign * scale * energy / kappa``.

    ``scale=0.5`` is the binary-product system; ``scale=1`` arises for the
    full-exponent smearing convention.  The residual is the larger of the two
    equation defects, each relative to ``max(1, energy)``.
    """
    kp_mag = float(np.linalg.norm(as_vector(kp)))
    kq_mag = float(np.linalg.norm(as_vector(kq)))
    m = _PairMap(kp_mag, kq_mag, sign_p, sign_q, scale, ctx)

    p0 = _omega_mag(kp_mag, ctx)
    q0 = _omega_mag(kq_mag, ctx)
    res = m.residual(p0, q0)
    it = 0
    fixed_budget = ctx.max_iter // 2
    step = 1.0
    while res > ctx.tol_solver and it < fixed_budget:
        p_new = m.f(q0)
        q_new = m.g(p_new)
        cand_p = p0 + step * (p_new - p0)
        cand_q = q0 + step * (q_new - q0)
        cand_res = m.residual(cand_p, cand_q)
        if cand_res > res and step > DAMPING**8:
            step *= DAMPING
        p0, q0, res = cand_p, cand_q, cand_res
        it += 1

    while res > ctx.tol_solver and it < ctx.max_iter:
        r = m.raw(p0, q0)
        jac = np.empty((2, 2))
        hp = FD_STEP * max(1.0, abs(p0))
        hq = FD_STEP * max(1.0, abs(q0))
        jac[:, 0] = (m.raw(p0 + hp, q0) - r) / hp
        jac[:, 1] = (m.raw(p0, q0 + hq) - r) / hq
        try:
            dp, dq = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise ShellSolverError("singular Jacobian", (p0, q0), res, it) from exc
        p0, q0 = p0 + dp, q0 + dq
        res = m.residual(p0, q0)
        it += 1

    if not res <= ctx.tol_solver:
        raise ShellSolverError("no convergence", (p0, q0), res, it)
    # the residual is absolute below unit energy; one sweep makes tiny energies relatively accurate
    p_pol = m.f(q0)
    q_pol = m.g(p_pol)
    res_pol = m.residual(p_pol, q_pol)
    if res_pol <= ctx.tol_solver:
        p0, q0, res = p_pol, q_pol, res_pol
    return ShellSolution(p0=float(p0), q0=float(q0), iterations=it, residual=float(res))


def solve_coupled(kp, kq, asg: ShellAssignment, ctx: KappaContext) -> ShellSolution:
    """Energies ``(p0, q0)`` with ``p0 = omega(kp e^{sign_p q0/2k})``, ``q0 = omega(kq e^{sign_q p0/2k})``."""
    return solve_pair(kp, kq, asg.sign_p, asg.sign_q, ctx, scale=0.5)


def assignment_for_kinds(kind_left: int, kind_right: int) -> ShellAssignment:
    """Shell signs of the binary product ``a^(eps) a^(eta)``: ``(eta, -eps)``.

    Kinds follow ``a = a^(+1)`` (annihilation) and ``a^dagger = a^(-1)`` (creation).
    """
    if kind_left not in (1, -1) or kind_right not in (1, -1):
        raise ValueError(f"oscillator kinds must be +1 or -1, got ({kind_left}, {kind_right})")
    return ShellAssignment(sign_p=kind_right, sign_q=-kind_left)


def assign_binary_shells(kind_left: int, kind_right: int, kp, kq, ctx: KappaContext) -> ShellSolution:
    return solve_coupled(kp, kq, assignment_for_kinds(kind_left, kind_right), ctx)


def shell_defect(kp, kq, p0: float, q0: float, asg: ShellAssignment, ctx: KappaContext) -> float:
    """Residual of a candidate ``(p0, q0)`` in the same norm the solver uses."""
    m = _PairMap(float(np.linalg.norm(as_vector(kp))), float(np.linalg.norm(as_vector(kq))),
                 asg.sign_p, asg.sign_q, 0.5, ctx)
    return m.residual(p0, q0)

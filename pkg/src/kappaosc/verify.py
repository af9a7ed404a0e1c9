"""Every invariant of every module as a named, seeded, self-contained check.

Each check draws from its own SplitMix64 stream (seed mixed with the check
name), so results do not depend on which other checks run or in what order.
Checks tied to a documented fixture use the fixture's own kappa; the rest use
the configured one.
"""

from __future__ import annotations

import contextlib
import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import algebra as alg
from . import clusters as cl
from . import flip as fl
from . import starprod as sp
from .kinematics import (
    FourMomentum,
    KappaContext,
    compose,
    omega_kappa,
    shell_residual,
)
from .rng import SplitMix64
from .shells import ShellAssignment, shell_defect, solve_coupled
from .tables import dispersion_rows

SCHEMA_VERSION = 1
CLASSICAL = 1e9


@dataclass(frozen=True)
class VerifyConfig:
    ctx: KappaContext = field(default_factory=lambda: KappaContext(kappa=1.0, m0=1.0))
    seed: int = 42
    convention: str = "full"
    massterm: bool = True
    grid_points: int = 8
    faults: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.convention not in cl.CONVENTIONS:
            raise ValueError(f"exponent convention must be one of {cl.CONVENTIONS}, got {self.convention!r}")
        unknown = set(self.faults) - set(FAULTS)
        if unknown:
            raise ValueError(f"unknown fault hook(s) {sorted(unknown)}")

    @property
    def region(self) -> float:
        """Half-width of momentum components for solver-based draws.

        The ``(+,+)`` coupled shells have no solution once ``|p||q|`` reaches
        about ``kappa^2``; components within ``0.5 min(1, kappa)`` stay well inside.
        """
        return 0.5 * min(1.0, self.ctx.kappa)


@dataclass(frozen=True)
class InvariantResult:
    name: str
    module: str
    anchor: str
    passed: bool
    residual: float | None
    tolerance: float | None
    detail: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "module": self.module,
            "anchor": self.anchor,
            "passed": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class Outcome:
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


def _le(residual: float, tol: float, detail: str = "") -> Outcome:
    residual = float(residual)
    return Outcome(residual <= tol, residual, tol, detail)


def _gt(value: float, bound: float, detail: str = "") -> Outcome:
    value = float(value)
    return Outcome(value > bound, value, bound, detail)


def _all(*outcomes: Outcome) -> Outcome:
    """Combine sub-checks; the reported residual is that of the first failure (or the first)."""
    failing = [o for o in outcomes if not o.passed]
    head = failing[0] if failing else outcomes[0]
    return Outcome(not failing, head.residual, head.tolerance, "; ".join(o.detail for o in outcomes if o.detail))


Check = Callable[[VerifyConfig, SplitMix64], Outcome]


@dataclass(frozen=True)
class Invariant:
    name: str
    module: str
    anchor: str
    check: Check


REGISTRY: list[Invariant] = []


def invariant(name: str, module: str, anchor: str):
    def register(fn: Check) -> Check:
        if any(inv.name == name for inv in REGISTRY):
            raise RuntimeError(f"duplicate invariant {name!r}")
        REGISTRY.append(Invariant(name, module, anchor, fn))
        return fn
    return register


def _rel(a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


# -- kinematics ------------------------------------------------------------------

@invariant("on-shell closure", "kinematics", "deformed mass shell")
def _on_shell_closure(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for _ in range(1000):
        ctx = cfg.ctx.replace(m0=rng.uniform(0.0, 10.0))
        k = rng.vector(-10.0, 10.0)
        k *= min(1.0, 10.0 / max(1e-300, float(np.linalg.norm(k))))
        worst = max(worst, shell_residual(FourMomentum.on_shell_from(k, ctx), ctx))
    return _le(worst, 1e-12, "1000 draws, |k| <= 10, m0 <= 10")


@invariant("classical dispersion limit", "kinematics", "undeformed limit of the dispersion relation")
def _classical_dispersion(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for _ in range(1000):
        ctx = KappaContext(CLASSICAL, rng.uniform(0.0, 10.0))
        k = rng.vector(-10.0, 10.0)
        k *= min(1.0, 10.0 / max(1e-300, float(np.linalg.norm(k))))
        e = math.sqrt(float(k @ k) + ctx.m0**2)
        if e > 0:
            worst = max(worst, abs(omega_kappa(k, ctx) - e) / e)
    return _le(worst, 1e-9, "kappa = 1e9")


@invariant("composition associativity", "kinematics", "coassociative momentum coproduct")
def _associativity(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for _ in range(1000):
        p, q, r = (FourMomentum.on_shell_from(rng.vector(-1.0, 1.0), cfg.ctx) for _ in range(3))
        a = compose(compose(p, q, cfg.ctx), r, cfg.ctx)
        b = compose(p, compose(q, r, cfg.ctx), cfg.ctx)
        worst = max(worst, _rel(a.as_array(), b.as_array()))
    return _le(worst, 1e-12, "1000 on-shell triples")


#: Documented non-commutativity / contrast fixture.
WITNESS_CTX = KappaContext(kappa=1.0, m0=1.0)
WITNESS_P = (1.0, 0.0, 0.0)
WITNESS_Q = (0.0, 2.0, 0.0)


@invariant("composition non-commutativity", "kinematics", "non-symmetric momentum coproduct")
def _noncommutativity(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    p = FourMomentum.on_shell_from(WITNESS_P, WITNESS_CTX)
    q = FourMomentum.on_shell_from(WITNESS_Q, WITNESS_CTX)
    pq, qp = compose(p, q, WITNESS_CTX), compose(q, p, WITNESS_CTX)
    diff = float(np.linalg.norm(pq.k - qp.k))
    return _all(_gt(diff, 0.1, "kappa=1 fixture |pq - qp|"),
                _le(abs(pq.e - qp.e), 0.0, "energies equal exactly"))


@invariant("dispersion monotonicity", "kinematics", "deformed dispersion relation")
def _monotone(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    ks = np.linspace(0.0, 10.0, 2001)
    w = np.array([omega_kappa((k, 0.0, 0.0), cfg.ctx) for k in ks])
    steps = np.diff(w)
    return _gt(float(np.min(steps)), 0.0, "minimum step of omega over |k| in [0, 10]")


# -- shell solver ----------------------------------------------------------------

_ASSIGNMENTS = tuple(ShellAssignment(a, b) for a in (1, -1) for b in (1, -1))


@invariant("back-substitution", "shell-solver", "coupled binary mass shells")
def _back_substitution(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst, worst_it = 0.0, 0
    for _ in range(250):
        kp, kq = rng.vector(-cfg.region, cfg.region), rng.vector(-cfg.region, cfg.region)
        for asg in _ASSIGNMENTS:
            sol = solve_coupled(kp, kq, asg, cfg.ctx)
            worst = max(worst, shell_defect(kp, kq, sol.p0, sol.q0, asg, cfg.ctx))
            worst_it = max(worst_it, sol.iterations)
    return _all(_le(worst, cfg.ctx.tol_solver, "4 assignments x 250 draws"),
                _le(worst_it, cfg.ctx.max_iter, f"iterations <= {cfg.ctx.max_iter}"))


@invariant("transform consistency", "shell-solver", "pair transform of the a a product")
def _transform_consistency(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    two_k = 2.0 * cfg.ctx.kappa
    for _ in range(250):
        p = FourMomentum.on_shell_from(rng.vector(-1.0, 1.0), cfg.ctx)
        q = FourMomentum.on_shell_from(rng.vector(-1.0, 1.0), cfg.ctx)
        sol = solve_coupled(p.k * math.exp(-q.e / two_k), q.k * math.exp(p.e / two_k), ShellAssignment(1, -1), cfg.ctx)
        worst = max(worst, _rel((sol.p0, sol.q0), (p.e, q.e)))
    return _le(worst, 1e-11, "re-solved energies equal the on-shell ones")


@invariant("solver classical rate", "shell-solver", "undeformed limit of the coupled shells")
def _solver_rate(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    def err(kappa: float) -> float:
        ctx = KappaContext(kappa, 1.0)
        kp, kq = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
        sol = solve_coupled(kp, kq, ShellAssignment(1, -1), ctx)
        return max(abs(sol.p0 - math.sqrt(2.0)), abs(sol.q0 - math.sqrt(2.0)))

    ratio = err(1e3) / err(1e6)
    return _le(abs(math.log(ratio / 1e3)), math.log(2.0), f"error ratio kappa=1e3 vs 1e6: {ratio:.4g}")


@invariant("solver determinism", "shell-solver", "coupled binary mass shells")
def _solver_determinism(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    kp, kq = rng.vector(-cfg.region, cfg.region), rng.vector(-cfg.region, cfg.region)
    a = solve_coupled(kp, kq, ShellAssignment(1, -1), cfg.ctx)
    b = solve_coupled(kp.copy(), kq.copy(), ShellAssignment(1, -1), cfg.ctx)
    same = (a.p0, a.q0, a.iterations) == (b.p0, b.q0, b.iterations)
    return Outcome(same, 0.0 if same else 1.0, 0.0, "bitwise identical repeat")


# -- oscillator algebra ------------------------------------------------------------

def _creations(rng: SplitMix64, n: int, ctx: KappaContext, half: float = 1.0) -> list[alg.OscFactor]:
    return [alg.creation(rng.vector(-half, half), ctx) for _ in range(n)]


@invariant("circle associativity", "osc-algebra", "associative n-fold circle product")
def _circ_assoc(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    ctx = cfg.ctx
    worst = 0.0
    for _ in range(200):
        x, y, z = _creations(rng, 3, ctx)
        n3 = alg.circ_nfold([x, y, z], ctx)
        left = alg.circ_monomials(alg.circ_binary(x, y, ctx), alg.Monomial(1.0, (z,)), ctx)
        right = alg.circ_monomials(alg.Monomial(1.0, (x,)), alg.circ_binary(y, z, ctx), ctx)
        worst = max(worst, alg.max_label_deviation(n3, left), alg.max_label_deviation(n3, right))
    for n in range(1, 6):
        for _ in range(40):
            fs = _creations(rng, n, ctx)
            folded = alg.Monomial(1.0, (fs[0],))
            for f in fs[1:]:
                folded = alg.circ_monomials(folded, alg.Monomial(1.0, (f,)), ctx)
            worst = max(worst, alg.max_label_deviation(alg.circ_nfold(fs, ctx), folded))
    return _le(worst, 1e-12, "triples both ways; folds for n <= 5")


@invariant("exchange symmetry", "osc-algebra", "circle commutators of like oscillators")
def _exchange(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    nonzero = 0
    for _ in range(500):
        kp, kq = rng.vector(-1.0, 1.0), rng.vector(-1.0, 1.0)
        for kind in (alg.ANNIHILATION, alg.CREATION):
            c = alg.circ_commutator(alg.OscFactor.on_shell(kind, kp, cfg.ctx), alg.OscFactor.on_shell(kind, kq, cfg.ctx), cfg.ctx)
            nonzero += 0 if c.is_zero() else 1
    return _le(nonzero, 0, "non-vanishing commutators among 2 x 500 draws")


@invariant("momentum compensation", "osc-algebra", "two-particle momentum additivity")
def _compensation(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for _ in range(500):
        kp, kq = rng.vector(-1.0, 1.0), rng.vector(-1.0, 1.0)
        state = cl.two_particle_state(kp, kq, cfg.ctx)
        total = cl.state_momentum(state, cfg.ctx)
        expected = np.concatenate(([omega_kappa(kp, cfg.ctx) + omega_kappa(kq, cfg.ctx)], kp + kq))
        worst = max(worst, _rel(total.as_array(), expected))
    return _le(worst, 1e-12, "composed labels of a+(p) o a+(q) vs Abelian sums")


@invariant("neighbour rescaling rule", "osc-algebra", "left/right rescaling rule of the n-fold product")
def _neighbour(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for n in range(1, 7):
        for _ in range(30):
            fs = _creations(rng, n, cfg.ctx)
            worst = max(worst, alg.max_label_deviation(alg.circ_nfold(fs, cfg.ctx),
                                                       alg.circ_nfold_neighbor_rule(fs, cfg.ctx)))
    return _le(worst, 4e-15, "agreement to rounding: exponent sums vs products of exponentials")


@invariant("classical degeneration", "osc-algebra", "undeformed limit of the circle product")
def _degeneration(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    # labels move by (partner energies) / 2 kappa, so keep energies of order one
    ctx = KappaContext(CLASSICAL, 0.5)
    worst = 0.0
    for _ in range(100):
        kp, kq = rng.vector(-0.4, 0.4), rng.vector(-0.4, 0.4)
        for kl, kr in fl.KIND_PATTERNS:
            x, y = alg.OscFactor.on_shell(kl, kp, ctx), alg.OscFactor.on_shell(kr, kq, ctx)
            worst = max(worst, alg.max_label_deviation(alg.circ_binary(x, y, ctx), alg.Monomial(1.0, (x, y))))
        fs = _creations(rng, 3, ctx, 0.4)
        worst = max(worst, alg.max_label_deviation(alg.circ_nfold(fs, ctx), alg.Monomial(1.0, tuple(fs))))
    return _le(worst, 1e-9, "kappa = 1e9, energies below 0.9")


@invariant("sector factorization", "osc-algebra", "three-particle sector rescalings")
def _sectors(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    two_k = 2.0 * cfg.ctx.kappa
    worst = 0.0
    failures = 0
    for _ in range(100):
        r, p, q = _creations(rng, 3, cfg.ctx)
        expected = {"left_plain": 1.0, "left_circ": math.exp(-r.e / two_k), "right_circ": math.exp(r.e / two_k)}
        for side, shift in expected.items():
            sf = alg.sector_factorization(r, p, q, side, cfg.ctx)
            worst = max(worst, _rel(sf.inner_p, p.k * shift), _rel(sf.inner_q, q.k * shift))
            failures += 0 if sf.holds else 1
    return _all(_le(worst, 1e-12, "inner labels"), _le(failures, 0, "relation holds on every side"))


@invariant("mixed non-associativity", "osc-algebra", "plain versus circle multiplication")
def _nonassoc(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    deformed = alg.mixed_nonassociativity_witness(KappaContext(1.0, cfg.ctx.m0))
    classical = alg.mixed_nonassociativity_witness(KappaContext(CLASSICAL, cfg.ctx.m0))
    ok = (not deformed.equal) and classical.equal
    return Outcome(ok, deformed.max_deviation, 0.0,
                   f"kappa=1 equal={deformed.equal}; kappa=1e9 equal={classical.equal}")


# -- flip ------------------------------------------------------------------------------

def _flip_pairs(cfg: VerifyConfig, rng: SplitMix64, draws: int) -> Iterator[tuple[alg.OscFactor, alg.OscFactor]]:
    for kl, kr in fl.KIND_PATTERNS:
        for _ in range(draws):
            kp, kq = rng.vector(-cfg.region, cfg.region), rng.vector(-cfg.region, cfg.region)
            yield fl.factors_on_assignment(kl, kr, kp, kq, cfg.ctx)


@invariant("tau involution", "flip", "deformed flip operator squares to one")
def _involution(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = max(fl.tau_involution_check(x, y, cfg.ctx) for x, y in _flip_pairs(cfg, rng, 250))
    return _le(worst, 1e-10, "4 kind patterns x 250 draws")


@invariant("flip conservation", "flip", "flip invariance of total momentum and energy")
def _conservation(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst_k = worst_e = 0.0
    for x, y in _flip_pairs(cfg, rng, 250):
        dk, de = fl.flip_conservation(x, y, cfg.ctx)
        worst_k, worst_e = max(worst_k, dk), max(worst_e, de)
    return _all(_le(worst_k, 1e-10, "three-momentum"), _le(worst_e, 1e-10, "energy"))


@invariant("on-shell contrast", "flip", "energy change of on-shell exchange")
def _contrast(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    def defect(kappa: float) -> float:
        ctx = WITNESS_CTX.replace(kappa=kappa)
        return fl.onshell_flip_energy_defect(alg.annihilation(WITNESS_P, ctx), alg.annihilation(WITNESS_Q, ctx), ctx)

    # the fixture has |q| = 2, so the 1/kappa regime starts once kappa exceeds 2
    seq = [defect(2.0**j) for j in range(1, 11)]
    decreasing = all(b < a for a, b in zip(seq, seq[1:]))
    return _all(_gt(defect(1.0), 1e-3, "kappa=1 fixture"),
                Outcome(decreasing, seq[-1], seq[0], "decreasing along kappa = 2, 4, ..., 1024"),
                _le(defect(CLASSICAL), 1e-9, "kappa=1e9"))


@invariant("transform round trips", "flip", "pair transforms between circle and flip frames")
def _round_trips(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    mapped = 0.0
    for _ in range(200):
        p = FourMomentum.on_shell_from(rng.vector(-1.0, 1.0), cfg.ctx)
        q = FourMomentum.on_shell_from(rng.vector(-1.0, 1.0), cfg.ctx)
        for variant in fl.VARIANTS:
            a, b = fl.transform_to_flip_frame(p, q, variant, cfg.ctx)
            back_p, back_q = fl.inverse_flip_frame(FourMomentum(p.e, a), FourMomentum(q.e, b), variant, cfg.ctx)
            worst = max(worst, _rel(back_p, p.k), _rel(back_q, q.k))
        # exchanged-term labels of the mixed a a+ relation, as printed
        printed = (p.k * math.exp(q.e / cfg.ctx.kappa), q.k * math.exp(-p.e / cfg.ctx.kappa))
        got = fl.transform_to_flip_frame(p, q, "a_adag_inverse", cfg.ctx)
        mapped = max(mapped, _rel(got[0], printed[0]), _rel(got[1], printed[1]))
    return _all(_le(worst, 1e-12, "forward then inverse"), _le(mapped, 0.0, "mixed-pattern relabelling exact"))


@invariant("circle/flip equivalence", "flip", "circle relations as flip relations")
def _equivalence(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for kinds in fl.KIND_PATTERNS:
        for _ in range(250):
            kp, kq = rng.vector(-cfg.region, cfg.region), rng.vector(-cfg.region, cfg.region)
            worst = max(worst, fl.equivalence_check(kp, kq, cfg.ctx, kinds).max_deviation)
    return _le(worst, 1e-10, "4 kind patterns x 250 draws")


# -- clusters ----------------------------------------------------------------------------

def _fixture_ctx(cfg: VerifyConfig, kappa: float) -> KappaContext:
    return cfg.ctx.replace(kappa=kappa, m0=cl.FIXTURE_M0)


def _metric(cfg: VerifyConfig, kappa: float, n: int) -> float:
    kernel = cl.smear_cluster(cl.GaussianProduct(), cl.fixture_grid(n), _fixture_ctx(cfg, kappa), cfg.convention)
    return cl.factorizability_metric(kernel)


@invariant("order of operations", "clusters", "multiply oscillators, then integrate")
def _order(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    grid = cl.fixture_grid(cfg.grid_points)
    packet = cl.GaussianProduct()
    smeared = cl.smear_cluster(packet, grid, _fixture_ctx(cfg, 1.0), cfg.convention).values
    plain = cl.Amplitude2.from_function(packet, grid).values
    return _gt(float(np.linalg.norm(smeared - plain)), 0.0, "kernel difference norm at kappa=1")


@invariant("metric monotone in kappa", "clusters", "non-factorizable two-particle clusters")
def _metric_trend(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    vals = [_metric(cfg, k, cfg.grid_points) for k in (1.0, 4.0, 16.0)]
    decreasing = vals[0] > vals[1] > vals[2]
    return _all(_gt(vals[0], 1e-6, "kappa=1"),
                Outcome(decreasing, vals[2], vals[0], "strictly decreasing over kappa = 1, 4, 16"),
                _le(_metric(cfg, CLASSICAL, cfg.grid_points), 1e-12, "kappa=1e9"))


@invariant("quadrature convergence", "clusters", "non-factorizable two-particle clusters")
def _quadrature(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for k in (1.0, 4.0, 16.0):
        a, b = _metric(cfg, k, 32), _metric(cfg, k, 64)
        worst = max(worst, abs(a - b) / b)
    return _le(worst, 0.1, "relative metric change 32 -> 64 points")


@invariant("integral preservation", "clusters", "change of variables with Jacobian")
def _integral(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    grid = cl.Grid2.uniform(401, -14.0, 14.0)
    packet = cl.GaussianProduct()
    smeared = grid.integrate(cl.smear_cluster(packet, grid, _fixture_ctx(cfg, 1.0), cfg.convention).values)
    exact = 2.0 * math.pi * packet.sigma**2
    return _le(abs(smeared - exact), 1e-6, "kappa=1, 401 points on [-14, 14]")


# -- star product ---------------------------------------------------------------------------

@invariant("cross-factor cancellation", "starprod", "bilocal field equation cross-terms")
def _cancellation(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for _ in range(100):
        kp = rng.vector(-1.0, 1.0)
        for kq in (np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([0.0, 2.0, 0.0]), rng.vector(-1.0, 1.0)):
            w = sp.star_planewaves(kp, kq, cfg.ctx)
            bx = sp.symbol("laplace_x", w, cfg.ctx) * sp.symbol("shift_y", w, cfg.ctx)
            by = sp.symbol("laplace_y", w, cfg.ctx) * sp.symbol("shift_x", w, cfg.ctx)
            worst = max(worst, abs(bx + float(kp @ kp)), abs(by + float(kq @ kq)))
    return _le(worst, 1e-12, "shifted Laplacians equal -|p|^2 and -|q|^2")


@invariant("massless annihilation", "starprod", "bilocal field equation")
def _massless(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for kappa in (0.5, 1.0, 10.0):
        ctx = cfg.ctx.replace(kappa=kappa, m0=0.0)
        for _ in range(100):
            w = sp.star_planewaves(rng.vector(-1.0, 1.0), rng.vector(-1.0, 1.0), ctx)
            worst = max(worst, *map(abs, sp.bilocal_bracket_eigenvalues(w, ctx, cfg.massterm)))
    return _le(worst, 1e-12, "m0 = 0, kappa in {0.5, 1, 10}")


@invariant("time-shift property", "starprod", "non-local coupling of the bilocal field")
def _shift(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for _ in range(100):
        w = sp.star_planewaves(rng.vector(-1.0, 1.0), rng.vector(-1.0, 1.0), cfg.ctx)
        x0, y0 = rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)
        ratio = w.time_phase(x0 - 1j / cfg.ctx.kappa, y0) / w.time_phase(x0, y0)
        sym = sp.symbol("shift_x", w, cfg.ctx)
        worst = max(worst, abs(ratio - sym) / abs(sym))
    return _le(worst, 1e-12, "shift symbol vs displaced time phase")


@invariant("Moyal contrast", "starprod", "constant-theta star product")
def _moyal(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    theta = np.zeros((4, 4))
    theta[0, 1], theta[1, 0] = 1.0, -1.0
    ctx1 = cfg.ctx.replace(kappa=1.0)
    phase = sp.moyal_star_planewaves(FourMomentum(1.0, (0.0, 0.0, 0.0)), FourMomentum(0.0, (1.0, 0.0, 0.0)), theta, ctx1)
    closed = complex(math.cos(1.0), math.sin(1.0))

    # the deformed Laplacian alone depends on the partner momentum; the Moyal one does not
    kp = np.array([0.4, -0.3, 0.2])
    w1 = sp.star_planewaves(kp, (0.0, 0.0, 0.0), cfg.ctx)
    w2 = sp.star_planewaves(kp, (0.0, 2.0, 0.0), cfg.ctx)
    cross = abs(sp.symbol("laplace_x", w1, cfg.ctx) - sp.symbol("laplace_x", w2, cfg.ctx))

    gen = rng.vector(-1.0, 1.0, 16).reshape(4, 4)
    gen = gen - gen.T
    moyal_worst = 0.0
    generic_phase = 0.0
    for _ in range(100):
        p = sp.classical_on_shell(rng.vector(-1.0, 1.0), cfg.ctx)
        q = sp.classical_on_shell(rng.vector(-1.0, 1.0), cfg.ctx)
        moyal_worst = max(moyal_worst, *map(abs, sp.moyal_bracket_eigenvalues(p, q, gen, cfg.ctx)))
        generic_phase = max(generic_phase, abs(sp.moyal_star_planewaves(p, q, gen, cfg.ctx) - 1.0))
    return _all(_le(abs(phase - closed), 1e-14, "closed-form phase e^{i}"),
                _gt(cross, 0.0, "deformed Laplacian carries a cross-term"),
                _le(moyal_worst, 1e-12, "Moyal brackets vanish on shell"),
                _gt(generic_phase, 0.0, "generic Moyal kernel phase differs from 1"))


@invariant("circle/star equivalence", "starprod", "circle and star products of free fields")
def _circ_star(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    worst = 0.0
    for _ in range(100):
        r = sp.circ_star_equivalence(rng.vector(-1.0, 1.0, 1), rng.vector(-1.0, 1.0, 1), cfg.ctx)
        worst = max(worst, r.max_deviation)
    return _le(worst, sp.EQUIVALENCE_TOL, "100 one-dimensional pairs")


# -- cli -----------------------------------------------------------------------------------------

@invariant("report determinism", "cli", "seeded reproducible reports")
def _determinism(cfg: VerifyConfig, rng: SplitMix64) -> Outcome:
    same = dispersion_rows(cfg.ctx) == dispersion_rows(cfg.ctx)
    a, b = SplitMix64(cfg.seed), SplitMix64(cfg.seed)
    same = same and [a.next_u64() for _ in range(8)] == [b.next_u64() for _ in range(8)]
    return Outcome(same, 0.0 if same else 1.0, 0.0, "dispersion table and draw stream repeat exactly")


# -- running ------------------------------------------------------------------------------------

@contextlib.contextmanager
def _corrupt_flip_table():
    saved = dict(fl.FLIP_SIGNS)
    key = (alg.ANNIHILATION, alg.ANNIHILATION)
    fl.FLIP_SIGNS[key] = tuple(-s for s in saved[key])
    try:
        yield
    finally:
        fl.FLIP_SIGNS.clear()
        fl.FLIP_SIGNS.update(saved)


FAULTS = {"flip-table": _corrupt_flip_table}


@dataclass(frozen=True)
class VerifyReport:
    config: VerifyConfig
    results: tuple[InvariantResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[InvariantResult]:
        return [r for r in self.results if not r.passed]

    def to_dict(self) -> dict:
        c = self.config
        return {
            "schema": SCHEMA_VERSION,
            "command": "verify",
            "config": {
                "kappa": c.ctx.kappa,
                "m0": c.ctx.m0,
                "seed": c.seed,
                "exponent_convention": c.convention,
                "massterm": c.massterm,
                "grid_points": c.grid_points,
            },
            "passed": self.passed,
            "invariants": [r.to_dict() for r in self.results],
        }


def _stream(seed: int, name: str) -> SplitMix64:
    return SplitMix64((int(seed) * 0x100000001B3) ^ zlib.crc32(name.encode("utf-8")))


def run_invariant(inv: Invariant, cfg: VerifyConfig) -> InvariantResult:
    try:
        out = inv.check(cfg, _stream(cfg.seed, inv.name))
    except Exception as exc:  # a raising check is a failing check, with its diagnostic
        return InvariantResult(inv.name, inv.module, inv.anchor, False, None, None,
                               f"{inv.name} failed: {type(exc).__name__}: {exc}")
    residual = out.residual if math.isfinite(out.residual) else None
    detail = out.detail if out.passed else f"{inv.name} failed: {out.detail}"
    return InvariantResult(inv.name, inv.module, inv.anchor, bool(out.passed), residual, out.tolerance, detail)


def run_verify(cfg: VerifyConfig | None = None, only: str | None = None) -> VerifyReport:
    cfg = cfg or VerifyConfig()
    selected = [inv for inv in REGISTRY if only is None or inv.module == only or inv.name == only]
    with contextlib.ExitStack() as stack:
        for fault in cfg.faults:
            stack.enter_context(FAULTS[fault]())
        results = tuple(run_invariant(inv, cfg) for inv in selected)
    return VerifyReport(cfg, results)

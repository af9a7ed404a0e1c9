"""Acceptance criteria 1-10.  Each test prints one PASS/FAIL line; tolerances are pinned constants."""

import cmath
import json
import math
import subprocess
import sys
from functools import reduce

import numpy as np
import pytest

from kappaosc import FourMomentum, KappaContext, compose, compose_flipped, omega_kappa, shell_residual
from kappaosc import algebra as alg
from kappaosc import clusters as cl
from kappaosc import flip as fl
from kappaosc import starprod as sp
from kappaosc.rng import SplitMix64
from kappaosc.shells import ShellAssignment, solve_coupled

SEED = 20240601
CLASSICAL = 1e9


@pytest.fixture
def report(capsys):
    def emit(number: int, title: str, checks: dict[str, tuple[float, str, float]]):
        """``checks`` maps a label to ``(value, op, bound)`` with op one of <=, >, ==."""
        failures = []
        parts = []
        for label, (value, op, bound) in checks.items():
            ok = {"<=": value <= bound, ">": value > bound, "==": value == bound}[op]
            parts.append(f"{label}={value:.3g} ({op} {bound:g})")
            if not ok:
                failures.append(label)
        status = "PASS" if not failures else "FAIL"
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {status} {title}: " + "; ".join(parts))
        assert not failures, f"criterion {number} failed: {failures}"

    return emit


def _rel(a, b) -> float:
    a, b = np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float))
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def test_criterion_01_dispersion_closure(report):
    rng = SplitMix64(SEED + 1)
    worst_shell = worst_classical = 0.0
    for _ in range(1000):
        k = rng.vector(-3.0, 3.0)
        m0 = rng.uniform(0.0, 3.0)
        kappa = 10.0 ** rng.uniform(-1.0, 1.0)
        ctx = KappaContext(kappa, m0)
        worst_shell = max(worst_shell, shell_residual(FourMomentum(omega_kappa(k, ctx), k), ctx))
        big = KappaContext(CLASSICAL, m0)
        exact = math.hypot(*k, m0)
        if exact > 0:
            worst_classical = max(worst_classical, abs(omega_kappa(k, big) - exact) / exact)
    report(1, "dispersion closure", {
        "max shell residual": (worst_shell, "<=", 1e-12),
        "max classical rel error": (worst_classical, "<=", 1e-9),
    })


def test_criterion_02_composition_laws(report):
    rng = SplitMix64(SEED + 2)
    worst = 0.0
    additive = True
    for _ in range(1000):
        ctx = KappaContext(10.0 ** rng.uniform(-0.5, 1.0), rng.uniform(0.0, 2.0))
        p, q, r = (FourMomentum.on_shell_from(rng.vector(-1.0, 1.0), ctx) for _ in range(3))
        worst = max(worst, _rel(compose(compose(p, q, ctx), r, ctx).as_array(),
                                compose(p, compose(q, r, ctx), ctx).as_array()))
        additive = additive and compose(p, q, ctx).e == p.e + q.e
    ctx = KappaContext(1.0, 1.0)
    p, q = FourMomentum.on_shell_from((1, 0, 0), ctx), FourMomentum.on_shell_from((0, 2, 0), ctx)
    witness = float(np.linalg.norm(compose(p, q, ctx).k - compose_flipped(p, q, ctx).k))
    report(2, "composition laws", {
        "max associativity deviation": (worst, "<=", 1e-12),
        "energy additivity exact": (float(additive), "==", 1.0),
        "non-commutativity witness": (witness, ">", 0.1),
    })


def test_criterion_03_circle_algebra(report):
    rng = SplitMix64(SEED + 3)
    ctx = KappaContext(1.0, 1.0)
    nonzero = 0
    worst_comp = worst_fold = 0.0
    for _ in range(1000):
        kp, kq = rng.vector(-1.0, 1.0), rng.vector(-1.0, 1.0)
        for kind in (alg.ANNIHILATION, alg.CREATION):
            x, y = alg.OscFactor.on_shell(kind, kp, ctx), alg.OscFactor.on_shell(kind, kq, ctx)
            nonzero += not alg.circ_commutator(x, y, ctx).is_zero()
        total = cl.state_momentum(cl.two_particle_state(kp, kq, ctx), ctx)
        expected = np.concatenate(([omega_kappa(kp, ctx) + omega_kappa(kq, ctx)], kp + kq))
        worst_comp = max(worst_comp, _rel(total.as_array(), expected))
    for n in range(1, 6):
        for _ in range(40):
            fs = [alg.creation(rng.vector(-1.0, 1.0), ctx) for _ in range(n)]
            folded = reduce(lambda m, f: alg.circ_monomials(m, alg.Monomial(1.0, (f,)), ctx), fs[1:],
                            alg.Monomial(1.0, fs[:1]))
            worst_fold = max(worst_fold, alg.max_label_deviation(alg.circ_nfold(fs, ctx), folded))
    report(3, "circle-product algebra", {
        "non-vanishing like-kind commutators": (float(nonzero), "==", 0.0),
        "max momentum compensation deviation": (worst_comp, "<=", 1e-12),
        "max n-fold vs fold deviation": (worst_fold, "<=", 1e-12),
    })


def test_criterion_04_flip_suite(report):
    rng = SplitMix64(SEED + 4)
    ctx = KappaContext(1.0, 1.0)
    worst_tau = worst_k = worst_e = 0.0
    for kinds in fl.KIND_PATTERNS:
        for _ in range(250):
            x, y = fl.factors_on_assignment(*kinds, rng.vector(-0.5, 0.5), rng.vector(-0.5, 0.5), ctx)
            worst_tau = max(worst_tau, fl.tau_involution_check(x, y, ctx))
            dk, de = fl.flip_conservation(x, y, ctx)
            worst_k, worst_e = max(worst_k, dk), max(worst_e, de)

    def contrast(kappa):
        c = KappaContext(kappa, 1.0)
        return fl.onshell_flip_energy_defect(alg.annihilation((1, 0, 0), c), alg.annihilation((0, 2, 0), c), c)

    report(4, "flip suite", {
        "max tau^2 residual": (worst_tau, "<=", 1e-10),
        "max momentum defect": (worst_k, "<=", 1e-10),
        "max energy defect": (worst_e, "<=", 1e-10),
        "on-shell contrast kappa=1": (contrast(1.0), ">", 1e-3),
        "on-shell contrast kappa=1e9": (contrast(CLASSICAL), "<=", 1e-9),
    })


def test_criterion_05_equivalence_theorem(report):
    rng = SplitMix64(SEED + 5)
    ctx = KappaContext(1.0, 1.0)
    worst_eq = worst_res = 0.0
    max_iter = 0
    for i in range(250):
        kinds = fl.KIND_PATTERNS[i % len(fl.KIND_PATTERNS)]
        kp, kq = rng.vector(-0.5, 0.5), rng.vector(-0.5, 0.5)
        worst_eq = max(worst_eq, fl.equivalence_check(kp, kq, ctx, kinds).max_deviation)
        sol = solve_coupled(kp, kq, ShellAssignment(*fl.FLIP_SIGNS[kinds]), ctx)
        # back-substitute into both coupled shells
        res_p = abs(sol.p0 - omega_kappa(kp * math.exp(fl.FLIP_SIGNS[kinds][0] * sol.q0 / 2), ctx))
        res_q = abs(sol.q0 - omega_kappa(kq * math.exp(fl.FLIP_SIGNS[kinds][1] * sol.p0 / 2), ctx))
        worst_res = max(worst_res, res_p / max(1.0, sol.p0), res_q / max(1.0, sol.q0))
        max_iter = max(max_iter, sol.iterations)
    report(5, "circle/flip equivalence", {
        "max equivalence deviation": (worst_eq, "<=", 1e-10),
        "max back-substitution residual": (worst_res, "<=", 1e-12),
        "max solver iterations": (float(max_iter), "<=", 200.0),
    })


def test_criterion_06_sector_factorization(report):
    rng = SplitMix64(SEED + 6)
    ctx = KappaContext(1.0, 1.0)
    worst = 0.0
    holds = True
    for _ in range(100):
        r, p, q = (alg.creation(rng.vector(-1.0, 1.0), ctx) for _ in range(3))
        for side, sign in (("left_circ", -1), ("right_circ", +1)):
            sf = alg.sector_factorization(r, p, q, side, ctx)
            holds = holds and sf.holds
            want = math.exp(sign * r.e / 2)
            worst = max(worst, _rel(sf.inner_p, p.k * want), _rel(sf.inner_q, q.k * want))
    finite = alg.mixed_nonassociativity_witness(KappaContext(1.0, 1.0))
    classical = alg.mixed_nonassociativity_witness(KappaContext(CLASSICAL, 1.0))
    report(6, "sector factorization", {
        "max inner-label shift deviation": (worst, "<=", 1e-12),
        "relations hold": (float(holds), "==", 1.0),
        "witness equal at kappa=1": (float(finite.equal), "==", 0.0),
        "witness equal at kappa=1e9": (float(classical.equal), "==", 1.0),
    })


def test_criterion_07_cluster_nonfactorizability(report):
    grid = cl.fixture_grid(8)

    def metric(kappa):
        return cl.factorizability_metric(cl.smear_cluster(cl.GaussianProduct(), grid, KappaContext(kappa, cl.FIXTURE_M0)))

    m1, m4, m16, mc = metric(1.0), metric(4.0), metric(16.0), metric(CLASSICAL)
    report(7, "cluster non-factorizability", {
        "metric kappa=1e9": (mc, "<=", 1e-12),
        "metric kappa=1": (m1, ">", 1e-6),
        "strictly decreasing 1>4>16": (float(m1 > m4 > m16), "==", 1.0),
    })


def test_criterion_08_bilocal_equation(report):
    rng = SplitMix64(SEED + 8)
    worst = 0.0
    for kappa in (0.5, 1.0, 10.0):
        ctx = KappaContext(kappa, 0.0)
        for _ in range(100):
            w = sp.star_planewaves(rng.vector(-1.0, 1.0), rng.vector(-1.0, 1.0), ctx)
            worst = max(worst, *(abs(b) for b in sp.bilocal_bracket_eigenvalues(w, ctx)))
    ctx = KappaContext(1.0, 1.0)
    kp = rng.vector(-1.0, 1.0)
    spread = 0.0
    for _ in range(100):
        w = sp.star_planewaves(kp, rng.vector(-2.0, 2.0), ctx)
        cross = sp.symbol("laplace_x", w, ctx) * sp.symbol("shift_y", w, ctx)
        spread = max(spread, abs(cross + float(kp @ kp)))
    theta = np.zeros((4, 4))
    theta[0, 3], theta[3, 0] = 0.7, -0.7
    theta[1, 2], theta[2, 1] = -0.4, 0.4
    p, q = FourMomentum(1.3, (0.2, -0.5, 0.9)), FourMomentum(0.8, (-0.1, 0.6, 0.3))
    closed = cmath.exp(1j * (0.7 * (1.3 * 0.3 - 0.9 * 0.8) - 0.4 * (0.2 * 0.6 - (-0.5) * (-0.1))) / 1.5**2)
    moyal = abs(sp.moyal_star_planewaves(p, q, theta, KappaContext(1.5)) - closed)
    report(8, "bilocal equation", {
        "max massless bracket": (worst, "<=", 1e-12),
        "q-dependence of cross symbol": (spread, "<=", 1e-12),
        "Moyal phase vs closed form": (moyal, "<=", 1e-14),
    })


def test_criterion_09_circle_star_equivalence(report):
    rng = SplitMix64(SEED + 9)
    ctx = KappaContext(1.0, 1.0)
    worst = 0.0
    for _ in range(100):
        u, v = np.array([rng.uniform(-1.0, 1.0), 0, 0]), np.array([rng.uniform(-1.0, 1.0), 0, 0])
        worst = max(worst, sp.circ_star_equivalence(u, v, ctx).max_deviation)
    report(9, "circle/star equivalence", {"max label and coefficient deviation": (worst, "<=", 1e-10)})


def test_criterion_10_cli(report):
    def run():
        return subprocess.run([sys.executable, "-m", "kappaosc", "verify", "--seed", "42"],
                              capture_output=True, text=True, check=False)

    a, b = run(), run()
    payload = json.loads(a.stdout)
    report(10, "command line", {
        "verify exit code": (float(a.returncode), "==", 0.0),
        "all invariants passed": (float(payload["passed"]), "==", 1.0),
        "identical JSON across runs": (float(a.stdout == b.stdout), "==", 1.0),
    })

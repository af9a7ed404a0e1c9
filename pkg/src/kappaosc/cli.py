"""Command-line front end: ``kappaosc <command> [options]``.

Settings come from (lowest to highest precedence) built-in defaults, a flat
``key = value`` config file (``--config``, ``#`` comments), and flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import algebra as alg
from . import clusters as cl
from . import flip as fl
from . import starprod as sp
from .kinematics import FourMomentum, KappaContext, compose, compose_flipped
from .shells import ShellAssignment, ShellSolverError, solve_coupled
from .tables import CLUSTER_HEADER, DISPERSION_HEADER, cluster_rows, dispersion_rows
from .verify import REGISTRY, SCHEMA_VERSION, VerifyConfig, run_verify

COMMANDS = {
    "dispersion": "deformed versus classical dispersion table",
    "compose": "non-Abelian composition of two on-shell momenta",
    "circ": "binary circle products of two oscillators, both orders",
    "flip": "deformed flip of an oscillator pair on its coupled shells",
    "solve-shells": "solve the coupled binary mass shells",
    "cluster": "non-factorizability metric of a smeared two-particle packet",
    "star": "star-product brackets, Moyal contrast and circle/star deviation",
    "verify": "run every invariant check and report",
}
KIND_NAMES = {"aa": (1, 1), "adag_adag": (-1, -1), "adag_a": (-1, 1), "a_adag": (1, -1)}

DEFAULTS: dict[str, str] = {
    "kappa": "1.0",
    "m0": "1.0",
    "seed": "42",
    "grid": f"8:{-cl.FIXTURE_HALF_WIDTH}:{cl.FIXTURE_HALF_WIDTH}",
    "format": "json",
    "exponent_convention": "full",
    "massterm": "on",
    "p": "1,0,0",
    "q": "0,1,0",
    "kinds": "aa",
    "signs": "+-",
    "kappas": "1,4,16",
    "k_max": "10",
    "points": "11",
    "theta": ",".join(["0"] * 16),
}


class UsageError(Exception):
    """Invalid configuration; reported once with every problem listed."""


@dataclass
class RunConfig:
    command: str
    ctx: KappaContext
    seed: int
    grid: cl.Grid2
    fmt: str
    convention: str
    massterm: bool
    out: str | None
    values: dict[str, str] = field(default_factory=dict)
    faults: tuple[str, ...] = ()
    only: str | None = None


# -- parsing ----------------------------------------------------------------------

def read_config_file(path: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            pairs[key.replace("-", "_")] = value
    return pairs


def _floats(text: str, what: str, problems: list[str], n: int | None = None) -> list[float] | None:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()] if text.strip() else []
    except ValueError:
        problems.append(f"{what}: expected comma-separated numbers, got {text!r}")
        return None
    if n is not None and len(vals) != n:
        problems.append(f"{what}: expected {n} numbers, got {len(vals)}")
        return None
    if not all(math.isfinite(v) for v in vals):
        problems.append(f"{what}: non-finite value in {text!r}")
        return None
    return vals


def parse_grid(text: str) -> cl.Grid2:
    parts = text.split(":")
    n = int(parts[0])
    lo, hi = (float(parts[1]), float(parts[2])) if len(parts) == 3 else (-cl.FIXTURE_HALF_WIDTH, cl.FIXTURE_HALF_WIDTH)
    if len(parts) not in (1, 3) or not hi > lo:
        raise ValueError(f"grid must be N or N:LO:HI with HI > LO, got {text!r}")
    return cl.Grid2.uniform(n, lo, hi)


def build_config(command: str, values: dict[str, str], faults=(), only=None) -> RunConfig:
    problems: list[str] = []
    num: dict[str, float] = {}
    for key in ("kappa", "m0"):
        try:
            num[key] = float(values[key])
        except ValueError:
            problems.append(f"{key}: not a number: {values[key]!r}")
    ctx = None
    try:  # unparsable fields get harmless placeholders so every other problem is still reported
        ctx = KappaContext(kappa=num.get("kappa", 1.0), m0=num.get("m0", 0.0))
    except ValueError as exc:
        problems.append(str(exc))
    try:
        seed = int(values["seed"])
        if seed < 0:
            raise ValueError
    except ValueError:
        problems.append(f"seed: expected a nonnegative integer, got {values['seed']!r}")
        seed = 0
    grid = None
    try:
        grid = parse_grid(values["grid"])
    except ValueError as exc:
        problems.append(f"grid: {exc}")
    fmt = values["format"]
    if fmt not in ("csv", "json"):
        problems.append(f"format: expected csv or json, got {fmt!r}")
    convention = values["exponent_convention"]
    if convention not in cl.CONVENTIONS:
        problems.append(f"exponent_convention: expected one of {cl.CONVENTIONS}, got {convention!r}")
    massterm = values["massterm"]
    if massterm not in ("on", "off"):
        problems.append(f"massterm: expected on or off, got {massterm!r}")
    for key in ("p", "q"):
        _floats(values[key], key, problems, 3)
    if values["kinds"] not in KIND_NAMES:
        problems.append(f"kinds: expected one of {sorted(KIND_NAMES)}, got {values['kinds']!r}")
    if values["signs"] not in ("++", "+-", "-+", "--"):
        problems.append(f"signs: expected two of + or -, got {values['signs']!r}")
    theta = _floats(values["theta"], "theta", problems, 16)
    if theta is not None:
        try:
            sp.check_theta(theta)
        except ValueError as exc:
            problems.append(f"theta: {exc}")
    try:
        if int(values["points"]) < 1 or not float(values["k_max"]) >= 0.0:
            raise ValueError
    except ValueError:
        problems.append(f"points/k_max: need points >= 1 and k_max >= 0, got {values['points']!r}, {values['k_max']!r}")
    kappas = _floats(values["kappas"], "kappas", problems)
    if command == "cluster" and kappas is not None:
        if not kappas:
            problems.append("kappas: empty kappa list")
        elif any(k <= 0 for k in kappas):
            problems.append("kappas: every kappa must be positive")
    if only is not None and not any(only in (inv.module, inv.name) for inv in REGISTRY):
        problems.append(f"only: no module or invariant named {only!r}")
    if problems:
        raise UsageError("invalid configuration:\n  " + "\n  ".join(problems))
    return RunConfig(command, ctx, seed, grid, fmt, convention, massterm == "on",
                     values.get("out"), values, tuple(faults), only)


def _vec(cfg: RunConfig, key: str) -> np.ndarray:
    return np.array([float(t) for t in cfg.values[key].split(",")])


# -- commands ----------------------------------------------------------------------------

@dataclass
class Report:
    payload: dict
    header: Sequence[str] | None = None
    rows: list[Sequence[Any]] | None = None
    exit_code: int = 0


def _base(cfg: RunConfig) -> dict:
    return {"schema": SCHEMA_VERSION, "command": cfg.command,
            "config": {"kappa": cfg.ctx.kappa, "m0": cfg.ctx.m0, "seed": cfg.seed}}


def _fm(p: FourMomentum) -> dict:
    return {"e": p.e, "k": p.k.tolist()}


def cmd_dispersion(cfg: RunConfig) -> Report:
    rows = dispersion_rows(cfg.ctx, float(cfg.values["k_max"]), int(cfg.values["points"]))
    payload = _base(cfg) | {"columns": list(DISPERSION_HEADER), "rows": [list(r) for r in rows]}
    return Report(payload, DISPERSION_HEADER, rows)


def cmd_compose(cfg: RunConfig) -> Report:
    p = FourMomentum.on_shell_from(_vec(cfg, "p"), cfg.ctx)
    q = FourMomentum.on_shell_from(_vec(cfg, "q"), cfg.ctx)
    pq, qp = compose(p, q, cfg.ctx), compose_flipped(p, q, cfg.ctx)
    payload = _base(cfg) | {"p": _fm(p), "q": _fm(q), "compose": _fm(pq), "compose_flipped": _fm(qp),
                            "difference": float(np.linalg.norm(pq.k - qp.k))}
    rows = [("compose", pq.e, *pq.k), ("compose_flipped", qp.e, *qp.k)]
    return Report(payload, ("order", "e", "k1", "k2", "k3"), rows)


def _pair(cfg: RunConfig) -> tuple[alg.OscFactor, alg.OscFactor]:
    kl, kr = KIND_NAMES[cfg.values["kinds"]]
    return alg.OscFactor.on_shell(kl, _vec(cfg, "p"), cfg.ctx), alg.OscFactor.on_shell(kr, _vec(cfg, "q"), cfg.ctx)


def _word_rows(label: str, word: alg.Monomial) -> list[tuple]:
    return [(label, i, f.kind, f.e, *f.k) for i, f in enumerate(word.factors)]


_WORD_HEADER = ("word", "position", "kind", "e", "k1", "k2", "k3")


def cmd_circ(cfg: RunConfig) -> Report:
    x, y = _pair(cfg)
    xy, yx = alg.circ_binary(x, y, cfg.ctx), alg.circ_binary(y, x, cfg.ctx)
    comm = alg.circ_commutator(x, y, cfg.ctx)
    payload = _base(cfg) | {"kinds": cfg.values["kinds"], "x_circ_y": xy.to_dict(), "y_circ_x": yx.to_dict(),
                            "commutator": comm.to_dict()}
    return Report(payload, _WORD_HEADER, _word_rows("x_circ_y", xy) + _word_rows("y_circ_x", yx))


def cmd_flip(cfg: RunConfig) -> Report:
    kl, kr = KIND_NAMES[cfg.values["kinds"]]
    x, y = fl.factors_on_assignment(kl, kr, _vec(cfg, "p"), _vec(cfg, "q"), cfg.ctx)
    res = fl.tau_kappa(x, y, cfg.ctx)
    dk, de = fl.flip_conservation(x, y, cfg.ctx)
    before = alg.Monomial(1.0, (x, y))
    payload = _base(cfg) | {
        "kinds": cfg.values["kinds"],
        "word": before.to_dict(),
        "flipped": res.word.to_dict(),
        "total": _fm(res.conserved_momentum),
        "involution_residual": fl.tau_involution_check(x, y, cfg.ctx),
        "momentum_defect": dk,
        "energy_defect": de,
        "onshell_energy_defect": fl.onshell_flip_energy_defect(
            alg.OscFactor.on_shell(kl, x.k, cfg.ctx), alg.OscFactor.on_shell(kr, y.k, cfg.ctx), cfg.ctx),
    }
    return Report(payload, _WORD_HEADER, _word_rows("word", before) + _word_rows("flipped", res.word))


def cmd_solve_shells(cfg: RunConfig) -> Report:
    signs = cfg.values["signs"]
    asg = ShellAssignment(1 if signs[0] == "+" else -1, 1 if signs[1] == "+" else -1)
    sol = solve_coupled(_vec(cfg, "p"), _vec(cfg, "q"), asg, cfg.ctx)
    payload = _base(cfg) | {"assignment": str(asg), "p0": sol.p0, "q0": sol.q0,
                            "iterations": sol.iterations, "residual": sol.residual}
    return Report(payload, ("p0", "q0", "iterations", "residual"), [(sol.p0, sol.q0, sol.iterations, sol.residual)])


def cmd_cluster(cfg: RunConfig) -> Report:
    kappas = [float(t) for t in cfg.values["kappas"].split(",") if t.strip()]
    ctx = cfg.ctx.replace(m0=float(cfg.values.get("cluster_m0", cl.FIXTURE_M0)))
    rows = cluster_rows(kappas, ctx, cfg.grid, cfg.convention)
    payload = _base(cfg) | {"exponent_convention": cfg.convention, "cluster_m0": ctx.m0,
                            "grid": {"points": cfg.grid.n, "lo": float(cfg.grid.axis[0]), "hi": float(cfg.grid.axis[-1])},
                            "columns": list(CLUSTER_HEADER), "rows": [list(r) for r in rows]}
    return Report(payload, CLUSTER_HEADER, rows)


def cmd_star(cfg: RunConfig) -> Report:
    p, q = _vec(cfg, "p"), _vec(cfg, "q")
    pair = sp.star_planewaves(p, q, cfg.ctx)
    bx, by = sp.bilocal_bracket_eigenvalues(pair, cfg.ctx, cfg.massterm)
    eq = sp.circ_star_equivalence(p, q, cfg.ctx)
    theta = [float(t) for t in cfg.values["theta"].split(",")]
    cp, cq = sp.classical_on_shell(p, cfg.ctx), sp.classical_on_shell(q, cfg.ctx)
    phase = sp.moyal_star_planewaves(cp, cq, theta, cfg.ctx)
    payload = _base(cfg) | {
        "massterm": cfg.massterm,
        "pair": pair.to_dict(),
        "bracket_x": [bx.real, bx.imag],
        "bracket_y": [by.real, by.imag],
        "mode_measure": [sp.mode_measure(p, cfg.ctx).omega_big, sp.mode_measure(q, cfg.ctx).omega_big],
        "circ_star": eq.to_dict(),
        "moyal_phase": [phase.real, phase.imag],
    }
    rows = [("bracket_x", bx.real, bx.imag), ("bracket_y", by.real, by.imag),
            ("moyal_phase", phase.real, phase.imag), ("circ_star_deviation", eq.max_deviation, 0.0)]
    return Report(payload, ("quantity", "re", "im"), rows)


def cmd_verify(cfg: RunConfig) -> Report:
    vcfg = VerifyConfig(ctx=cfg.ctx, seed=cfg.seed, convention=cfg.convention, massterm=cfg.massterm,
                        grid_points=cfg.grid.n, faults=cfg.faults)
    rep = run_verify(vcfg, cfg.only)
    rows = [(r.module, r.name, r.anchor, "PASS" if r.passed else "FAIL", r.residual, r.tolerance)
            for r in rep.results]
    return Report(rep.to_dict(), ("module", "invariant", "anchor", "status", "residual", "tolerance"), rows,
                  0 if rep.passed else 1)


DISPATCH = {
    "dispersion": cmd_dispersion,
    "compose": cmd_compose,
    "circ": cmd_circ,
    "flip": cmd_flip,
    "solve-shells": cmd_solve_shells,
    "cluster": cmd_cluster,
    "star": cmd_star,
    "verify": cmd_verify,
}


# -- output ----------------------------------------------------------------------------------

def render(report: Report, fmt: str) -> str:
    if fmt == "json" or report.rows is None:
        return json.dumps(report.payload, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.header)
    for row in report.rows:
        w.writerow(["" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("settings (override the config file)")
    g.add_argument("--config", help="flat key = value file; '#' starts a comment")
    g.add_argument("--kappa", help="deformation scale (default 1.0)")
    g.add_argument("--m0", help="rest mass (default 1.0)")
    g.add_argument("--seed", help="seed of the random draws (default 42)")
    g.add_argument("--grid", help="momentum grid: N or N:LO:HI (default 8:-2:2)")
    g.add_argument("--out", help="write the report here instead of stdout")
    g.add_argument("--format", choices=("csv", "json"), help="report format (default json)")
    g.add_argument("--exponent-convention", dest="exponent_convention", choices=cl.CONVENTIONS,
                   help="exponents of the smeared product (default full)")
    g.add_argument("--massterm", choices=("on", "off"), help="subtract m0^2 in the bilocal brackets (default on)")
    g.add_argument("--p", help="first three-momentum, e.g. 1,0,0")
    g.add_argument("--q", help="second three-momentum")
    g.add_argument("--kinds", choices=sorted(KIND_NAMES), help="oscillator kinds of the pair (default aa)")
    g.add_argument("--signs", help="coupled-shell signs for solve-shells, e.g. +-")
    g.add_argument("--kappas", help="comma-separated kappa list for cluster")
    g.add_argument("--k-max", dest="k_max", help="largest |k| of the dispersion table")
    g.add_argument("--points", help="rows of the dispersion table")
    g.add_argument("--theta", help="16 comma-separated reals, row-major antisymmetric theta")

    parser = argparse.ArgumentParser(prog="kappaosc", description="kappa-deformed oscillator kinematics and algebra")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=COMMANDS[name])
        if name == "verify":
            p.add_argument("--only", help="restrict to one module or one invariant name")
            p.add_argument("--inject-fault", dest="faults", action="append", default=[], help=argparse.SUPPRESS)
    return parser


_SETTING_KEYS = tuple(DEFAULTS) + ("out",)


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    values = dict(DEFAULTS)
    try:
        if args.config:
            try:
                from_file = read_config_file(args.config)
            except OSError as exc:
                raise UsageError(f"cannot read config file: {exc}") from exc
            unknown = sorted(set(from_file) - set(_SETTING_KEYS) - {"cluster_m0"})
            if unknown:
                raise UsageError(f"invalid configuration:\n  unknown config keys {unknown}")
            values.update(from_file)
        for key in _SETTING_KEYS:
            v = getattr(args, key, None)
            if v is not None:
                values[key] = v
        cfg = build_config(args.command, values, getattr(args, "faults", ()), getattr(args, "only", None))
    except UsageError as exc:
        parser.exit(2, f"kappaosc {args.command}: {exc}\n")

    try:
        report = DISPATCH[args.command](cfg)
    except (ShellSolverError, cl.GridRangeError, cl.NonInvertibleMapError, fl.FlipError, ValueError) as exc:
        print(f"kappaosc {args.command}: error: {exc}", file=sys.stderr)
        return 1

    text = render(report, cfg.fmt)
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"kappaosc {args.command}: cannot write report: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    if args.command == "verify":
        for r in report.payload["invariants"]:
            if not r["passed"]:
                print(f"FAIL [{r['module']}] {r['detail']}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

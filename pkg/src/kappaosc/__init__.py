"""kappa-deformed oscillator kinematics, algebra, flip operator and star products."""

from .kinematics import (
    FourMomentum,
    KappaContext,
    compose,
    compose_flipped,
    compose_n,
    omega_kappa,
    shell_residual,
)
from .shells import (
    ShellAssignment,
    ShellSolution,
    ShellSolverError,
    assign_binary_shells,
    solve_coupled,
)

__version__ = "0.1.0"

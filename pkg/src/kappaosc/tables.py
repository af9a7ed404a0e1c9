"""Tabular reports shared by the command line and the verification suite."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .clusters import GaussianProduct, Grid2, factorizability_metric, smear_cluster
from .kinematics import FourMomentum, KappaContext, omega_kappa, shell_residual

DISPERSION_HEADER = ("k", "omega_kappa", "omega_classical", "shell_residual")
CLUSTER_HEADER = ("kappa", "metric", "grid_size")


def dispersion_rows(ctx: KappaContext, k_max: float = 10.0, n: int = 11) -> list[tuple[float, float, float, float]]:
    """``(|k|, omega_kappa, sqrt(k^2 + m0^2), shell residual)`` on ``n`` evenly spaced magnitudes."""
    if n < 1:
        raise ValueError(f"need at least one dispersion sample, got {n}")
    rows = []
    for k in np.linspace(0.0, k_max, n):
        k = float(k)
        vec = np.array([k, 0.0, 0.0])
        w = omega_kappa(vec, ctx)
        rows.append((k, w, math.hypot(k, ctx.m0), shell_residual(FourMomentum(w, vec), ctx)))
    return rows


def cluster_rows(kappas: Sequence[float], ctx: KappaContext, grid: Grid2, convention: str = "full",
                 packet: GaussianProduct | None = None) -> list[tuple[float, float, int]]:
    """Factorizability metric of the smeared packet for each kappa."""
    if len(kappas) == 0:
        raise ValueError("empty kappa list")
    packet = packet or GaussianProduct()
    return [
        (float(k), factorizability_metric(smear_cluster(packet, grid, ctx.replace(kappa=float(k)), convention)), grid.n)
        for k in kappas
    ]

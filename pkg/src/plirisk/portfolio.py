"""Frontier sweeps of the worst-case ES over two-asset Gaussian portfolios."""
from __future__ import annotations

import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .measures import check_level
from .numerics import golden_section
from .partial_es import GaussianPair, RiskConfig, check_uncertainty, rho_beta_gaussian

MIN_GRID = 11


@dataclass(frozen=True)
class SweepSpec:
    model: GaussianPair
    alpha: float
    beta_list: tuple
    grid: int = 21  # number of pi1 points on [0, 1]
    refine_tol: float = 1e-4

    def __post_init__(self):
        check_level(self.alpha)
        betas = tuple(check_uncertainty(b) for b in self.beta_list)
        if not betas:
            raise ValueError("beta_list is empty")
        if int(self.grid) < MIN_GRID:
            raise ValueError(f"pi1 grid needs at least {MIN_GRID} points, got {self.grid}")
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be > 0")
        object.__setattr__(self, "beta_list", betas)
        object.__setattr__(self, "grid", int(self.grid))

    def pi1_grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid)


def _rho(model, alpha, beta, cfg):
    return lambda pi1: rho_beta_gaussian(model, float(pi1), alpha, beta, cfg)[0]


def sweep(spec: SweepSpec, cfg: RiskConfig | None = None, workers: int = 1) -> np.ndarray:
    """Rows ``(beta, pi1, rho)`` ordered by beta index, then grid index."""
    jobs = [(b, x) for b in spec.beta_list for x in spec.pi1_grid()]

    def run(job):
        b, x = job
        return rho_beta_gaussian(spec.model, float(x), spec.alpha, b, cfg)[0]

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(run, jobs))
    else:
        vals = [run(j) for j in jobs]
    return np.array([(b, x, v) for (b, x), v in zip(jobs, vals)])


def _local_refine(f, grid, vals, tol):
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    x, fx = golden_section(f, lo, hi, xtol=tol, check_bracket=False)
    if vals[i] < fx:
        return float(grid[i]), float(vals[i])
    return float(x), float(fx)


def argmin_weight(model: GaussianPair, alpha: float, beta: float, refine_tol: float = 1e-4,
                  grid: int = 21, cfg: RiskConfig | None = None) -> tuple[float, float]:
    """Risk-minimizing ``pi1`` and the minimal ``rho_beta``.

    A grid scan and a golden-section search over all of ``[0, 1]`` are run
    side by side; if their minimizers are more than two grid steps apart the
    scan is repeated on a ten times finer grid before the local refinement.
    """
    f = _rho(model, alpha, beta, cfg)
    g = np.linspace(0.0, 1.0, grid)
    vals = np.array([f(x) for x in g])
    x_gs, _ = golden_section(f, 0.0, 1.0, xtol=refine_tol, check_bracket=False)
    step = g[1] - g[0]
    if abs(x_gs - g[np.argmin(vals)]) > 2 * step:
        g = np.linspace(0.0, 1.0, 10 * (grid - 1) + 1)
        vals = np.array([f(x) for x in g])
    return _local_refine(f, g, vals, refine_tol)


def optimizer_curve(spec: SweepSpec, cfg: RiskConfig | None = None) -> np.ndarray:
    """Rows ``(beta, pi1_star, rho_star)``, one per beta."""
    return np.array([(b, *argmin_weight(spec.model, spec.alpha, b, spec.refine_tol, spec.grid, cfg))
                     for b in spec.beta_list])


def fmt(v: float) -> str:
    return f"{float(v):.12g}"


def csv_text(header: str, rows) -> str:
    lines = [header] + [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_sweep_csv(path, rows) -> None:
    write_atomic(path, csv_text("beta,pi1,rho", rows))


def write_optimizer_csv(path, rows) -> None:
    write_atomic(path, csv_text("beta,pi1_star,rho_star", rows))

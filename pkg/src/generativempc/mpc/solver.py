from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import Bounds, minimize

from ..dynamics import (
    CONTROL_DIM,
    ControlInput,
    WholeBodyState,
    controls_from_array,
    controls_to_array,
    rollout_array,
    states_from_array,
)
from ..errors import ConfigurationError
from ..utils.logging import get_logger
from .costs import MpcProblem, cost_and_gradient

logger = get_logger()


@dataclass(frozen=True)
class MpcSolution:
    controls: tuple[ControlInput, ...]
    predicted: tuple[WholeBodyState, ...]
    cost: float
    iterations: int
    converged: bool
    projected_gradient: float = 0.0

    @property
    def first(self) -> ControlInput:
        return self.controls[0]


def projected_gradient_norm(x: np.ndarray, grad: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> float:
    """Inf-norm of the box-projected gradient step; zero at a first-order point."""
    return float(np.max(np.abs(x - np.clip(x - grad, lb, ub))))


def solve(
    problem: MpcProblem,
    warm_start: Optional[Sequence[ControlInput]] = None,
    *,
    method: str = "SLSQP",
    max_iterations: int = 60,
    tolerance: float = 1e-4,
    ftol: float = 1e-9,
) -> MpcSolution:
    """Single-shooting solve over the flattened 8N control vector with box limits.

    The clipped warm start is evaluated first and the best point ever evaluated is
    returned, so the result never costs more than its initialization.
    """
    if not isinstance(problem, MpcProblem):
        raise ConfigurationError("solve expects an MpcProblem")
    lb, ub = problem.bounds()
    n_vars = problem.N * CONTROL_DIM
    if warm_start is None:
        x_init = np.zeros(n_vars)
    else:
        x_init = controls_to_array(list(warm_start)).reshape(-1)
        if x_init.shape != (n_vars,):
            raise ConfigurationError(
                f"warm start has {x_init.size // CONTROL_DIM} controls, horizon is {problem.N}"
            )
    x_init = np.clip(x_init, lb, ub)

    best = {"f": np.inf, "x": x_init, "g": None}

    def objective(x: np.ndarray):
        xc = np.clip(x, lb, ub)
        f, g = cost_and_gradient(xc, problem)
        if f < best["f"]:
            best["f"], best["x"], best["g"] = f, xc.copy(), g
        return f, g

    objective(x_init)

    options = {"maxiter": int(max_iterations), "ftol": float(ftol)}
    if method == "L-BFGS-B":
        options["gtol"] = float(tolerance)
    elif method != "SLSQP":
        raise ConfigurationError(f"unsupported solver method '{method}'")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(
            objective,
            x_init,
            jac=True,
            method=method,
            bounds=Bounds(lb, ub),
            options=options,
        )

    x_best = best["x"]
    pg = projected_gradient_norm(x_best, best["g"], lb, ub)
    converged = pg <= tolerance
    if not converged:
        logger.debug(f"MPC solve stopped without convergence: {res.message} (pg={pg:.3g})")

    U = x_best.reshape(problem.N, CONTROL_DIM)
    traj = rollout_array(problem.packed.x0, U, problem.dt)
    return MpcSolution(
        controls=tuple(controls_from_array(U)),
        predicted=tuple(states_from_array(traj)),
        cost=float(best["f"]),
        iterations=int(getattr(res, "nit", 0)),
        converged=converged,
        projected_gradient=pg,
    )


def shift_warm_start(previous: Sequence[ControlInput]) -> list[ControlInput]:
    """Receding-horizon shift: drop the applied control, repeat the last one."""
    previous = list(previous)
    if not previous:
        return []
    return previous[1:] + [previous[-1]]

from .costs import (
    MotionLimits,
    MpcProblem,
    MpcWeights,
    Obstacle,
    control_cost,
    cost_and_gradient,
    obstacle_cost,
    repulsive_potential,
    running_cost,
    smoothness_cost,
    terminal_cost,
    total_cost,
)
from .solver import MpcSolution, shift_warm_start, solve

__all__ = [
    "MotionLimits",
    "MpcProblem",
    "MpcSolution",
    "MpcWeights",
    "Obstacle",
    "control_cost",
    "cost_and_gradient",
    "obstacle_cost",
    "repulsive_potential",
    "running_cost",
    "shift_warm_start",
    "smoothness_cost",
    "solve",
    "terminal_cost",
    "total_cost",
]

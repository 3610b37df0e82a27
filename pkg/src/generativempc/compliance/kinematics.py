from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import ConfigurationError, SingularityError

_X, _Y, _Z = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)


@dataclass(eq=False)
class KinematicChain:
    """Serial revolute chain, positions only.

    Joint i rotates about ``axes[i]`` (expressed in the previous link frame) and is
    followed by the link offset ``offsets[i]`` in the rotated frame.
    """

    name: str
    axes: np.ndarray
    offsets: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    base_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.axes = np.asarray(self.axes, dtype=float)
        self.offsets = np.asarray(self.offsets, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.base_offset = np.asarray(self.base_offset, dtype=float)
        n = self.axes.shape[0]
        if n < 3:
            raise ConfigurationError(f"chain '{self.name}' needs at least 3 joints, got {n}")
        if self.axes.shape != (n, 3) or self.offsets.shape != (n, 3):
            raise ConfigurationError(f"chain '{self.name}': axes and offsets must be ({n}, 3)")
        if self.lower.shape != (n,) or self.upper.shape != (n,) or np.any(self.lower > self.upper):
            raise ConfigurationError(f"chain '{self.name}': invalid joint limits")
        norms = np.linalg.norm(self.axes, axis=1)
        if np.any(norms == 0):
            raise ConfigurationError(f"chain '{self.name}': zero joint axis")
        self.axes = self.axes / norms[:, None]

    @property
    def n(self) -> int:
        return self.axes.shape[0]

    def _frames(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise ConfigurationError(f"chain '{self.name}' expects {self.n} joint values, got {q.shape}")
        local = Rotation.from_rotvec(self.axes * q[:, None]).as_matrix()
        R = np.eye(3)
        p = self.base_offset.copy()
        origins = np.empty((self.n, 3))
        world_axes = np.empty((self.n, 3))
        for i in range(self.n):
            origins[i] = p
            world_axes[i] = R @ self.axes[i]
            R = R @ local[i]
            p = p + R @ self.offsets[i]
        return p, origins, world_axes

    def forward(self, q) -> np.ndarray:
        return self._frames(q)[0]

    def jacobian(self, q) -> np.ndarray:
        """3 x n positional Jacobian."""
        p, origins, world_axes = self._frames(q)
        return np.cross(world_axes, p - origins).T

    def clamp(self, q) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), self.lower, self.upper)


def dls_ik(chain: KinematicChain, q, xdot_cmd, lam: float) -> np.ndarray:
    """qdot = J^T (J J^T + lam^2 I)^-1 xdot."""
    J = chain.jacobian(q)
    xdot_cmd = np.asarray(xdot_cmd, dtype=float)
    JJt = J @ J.T
    if lam == 0 and np.linalg.matrix_rank(JJt) < 3:
        raise SingularityError(f"chain '{chain.name}': rank-deficient Jacobian with zero damping")
    return J.T @ np.linalg.solve(JJt + (lam * lam) * np.eye(3), xdot_cmd)


def integrate_joint_command(q_cmd, qdot, dt: float, chain: KinematicChain) -> np.ndarray:
    return chain.clamp(np.asarray(q_cmd, dtype=float) + np.asarray(qdot, dtype=float) * dt)


def min_singular_value(chain: KinematicChain, q) -> float:
    return float(np.linalg.svd(chain.jacobian(q), compute_uv=False)[-1])


def solve_ik(
    chain: KinematicChain,
    target,
    q0=None,
    lam: float = 0.05,
    max_iterations: int = 300,
    tol: float = 1e-7,
    max_step: float = 0.3,
) -> tuple[np.ndarray, bool]:
    """Iterative damped least-squares position IK; returns (q, converged)."""
    target = np.asarray(target, dtype=float)
    q = chain.clamp(np.zeros(chain.n) if q0 is None else q0)
    for _ in range(max_iterations):
        err = target - chain.forward(q)
        if np.linalg.norm(err) <= tol:
            return q, True
        dq = dls_ik(chain, q, err, lam)
        step = np.linalg.norm(dq)
        if step > max_step:
            dq *= max_step / step
        q = chain.clamp(q + dq)
    return q, bool(np.linalg.norm(target - chain.forward(q)) <= tol)


# Bent "ready" posture the default arms start IK from.
READY_POSTURE = np.array([0.0, 0.3, 0.9, 0.6, 0.0, 0.0])


def default_so101_chain(side: str) -> KinematicChain:
    """Six-joint desk-scale arm mounted on the base, left arm on +y."""
    if side not in ("left", "right"):
        raise ConfigurationError(f"arm side must be 'left' or 'right', got '{side}'")
    sign = 1.0 if side == "left" else -1.0
    limits = np.array([2.6, 2.0, 2.6, 2.0, 2.8, 2.8])
    return KinematicChain(
        name=f"so101-{side}",
        axes=[_Z, _Y, _Y, _Y, _X, _Z],
        offsets=[(0.0, 0.0, 0.12), (0.12, 0.0, 0.0), (0.10, 0.0, 0.0), (0.06, 0.0, 0.0), (0.06, 0.0, 0.0), (0.04, 0.0, 0.0)],
        lower=-limits,
        upper=limits,
        base_offset=(0.15, sign * 0.18, 0.15),
    )

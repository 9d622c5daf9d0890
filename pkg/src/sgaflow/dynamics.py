"""Forward state and backward adjoint integration of the controlled flow.

The state obeys theta' = -grad J0(theta, Z_train) + eps * D(theta, Z_dith) u(t)
with D the diagonal of squared loss-gradient entries on the dithered set.  The
adjoint obeys p' = -(df/dtheta)^T p, integrated backward from
p(T) = -grad Phi(theta(T), Z_val).

Integration is classical RK4.  The forward pass runs on half steps (2M
substeps of h/2) so that theta is available exactly at every node and
midpoint the backward pass needs; no interpolation is ever done.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import ControlCoefficients, eval_control
from .dataset import Dataset
from .model import ModelOracle, loss_gradient, loss_hvp, phi_gradient

DEFAULT_DIVERGENCE_BOUND = 1e8


class DivergenceError(RuntimeError):
    """State norm exceeded the divergence bound during integration."""

    def __init__(self, t: float, norm: float):
        super().__init__(f"state diverged at t={t:.6g} (|theta|={norm:.3e})")
        self.t = t
        self.norm = norm


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*T/M on [0, T]."""

    t_final: float
    steps: int

    def __post_init__(self):
        if self.t_final <= 0:
            raise ValueError("final time must be > 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def h(self) -> float:
        return self.t_final / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.steps + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.nodes[:-1] + 0.5 * self.h


@dataclass(frozen=True)
class Trajectory:
    """Forward solution: theta at every node and midpoint of the grid.

    theta_fine holds the states of the internal quarter-step integration
    (4M+1 rows, spacing h/4); the backward pass reads its stage states from
    it so no interpolation is ever needed.
    """

    grid: TimeGrid
    theta_nodes: np.ndarray  # (M+1, p)
    theta_mid: np.ndarray    # (M, p)
    theta_fine: np.ndarray | None = None  # (4M+1, p)

    @property
    def theta_final(self) -> np.ndarray:
        return self.theta_nodes[-1]


@dataclass(frozen=True)
class AdjointTrajectory:
    """Backward solution: costate p at every node and midpoint of the grid."""

    grid: TimeGrid
    p_nodes: np.ndarray  # (M+1, p)
    p_mid: np.ndarray | None = None  # (M, p)


def forward_rhs(oracle: ModelOracle, theta: np.ndarray, u: np.ndarray,
                eps: float, z_train: Dataset, z_dith: Dataset) -> np.ndarray:
    """Controlled gradient-flow velocity at (theta, u)."""
    g = loss_gradient(oracle, theta, z_train)
    gt = loss_gradient(oracle, theta, z_dith)
    return -g + eps * (gt * gt) * np.asarray(u, dtype=float)


def _rk4_forward(rhs, t0: float, theta0: np.ndarray, h: float, nsteps: int,
                 divergence_bound: float) -> np.ndarray:
    """Fixed-step RK4; returns states at all nsteps+1 nodes."""
    out = np.empty((nsteps + 1, theta0.shape[0]))
    out[0] = theta0
    th = theta0
    for k in range(nsteps):
        t = t0 + k * h
        k1 = rhs(t, th)
        k2 = rhs(t + 0.5 * h, th + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, th + 0.5 * h * k2)
        k4 = rhs(t + h, th + h * k3)
        th = th + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(th)):
            raise DivergenceError(t + h, float("inf"))
        nrm = np.linalg.norm(th)
        if nrm > divergence_bound:
            raise DivergenceError(t + h, nrm)
        out[k + 1] = th
    return out


def integrate_forward(oracle: ModelOracle, theta0: np.ndarray,
                      coeffs: ControlCoefficients | None, eps: float,
                      z_train: Dataset, z_dith: Dataset, grid: TimeGrid,
                      divergence_bound: float = DEFAULT_DIVERGENCE_BOUND,
                      ) -> Trajectory:
    """Integrate the controlled flow from theta0 over the grid.

    coeffs=None means the null control u = 0 (pure gradient flow).
    """
    theta0 = np.asarray(theta0, dtype=float).ravel()
    if theta0.shape[0] != oracle.param_dim:
        raise ValueError(
            f"theta0 has dim {theta0.shape[0]}, oracle expects {oracle.param_dim}"
        )
    if not np.all(np.isfinite(theta0)):
        raise ValueError("theta0 must be finite")

    if coeffs is None:
        def rhs(t, th):
            return -loss_gradient(oracle, th, z_train)
    else:
        def rhs(t, th):
            return forward_rhs(oracle, th, eval_control(coeffs, t), eps,
                               z_train, z_dith)

    # quarter steps: fine node 4k is t_k, fine node 4k+2 is the midpoint
    fine = _rk4_forward(rhs, 0.0, theta0, 0.25 * grid.h, 4 * grid.steps,
                        divergence_bound)
    return Trajectory(grid, fine[::4].copy(), fine[2::4].copy(), fine)


def adjoint_rhs(oracle: ModelOracle, theta: np.ndarray, p: np.ndarray,
                u: np.ndarray, eps: float, z_train: Dataset,
                z_dith: Dataset) -> np.ndarray:
    """Time derivative of the costate: -(df/dtheta)^T p.

    Uses only gradient and hvp oracle calls: the Jacobian of the flow is
    -H + 2 eps diag(u) diag(g~) H~ with H, H~ the loss Hessians on the
    training and dithered sets and g~ the gradient on the dithered set.
    """
    p = np.asarray(p, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    hv = loss_hvp(oracle, theta, z_train, p)
    gt = loss_gradient(oracle, theta, z_dith)
    hv_t = loss_hvp(oracle, theta, z_dith, gt * u * p)
    return hv - 2.0 * eps * hv_t


def integrate_adjoint(oracle: ModelOracle, traj: Trajectory,
                      coeffs: ControlCoefficients | None, eps: float,
                      z_train: Dataset, z_dith: Dataset, z_val: Dataset,
                      ) -> AdjointTrajectory:
    """Integrate the costate backward from p(T) = -grad Phi(theta(T)).

    Stage states come from the stored node/midpoint values of the forward
    trajectory, so no re-integration or interpolation happens here.
    """
    grid = traj.grid
    h = grid.h
    nodes = grid.nodes
    M = grid.steps
    p_dim = oracle.param_dim

    def u_at(t):
        if coeffs is None:
            return np.zeros(p_dim)
        return eval_control(coeffs, t)

    def rhs(t, theta, p):
        return adjoint_rhs(oracle, theta, p, u_at(t), eps, z_train, z_dith)

    p0 = -phi_gradient(oracle, traj.theta_final, z_val)

    if traj.theta_fine is not None:
        # half-step backward sweep; stage states are exact quarter-step
        # values from the forward pass
        hh = 0.5 * h
        fine = traj.theta_fine
        out = np.empty((2 * M + 1, p_dim))
        p = p0
        out[2 * M] = p
        for j in range(2 * M, 0, -1):
            t_hi = j * hh
            k1 = rhs(t_hi, fine[2 * j], p)
            k2 = rhs(t_hi - 0.5 * hh, fine[2 * j - 1], p - 0.5 * hh * k1)
            k3 = rhs(t_hi - 0.5 * hh, fine[2 * j - 1], p - 0.5 * hh * k2)
            k4 = rhs(t_hi - hh, fine[2 * j - 2], p - hh * k3)
            p = p - (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(p)):
                raise RuntimeError(
                    f"adjoint became non-finite at t={t_hi - hh:.6g}")
            out[j - 1] = p
        return AdjointTrajectory(grid, out[::2].copy(), out[1::2].copy())

    # fallback for hand-built trajectories: full steps with stored midpoints
    out = np.empty((M + 1, p_dim))
    p = p0
    out[M] = p
    for k in range(M, 0, -1):
        t_hi = nodes[k]
        t_mid = t_hi - 0.5 * h
        t_lo = nodes[k - 1]
        th_hi = traj.theta_nodes[k]
        th_mid = traj.theta_mid[k - 1]
        th_lo = traj.theta_nodes[k - 1]
        k1 = rhs(t_hi, th_hi, p)
        k2 = rhs(t_mid, th_mid, p - 0.5 * h * k1)
        k3 = rhs(t_mid, th_mid, p - 0.5 * h * k2)
        k4 = rhs(t_lo, th_lo, p - h * k3)
        p = p - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(p)):
            raise RuntimeError(f"adjoint became non-finite at t={t_lo:.6g}")
        out[k - 1] = p
    return AdjointTrajectory(grid, out)


def hamiltonian(oracle: ModelOracle, theta: np.ndarray, p: np.ndarray,
                u: np.ndarray, eps: float, z_train: Dataset,
                z_dith: Dataset) -> float:
    """Control Hamiltonian: <p, f(theta, u)>."""
    p = np.asarray(p, dtype=float).ravel()
    f = forward_rhs(oracle, theta, u, eps, z_train, z_dith)
    if p.shape != f.shape:
        raise ValueError(f"p has dim {p.shape[0]}, expected {f.shape[0]}")
    return float(p @ f)

"""Loss oracles for the built-in model families.

Two families are supported:

* ``linear_features`` -- h(x) = theta . phi(x) with an elementwise polynomial
  feature map; squared loss gives a constant Hessian (2/m) Phi^T Phi, so
  value/gradient/hvp are all closed form.
* ``mlp_tanh`` -- one hidden tanh layer of configurable width; gradients are
  analytic, Hessian-vector products use a central difference of the gradient.

The training loss is the mean squared error (1/m) sum (h(x_i) - y_i)^2; the
validation cost uses the same formula on the validation set.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

_SQRT_EPS = np.sqrt(np.finfo(float).eps)


@dataclass(frozen=True)
class ModelOracle:
    """Pure evaluator bundle for one model family on a fixed input dimension."""

    family: str  # 'linear_features' | 'mlp_tanh'
    input_dim: int
    degree: int = 1          # linear_features: elementwise powers 1..degree
    include_bias: bool = False
    hidden: int = 4          # mlp_tanh width

    def __post_init__(self):
        if self.family not in ("linear_features", "mlp_tanh"):
            raise ValueError(f"unknown model family {self.family!r}")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if self.family == "linear_features" and self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.family == "mlp_tanh" and not (1 <= self.hidden <= 32):
            raise ValueError("hidden width must be in [1, 32]")

    @property
    def param_dim(self) -> int:
        if self.family == "linear_features":
            return self.input_dim * self.degree + (1 if self.include_bias else 0)
        # W1 (hidden x d), b1 (hidden), w2 (hidden), b2 (1)
        return self.hidden * (self.input_dim + 2) + 1

    # -- linear family -----------------------------------------------------

    def features(self, x: np.ndarray) -> np.ndarray:
        """Feature matrix phi(x), shape (m, p), for the linear family."""
        x = np.atleast_2d(x)
        cols = [x**k for k in range(1, self.degree + 1)]
        if self.include_bias:
            cols.append(np.ones((x.shape[0], 1)))
        return np.concatenate(cols, axis=1)

    # -- mlp family --------------------------------------------------------

    def _unpack(self, theta: np.ndarray):
        h, d = self.hidden, self.input_dim
        w1 = theta[: h * d].reshape(h, d)
        b1 = theta[h * d : h * d + h]
        w2 = theta[h * d + h : h * d + 2 * h]
        b2 = theta[-1]
        return w1, b1, w2, b2

    def predict(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.family == "linear_features":
            return self.features(x) @ theta
        w1, b1, w2, b2 = self._unpack(theta)
        return np.tanh(x @ w1.T + b1) @ w2 + b2


def _check_dims(oracle: ModelOracle, theta: np.ndarray, z: Dataset) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape[0] != oracle.param_dim:
        raise ValueError(
            f"theta has dim {theta.shape[0]}, oracle expects {oracle.param_dim}"
        )
    if z.d != oracle.input_dim:
        raise ValueError(
            f"dataset has d={z.d}, oracle expects input_dim={oracle.input_dim}"
        )
    return theta


def loss_value(oracle: ModelOracle, theta: np.ndarray, z: Dataset) -> float:
    """Mean squared error of the model on z."""
    theta = _check_dims(oracle, theta, z)
    r = oracle.predict(theta, z.x) - z.y
    return float(np.mean(r * r))


def loss_gradient(oracle: ModelOracle, theta: np.ndarray, z: Dataset) -> np.ndarray:
    """Analytic gradient of loss_value with respect to theta."""
    theta = _check_dims(oracle, theta, z)
    if oracle.family == "linear_features":
        phi = oracle.features(z.x)
        r = phi @ theta - z.y
        return (2.0 / z.m) * (phi.T @ r)
    w1, b1, w2, b2 = oracle._unpack(theta)
    a = z.x @ w1.T + b1           # (m, h)
    t = np.tanh(a)
    r = t @ w2 + b2 - z.y          # (m,)
    sech2 = 1.0 - t * t
    coef = (2.0 / z.m) * r         # (m,)
    g_w1 = (coef[:, None] * sech2 * w2).T @ z.x   # (h, d)
    g_b1 = (coef[:, None] * sech2 * w2).sum(axis=0)
    g_w2 = coef @ t
    g_b2 = coef.sum()
    return np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])


def loss_hvp(oracle: ModelOracle, theta: np.ndarray, z: Dataset,
             v: np.ndarray) -> np.ndarray:
    """Hessian-vector product of loss_value at theta in direction v.

    Closed form for the linear family; central difference of the analytic
    gradient for the mlp, with step sqrt(eps)*(1+|theta|)/|v|.
    """
    theta = _check_dims(oracle, theta, z)
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != oracle.param_dim:
        raise ValueError(f"v has dim {v.shape[0]}, expected {oracle.param_dim}")
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        return np.zeros_like(v)
    if oracle.family == "linear_features":
        phi = oracle.features(z.x)
        return (2.0 / z.m) * (phi.T @ (phi @ v))
    h = _SQRT_EPS * (1.0 + np.linalg.norm(theta)) / vnorm
    gp = loss_gradient(oracle, theta + h * v, z)
    gm = loss_gradient(oracle, theta - h * v, z)
    return (gp - gm) / (2.0 * h)


def d_matrix(oracle: ModelOracle, theta: np.ndarray, z_dithered: Dataset) -> np.ndarray:
    """Diagonal of the control coupling matrix: squared loss-gradient entries.

    Evaluated on the dithered training set; warns (but proceeds) if the
    dataset is not tagged dithered.
    """
    if z_dithered.tag != "dithered":
        warnings.warn(
            f"d_matrix expects a dithered dataset, got tag={z_dithered.tag!r}",
            stacklevel=2,
        )
    g = loss_gradient(oracle, theta, z_dithered)
    return g * g


def phi_value(oracle: ModelOracle, theta: np.ndarray, z_val: Dataset) -> float:
    """Validation cost: mean squared error on the validation set."""
    return loss_value(oracle, theta, z_val)


def phi_gradient(oracle: ModelOracle, theta: np.ndarray, z_val: Dataset) -> np.ndarray:
    return loss_gradient(oracle, theta, z_val)

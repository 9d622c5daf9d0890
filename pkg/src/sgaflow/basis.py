"""Time basis functions and the control parameterization u(t) = C Psi(t)."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import legendre as npleg


@dataclass(frozen=True)
class BasisSpec:
    """Orthonormal basis of n functions on [0, t_final]."""

    kind: str  # 'legendre_shifted' | 'fourier'
    n: int
    t_final: float

    def __post_init__(self):
        if self.kind not in ("legendre_shifted", "fourier"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("basis size must be >= 1")
        if self.t_final <= 0:
            raise ValueError("final time must be > 0")


@dataclass(frozen=True)
class ControlCoefficients:
    """p x n coefficient matrix defining u(t) = C Psi(t), with box bound u_max."""

    c: np.ndarray
    basis: BasisSpec
    u_max: float

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.c, dtype=float)).copy()
        if c.shape[1] != self.basis.n:
            raise ValueError(
                f"C has {c.shape[1]} columns, basis has n={self.basis.n}"
            )
        if self.u_max < 0:
            raise ValueError("u_max must be >= 0")
        c.flags.writeable = False
        object.__setattr__(self, "c", c)

    @property
    def p(self) -> int:
        return self.c.shape[0]


def zero_coefficients(p: int, basis: BasisSpec, u_max: float) -> ControlCoefficients:
    return ControlCoefficients(np.zeros((p, basis.n)), basis, u_max)


def _check_time(basis: BasisSpec, t: float) -> None:
    # tiny slack for roundoff in stage times like T - h/2 + h
    tol = 1e-12 * max(1.0, basis.t_final)
    if t < -tol or t > basis.t_final + tol:
        raise ValueError(f"t={t} outside [0, {basis.t_final}]")


def eval_basis(basis: BasisSpec, t: float) -> np.ndarray:
    """Evaluate Psi(t), the vector of n basis functions at time t."""
    _check_time(basis, t)
    T = basis.t_final
    if basis.kind == "legendre_shifted":
        # orthonormal shifted Legendre: sqrt((2j+1)/T) * P_j(2t/T - 1)
        s = 2.0 * t / T - 1.0
        vals = npleg.legvander(np.atleast_1d(s), basis.n - 1)[0]
        scale = np.sqrt((2.0 * np.arange(basis.n) + 1.0) / T)
        return scale * vals
    # fourier: constant, then sin/cos pairs of increasing frequency
    out = np.empty(basis.n)
    out[0] = np.sqrt(1.0 / T)
    for j in range(1, basis.n):
        k = (j + 1) // 2
        w = 2.0 * np.pi * k * t / T
        out[j] = np.sqrt(2.0 / T) * (np.sin(w) if j % 2 == 1 else np.cos(w))
    return out


def eval_basis_grid(basis: BasisSpec, ts: np.ndarray) -> np.ndarray:
    """Psi evaluated at each time in ts; shape (len(ts), n)."""
    ts = np.asarray(ts, dtype=float)
    if basis.kind == "legendre_shifted":
        s = 2.0 * ts / basis.t_final - 1.0
        vals = npleg.legvander(s, basis.n - 1)
        scale = np.sqrt((2.0 * np.arange(basis.n) + 1.0) / basis.t_final)
        return vals * scale
    return np.array([eval_basis(basis, t) for t in ts])


def eval_control(coeffs: ControlCoefficients, t: float) -> np.ndarray:
    """Control vector u(t) = C Psi(t), shape (p,)."""
    return coeffs.c @ eval_basis(coeffs.basis, t)


def control_grid_max(coeffs: ControlCoefficients, n_grid: int) -> np.ndarray:
    """Per-row max of |u_i(t)| over a uniform n_grid-point grid on [0, T]."""
    ts = np.linspace(0.0, coeffs.basis.t_final, n_grid)
    u = coeffs.c @ eval_basis_grid(coeffs.basis, ts).T  # (p, n_grid)
    return np.max(np.abs(u), axis=1)


def project_admissible(coeffs: ControlCoefficients,
                       n_grid: int = 2010) -> ControlCoefficients:
    """Rescale rows of C so the grid max of each |u_i| is within u_max.

    Rows already within the bound are left untouched, so the projection is
    idempotent.
    """
    gmax = control_grid_max(coeffs, n_grid)
    scale = np.ones_like(gmax)
    # slack keeps the projection idempotent under roundoff
    over = gmax > coeffs.u_max * (1.0 + 1e-12)
    if coeffs.u_max == 0.0:
        scale[over] = 0.0
    else:
        scale[over] = coeffs.u_max / gmax[over]
    if not np.any(over):
        return coeffs
    return replace(coeffs, c=coeffs.c * scale[:, None])

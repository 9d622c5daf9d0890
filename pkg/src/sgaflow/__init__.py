"""Optimal-control training dynamics: a weakly controlled gradient flow whose
control minimizes validation cost at final time, solved by successive
Galerkin approximation."""

__version__ = "0.1.0"

from .basis import BasisSpec, ControlCoefficients, eval_basis, eval_control
from .dataset import Dataset, bootstrap, dither, load_csv
from .dynamics import (AdjointTrajectory, TimeGrid, Trajectory, hamiltonian,
                       integrate_adjoint, integrate_forward)
from .model import (ModelOracle, d_matrix, loss_gradient, loss_hvp,
                    loss_value, phi_gradient, phi_value)
from .sga import (ProblemData, SolverConfig, SolverReport, cost,
                  coefficient_gradient, pointwise_max_control, solve)

__all__ = [
    "BasisSpec", "ControlCoefficients", "eval_basis", "eval_control",
    "Dataset", "bootstrap", "dither", "load_csv",
    "AdjointTrajectory", "TimeGrid", "Trajectory", "hamiltonian",
    "integrate_adjoint", "integrate_forward",
    "ModelOracle", "d_matrix", "loss_gradient", "loss_hvp", "loss_value",
    "phi_gradient", "phi_value",
    "ProblemData", "SolverConfig", "SolverReport", "cost",
    "coefficient_gradient", "pointwise_max_control", "solve",
]

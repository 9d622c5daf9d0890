import numpy as np
import pytest

from sgaflow import ModelOracle, ProblemData
from sgaflow.basis import BasisSpec
from sgaflow.sga import SolverConfig
from sgaflow.verify import (check_coefficient_gradient, check_dp_identity,
                            check_rk4_order, fd_gradient)

from conftest import linear_problem, mlp_problem, quadratic_datasets


def quad_setup(p=1, steps=100, n=2, eps=0.1, u_max=5.0, **kw):
    z1, zd, zv = quadratic_datasets(p)
    basis = BasisSpec("legendre_shifted", n, 1.0)
    config = SolverConfig(eps=eps, t_final=1.0, steps=steps, basis=basis,
                          u_max=u_max, theta0=np.ones(p), **kw)
    return (ModelOracle("linear_features", p), config,
            ProblemData(z1, zd, zv))


class TestFdGradient:
    def test_quadratic_is_near_exact(self):
        g = fd_gradient(lambda x: 0.5 * x @ x, np.array([1.0, -2.0]), 1e-6)
        np.testing.assert_allclose(g, [1.0, -2.0], atol=1e-9)

    def test_constant_function(self):
        g = fd_gradient(lambda x: 3.0, np.array([1.0, 2.0, 3.0]), 1e-5)
        np.testing.assert_array_equal(g, np.zeros(3))

    def test_bilinear_product(self):
        g = fd_gradient(lambda x: x[0] * x[1], np.array([2.0, 3.0]), 1e-6)
        np.testing.assert_allclose(g, [3.0, 2.0], atol=1e-8)

    def test_zero_step_rejected(self):
        with pytest.raises(ValueError):
            fd_gradient(lambda x: 0.0, np.zeros(2), 0.0)

    def test_nonfinite_function_rejected(self):
        with pytest.raises(ValueError):
            fd_gradient(lambda x: np.nan, np.zeros(1), 1e-6)


class TestCheckCoefficientGradient:
    def test_linear_family_passes_tight_tolerance(self):
        o, data = linear_problem(seed=50)
        config = SolverConfig(eps=0.1, t_final=1.0, steps=200,
                              basis=BasisSpec("legendre_shifted", 3, 1.0),
                              u_max=5.0)
        report = check_coefficient_gradient(o, config, data, n_probes=3,
                                            tol=1e-5)
        assert report.passed, report.to_dict()

    def test_mlp_family_passes(self):
        o, data = mlp_problem(seed=51)
        config = SolverConfig(eps=0.1, t_final=1.0, steps=100,
                              basis=BasisSpec("legendre_shifted", 2, 1.0),
                              u_max=5.0)
        report = check_coefficient_gradient(o, config, data, n_probes=1,
                                            tol=1e-3)
        assert report.passed, report.to_dict()

    def test_eps_zero_both_sides_vanish(self):
        o, config, data = quad_setup(eps=0.0, steps=50)
        report = check_coefficient_gradient(o, config, data, n_probes=1,
                                            tol=1e-8)
        assert report.passed


class TestCheckDpIdentity:
    def test_quadratic_reoptimized(self):
        o, config, data = quad_setup(steps=100, max_iters=30)
        report = check_dp_identity(o, config, data)
        assert report.passed, report.to_dict()
        # frozen-control variant is reported alongside
        assert "rel_err_frozen_control" in report.details[0]

    def test_null_control_reduction_is_tight(self):
        o, config, data = quad_setup(steps=100, u_max=0.0, max_iters=3)
        report = check_dp_identity(o, config, data, tol=1e-4)
        assert report.passed, report.to_dict()

    def test_large_probe_step_degrades(self):
        # far outside the linearization regime the identity visibly breaks
        o, config, data = quad_setup(steps=100, max_iters=10)
        small = check_dp_identity(o, config, data, delta=1e-3)
        large = check_dp_identity(o, config, data, delta=1.0)
        assert large.max_rel_err > small.max_rel_err

    def test_refuses_high_dimension(self):
        o, data = linear_problem(d=4, seed=52)
        config = SolverConfig(eps=0.1, t_final=1.0, steps=50,
                              basis=BasisSpec("legendre_shifted", 2, 1.0),
                              u_max=1.0)
        with pytest.raises(ValueError, match="p <= 3"):
            check_dp_identity(o, config, data)


class TestCheckRk4Order:
    def test_quadratic_slope_near_four(self):
        o, config, data = quad_setup(steps=100)
        report = check_rk4_order(o, config, data)
        assert report.passed
        d = report.details[0]
        assert 3.7 <= d["forward_slope"] <= 4.3
        assert 3.7 <= d["adjoint_slope"] <= 4.3

    def test_too_few_levels_rejected(self):
        o, config, data = quad_setup(steps=100)
        with pytest.raises(ValueError, match="3 grid levels"):
            check_rk4_order(o, config, data, step_counts=(50,))

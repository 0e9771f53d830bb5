"""
Unit tests for injectivity_tool.py
"""

import numpy as np
import pytest

from config import InjectivityConfig
from tools.equilibrium_tool import find_equilibria
from tools.injectivity_tool import (
    coeff_map_jacobian,
    coefficient_labels,
    coefficient_vector,
    injectivity_verdict,
)
from tools.linearization_tool import linearize
from tools.model_ir_tool import EquilibriumPoint
from tools.model_parser_tool import parse_model_file


class TestCoefficientVector:
    """Tests for the vectorized coefficient map"""

    def test_labels_row_major(self, product_model):
        """One label per entry of A_0..A_l then B_0..B_r"""
        assert coefficient_labels(product_model.spec) == ["A0[1,1]", "B0[1,1]"]

    def test_four_state_dimension(self, four_state):
        """16 entries per A matrix, 8 for B_0"""
        assert len(coefficient_labels(four_state.spec)) == 16 * 5 + 8

    def test_vector_matches_labels(self, linear_model):
        """vec(A_0), vec(B_0)"""
        eq = EquilibriumPoint((3.0,), 0.0, True)
        model = linearize(linear_model.spec, linear_model.nominal, eq)
        assert coefficient_vector(model).tolist() == [-1.0, 1.0]


class TestInjectivityVerdict:
    """Tests for the rank decision on a given Jacobian"""

    def test_full_column_rank(self):
        """Identity columns are independent"""
        report = injectivity_verdict(np.eye(3))
        assert report.locally_injective
        assert report.jacobian_rank == 3
        assert report.entangled == []

    def test_dead_parameter_is_entangled(self):
        """A zero column is the null direction"""
        J = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 0.0]])
        report = injectivity_verdict(J, param_names=["a", "b"])
        assert not report.locally_injective
        assert report.entangled == ["b"]
        assert report.sensitive_coeffs["a"] == ["c1", "c2"]
        assert report.sensitive_coeffs["b"] == []

    def test_no_parameters_is_vacuous(self):
        """p = 0 is trivially injective"""
        report = injectivity_verdict(np.zeros((4, 0)))
        assert report.locally_injective
        assert report.map_dim == (4, 0)

    def test_to_dict(self):
        """Report is JSON-ready"""
        data = injectivity_verdict(np.eye(2)).to_dict()
        assert data["map_dim"] == [2, 2]
        assert data["locally_injective"] is True


class TestCoeffMapJacobian:
    """Tests for the finite-difference coefficient map"""

    def test_product_parameters_entangled(self, product_model):
        """Only p1*p2 is visible, so p1 and p2 share a null direction"""
        spec, point = product_model.spec, product_model.nominal
        (eq,) = find_equilibria(spec, point)
        assert eq.x_e == pytest.approx((0.5,))
        jac = coeff_map_jacobian(spec, point, eq)
        np.testing.assert_allclose(jac.matrix, [[2.0, -1.0], [0.0, 0.0]], atol=1e-8)
        report = injectivity_verdict(jac, param_names=spec.param_names)
        assert report.jacobian_rank == 1
        assert not report.locally_injective
        assert report.entangled == ["p1", "p2"]

    def test_zero_parameters(self, four_state):
        """The map has no columns"""
        eq = EquilibriumPoint((0.0, 0.0, -1.0, 0.0), 0.0, True)
        jac = coeff_map_jacobian(four_state.spec, four_state.nominal, eq)
        assert jac.matrix.shape == (88, 0)
        assert injectivity_verdict(jac).locally_injective

    def test_unconverged_equilibrium_rejected(self, product_model):
        """The map is only defined at a converged equilibrium"""
        with pytest.raises(ValueError):
            coeff_map_jacobian(
                product_model.spec,
                product_model.nominal,
                EquilibriumPoint((0.0,), 1.0, False),
            )

    def test_tracking_failure_recorded(self):
        """A parameter whose perturbation loses the equilibrium is reported, not raised"""
        model = parse_model_file(
            "[states]\nx\n[params]\nc = 0\n[equations]\ndx = x^2 + c\n"
        )
        eq = EquilibriumPoint((0.0,), 0.0, True)
        jac = coeff_map_jacobian(model.spec, model.nominal, eq, InjectivityConfig(fd_step=1e-3))
        assert "c" in jac.failures
        report = injectivity_verdict(jac, param_names=model.spec.param_names)
        assert not report.locally_injective

    @pytest.mark.slow
    def test_four_state_params_full_rank(self, four_state_params):
        """Thirteen parameters, thirteen independent directions"""
        spec, point = four_state_params.spec, four_state_params.nominal
        (eq,) = find_equilibria(spec, point)
        jac = coeff_map_jacobian(spec, point, eq)
        report = injectivity_verdict(
            jac, param_names=spec.param_names, labels=coefficient_labels(spec), probe=point
        )
        assert report.map_dim == (88, 13)
        assert report.jacobian_rank == 13
        assert report.locally_injective
        assert "B0[2,1]" in report.sensitive_coeffs["p7"]


class TestParameterRescaling:
    """The verdict does not depend on the units parameters are written in"""

    @pytest.mark.parametrize("scales", [(1e-2, 1.0, 1e2), (3.0, 0.25, 7.0), (1e2, 1e2, 1e-2)])
    def test_column_scaling_keeps_verdict(self, scales):
        """J diag(s) has the same rank, injectivity and entangled set as J"""
        rng = np.random.default_rng(5)
        full = rng.standard_normal((6, 3))
        c1, c2 = rng.standard_normal((2, 6))
        dependent = np.column_stack([c1, c2, c1 + c2])
        dead = np.column_stack([c1, np.zeros(6), c2])
        for J in (full, dependent, dead):
            base = injectivity_verdict(J, param_names=["a", "b", "c"])
            scaled = injectivity_verdict(J @ np.diag(scales), param_names=["a", "b", "c"])
            assert scaled.jacobian_rank == base.jacobian_rank
            assert scaled.locally_injective == base.locally_injective
            assert scaled.entangled == base.entangled

    def test_reparametrized_product_model(self, product_model):
        """Writing p1 = 10*q1 and p2 = 10*q2 leaves the product entangled"""
        model = parse_model_file(
            "[states]\nx\n[inputs]\nu = 1\n[params]\nq1 = -0.1\nq2 = 0.2\n"
            "[equations]\ndx = (10*q1)*(10*q2)*x + u\n"
        )
        (eq,) = find_equilibria(model.spec, model.nominal)
        assert eq.x_e == pytest.approx((0.5,))
        report = injectivity_verdict(
            coeff_map_jacobian(model.spec, model.nominal, eq), param_names=["q1", "q2"]
        )
        original = product_model.spec
        (eq0,) = find_equilibria(original, product_model.nominal)
        reference = injectivity_verdict(
            coeff_map_jacobian(original, product_model.nominal, eq0), param_names=["q1", "q2"]
        )
        assert report.jacobian_rank == reference.jacobian_rank == 1
        assert report.entangled == reference.entangled == ["q1", "q2"]

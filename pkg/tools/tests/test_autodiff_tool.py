"""
Unit tests for dual_numbers.py, expression_tool.py and autodiff_tool.py
"""

import math

import numpy as np
import pytest

from tools.autodiff_tool import collapsed_jacobian, jacobian_params, jacobian_slots
from tools.dual_numbers import Dual, int_power
from tools.dual_numbers import exp as dexp
from tools.dual_numbers import log as dlog
from tools.dual_numbers import sin as dsin
from tools.errors import DomainError
from tools.expression_tool import Binding, eval_expr
from tools.model_ir_tool import EquilibriumPoint, eval_rhs
from tools.model_parser_tool import parse_expression, parse_model, parse_model_file

E_FOUR_STATE = EquilibriumPoint((0.0, 0.0, -1.0, 0.0), 0.0, True)

SCALAR = "[states]\nx\n[inputs]\nu\n[params]\np = 1\n[equations]\ndx = -x\n"


@pytest.fixture
def scalar():
    return parse_model(SCALAR)


def evaluate(text, spec, x=0.0, u=0.0, p=1.0):
    return eval_expr(parse_expression(text, spec), Binding(z=[[x]], w=[[u]], p=[p]))


class TestDual:
    """Tests for forward-mode arithmetic"""

    def test_product_rule(self):
        """d(x*y) carries both partials"""
        x = Dual.seeded(3.0, 2, 0)
        y = Dual.seeded(4.0, 2, 1)
        out = x * y + 2.0 * x
        assert out.re == 14.0
        assert out.d.tolist() == [6.0, 3.0]

    def test_quotient_rule(self):
        """d(1/x) = -1/x^2"""
        out = 1.0 / Dual.seeded(2.0, 1, 0)
        assert out.re == 0.5
        assert out.d[0] == pytest.approx(-0.25)

    def test_elementary_functions(self):
        """sin, exp and log derivatives"""
        x = Dual.seeded(0.7, 1, 0)
        assert dsin(x).d[0] == pytest.approx(math.cos(0.7))
        assert dexp(x).d[0] == pytest.approx(math.exp(0.7))
        assert dlog(x).d[0] == pytest.approx(1 / 0.7)

    def test_int_power_matches_float_power(self):
        """Repeated multiplication, including negative exponents"""
        assert int_power(1.5, 5) == pytest.approx(1.5**5)
        assert int_power(2.0, -3) == pytest.approx(0.125)
        assert int_power(7.0, 0) == 1.0
        d = int_power(Dual.seeded(2.0, 1, 0), 3)
        assert (d.re, d.d[0]) == (8.0, 12.0)

    def test_plain_floats_pass_through(self):
        """Module functions accept floats"""
        assert dsin(0.0) == 0.0
        assert dexp(0.0) == 1.0


class TestEvalExpr:
    """Tests for compiled evaluation and domain checks"""

    def test_polynomial(self, scalar):
        """x^2 + 2*x at 3"""
        assert evaluate("x^2 + 2*x", scalar, x=3.0) == 15.0

    def test_slots_and_parameters(self, scalar):
        """Inputs and parameters are read from the binding"""
        assert evaluate("p*u - x", scalar, x=1.0, u=2.0, p=3.0) == 5.0

    def test_negative_integer_power(self, scalar):
        """x^-2 at 2"""
        assert evaluate("x^-2", scalar, x=2.0) == 0.25

    def test_fractional_power_of_negative_base(self, scalar):
        """Non-integer powers need a positive base"""
        with pytest.raises(DomainError, match="nonpositive base"):
            evaluate("x^0.5", scalar, x=-2.0)

    @pytest.mark.parametrize(
        "text, x, message",
        [
            ("log(x)", -1.0, "log of nonpositive"),
            ("sqrt(x)", -1.0, "sqrt of negative"),
            ("1/x", 0.0, "division by zero"),
            ("x^-1", 0.0, "zero raised to a negative power"),
        ],
    )
    def test_domain_errors(self, scalar, text, x, message):
        """Partial operations raise instead of returning nan or inf"""
        with pytest.raises(DomainError, match=message):
            evaluate(text, scalar, x=x)

    def test_domain_error_span_points_at_operation(self, scalar):
        """The span covers the failing node"""
        text = "1 + log(x)"
        with pytest.raises(DomainError) as info:
            evaluate(text, scalar, x=0.0)
        assert info.value.span.begin == text.index("log")

    def test_sqrt_not_differentiable_at_zero(self, scalar):
        """Dual evaluation at the kink raises, float evaluation does not"""
        expr = parse_expression("sqrt(x)", scalar)
        assert eval_expr(expr, Binding(z=[[0.0]], w=[[0.0]], p=[1.0])) == 0.0
        with pytest.raises(DomainError, match="not differentiable"):
            eval_expr(expr, Binding(z=[[Dual.seeded(0.0, 1, 0)]], w=[[0.0]], p=[1.0]))

    def test_dual_real_part_matches_float(self, scalar):
        """Both numeric modes agree on the value"""
        expr = parse_expression("sin(x)^2*exp(-x) + log(1 + x^2)", scalar)
        plain = eval_expr(expr, Binding(z=[[0.3]], w=[[0.0]], p=[1.0]))
        dual = eval_expr(expr, Binding(z=[[Dual.seeded(0.3, 1, 0)]], w=[[0.0]], p=[1.0]))
        assert dual.re == plain


class TestJacobianSlots:
    """Tests for slot Jacobians at an equilibrium"""

    def test_four_state_state_matrices(self, four_state):
        """A_0..A_4 at E = (0, 0, -1, 0), u_bar = (1, 0)"""
        A, _ = jacobian_slots(four_state.spec, E_FOUR_STATE, four_state.nominal)
        assert len(A) == 5
        expected_a0 = np.array(
            [[-1, 1, 0, 0], [0, 0, 1, 1], [0, 0, -1, 1], [-1, 0, 0, -1]], dtype=float
        )
        np.testing.assert_allclose(A[0], expected_a0, atol=1e-14)
        np.testing.assert_allclose(A[1], np.zeros((4, 4)), atol=1e-14)
        np.testing.assert_allclose(A[4], np.zeros((4, 4)), atol=1e-14)
        assert A[2][1, 1] == 1.0 and np.count_nonzero(A[2]) == 1
        assert A[3][2, 2] == 1.0 and np.count_nonzero(A[3]) == 1

    def test_four_state_input_matrix(self, four_state):
        """B_0 carries (1 + sin^2 x) and (2 - sin(v*w - x))"""
        _, B = jacobian_slots(four_state.spec, E_FOUR_STATE, four_state.nominal)
        assert len(B) == 1
        expected = np.array([[0, 0], [1, 0], [0, 0], [0, 2]], dtype=float)
        np.testing.assert_allclose(B[0], expected, atol=1e-14)

    def test_linear_model(self, linear_model):
        """dx = -x + u"""
        eq = EquilibriumPoint((3.0,), 0.0, True)
        A, B = jacobian_slots(linear_model.spec, eq, linear_model.nominal)
        assert A[0].tolist() == [[-1.0]]
        assert B[0].tolist() == [[1.0]]

    def test_batch_matches_column_seeding(self, four_state_params):
        """Batched and one-direction passes are bit-identical"""
        eq = EquilibriumPoint((1.2, -0.4, 0.7, 0.3), 0.0, True)
        A1, B1 = jacobian_slots(four_state_params.spec, eq, four_state_params.nominal, batch=True)
        A2, B2 = jacobian_slots(four_state_params.spec, eq, four_state_params.nominal, batch=False)
        for left, right in zip(A1 + B1, A2 + B2):
            assert np.array_equal(left, right)

    def test_matches_central_differences(self, four_state_params):
        """Forward-mode derivatives agree with finite differences of eval_rhs"""
        spec, point = four_state_params.spec, four_state_params.nominal
        x = [1.2, -0.4, 0.7, 0.3]
        A, B = jacobian_slots(spec, EquilibriumPoint(tuple(x), 0.0, True), point)
        step = 1e-6

        def rhs(z_slots, w_slots):
            return eval_rhs(spec, z_slots, w_slots, point.p_s)

        base_z = [list(x) for _ in range(spec.l + 1)]
        base_w = [list(point.u_bar) for _ in range(spec.r + 1)]
        for d in range(spec.l + 1):
            for i in range(spec.n):
                plus = [row[:] for row in base_z]
                minus = [row[:] for row in base_z]
                plus[d][i] += step
                minus[d][i] -= step
                column = (rhs(plus, base_w) - rhs(minus, base_w)) / (2 * step)
                np.testing.assert_allclose(A[d][:, i], column, atol=1e-6)
        for j in range(spec.k):
            plus = [row[:] for row in base_w]
            minus = [row[:] for row in base_w]
            plus[0][j] += step
            minus[0][j] -= step
            column = (rhs(base_z, plus) - rhs(base_z, minus)) / (2 * step)
            np.testing.assert_allclose(B[0][:, j], column, atol=1e-6)

    def test_collapsed_jacobian_is_sum_of_slots(self, four_state):
        """Tying every state slot together sums A_0..A_l"""
        A, _ = jacobian_slots(four_state.spec, E_FOUR_STATE, four_state.nominal)
        f, J = collapsed_jacobian(four_state.spec, four_state.nominal, E_FOUR_STATE.x_e)
        np.testing.assert_allclose(f, np.zeros(4), atol=1e-15)
        np.testing.assert_allclose(J, sum(A), atol=1e-14)

    def test_nondifferentiable_point_names_slot(self):
        """The failing slot is located by single-direction passes"""
        model = parse_model_file("[states]\nx\n[equations]\ndx = sqrt(x)\n")
        eq = EquilibriumPoint((0.0,), 0.0, True)
        with pytest.raises(DomainError) as info:
            jacobian_slots(model.spec, eq, model.nominal)
        assert info.value.slot == "z0[1]"
        assert info.value.equation == 0

    def test_undefined_value_blames_no_slot(self):
        """log of a negative state fails before any seeding and carries no slot"""
        model = parse_model_file("[states]\nx, y\n[equations]\ndx = -x + log(y)\ndy = -y\n")
        eq = EquilibriumPoint((0.0, -1.0), 0.0, True)
        for batch in (True, False):
            with pytest.raises(DomainError) as info:
                jacobian_slots(model.spec, eq, model.nominal, batch=batch)
            assert info.value.slot is None
            assert info.value.equation == 0
            assert "log" in info.value.reason

    def test_every_failing_slot_named(self):
        """sqrt(x - y) at x = y is not differentiable in either slot"""
        model = parse_model_file("[states]\nx, y\n[equations]\ndx = sqrt(x - y)\ndy = -y\n")
        eq = EquilibriumPoint((0.0, 0.0), 0.0, True)
        with pytest.raises(DomainError) as info:
            jacobian_slots(model.spec, eq, model.nominal)
        assert info.value.slot == "z0[1], z0[2]"

    @pytest.mark.parametrize("x", [0.3, 1.1, -2.7, 12.5])
    def test_chain_rule_within_two_ulps(self, x):
        """d/dx sin(x^2) = 2x cos(x^2) to two units in the last place"""
        model = parse_model_file("[states]\nx\n[equations]\ndx = sin(x^2)\n")
        A, _ = jacobian_slots(model.spec, EquilibriumPoint((x,), 0.0, True), model.nominal)
        expected = 2.0 * x * math.cos(x * x)
        assert abs(A[0][0, 0] - expected) <= 2 * np.spacing(abs(expected))

    def test_unconverged_equilibrium_rejected(self, linear_model):
        """Linearizing at a failed solve is a caller error"""
        with pytest.raises(ValueError):
            jacobian_slots(
                linear_model.spec, EquilibriumPoint((0.0,), 3.0, False), linear_model.nominal
            )


class TestJacobianParams:
    """Tests for parameter derivatives"""

    def test_product_model(self, product_model):
        """d(p1*p2*x)/dp at x = 0.5"""
        eq = EquilibriumPoint((0.5,), 0.0, True)
        J = jacobian_params(product_model.spec, eq, product_model.nominal)
        np.testing.assert_allclose(J, [[1.0, -0.5]])

    def test_no_parameters(self, four_state):
        """n x 0 when the model has none"""
        assert jacobian_params(four_state.spec, E_FOUR_STATE, four_state.nominal).shape == (4, 0)


def _random_term(rng, leaves, depth):
    if depth == 0 or rng.random() < 0.3:
        return leaves[rng.integers(len(leaves))]
    a = _random_term(rng, leaves, depth - 1)
    kind = rng.integers(8)
    if kind < 3:
        b = _random_term(rng, leaves, depth - 1)
        return f"({a}) {'+-*'[kind]} ({b})"
    return ("sin({})", "cos({})", "exp(sin({}))", "({})^2", "({})^3")[kind - 3].format(a)


def _random_model_source(rng) -> str:
    n, k = int(rng.integers(1, 4)), int(rng.integers(0, 3))
    n_tau, n_nu = int(rng.integers(0, 3)), int(rng.integers(0, 2)) if k else 0
    states = [f"x{i + 1}" for i in range(n)]
    inputs = [f"u{j + 1}" for j in range(k)]
    leaves = states + inputs + ["0.5", "1.5", "2"]
    leaves += [f"delay({s}, tau{d + 1})" for s in states for d in range(n_tau)]
    leaves += [f"delay({u}, nu{d + 1})" for u in inputs for d in range(n_nu)]
    lines = ["[states]", ", ".join(states)]
    if k:
        lines += ["[inputs]"] + [f"{u} = {rng.uniform(-1, 1):.6f}" for u in inputs]
    if n_tau or n_nu:
        lines += ["[delays]"]
        lines += [f"state tau{d + 1} = {0.5 * (d + 1)}" for d in range(n_tau)]
        lines += [f"input nu{d + 1} = {0.3 * (d + 1)}" for d in range(n_nu)]
    lines += ["[equations]"] + [f"d{s} = {_random_term(rng, leaves, 3)}" for s in states]
    return "\n".join(lines) + "\n"


class TestRandomModels:
    """Forward-mode slot Jacobians against central differences on generated models"""

    def test_hundred_models_match_central_differences(self):
        """Polynomial and trigonometric right-hand sides at random points in [-1, 1]"""
        rng = np.random.default_rng(11)
        step = 1e-6
        for _ in range(100):
            source = _random_model_source(rng)
            model = parse_model_file(source)
            spec, point = model.spec, model.nominal
            x = rng.uniform(-1.0, 1.0, spec.n)
            A, B = jacobian_slots(spec, EquilibriumPoint(tuple(x), 0.0, True), point)
            J = np.hstack(A + B)

            z = [list(x) for _ in range(spec.l + 1)]
            w = [list(point.u_bar) for _ in range(spec.r + 1)]
            flat = [(z, d, i) for d in range(spec.l + 1) for i in range(spec.n)]
            flat += [(w, d, j) for d in range(spec.r + 1) for j in range(spec.k)]
            for col, (slots, d, i) in enumerate(flat):
                base = slots[d][i]
                slots[d][i] = base + step
                plus = eval_rhs(spec, z, w, point.p_s)
                slots[d][i] = base - step
                minus = eval_rhs(spec, z, w, point.p_s)
                slots[d][i] = base
                fd = (plus - minus) / (2 * step)
                np.testing.assert_allclose(J[:, col], fd, rtol=1e-5, atol=1e-5, err_msg=source)

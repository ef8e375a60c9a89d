import math

import numpy as np
import pytest

from tensorjet import (
    Affine,
    Compose,
    Elementwise,
    Identity,
    MultiTensor,
    Product,
    Shape,
    compose_towers,
    derivative_tower,
    differentiable_derivative,
    evaluate,
    forward_chain,
    get_primitive,
    integer_power,
    partition_weight,
    partitions,
    reverse_chain,
    order_reduce,
    series_eval,
    taylor_series,
    truncate,
)
from tensorjet.multitensor import algebra_product, symmetrize
from tensorjet.operators import reduction_commutes
from tensorjet.program import _from_series_scaling

from _gen import (
    fd_hessian,
    fd_jacobian,
    loglog_slope,
    max_component_gap,
    random_chain,
    random_multitensor,
    random_program,
    rel_gap,
)


def scalar_power(n):
    return Compose(Elementwise(integer_power(n)), Identity(1))


class TestPartitions:
    def test_zero_has_the_empty_partition(self):
        assert partitions(0) == ((),)

    def test_four(self):
        assert partitions(4) == ((4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1))

    def test_counts_match_recurrence(self):
        # two-variable counting recurrence, independent of the enumerator
        def count(n, max_part):
            if n == 0:
                return 1
            return sum(count(n - f, f) for f in range(min(n, max_part), 0, -1))

        for n in range(12):
            assert len(partitions(n)) == count(n, n)
        assert len(partitions(10)) == 42

    def test_descending_lexicographic_order(self):
        for n in range(1, 9):
            ps = partitions(n)
            assert all(sum(p) == n for p in ps)
            assert list(ps) == sorted(ps, reverse=True)

    def test_weights_sum_to_set_partition_counts(self):
        bell = [1, 1, 2, 5, 15, 52, 203]
        for n in range(7):
            assert sum(partition_weight(p) for p in partitions(n)) == bell[n]

    def test_repeated_calls_identical(self):
        assert partitions(6) is partitions(6)


class TestTaylorSeries:
    def test_exp_series_value(self):
        series = taylor_series(Elementwise(get_primitive("exp")), [0.0], 3)
        got = series_eval(series, 0.1, [1.0])[0]
        assert got == pytest.approx(1.0 + 0.1 + 0.005 + 0.1**3 / 6, abs=1e-15)
        assert abs(got - math.exp(0.1)) < 1e-5

    def test_affine_series_is_exact_for_any_step(self):
        p = Affine([[2.0, -1.0], [0.5, 3.0]], [1.0, -2.0])
        v0 = np.array([0.4, -0.3])
        series = taylor_series(p, v0, 1)
        for h in (0.1, 1.0, 7.5):
            v = np.array([1.0, 2.0])
            got = series_eval(series, h, v)
            want = evaluate(p, v0 + h * v)
            assert np.max(np.abs(got - want)) < 1e-12

    def test_zero_step_returns_base_value(self):
        rng = np.random.default_rng(20)
        p = random_program(rng, 2, 2, 2)
        v0 = rng.uniform(-0.5, 0.5, size=2)
        series = taylor_series(p, v0, 3)
        got = series_eval(series, 0.0, rng.uniform(-1, 1, size=2))
        assert np.max(np.abs(got - evaluate(p, v0))) < 1e-14

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("name,v0", [("exp", 0.3), ("sin", 0.7)])
    def test_truncation_error_decays_at_order_plus_one(self, k, name, v0):
        p = Elementwise(get_primitive(name))
        series = taylor_series(p, [v0], k)
        hs = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
        errs = [
            abs(series_eval(series, h, [1.0])[0] - evaluate(p, [v0 + h])[0])
            for h in hs
        ]
        assert abs(loglog_slope(hs, errs) - (k + 1)) < 0.3


class TestComposeTowers:
    def test_second_derivative_of_sine_of_square(self):
        f = Elementwise(get_primitive("sin"))
        g = scalar_power(2)
        inner = derivative_tower(g, [0.0], 2)
        outer = derivative_tower(f, inner.value, 2)
        out = compose_towers(outer, inner)
        # f'(g) g'' + f''(g) (g')^2 at 0 = cos(0)*2 + 0 = 2
        assert out.component(2)[0, 0, 0] == pytest.approx(2.0, abs=1e-15)

    @pytest.mark.parametrize("x", [0.0, 0.5, 1.2, -0.8])
    def test_second_derivative_formula_pointwise(self, x):
        f = Elementwise(get_primitive("sin"))
        g = scalar_power(2)
        inner = derivative_tower(g, [x], 2)
        outer = derivative_tower(f, inner.value, 2)
        got = compose_towers(outer, inner).component(2)[0, 0, 0]
        want = math.cos(x * x) * 2.0 - math.sin(x * x) * (2.0 * x) ** 2
        assert got == pytest.approx(want, abs=1e-12)

    def test_inner_identity_returns_outer(self):
        rng = np.random.default_rng(21)
        f = random_program(rng, 2, 2, 2)
        v = rng.uniform(-0.5, 0.5, size=2)
        f_tower = derivative_tower(f, v, 3)
        id_tower = derivative_tower(Identity(2), v, 3)
        out = compose_towers(f_tower, id_tower)
        assert max_component_gap(out.tower, f_tower.tower) < 1e-14

    def test_outer_identity_returns_inner(self):
        rng = np.random.default_rng(22)
        g = random_program(rng, 2, 2, 2)
        v = rng.uniform(-0.5, 0.5, size=2)
        g_tower = derivative_tower(g, v, 3)
        id_tower = derivative_tower(Identity(2), g_tower.value, 3)
        out = compose_towers(id_tower, g_tower)
        assert max_component_gap(out.tower, g_tower.tower) < 1e-14

    def test_base_point_mismatch_raises(self):
        f_tower = derivative_tower(Identity(1), [1.0], 2)
        g_tower = derivative_tower(Identity(1), [0.0], 2)
        with pytest.raises(ValueError, match="base point"):
            compose_towers(f_tower, g_tower)

    def test_order_mismatch_raises(self):
        a = derivative_tower(Identity(1), [0.0], 2)
        b = derivative_tower(Identity(1), [0.0], 1)
        with pytest.raises(ValueError, match="order"):
            compose_towers(a, b)

    def test_matches_compose_node_and_finite_differences(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            mid = int(rng.integers(1, 4))
            d = int(rng.integers(1, 4))
            g = random_program(rng, d, mid, 2)
            f = random_program(rng, mid, d, 2)
            v = rng.uniform(-0.6, 0.6, size=d)
            inner = derivative_tower(g, v, 2)
            outer = derivative_tower(f, inner.value, 2)
            got = compose_towers(outer, inner)
            node = derivative_tower(Compose(f, g), v, 2)
            assert max_component_gap(got.tower, node.tower) < 1e-10
            composite = Compose(f, g)
            assert rel_gap(got.component(1), fd_jacobian(composite, v)) < 1e-6
            assert rel_gap(got.component(2), fd_hessian(composite, v)) < 1e-4


class TestChains:
    def test_two_stage_chain_equals_single_composition(self):
        rng = np.random.default_rng(24)
        g = random_program(rng, 1, 2, 1)
        f = random_program(rng, 2, 1, 1)
        v = rng.uniform(-0.5, 0.5, size=1)
        chained = forward_chain([g, f], v, 3)
        inner = derivative_tower(g, v, 3)
        outer = derivative_tower(f, inner.value, 3)
        direct = compose_towers(outer, inner)
        assert max_component_gap(chained.tower, direct.tower) < 1e-12

    def test_forward_and_reverse_jacobians_agree(self):
        rng = np.random.default_rng(25)
        for _ in range(8):
            chain = random_chain(rng, 4, 2, 2)
            v = rng.uniform(-0.5, 0.5, size=2)
            fwd = forward_chain(chain, v, 1)
            rev = reverse_chain(chain, v, 1)
            assert max_component_gap(fwd.tower, rev.tower) < 1e-10

    def test_identity_chain(self):
        chain = [Identity(2)] * 4
        v = np.array([0.3, -0.4])
        t = forward_chain(chain, v, 2)
        assert np.array_equal(t.value, v)
        assert np.array_equal(t.component(1), np.eye(2))
        assert np.all(t.component(2) == 0.0)

    def test_chain_dim_mismatch(self):
        with pytest.raises(ValueError, match="chain"):
            forward_chain([Identity(2), Identity(3)], [0.0, 0.0], 1)


class TestOrderReduction:
    def test_cube_reduces_to_its_derivative(self):
        t = derivative_tower(scalar_power(3), [2.0], 3)
        assert [c.ravel()[0] for c in t.tower.components] == [8.0, 12.0, 12.0, 6.0]
        reduced = order_reduce(t)
        assert [c.ravel()[0] for c in reduced.tower.components] == [12.0, 12.0, 6.0]

    def test_double_reduction_is_second_derivative_tower(self):
        # second derivative of x^3 is 6x: tower (12, 6) at x = 2
        t = derivative_tower(scalar_power(3), [2.0], 3)
        twice = order_reduce(order_reduce(t))
        assert [c.ravel()[0] for c in twice.tower.components] == [12.0, 6.0]

    def test_affine_reduces_to_constant_tower(self):
        A = np.array([[1.0, 2.0], [3.0, 4.0]])
        t = derivative_tower(Affine(A, [0.0, 0.0]), [0.5, 0.5], 2)
        reduced = order_reduce(t)
        assert np.array_equal(reduced.value, A.ravel())
        assert np.all(reduced.component(1) == 0.0)

    def test_order_zero_rejected(self):
        t = derivative_tower(Identity(1), [0.0], 0)
        with pytest.raises(ValueError):
            order_reduce(t)

    def test_commutes_with_adding_an_order_exactly(self):
        rng = np.random.default_rng(26)
        for _ in range(10):
            d = int(rng.integers(1, 4))
            p = random_program(rng, d, d, 2)
            v = rng.uniform(-0.5, 0.5, size=d)
            deep = derivative_tower(p, v, 3)
            shallow = derivative_tower(p, v, 2)
            assert reduction_commutes(deep, shallow)

    def test_components_shift_bitwise(self):
        rng = np.random.default_rng(27)
        p = random_program(rng, 2, 2, 2)
        v = rng.uniform(-0.5, 0.5, size=2)
        t = derivative_tower(p, v, 3)
        reduced = order_reduce(t)
        for j in range(reduced.order + 1):
            want = t.component(j + 1).reshape((4,) + (2,) * j)
            assert np.array_equal(reduced.component(j), want)


class TestDifferentiableDerivative:
    def test_sine_derivative_is_cosine(self):
        dsin = differentiable_derivative(Elementwise(get_primitive("sin")), 1)
        got = derivative_tower(dsin, [0.0], 2)
        want = derivative_tower(Elementwise(get_primitive("cos")), [0.0], 2)
        assert max_component_gap(got.tower, want.tower) < 1e-12
        for x in (0.3, 1.1):
            assert evaluate(dsin, [x])[0] == pytest.approx(math.cos(x), abs=1e-15)

    def test_affine_derivative_is_constant(self):
        A = np.array([[2.0, 1.0], [0.0, -1.0]])
        d = differentiable_derivative(Affine(A, [5.0, 5.0]), 1)
        v = np.array([0.1, 0.9])
        assert np.array_equal(evaluate(d, v), A.ravel())
        t = derivative_tower(d, v, 1)
        assert np.all(t.component(1) == 0.0)

    def test_nesting_matches_single_second_order_extraction(self):
        p = Elementwise(get_primitive("sin"))
        nested = differentiable_derivative(differentiable_derivative(p, 1), 1)
        single = differentiable_derivative(p, 2)
        v = [0.4]
        a = derivative_tower(nested, v, 2)
        b = derivative_tower(single, v, 2)
        assert max_component_gap(a.tower, b.tower) < 1e-12

    def test_order_must_be_positive(self):
        with pytest.raises(ValueError):
            differentiable_derivative(Identity(1), 0)


class TestShiftHomomorphisms:
    def test_series_of_product_is_product_of_series(self):
        rng = np.random.default_rng(28)
        for _ in range(8):
            a = random_program(rng, 2, 2, 2)
            b = random_program(rng, 2, 2, 2)
            v0 = rng.uniform(-0.5, 0.5, size=2)
            k = 3
            got = taylor_series(Product((a, b)), v0, k).tower
            sa = taylor_series(a, v0, k).tower
            sb = taylor_series(b, v0, k).tower
            want = symmetrize(algebra_product(sa, sb, max_order=k))
            assert max_component_gap(got, want) < 1e-10

    def test_series_of_composition_composes_series_exactly_for_polynomials(self):
        # for polynomial stages the truncated series are exact maps, so
        # expanding the composite equals running one series into the other
        rng = np.random.default_rng(29)
        for _ in range(8):
            inner = random_multitensor(rng, 2, 2, 2)
            outer = random_multitensor(rng, 1, 2, 2)
            from tensorjet import ContractionLayer

            g = ContractionLayer(inner)
            f = ContractionLayer(outer)
            v0 = rng.uniform(-0.5, 0.5, size=2)
            k = 4  # total degree of f . g
            s_fg = taylor_series(Compose(f, g), v0, k)
            s_g = taylor_series(g, v0, k)
            base_f = evaluate(g, v0)
            s_f = taylor_series(f, base_f, k)
            for h in (0.5, 1.0, 2.0):
                v = rng.uniform(-1.0, 1.0, size=2)
                via_composite = series_eval(s_fg, h, v)
                mid = series_eval(s_g, h, v) - base_f
                via_stages = series_eval(s_f, 1.0, mid)
                scale = max(1.0, float(np.max(np.abs(via_composite))))
                assert np.max(np.abs(via_composite - via_stages)) / scale < 1e-10

    def test_composition_error_decays_at_truncation_order(self):
        f = Elementwise(get_primitive("exp"))
        g = Elementwise(get_primitive("sin"))
        p = Compose(f, g)
        for k in (1, 2, 3):
            series = taylor_series(p, [0.4], k)
            hs = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
            errs = [
                abs(series_eval(series, h, [1.0])[0] - evaluate(p, [0.4 + h])[0])
                for h in hs
            ]
            assert abs(loglog_slope(hs, errs) - (k + 1)) < 0.3

import random
from fractions import Fraction

import pytest

from src.cycleq import CoeffQuadruple, base_coefficients, build_quadratic, reduce_once
from src.graph import GraphError, MissingCycle, TreeGraph, enumerate_missing_cycles, parse_graph
from src.model import compute_sigma, sample_model
from src.pit import ZeroTester
from src.symexpr import EvalContext, Quadratic, evaluate, pretty, sym
from tests.graphs import (
    HARD_TREES,
    IDENTIFIABLE_CYCLES,
    UNIDENTIFIABLE_CYCLES,
    path_graph,
    random_graph_text,
)


def value(e, ctx: EvalContext) -> Fraction:
    result = evaluate(e, ctx)
    assert result.is_rational
    return result.u


def substitution_quadratic(g: TreeGraph, cyc: MissingCycle, ctx: EvalContext) -> tuple[Fraction, ...]:
    """Fixed-point equation of the composed Moebius maps x_{k+1} = -(b x_k + d)/(a x_k + c)."""
    m = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]
    for v, w in cyc.edges():
        p, q = g.pa(v), g.pa(w)
        a, b = ctx.sigma[p, q], -ctx.sigma[p, w]
        c, d = -ctx.sigma[v, q], ctx.sigma[v, w]
        step = [[-b, -d], [a, c]]
        m = [
            [sum(step[r][k] * m[k][col] for k in range(2)) for col in range(2)]
            for r in range(2)
        ]
    (alpha, beta), (gamma, delta) = m
    return gamma, delta - alpha, -beta


def quadratic_values(quad: Quadratic, ctx: EvalContext) -> tuple[Fraction, ...]:
    return value(quad.a, ctx), value(quad.b, ctx), value(quad.c, ctx)


class TestBaseCoefficients:
    def test_missing_edge_equation(self, path_two_four: TreeGraph) -> None:
        quads = base_coefficients(path_two_four, MissingCycle((1, 2, 3)))

        assert quads[0] == CoeffQuadruple(a=sym(0, 1), b=-sym(0, 2), c=-sym(1, 1), d=sym(1, 2))
        assert quads[2] == CoeffQuadruple(a=sym(2, 0), b=-sym(2, 1), c=-sym(3, 0), d=sym(3, 1))

    def test_rejects_non_cycle(self, path_two_four: TreeGraph) -> None:
        with pytest.raises(GraphError):
            base_coefficients(path_two_four, MissingCycle((1, 2, 4)))

    def test_reduce_carries_odd_element(self, path_two_four: TreeGraph) -> None:
        level = base_coefficients(path_two_four, MissingCycle((1, 2, 3)))

        reduced = reduce_once(level)

        assert len(reduced) == 2
        assert reduced[1] is level[2]

    def test_reduce_needs_two(self, path_two_four: TreeGraph) -> None:
        level = base_coefficients(path_two_four, MissingCycle((1, 2, 3)))

        with pytest.raises(ValueError):
            reduce_once(level[:1])


class TestBuildQuadratic:
    def test_true_coefficient_is_a_root(self) -> None:
        rng = random.Random(21)
        pairs = 0
        while pairs < 500:
            g = parse_graph(random_graph_text(rng, rng.randint(3, 6), 0.35))
            quads = [
                (i, build_quadratic(g, cyc))
                for i in range(1, g.n_plus_one)
                for cyc in enumerate_missing_cycles(g, i, max_cycles=4).cycles
            ]
            if not quads:
                continue
            for seed in range(20):
                model = sample_model(g, seed)
                ctx = EvalContext(sigma=compute_sigma(g, model))
                for i, quad in quads:
                    a, b, c = quadratic_values(quad, ctx)
                    x = model.lam[i]
                    assert a * x * x + b * x + c == 0
            pairs += len(quads)

    @pytest.mark.parametrize("length", [3, 4, 5, 6])
    def test_matches_sequential_substitution(self, length: int) -> None:
        g = parse_graph(path_graph(length, tuple(range(1, length + 1))))
        tester = ZeroTester(g)
        for cyc in enumerate_missing_cycles(g, 1).cycles:
            quad = build_quadratic(g, cyc)
            for k in range(3):
                ctx = tester.context(k)
                assert quadratic_values(quad, ctx) == substitution_quadratic(g, cyc, ctx)

    def test_star_four_cycle_is_linear(self, root_confounded: TreeGraph) -> None:
        tester = ZeroTester(root_confounded)

        quad = build_quadratic(root_confounded, MissingCycle((1, 2, 3, 4)))

        assert tester.is_zero(quad.a)
        assert not tester.is_zero(quad.b)

    def test_star_triangle_is_quadratic(self, root_confounded: TreeGraph) -> None:
        tester = ZeroTester(root_confounded)

        quad = build_quadratic(root_confounded, MissingCycle((1, 2, 3)))

        assert not tester.is_zero(quad.a)

    def test_coefficients_print_without_nested_signs(self, path_two_four: TreeGraph) -> None:
        quad = build_quadratic(path_two_four, MissingCycle((1, 2, 3, 4)))

        for coefficient in (quad.a, quad.b, quad.c):
            assert "(-" not in pretty(coefficient)

    def test_two_distinct_roots(self, path_two_four: TreeGraph) -> None:
        tester = ZeroTester(path_two_four)

        quad = build_quadratic(path_two_four, MissingCycle((1, 2, 3)))

        assert not tester.is_zero(quad.a)
        assert not tester.is_zero(quad.discriminant())

    def test_hard_tree_triangle(self) -> None:
        g = parse_graph(HARD_TREES["4680-403"])
        tester = ZeroTester(g)

        quad = build_quadratic(g, MissingCycle((1, 2, 4)))

        assert not tester.is_zero(quad.a)
        assert not tester.is_zero(quad.discriminant())

    def test_consecutive_cycle_has_two_roots(self) -> None:
        g = parse_graph(path_graph(5, (1, 2, 3, 4, 5)))
        tester = ZeroTester(g)

        quad = build_quadratic(g, MissingCycle((1, 2, 3, 4, 5)))

        assert not tester.is_zero(quad.a)
        assert not tester.is_zero(quad.discriminant())

    @pytest.mark.parametrize("n, cycle", UNIDENTIFIABLE_CYCLES)
    def test_unidentifiable_cycles_vanish(self, n: int, cycle: tuple[int, ...]) -> None:
        g = parse_graph(path_graph(n, cycle))
        tester = ZeroTester(g)

        for variant in MissingCycle(cycle).variants():
            quad = build_quadratic(g, variant)
            assert tester.is_zero(quad.a)
            assert tester.is_zero(quad.b)
            assert tester.is_zero(quad.c)

    @pytest.mark.parametrize("n, cycle", IDENTIFIABLE_CYCLES)
    def test_identifiable_cycles_have_a_linear_orientation(self, n: int, cycle: tuple[int, ...]) -> None:
        g = parse_graph(path_graph(n, cycle))
        tester = ZeroTester(g)

        linear = [
            variant
            for variant in MissingCycle(cycle).variants()
            if tester.is_zero((quad := build_quadratic(g, variant)).a) and not tester.is_zero(quad.b)
        ]

        assert linear

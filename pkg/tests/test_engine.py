import itertools
import random

import pytest

from src.config import Config, SearchConfig
from src.engine import CandidateSet, IdTable, TreeIdentifier, preliminary_identify, run_treeid, verify_report
from src.graph import MissingCycle, TreeGraph, parse_graph, trek_exists_avoiding_parent_edge
from src.report import EdgeReport, IdReport, Provenance, Status
from src.symexpr import sym
from tests.graphs import (
    HARD_TREES,
    IDENTIFIABLE_CYCLES,
    PATH_WITH_TWO_FOUR,
    ROOT_CONFOUNDED,
    UNIDENTIFIABLE_CYCLES,
    path_graph,
    random_graph_text,
)


def single_cycle_path_graphs() -> list[tuple[int, tuple[int, ...]]]:
    """Path graphs up to six nodes whose one missing cycle runs through 1 and n."""
    out = []
    for n in range(3, 7):
        for size in range(3, n + 1):
            for inner in itertools.combinations(range(2, n), size - 2):
                for order in itertools.permutations(inner + (n,)):
                    cycle = (1,) + order
                    if cycle[1] < cycle[-1]:
                        out.append((n, cycle))
    return out


def cycle_edges(cycle: tuple[int, ...]) -> frozenset[frozenset[int]]:
    return frozenset(frozenset((cycle[k], cycle[(k + 1) % len(cycle)])) for k in range(len(cycle)))


UNDETERMINED_PATH_CYCLES = {
    (4, cycle_edges((1, 3, 2, 4))),
    (5, cycle_edges((1, 4, 2, 5))),
    (6, cycle_edges((1, 5, 2, 6))),
}


def closure(g: TreeGraph) -> set[int]:
    found = {i for i in range(1, g.n_plus_one) if not g.has_bidirected(0, i)}
    changed = True
    while changed:
        changed = False
        for t in range(1, g.n_plus_one):
            if t in found:
                continue
            if any(
                not g.has_bidirected(s, t) and trek_exists_avoiding_parent_edge(g, s, g.pa(t))
                for s in found
            ):
                found.add(t)
                changed = True
    return found


class TestIdTable:
    def test_candidates_never_grow(self) -> None:
        table = IdTable()
        table.set(1, CandidateSet((sym(0, 1),), Provenance("root-instrument")))

        with pytest.raises(ValueError):
            table.set(1, CandidateSet((sym(0, 1), sym(0, 2)), Provenance("propagation", source=2)))

    def test_size_and_notes(self) -> None:
        table = IdTable()
        table.note(3, "skipped")

        assert table.size(3) == 0
        assert table.get(3) is None
        assert table.diagnostics[3] == ["skipped"]


class TestPreliminary:
    def test_instrument_graph(self, iv_graph: TreeGraph) -> None:
        table = preliminary_identify(iv_graph)

        assert table.get(1).formulas == (sym(0, 1) / sym(0, 0),)
        assert table.get(2).formulas == (sym(0, 2) / sym(0, 1),)
        assert table.get(1).provenance.rule == "root-instrument"

    def test_fully_confounded_root_identifies_nothing(self, root_confounded: TreeGraph) -> None:
        assert preliminary_identify(root_confounded).entries == {}

    def test_no_bidirected_edges(self) -> None:
        g = parse_graph("0->1 1->2 0->3 3->4")

        table = preliminary_identify(g)

        assert all(table.size(i) == 1 for i in range(1, 5))

    def test_propagation_to_confounded_node(self) -> None:
        g = parse_graph("0->1 1->2 0<->2")

        table = preliminary_identify(g)

        assert table.get(2).provenance == Provenance("propagation", source=1)

    def test_matches_trek_closure(self) -> None:
        rng = random.Random(31)
        for _ in range(60):
            g = parse_graph(random_graph_text(rng, rng.randint(2, 6), 0.5))

            table = preliminary_identify(g)

            assert set(table.entries) == closure(g)
            assert all(table.size(i) == 1 for i in table.entries)


class TestRun:
    def test_instrument_graph_report(self, iv_graph: TreeGraph) -> None:
        report = run_treeid(iv_graph)

        assert report.fully_identified
        assert report.edge(1).formulas == (sym(0, 1) / sym(0, 0),)
        assert report.edge(2).formulas == (sym(0, 2) / sym(0, 1),)
        assert report.omega is not None

    @pytest.mark.parametrize("text", [ROOT_CONFOUNDED, PATH_WITH_TWO_FOUR, *HARD_TREES.values()])
    def test_graphs_fully_identified(self, text: str) -> None:
        g = parse_graph(text)

        report = run_treeid(g)

        assert report.fully_identified, report.to_text()
        summary = verify_report(g, report, 100, seed=3)
        assert summary.ok, str(summary)
        assert summary.checks > 0

    def test_triangle_then_square_filters(self, path_two_four: TreeGraph) -> None:
        identifier = TreeIdentifier(path_two_four)

        identifier.apply_cycle(1, MissingCycle((1, 2, 3)))
        assert identifier.table.size(1) == 2

        identifier.apply_cycle(1, MissingCycle((1, 2, 3, 4)))
        assert identifier.table.size(1) == 1

    @pytest.mark.parametrize("n, cycle", UNIDENTIFIABLE_CYCLES)
    def test_unidentifiable_cycles(self, n: int, cycle: tuple[int, ...]) -> None:
        g = parse_graph(path_graph(n, cycle))

        report = run_treeid(g)

        assert not report.fully_identified
        assert report.omega is None
        for v in cycle:
            assert report.edge(v).status == Status.UNIDENTIFIED

    @pytest.mark.parametrize("n, cycle", single_cycle_path_graphs())
    def test_single_missing_cycle_path_graphs(self, n: int, cycle: tuple[int, ...]) -> None:
        report = run_treeid(parse_graph(path_graph(n, cycle)))

        determined = [report.edge(v).status in (Status.UNIQUE, Status.TWO) for v in cycle]
        if (n, cycle_edges(cycle)) in UNDETERMINED_PATH_CYCLES:
            assert not all(determined)
        else:
            assert all(determined), report.to_text()

    def test_hard_tree_square_filters_triangle(self) -> None:
        identifier = TreeIdentifier(parse_graph(HARD_TREES["4680-403"]))

        identifier.apply_cycle(1, MissingCycle((1, 2, 4)))
        assert identifier.table.size(1) == 2

        identifier.apply_cycle(1, MissingCycle((1, 2, 3, 4)))
        assert identifier.table.size(1) == 1
        assert identifier.table.get(1).provenance == Provenance("cycle-filter", cycle=(1, 2, 3, 4))

    @pytest.mark.parametrize("n, cycle", IDENTIFIABLE_CYCLES)
    def test_identifiable_cycles(self, n: int, cycle: tuple[int, ...]) -> None:
        g = parse_graph(path_graph(n, cycle))

        report = run_treeid(g)

        for v in cycle:
            assert report.edge(v).status == Status.UNIQUE, report.to_text()
        assert verify_report(g, report, 20, seed=5).ok

    @pytest.mark.parametrize("length", [5, 6, 7, 8])
    def test_consecutive_cycles_two_identified(self, length: int) -> None:
        g = parse_graph(path_graph(length, tuple(range(1, length + 1))))

        report = run_treeid(g)

        for v in range(1, length + 1):
            assert report.edge(v).status in (Status.UNIQUE, Status.TWO)
        assert verify_report(g, report, 10, seed=7).ok

    def test_two_candidates_propagate(self) -> None:
        g = parse_graph(path_graph(5, (1, 2, 3, 4, 5)))
        identifier = TreeIdentifier(g)

        identifier.apply_cycle(1, MissingCycle((1, 2, 3, 4, 5)))
        identifier.propagate(1)

        assert identifier.table.size(1) == 2
        assert identifier.table.size(2) == 2
        assert identifier.table.size(5) == 2
        assert identifier.table.get(2).quadratic is not None

    def test_propagation_keeps_unique_target(self) -> None:
        g = parse_graph(path_graph(5, (1, 2, 3, 4, 5)))
        identifier = TreeIdentifier(g)
        fixed = CandidateSet((sym(0, 2) / sym(0, 1),), Provenance("root-instrument"))
        identifier.table.set(2, fixed)

        identifier.apply_cycle(1, MissingCycle((1, 2, 3, 4, 5)))
        identifier.propagate(1)

        assert identifier.table.get(2) is fixed

    def test_deterministic(self, path_two_four: TreeGraph) -> None:
        first = run_treeid(path_two_four).to_json()
        second = run_treeid(path_two_four).to_json()

        assert first == second

    def test_cycle_length_limit(self, path_two_four: TreeGraph) -> None:
        config = Config(search=SearchConfig(max_cycle_len=3))

        report = run_treeid(path_two_four, config)

        assert report.max_cycle_len == 3
        assert all(e.status != Status.UNIQUE or e.provenance.cycle is None or len(e.provenance.cycle) == 3
                   for e in report.edges)

    def test_truncation_reported(self, root_confounded: TreeGraph) -> None:
        config = Config(search=SearchConfig(max_cycles=1))

        report = run_treeid(root_confounded, config)

        assert report.truncated_cycles

    def test_error_bound_reported(self, path_two_four: TreeGraph) -> None:
        report = run_treeid(path_two_four)

        assert 0.0 < report.pit.max_error_bound <= 1.0


class TestVerify:
    def test_detects_wrong_formula(self, iv_graph: TreeGraph) -> None:
        report = run_treeid(iv_graph)
        edges = list(report.edges)
        edges[1] = EdgeReport(
            child=2,
            status=Status.UNIQUE,
            formulas=(sym(1, 2) / sym(1, 1),),
            provenance=edges[1].provenance,
        )
        broken = IdReport(graph=iv_graph, edges=tuple(edges), pit=report.pit)

        summary = verify_report(iv_graph, broken, 10, seed=1)

        assert not summary.ok
        assert summary.violations[0].edge == "λ(1→2)"

    def test_summary_text(self, iv_graph: TreeGraph) -> None:
        summary = verify_report(iv_graph, run_treeid(iv_graph), 5, seed=2)

        assert str(summary).startswith("5/5 exact")
        assert summary.models == 5

import logging
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from src.config import Config
from src.cycleq import build_quadratic
from src.graph import CycleListing, MissingCycle, TreeGraph, enumerate_missing_cycles, trek_exists_avoiding_parent_edge
from src.model import compute_sigma, sample_model
from src.pit import DenominatorIdenticallyZero, ZeroTester, satisfies_equation, solve_quadratic
from src.report import EdgeReport, IdReport, OmegaEntry, PitSummary, Provenance, Status, edge_name
from src.symexpr import (
    DegenerateEvaluation,
    EvalContext,
    EvaluationError,
    Quadratic,
    SigmaExpr,
    evaluate,
    sym,
)

logger = logging.getLogger(__name__)

PIT_FAILURES = (DenominatorIdenticallyZero, EvaluationError)


@dataclass(frozen=True)
class CandidateSet:
    """Closed-form candidates for one coefficient.

    Two-candidate sets keep the quadratic whose roots they list, so later
    equations can be intersected with it without choosing a square-root
    branch.
    """

    formulas: tuple[SigmaExpr, ...]
    provenance: Provenance
    quadratic: Quadratic | None = None

    def __len__(self) -> int:
        return len(self.formulas)


class IdTable:
    """Candidate sets per node; a node's count of candidates never grows."""

    def __init__(self) -> None:
        self.entries: dict[int, CandidateSet] = {}
        self.diagnostics: dict[int, list[str]] = defaultdict(list)

    def get(self, i: int) -> CandidateSet | None:
        return self.entries.get(i)

    def size(self, i: int) -> int:
        entry = self.entries.get(i)
        return 0 if entry is None else len(entry)

    def set(self, i: int, candidates: CandidateSet) -> None:
        old = self.size(i)
        if old and len(candidates) > old:
            raise ValueError(f"node {i} would go from {old} to {len(candidates)} candidates")
        self.entries[i] = candidates

    def note(self, i: int, message: str) -> None:
        self.diagnostics[i].append(message)


class TreeIdentifier:
    def __init__(self, graph: TreeGraph, config: Config | None = None, tester: ZeroTester | None = None):
        self.graph = graph
        self.config = config or Config()
        pit = self.config.pit
        self.tester = tester or ZeroTester(
            graph,
            trials=pit.trials,
            seed=pit.seed,
            max_retries=pit.max_retries,
            ranges=self.config.sampling,
        )
        self.table = IdTable()
        self._cycles: dict[int, CycleListing] = {}

    def _name(self, i: int) -> str:
        return edge_name(self.graph, i)

    def _cycle_text(self, cyc: MissingCycle) -> str:
        return "-".join(str(v) for v in cyc.relabel(self.graph.labels))

    def cycles(self, i: int) -> CycleListing:
        if i not in self._cycles:
            search = self.config.search
            self._cycles[i] = enumerate_missing_cycles(
                self.graph, i, max_len=search.max_cycle_len, max_cycles=search.max_cycles
            )
        return self._cycles[i]

    def preliminary_identify(self) -> IdTable:
        g = self.graph
        for i in range(1, g.n_plus_one):
            if not g.has_bidirected(0, i):
                formula = sym(0, i) / sym(0, g.pa(i))
                self.table.set(i, CandidateSet((formula,), Provenance("root-instrument")))
                logger.debug(f"{self._name(i)} identified by the root instrument")
                self.propagate(i)
        return self.table

    def propagate(self, i: int) -> IdTable:
        g = self.graph
        for j in range(1, g.n_plus_one):
            source = self.table.get(i)
            if source is None:
                break
            if j == i or g.has_bidirected(i, j):
                continue
            if 0 < self.table.size(j) <= len(source):
                continue
            try:
                propagated = self._propagated(i, source, j)
            except PIT_FAILURES as e:
                logger.warning(f"Propagation {self._name(i)} -> {self._name(j)} failed: {e}")
                self.table.note(j, f"propagation from {self._name(i)} failed: {e}")
                continue
            if propagated is None:
                continue
            self.table.set(j, propagated)
            logger.debug(f"{self._name(j)} propagated from {self._name(i)} ({len(propagated)} candidates)")
            self.propagate(j)
        return self.table

    def _propagated(self, i: int, source: CandidateSet, j: int) -> CandidateSet | None:
        g = self.graph
        p, q = g.pa(i), g.pa(j)
        s_pq, s_iq, s_pj, s_ij = sym(p, q), sym(i, q), sym(p, j), sym(i, j)
        provenance = Provenance("propagation", source=i)

        def image(lam: SigmaExpr) -> SigmaExpr:
            return (lam * s_pj - s_ij) / (lam * s_pq - s_iq)

        if len(source) == 1:
            lam = source.formulas[0]
            if not trek_exists_avoiding_parent_edge(g, i, q) and self.tester.is_zero(lam * s_pq - s_iq):
                return None
            return CandidateSet((image(lam),), provenance)

        quad = source.quadratic
        if quad is None:
            raise ValueError(f"two candidates at node {i} without their quadratic")
        # substitute x_i = (s_iq*x_j - s_ij)/(s_pq*x_j - s_pj) and clear the denominator
        a = quad.a * s_iq * s_iq + quad.b * s_iq * s_pq + quad.c * s_pq * s_pq
        if self.tester.is_zero(a):
            return None
        b = -(2 * quad.a * s_iq * s_ij + quad.b * (s_iq * s_pj + s_ij * s_pq) + 2 * quad.c * s_pq * s_pj)
        c = quad.a * s_ij * s_ij + quad.b * s_ij * s_pj + quad.c * s_pj * s_pj
        mapped = Quadratic(a, b, c)
        if self.tester.is_zero(mapped.discriminant()):
            return CandidateSet((-b / (2 * a),), provenance)
        return CandidateSet(tuple(image(lam) for lam in source.formulas), provenance, quadratic=mapped)

    def apply_cycle(self, i: int, cyc: MissingCycle) -> bool:
        """Intersect node i's candidates with the equation of a cycle starting at i."""
        quad = build_quadratic(self.graph, cyc)
        tester = self.tester
        text = self._cycle_text(cyc)

        if tester.is_zero(quad.a):
            if tester.is_zero(quad.b):
                logger.debug(f"Cycle {text}: equation vanishes")
                return False
            formula = -quad.c / quad.b
            self.table.set(i, CandidateSet((formula,), Provenance("cycle-linear", cycle=cyc.nodes)))
            logger.debug(f"Cycle {text}: linear equation identifies {self._name(i)}")
            return True

        current = self.table.get(i)
        if current is None:
            roots = solve_quadratic(quad.a, quad.b, quad.c, tester)
            if len(roots) == 1:
                entry = CandidateSet(roots, Provenance("cycle-double-root", cycle=cyc.nodes))
            else:
                entry = CandidateSet(roots, Provenance("cycle-quadratic", cycle=cyc.nodes), quadratic=quad)
            self.table.set(i, entry)
            logger.debug(f"Cycle {text}: {len(roots)} candidates for {self._name(i)}")
            return True
        if len(current) == 1 or current.quadratic is None:
            return False
        return self._filter(i, current.quadratic, quad, cyc)

    def _filter(self, i: int, known: Quadratic, new: Quadratic, cyc: MissingCycle) -> bool:
        # a common root of both quadratics also solves L*x + M = 0
        tester = self.tester
        text = self._cycle_text(cyc)
        lin = new.a * known.b - known.a * new.b
        rest = new.a * known.c - known.a * new.c
        if not tester.is_zero(lin):
            formula = -rest / lin
            if satisfies_equation(formula, known.a, known.b, known.c, tester) and satisfies_equation(
                formula, new.a, new.b, new.c, tester
            ):
                self.table.set(i, CandidateSet((formula,), Provenance("cycle-filter", cycle=cyc.nodes)))
                logger.debug(f"Cycle {text}: one candidate of {self._name(i)} remains")
                return True
            logger.warning(f"Cycle {text}: eliminated root does not solve both equations")
            self.table.note(i, f"cycle {text}: eliminated root does not solve both equations")
            return False
        if tester.is_zero(rest):
            logger.debug(f"Cycle {text}: same two candidates for {self._name(i)}")
            return False
        logger.warning(f"Cycle {text}: equation has no root in common with {self._name(i)}")
        self.table.note(i, f"cycle {text}: no common root with earlier equations")
        return False

    def _try_cycle(self, i: int, cyc: MissingCycle) -> bool:
        try:
            return self.apply_cycle(i, cyc)
        except PIT_FAILURES as e:
            text = self._cycle_text(cyc)
            logger.warning(f"Cycle {text} for {self._name(i)} skipped: {e}")
            self.table.note(i, f"cycle {text} skipped: {e}")
            return False

    def _orientation_fallback(self) -> None:
        g = self.graph
        for i in range(1, g.n_plus_one):
            if self.table.size(i) == 1:
                continue
            for cyc in self.cycles(i).cycles:
                for variant in cyc.variants()[1:]:
                    v = variant.start
                    if self.table.size(v) == 1:
                        continue
                    if self._try_cycle(v, variant):
                        self.propagate(v)
                if self.table.size(i) == 1:
                    break

    def run(self) -> IdReport:
        g = self.graph
        logger.info(f"Identifying {g.n} edges (seed {self.tester.seed}, {self.tester.trials} trials)")
        self.preliminary_identify()
        for i in range(1, g.n_plus_one):
            if self.table.size(i) == 1:
                continue
            for cyc in self.cycles(i).cycles:
                self._try_cycle(i, cyc)
                if self.table.size(i) == 1:
                    break
            if self.table.size(i):
                self.propagate(i)
        self._orientation_fallback()
        return self.report()

    def omega_formulas(self) -> tuple[OmegaEntry, ...]:
        g = self.graph
        lam = {i: self.table.entries[i].formulas[0] for i in range(1, g.n_plus_one)}
        out = [OmegaEntry(0, 0, sym(0, 0))]
        for j in range(1, g.n_plus_one):
            if g.has_bidirected(0, j):
                out.append(OmegaEntry(0, j, sym(0, j) - lam[j] * sym(0, g.pa(j))))
        for i in range(1, g.n_plus_one):
            p = g.pa(i)
            for j in range(i, g.n_plus_one):
                if j != i and not g.has_bidirected(i, j):
                    continue
                q = g.pa(j)
                formula = lam[i] * lam[j] * sym(p, q) - lam[i] * sym(p, j) - lam[j] * sym(i, q) + sym(i, j)
                out.append(OmegaEntry(i, j, formula))
        return tuple(out)

    def report(self) -> IdReport:
        g = self.graph
        edges = []
        for i in range(1, g.n_plus_one):
            entry = self.table.get(i)
            diagnostics = tuple(self.table.diagnostics.get(i, ()))
            truncated = i in self._cycles and self._cycles[i].truncated
            if entry is None:
                status = Status.UNKNOWN if diagnostics else Status.UNIDENTIFIED
                edges.append(EdgeReport(i, status, diagnostics=diagnostics, truncated=truncated))
                continue
            status = Status.UNIQUE if len(entry) == 1 else Status.TWO
            edges.append(EdgeReport(i, status, entry.formulas, entry.provenance, diagnostics, truncated))

        unique = sum(e.status == Status.UNIQUE for e in edges)
        logger.info(f"{unique}/{len(edges)} edges identified uniquely")
        everything = bool(edges) and unique == len(edges)
        return IdReport(
            graph=g,
            edges=tuple(edges),
            pit=PitSummary(
                trials=self.tester.trials,
                seed=self.tester.seed,
                max_retries=self.tester.max_retries,
                max_error_bound=self.tester.max_error_bound,
            ),
            max_cycle_len=self.config.search.max_cycle_len,
            max_cycles=self.config.search.max_cycles,
            omega=self.omega_formulas() if everything else None,
        )


def preliminary_identify(g: TreeGraph, config: Config | None = None) -> IdTable:
    return TreeIdentifier(g, config).preliminary_identify()


def run_treeid(g: TreeGraph, config: Config | None = None) -> IdReport:
    return TreeIdentifier(g, config).run()


@dataclass(frozen=True)
class Violation:
    edge: str
    model_seed: int
    detail: str


@dataclass
class VerificationSummary:
    models: int = 0
    exact_models: int = 0
    checks: int = 0
    matches: int = 0
    degenerate: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        lines = [
            f"{self.exact_models}/{self.models} exact",
            f"{self.matches}/{self.checks} formula checks matched",
        ]
        if self.degenerate:
            lines.append(f"{self.degenerate} checks skipped at degenerate models")
        lines.append(f"{len(self.violations)} violations")
        lines.extend(f"  {v.edge} at model seed {v.model_seed}: {v.detail}" for v in self.violations)
        return "\n".join(lines)


def _matches(formulas: tuple[SigmaExpr, ...], ctx: EvalContext, truth: Fraction) -> bool:
    for f in formulas:
        value = evaluate(f, ctx)
        if value.is_rational and value.u == truth:
            return True
    return False


def verify_report(
    g: TreeGraph, report: IdReport, n_models: int, seed: int, config: Config | None = None
) -> VerificationSummary:
    """Check every claimed formula exactly against freshly sampled models."""
    sampling = (config or Config()).sampling
    rng = random.Random(f"verify-{seed}")
    summary = VerificationSummary()
    for _ in range(n_models):
        model_seed = rng.getrandbits(64)
        model = sample_model(g, model_seed, sampling)
        ctx = EvalContext(sigma=compute_sigma(g, model), seed=model_seed)
        claims: list[tuple[str, tuple[SigmaExpr, ...], Fraction]] = [
            (edge_name(g, e.child), e.formulas, model.lam[e.child])
            for e in report.edges
            if e.status in (Status.UNIQUE, Status.TWO)
        ]
        for w in report.omega or ():
            claims.append((f"ω({g.labels[w.i]},{g.labels[w.j]})", (w.formula,), model.omega_at(w.i, w.j)))

        exact = True
        for name, formulas, truth in claims:
            try:
                matched = _matches(formulas, ctx, truth)
            except DegenerateEvaluation:
                summary.degenerate += 1
                exact = False
                continue
            except EvaluationError as e:
                matched = False
                logger.debug(f"{name} failed to evaluate: {e}")
            summary.checks += 1
            if matched:
                summary.matches += 1
            else:
                exact = False
                summary.violations.append(
                    Violation(edge=name, model_seed=model_seed, detail=f"true value {truth} not reproduced")
                )
        summary.models += 1
        summary.exact_models += exact
    logger.info(f"Verified against {n_models} models: {len(summary.violations)} violations")
    return summary

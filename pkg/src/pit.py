"""Randomized zero testing by exact evaluation at sampled models."""

import logging
import random

from src.config import DEFAULT_SEED, SamplingConfig
from src.graph import TreeGraph
from src.model import compute_sigma, sample_model
from src.symexpr import DegenerateEvaluation, EvalContext, Quadratic, SigmaExpr, evaluate, sqrt

logger = logging.getLogger(__name__)


class DenominatorIdenticallyZero(Exception):
    """Raised when every sampled model makes an expression divide by zero."""
    pass


class ZeroTester:
    """Decides whether expressions vanish on the models of one graph.

    Sampled models are cached and shared between calls, so common
    subexpressions are evaluated once per model. A "not zero" answer is
    certain; a "zero" answer is wrong with probability at most
    (deg / |S|) ** trials.
    """

    def __init__(
        self,
        graph: TreeGraph,
        trials: int = 3,
        seed: int = DEFAULT_SEED,
        max_retries: int = 8,
        ranges: SamplingConfig | None = None,
    ):
        if trials < 1:
            raise ValueError("trials must be at least 1")
        self.graph = graph
        self.trials = trials
        self.seed = seed
        self.max_retries = max_retries
        self.ranges = ranges or SamplingConfig()
        self.max_error_bound = 0.0
        self._seed_stream = random.Random(seed)
        self._contexts: list[EvalContext] = []
        # every covariance is a polynomial of this degree in the parameters
        self._param_degree = 2 * max(graph.depth(i) for i in graph.nodes) + 1

    def context(self, k: int) -> EvalContext:
        while len(self._contexts) <= k:
            model_seed = self._seed_stream.getrandbits(64)
            model = sample_model(self.graph, model_seed, self.ranges)
            self._contexts.append(
                EvalContext(sigma=compute_sigma(self.graph, model), seed=model_seed)
            )
        return self._contexts[k]

    def error_bound(self, e: SigmaExpr) -> float:
        degree = e.degree[0] * self._param_degree
        return min(1.0, (degree / self.ranges.support_size) ** self.trials)

    def is_zero(self, e: SigmaExpr) -> bool:
        zeros = 0
        attempts = self.trials + self.max_retries
        for k in range(attempts):
            try:
                value = evaluate(e, self.context(k))
            except DegenerateEvaluation:
                logger.debug(f"Expression degenerate at model {k}, drawing another")
                continue
            if not value.is_zero():
                return False
            zeros += 1
            if zeros == self.trials:
                self.max_error_bound = max(self.max_error_bound, self.error_bound(e))
                return True
        raise DenominatorIdenticallyZero(
            f"expression undefined at {attempts - zeros} of {attempts} sampled models"
        )


def is_zero(e: SigmaExpr, g: TreeGraph, trials: int = 3, seed: int = DEFAULT_SEED) -> bool:
    return ZeroTester(g, trials=trials, seed=seed).is_zero(e)


def solve_quadratic(
    a: SigmaExpr, b: SigmaExpr, c: SigmaExpr, tester: ZeroTester
) -> tuple[SigmaExpr, ...]:
    """Roots of a*x^2 + b*x + c for a not identically zero, "+" branch first."""
    disc = Quadratic(a, b, c).discriminant()
    if tester.is_zero(disc):
        return (-b / (2 * a),)
    root = sqrt(disc)
    return ((-b + root) / (2 * a), (-b - root) / (2 * a))


def satisfies_equation(
    lam: SigmaExpr, a: SigmaExpr, b: SigmaExpr, c: SigmaExpr, tester: ZeroTester
) -> bool:
    return tester.is_zero(Quadratic(a, b, c).at(lam))

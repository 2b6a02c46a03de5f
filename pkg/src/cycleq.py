"""Quadratic equation for the first node of a missing cycle.

Each missing edge v_i <-> v_{i+1} gives an equation bilinear in the two
coefficients, a*x_i*x_{i+1} + b*x_i + c*x_{i+1} + d = 0. Pairing neighbouring
equations with 2x2 determinants eliminates the shared unknowns level by level
until a single quadratic in the first node's coefficient remains.
"""

import logging
from dataclasses import dataclass

from src.graph import GraphError, MissingCycle, TreeGraph
from src.symexpr import Quadratic, SigmaExpr, sym

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoeffQuadruple:
    a: SigmaExpr
    b: SigmaExpr
    c: SigmaExpr
    d: SigmaExpr


def base_coefficients(g: TreeGraph, cyc: MissingCycle) -> list[CoeffQuadruple]:
    if not g.is_missing_cycle(cyc.nodes):
        raise GraphError(f"{cyc.nodes} is not a missing cycle of the graph")
    out = []
    for v, w in cyc.edges():
        p, q = g.pa(v), g.pa(w)
        out.append(CoeffQuadruple(a=sym(p, q), b=-sym(p, w), c=-sym(v, q), d=sym(v, w)))
    return out


def _combine(first: CoeffQuadruple, second: CoeffQuadruple) -> CoeffQuadruple:
    a1, b1, c1, d1 = first.a, first.b, first.c, first.d
    a2, b2, c2, d2 = second.a, second.b, second.c, second.d
    return CoeffQuadruple(
        a=a1 * c2 - a2 * b1,
        b=a1 * d2 - b1 * b2,
        c=c1 * c2 - a2 * d1,
        d=c1 * d2 - b2 * d1,
    )


def reduce_once(level: list[CoeffQuadruple]) -> list[CoeffQuadruple]:
    if len(level) < 2:
        raise ValueError("reduce_once needs at least two quadruples")
    out = [_combine(level[k], level[k + 1]) for k in range(0, len(level) - 1, 2)]
    if len(level) % 2:
        out.append(level[-1])
    return out


def build_quadratic(g: TreeGraph, cyc: MissingCycle) -> Quadratic:
    level = base_coefficients(g, cyc)
    levels = 1
    while len(level) > 1:
        level = reduce_once(level)
        levels += 1
    logger.debug(f"Cycle {cyc.nodes}: quadratic after {levels} levels")
    top = level[0]
    return Quadratic(a=top.a, b=top.b + top.c, c=top.d)

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from src.config import SamplingConfig
from src.graph import GraphError, TreeGraph, enumerate_treks

logger = logging.getLogger(__name__)

TREK_ORACLE_MAX_NODES = 10

Matrix = list[list[Fraction]]


@dataclass
class ModelParams:
    """Exact parameters of one model.

    `lam` maps a non-root node to the coefficient on the edge from its parent;
    `omega` maps sorted pairs (diagonal and bidirected edges only) to error
    covariances.
    """

    lam: dict[int, Fraction]
    omega: dict[tuple[int, int], Fraction]

    def omega_at(self, i: int, j: int) -> Fraction:
        key = (i, j) if i <= j else (j, i)
        return self.omega.get(key, Fraction(0))


@dataclass(frozen=True)
class CovMatrix:
    entries: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_rows(cls, rows: Matrix) -> "CovMatrix":
        return cls(tuple(tuple(row) for row in rows))

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, key: tuple[int, int]) -> Fraction:
        i, j = key
        return self.entries[i][j]

    def rows(self) -> Matrix:
        return [list(row) for row in self.entries]

    def to_document(self) -> dict[str, Any]:
        return {
            "sigma": [
                [f"{x.numerator}/{x.denominator}" for x in row] for row in self.entries
            ]
        }

    @classmethod
    def from_document(cls, data: dict[str, Any]) -> "CovMatrix":
        rows = [[Fraction(x) for x in row] for row in data["sigma"]]
        if any(len(row) != len(rows) for row in rows):
            raise ValueError("covariance matrix must be square")
        return cls.from_rows(rows)


def sample_model(g: TreeGraph, seed: int, ranges: SamplingConfig | None = None) -> ModelParams:
    ranges = ranges or SamplingConfig()
    rng = random.Random(seed)
    den = ranges.denominator

    def nonzero(bound: int) -> Fraction:
        return Fraction(rng.choice((-1, 1)) * rng.randint(1, bound), den)

    lam = {i: nonzero(ranges.lambda_numerator) for i in range(1, g.n_plus_one)}
    omega: dict[tuple[int, int], Fraction] = {}
    for pair in sorted(g.bidirected):
        omega[pair] = nonzero(ranges.omega_numerator)

    row_sums = [Fraction(0)] * g.n_plus_one
    for (a, b), value in omega.items():
        row_sums[a] += abs(value)
        row_sums[b] += abs(value)
    for i in g.nodes:
        slack = Fraction(rng.randint(0, ranges.diagonal_slack), den)
        omega[(i, i)] = 1 + row_sums[i] + slack
    return ModelParams(lam=lam, omega=omega)


def path_products(g: TreeGraph, m: ModelParams) -> list[dict[int, Fraction]]:
    """For every node i, the map s -> L(s, i) over the ancestors s of i."""
    out: list[dict[int, Fraction]] = []
    for i in g.nodes:
        p = g.parent[i]
        if p is None:
            out.append({i: Fraction(1)})
            continue
        lam = m.lam[i]
        products = {s: value * lam for s, value in out[p].items()}
        products[i] = Fraction(1)
        out.append(products)
    return out


def compute_sigma(g: TreeGraph, m: ModelParams) -> CovMatrix:
    prods = path_products(g, m)
    size = g.n_plus_one
    rows: Matrix = [[Fraction(0)] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            total = Fraction(0)
            for s, l_si in prods[i].items():
                for t, l_tj in prods[j].items():
                    w = m.omega_at(s, t)
                    if w:
                        total += w * l_si * l_tj
            rows[i][j] = rows[j][i] = total
    return CovMatrix.from_rows(rows)


def sigma_by_trek_enumeration(g: TreeGraph, m: ModelParams, i: int, j: int) -> Fraction:
    if g.n_plus_one > TREK_ORACLE_MAX_NODES:
        raise GraphError(
            f"trek enumeration is limited to {TREK_ORACLE_MAX_NODES} nodes, got {g.n_plus_one}"
        )
    total = Fraction(0)
    for trek in enumerate_treks(g, i, j):
        monomial = m.omega_at(trek.left[0], trek.right[0])
        for v in trek.left[1:] + trek.right[1:]:
            monomial *= m.lam[v]
        total += monomial
    return total


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    size = len(a)
    return [
        [sum((a[r][k] * b[k][c] for k in range(size)), Fraction(0)) for c in range(size)]
        for r in range(size)
    ]


def _transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def omega_matrix(g: TreeGraph, m: ModelParams) -> CovMatrix:
    return CovMatrix.from_rows(
        [[m.omega_at(i, j) for j in g.nodes] for i in g.nodes]
    )


def sigma_by_matrix_formula(g: TreeGraph, m: ModelParams) -> CovMatrix:
    """Sigma = N^T Omega N with N = I + Lam + Lam^2 + ... and Lam[p][i] = lambda_pi."""
    size = g.n_plus_one
    lam: Matrix = [[Fraction(0)] * size for _ in range(size)]
    for i in range(1, size):
        lam[g.pa(i)][i] = m.lam[i]

    neumann: Matrix = [[Fraction(int(r == c)) for c in range(size)] for r in range(size)]
    power = [row[:] for row in neumann]
    for _ in range(size):
        power = _matmul(power, lam)
        if not any(any(row) for row in power):
            break
        neumann = [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(neumann, power)]

    sigma = _matmul(_matmul(_transpose(neumann), omega_matrix(g, m).rows()), neumann)
    return CovMatrix.from_rows(sigma)


def recover_omega(g: TreeGraph, sigma: CovMatrix, lam: dict[int, Fraction]) -> CovMatrix:
    size = g.n_plus_one
    rows: Matrix = [[Fraction(0)] * size for _ in range(size)]
    rows[0][0] = sigma[0, 0]
    for j in range(1, size):
        q = g.pa(j)
        rows[0][j] = rows[j][0] = sigma[0, j] - lam[j] * sigma[0, q]
    for i in range(1, size):
        p = g.pa(i)
        for j in range(i, size):
            q = g.pa(j)
            value = (
                lam[i] * lam[j] * sigma[p, q]
                - lam[i] * sigma[p, j]
                - lam[j] * sigma[i, q]
                + sigma[i, j]
            )
            rows[i][j] = rows[j][i] = value
    return CovMatrix.from_rows(rows)


def is_positive_definite(matrix: CovMatrix) -> bool:
    """Exact LDL^T test: every pivot of the symmetric elimination is positive."""
    a = matrix.rows()
    size = len(a)
    for k in range(size):
        pivot = a[k][k]
        if pivot <= 0:
            return False
        for r in range(k + 1, size):
            factor = a[r][k] / pivot
            if factor:
                for c in range(k + 1, size):
                    a[r][c] -= factor * a[k][c]
    return True

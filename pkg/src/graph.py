import itertools
import logging
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any

import networkx as nx
import yaml

logger = logging.getLogger(__name__)

DIRECTED_TOKEN = re.compile(r"^(\d+)->(\d+)$")
BIDIRECTED_TOKEN = re.compile(r"^(\d+)<->(\d+)$")

GRAPH_FORMATS = ("edgelist", "doc")


class GraphError(Exception):
    """Raised when a graph is malformed or violates a structural precondition."""
    pass


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class TreeGraph:
    """Directed tree rooted at 0 plus bidirected edges, in topological labels.

    `parent[i]` is the parent of node i (None for the root). Ancestors always
    carry smaller labels than their descendants. `labels[i]` is the label node
    i had in the input.
    """

    parent: tuple[int | None, ...]
    bidirected: frozenset[tuple[int, int]]
    labels: tuple[int, ...]

    @property
    def n_plus_one(self) -> int:
        return len(self.parent)

    @property
    def n(self) -> int:
        return len(self.parent) - 1

    @property
    def nodes(self) -> range:
        return range(len(self.parent))

    def pa(self, i: int) -> int:
        p = self.parent[i]
        if p is None:
            raise GraphError("the root has no parent")
        return p

    def has_bidirected(self, i: int, j: int) -> bool:
        return _pair(i, j) in self.bidirected

    @cached_property
    def _children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.nodes]
        for i in self.nodes:
            p = self.parent[i]
            if p is not None:
                kids[p].append(i)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def _neighbours(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in self.nodes]
        for i, j in sorted(self.bidirected):
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    def children(self, i: int) -> tuple[int, ...]:
        return self._children[i]

    def bidirected_neighbours(self, i: int) -> tuple[int, ...]:
        return self._neighbours[i]

    def depth(self, i: int) -> int:
        d = 0
        while (p := self.parent[i]) is not None:
            i = p
            d += 1
        return d

    def is_ancestor(self, a: int, b: int) -> bool:
        """True if a lies on the root-to-b path (b counts as its own ancestor)."""
        node: int | None = b
        while node is not None:
            if node == a:
                return True
            if node < a:
                return False
            node = self.parent[node]
        return False

    def is_missing_cycle(self, nodes: Iterable[int]) -> bool:
        seq = tuple(nodes)
        if len(seq) < 3 or len(set(seq)) != len(seq) or 0 in seq:
            return False
        return all(
            not self.has_bidirected(seq[k], seq[(k + 1) % len(seq)])
            for k in range(len(seq))
        )


@dataclass(frozen=True)
class MissingCycle:
    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < 3:
            raise GraphError(f"a missing cycle needs at least 3 nodes: {self.nodes}")
        if len(set(self.nodes)) != len(self.nodes):
            raise GraphError(f"cycle repeats a node: {self.nodes}")

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def start(self) -> int:
        return self.nodes[0]

    def edges(self) -> Iterator[tuple[int, int]]:
        k = len(self.nodes)
        for idx in range(k):
            yield self.nodes[idx], self.nodes[(idx + 1) % k]

    def variants(self) -> list["MissingCycle"]:
        """Every rotation in both traversal directions, the cycle itself first."""
        out = [self]
        reflected = (self.nodes[0],) + tuple(reversed(self.nodes[1:]))
        for seq in (self.nodes, reflected):
            for r in range(len(seq)):
                rotated = MissingCycle(seq[r:] + seq[:r])
                if rotated not in out:
                    out.append(rotated)
        return out

    def relabel(self, labels: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(labels[v] for v in self.nodes)


@dataclass(frozen=True)
class CycleListing:
    node: int
    cycles: tuple[MissingCycle, ...] = ()
    truncated: bool = False


@dataclass(frozen=True)
class Trek:
    """Two directed paths ending in the trek's endpoints.

    `left` runs from its top to the first endpoint, `right` from its top to
    the second. The tops coincide unless `bidirected` is set, in which case
    they are joined by a bidirected edge.
    """

    left: tuple[int, ...]
    right: tuple[int, ...]
    bidirected: bool = False


def make_graph(
    directed: Iterable[tuple[int, int]],
    bidirected: Iterable[tuple[int, int]] = (),
    nodes: Iterable[int] = (),
) -> TreeGraph:
    digraph = nx.DiGraph()
    digraph.add_nodes_from(nodes)
    for a, b in directed:
        if a < 0 or b < 0:
            raise GraphError(f"node labels must be nonnegative: {a}->{b}")
        if a == b:
            raise GraphError(f"self-loop on node {a}")
        digraph.add_edge(a, b)

    bi_pairs: set[tuple[int, int]] = set()
    for a, b in bidirected:
        if a < 0 or b < 0:
            raise GraphError(f"node labels must be nonnegative: {a}<->{b}")
        if a == b:
            raise GraphError(f"self-loop on node {a}")
        digraph.add_nodes_from((a, b))
        bi_pairs.add(_pair(a, b))

    if digraph.number_of_nodes() == 0:
        raise GraphError("empty graph")
    for v in sorted(digraph.nodes):
        if digraph.in_degree(v) > 1:
            raise GraphError(f"node {v} has two parents")
    if not nx.is_directed_acyclic_graph(digraph):
        raise GraphError("directed component contains a cycle")
    if not nx.is_weakly_connected(digraph):
        raise GraphError("directed component is disconnected")

    order = list(nx.lexicographical_topological_sort(digraph))
    index = {label: k for k, label in enumerate(order)}
    parent: list[int | None] = [None] * len(order)
    for a, b in digraph.edges:
        parent[index[b]] = index[a]

    graph = TreeGraph(
        parent=tuple(parent),
        bidirected=frozenset(_pair(index[a], index[b]) for a, b in bi_pairs),
        labels=tuple(order),
    )
    if graph.labels != tuple(graph.nodes):
        logger.debug(f"Relabeled nodes to topological order: {graph.labels}")
    return graph


def parse_graph(text: str) -> TreeGraph:
    directed: list[tuple[int, int]] = []
    bidirected: list[tuple[int, int]] = []
    for token in text.split():
        if m := DIRECTED_TOKEN.match(token):
            directed.append((int(m.group(1)), int(m.group(2))))
        elif m := BIDIRECTED_TOKEN.match(token):
            bidirected.append((int(m.group(1)), int(m.group(2))))
        else:
            raise GraphError(f"malformed token: {token!r}")
    return make_graph(directed, bidirected)


def graph_from_document(data: Any) -> TreeGraph:
    if not isinstance(data, dict):
        raise GraphError("graph document must be a mapping")
    try:
        directed = [(int(a), int(b)) for a, b in data.get("directed", [])]
        bidirected = [(int(a), int(b)) for a, b in data.get("bidirected", [])]
    except (TypeError, ValueError) as e:
        raise GraphError(f"malformed edge in graph document: {e}") from e
    graph = make_graph(directed, bidirected, nodes=data.get("labels", ()))
    expected = data.get("nodes")
    if expected is not None and expected != graph.n_plus_one:
        raise GraphError(
            f"document declares {expected} nodes but its edges span {graph.n_plus_one}"
        )
    return graph


def graph_to_document(g: TreeGraph) -> dict[str, Any]:
    lab = g.labels
    return {
        "nodes": g.n_plus_one,
        "directed": [[lab[g.pa(i)], lab[i]] for i in g.nodes if i > 0],
        "bidirected": [[lab[a], lab[b]] for a, b in sorted(g.bidirected)],
    }


def to_edgelist(g: TreeGraph) -> str:
    lab = g.labels
    tokens = [f"{lab[g.pa(i)]}->{lab[i]}" for i in g.nodes if i > 0]
    tokens += [f"{lab[a]}<->{lab[b]}" for a, b in sorted(g.bidirected)]
    return " ".join(tokens)


def load_graph(path: str | Path, fmt: str = "edgelist") -> TreeGraph:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Graph file not found: {path}")
    text = path.read_text()
    if fmt == "edgelist":
        return parse_graph(text)
    if fmt == "doc":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise GraphError(f"unreadable graph document: {e}") from e
        return graph_from_document(data)
    raise GraphError(f"unknown graph format: {fmt}")


def ancestors(g: TreeGraph, i: int) -> set[int]:
    out = {i}
    while (p := g.parent[i]) is not None:
        out.add(p)
        i = p
    return out


def missing_edge_graph(g: TreeGraph) -> nx.Graph:
    """Complement of the bidirected edges over the non-root nodes."""
    complement = nx.Graph()
    complement.add_nodes_from(range(1, g.n_plus_one))
    for i in range(1, g.n_plus_one):
        for j in range(i + 1, g.n_plus_one):
            if not g.has_bidirected(i, j):
                complement.add_edge(i, j)
    return complement


def _oriented_cycles(
    complement: nx.Graph, i: int, length: int, blocks: list[set[int]]
) -> Iterator[tuple[int, ...]]:
    """Cycles through i with `length` nodes, starting at i, in lexicographic order.

    Each cycle is produced once, in the direction whose second node is the
    smaller neighbour of i.
    """
    for first in sorted(complement[i]):
        # the edge i-first lies in exactly one block, and so does the cycle
        block = next((b for b in blocks if first in b), None)
        if block is None:
            continue
        stack: list[tuple[int, ...]] = [(i, first)]
        while stack:
            path = stack.pop()
            if len(path) == length:
                if path[-1] > first and complement.has_edge(path[-1], i):
                    yield path
                continue
            on_path = set(path)
            for nxt in sorted(complement[path[-1]], reverse=True):
                if nxt in block and nxt not in on_path:
                    stack.append(path + (nxt,))


def enumerate_missing_cycles(
    g: TreeGraph, i: int, max_len: int | None = None, max_cycles: int = 64
) -> CycleListing:
    if i <= 0:
        raise GraphError("missing cycles are defined for non-root nodes only")
    bound = g.n if max_len is None else min(max_len, g.n)
    complement = missing_edge_graph(g)
    if bound < 3 or complement.degree(i) < 2:
        return CycleListing(node=i)

    blocks = [b for b in nx.biconnected_components(complement) if i in b and len(b) >= 3]
    if not blocks:
        return CycleListing(node=i)
    bound = min(bound, max(len(b) for b in blocks))
    # shortest first; stops one past the cap so truncation is visible
    oriented = (
        cycle
        for length in range(3, bound + 1)
        for cycle in _oriented_cycles(complement, i, length, blocks)
    )
    found = list(itertools.islice(oriented, max_cycles + 1))
    truncated = len(found) > max_cycles
    if truncated:
        logger.warning(
            f"Node {g.labels[i]}: more than {max_cycles} missing cycles, keeping the first {max_cycles}"
        )
    return CycleListing(
        node=i,
        cycles=tuple(MissingCycle(c) for c in found[:max_cycles]),
        truncated=truncated,
    )


def trek_exists_avoiding_parent_edge(g: TreeGraph, i: int, q: int) -> bool:
    """Whether a trek joins i and q once the edge into i is removed.

    Without its parent edge, i is a source: a trek either descends from i or
    leaves i through one of its bidirected edges.
    """
    if g.is_ancestor(i, q):
        return True
    return any(g.is_ancestor(v, q) for v in g.bidirected_neighbours(i))


def _directed_paths(
    g: TreeGraph, start: int, end: int, removed: tuple[int, int] | None
) -> Iterator[tuple[int, ...]]:
    stack: list[tuple[int, ...]] = [(start,)]
    while stack:
        path = stack.pop()
        tail = path[-1]
        if tail == end:
            yield path
            continue
        for child in g.children(tail):
            if (tail, child) != removed:
                stack.append(path + (child,))


def enumerate_treks(
    g: TreeGraph, i: int, j: int, removed_edge: tuple[int, int] | None = None
) -> Iterator[Trek]:
    for top in g.nodes:
        for left in _directed_paths(g, top, i, removed_edge):
            for right in _directed_paths(g, top, j, removed_edge):
                yield Trek(left, right)
            for other in g.bidirected_neighbours(top):
                for right in _directed_paths(g, other, j, removed_edge):
                    yield Trek(left, right, bidirected=True)


def canonicalize_path_graph(g: TreeGraph) -> tuple[TreeGraph, dict[int, int]]:
    """Compact a path graph to the nodes that touch its missing edges.

    Returns the canonical graph and a map from the input's labels to the
    canonical labels of the kept nodes.
    """
    n = g.n
    if any(g.parent[k] != k - 1 for k in range(1, n + 1)):
        raise GraphError("not a path graph")
    for k in range(1, n + 1):
        if not g.has_bidirected(0, k):
            raise GraphError(f"missing root bidirected edge 0<->{g.labels[k]}")

    def touches_missing(v: int) -> bool:
        return any(w != v and not g.has_bidirected(v, w) for w in range(1, n + 1))

    kept = [0] + [
        v for v in range(1, n + 1)
        if touches_missing(v) or (v < n and touches_missing(v + 1))
    ]
    rank = {old: new for new, old in enumerate(kept)}
    canonical = TreeGraph(
        parent=(None,) + tuple(range(len(kept) - 1)),
        bidirected=frozenset(
            _pair(rank[a], rank[b]) for a, b in g.bidirected if a in rank and b in rank
        ),
        labels=tuple(range(len(kept))),
    )
    return canonical, {g.labels[old]: new for old, new in rank.items()}

import json
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

from src.graph import TreeGraph, graph_from_document, graph_to_document
from src.symexpr import SigmaExpr, from_document, pretty, to_document


class Status(StrEnum):
    UNIDENTIFIED = "unidentified"
    UNIQUE = "unique"
    TWO = "two"
    UNKNOWN = "unknown"


RULE_TEXT = {
    "root-instrument": "root instrument",
    "propagation": "propagation",
    "cycle-linear": "linear",
    "cycle-quadratic": "quadratic",
    "cycle-double-root": "double root",
    "cycle-filter": "filtered",
}


@dataclass(frozen=True)
class Provenance:
    rule: str
    source: int | None = None
    cycle: tuple[int, ...] | None = None

    def describe(self, g: TreeGraph) -> str:
        lab = g.labels
        if self.rule == "root-instrument":
            return "root instrument"
        if self.rule == "propagation" and self.source is not None:
            return f"propagated from {edge_name(g, self.source)}"
        if self.cycle is not None:
            path = "-".join(str(lab[v]) for v in self.cycle)
            return f"cycle {path} ({RULE_TEXT.get(self.rule, self.rule)})"
        return self.rule

    def to_document(self, g: TreeGraph) -> dict[str, Any]:
        doc: dict[str, Any] = {"rule": self.rule}
        if self.source is not None:
            doc["from"] = g.labels[self.source]
        if self.cycle is not None:
            doc["cycle"] = [g.labels[v] for v in self.cycle]
        return doc

    @classmethod
    def from_document(cls, data: dict[str, Any], index: dict[int, int]) -> "Provenance":
        source = data.get("from")
        cycle = data.get("cycle")
        return cls(
            rule=data["rule"],
            source=None if source is None else index[source],
            cycle=None if cycle is None else tuple(index[v] for v in cycle),
        )


@dataclass(frozen=True)
class EdgeReport:
    child: int
    status: Status
    formulas: tuple[SigmaExpr, ...] = ()
    provenance: Provenance | None = None
    diagnostics: tuple[str, ...] = ()
    truncated: bool = False


@dataclass(frozen=True)
class OmegaEntry:
    i: int
    j: int
    formula: SigmaExpr


@dataclass(frozen=True)
class PitSummary:
    trials: int
    seed: int
    max_retries: int
    max_error_bound: float = 0.0


@dataclass(frozen=True)
class IdReport:
    graph: TreeGraph
    edges: tuple[EdgeReport, ...]
    pit: PitSummary
    max_cycle_len: int | None = None
    max_cycles: int = 64
    omega: tuple[OmegaEntry, ...] | None = None

    @property
    def truncated_cycles(self) -> bool:
        return any(e.truncated for e in self.edges)

    @property
    def fully_identified(self) -> bool:
        return all(e.status == Status.UNIQUE for e in self.edges)

    def edge(self, child: int) -> EdgeReport:
        return self.edges[child - 1]

    def formula_names(self) -> dict[SigmaExpr, str]:
        names: dict[SigmaExpr, str] = {}
        for e in self.edges:
            base = edge_name(self.graph, e.child)
            if e.status == Status.UNIQUE:
                names.setdefault(e.formulas[0], base)
            elif e.status == Status.TWO:
                for k, f in enumerate(e.formulas, start=1):
                    names.setdefault(f, f"{base}[{k}]")
        return names

    def pretty_formulas(self, e: EdgeReport) -> list[str]:
        names = self.formula_names()
        return [pretty(f, names=names, labels=self.graph.labels) for f in e.formulas]

    def to_text(self) -> str:
        g = self.graph
        lines = []
        for e in self.edges:
            name = edge_name(g, e.child)
            texts = self.pretty_formulas(e)
            origin = e.provenance.describe(g) if e.provenance else ""
            match e.status:
                case Status.UNIQUE:
                    lines.append(f"{name} = {texts[0]}    [unique; {origin}]")
                case Status.TWO:
                    lines.append(f"{name}: two candidates    [{origin}]")
                    lines.extend(f"    {name}[{k}] = {t}" for k, t in enumerate(texts, start=1))
                case _:
                    lines.append(f"{name}: {e.status.value}")
            lines.extend(f"    ! {d}" for d in e.diagnostics)
            if e.truncated:
                lines.append("    ! missing cycles truncated")
        if self.omega is not None:
            names = self.formula_names()
            for w in self.omega:
                text = pretty(w.formula, names=names, labels=g.labels)
                lines.append(f"ω({g.labels[w.i]},{g.labels[w.j]}) = {text}")
        unique = sum(e.status == Status.UNIQUE for e in self.edges)
        lines.append(f"identified {unique}/{len(self.edges)} edges uniquely")
        return "\n".join(lines) + "\n"

    def to_document(self) -> dict[str, Any]:
        g = self.graph
        lab = g.labels
        doc: dict[str, Any] = {
            "graph": graph_to_document(g),
            "config": {
                "pit_trials": self.pit.trials,
                "seed": self.pit.seed,
                "max_retries": self.pit.max_retries,
                "max_cycle_len": self.max_cycle_len,
                "max_cycles": self.max_cycles,
            },
            "pit": {"max_error_bound": self.pit.max_error_bound},
            "truncated_cycles": self.truncated_cycles,
            "edges": [
                {
                    "from": lab[g.pa(e.child)],
                    "to": lab[e.child],
                    "status": e.status.value,
                    "formulas": [to_document(f, lab) for f in e.formulas],
                    "pretty": self.pretty_formulas(e),
                    "provenance": e.provenance.to_document(g) if e.provenance else None,
                    "diagnostics": list(e.diagnostics),
                    "truncated": e.truncated,
                }
                for e in self.edges
            ],
            "omega": None,
        }
        if self.omega is not None:
            doc["omega"] = [
                {"i": lab[w.i], "j": lab[w.j], "formula": to_document(w.formula, lab)}
                for w in self.omega
            ]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_document(cls, data: dict[str, Any]) -> "IdReport":
        g = graph_from_document(data["graph"])
        index = {label: k for k, label in enumerate(g.labels)}
        cfg = data.get("config", {})

        edges = []
        for entry in sorted(data["edges"], key=lambda d: index[d["to"]]):
            child = index[entry["to"]]
            if g.pa(child) != index[entry["from"]]:
                raise ValueError(f"edge {entry['from']}->{entry['to']} is not in the graph")
            provenance = entry.get("provenance")
            edges.append(
                EdgeReport(
                    child=child,
                    status=Status(entry["status"]),
                    formulas=tuple(from_document(f, index) for f in entry.get("formulas", [])),
                    provenance=None if provenance is None else Provenance.from_document(provenance, index),
                    diagnostics=tuple(entry.get("diagnostics", [])),
                    truncated=entry.get("truncated", False),
                )
            )
        if [e.child for e in edges] != list(range(1, g.n_plus_one)):
            raise ValueError("report must cover every directed edge exactly once")

        omega = data.get("omega")
        return cls(
            graph=g,
            edges=tuple(edges),
            pit=PitSummary(
                trials=cfg.get("pit_trials", 3),
                seed=cfg.get("seed", 0),
                max_retries=cfg.get("max_retries", 8),
                max_error_bound=float(data.get("pit", {}).get("max_error_bound", 0.0)),
            ),
            max_cycle_len=cfg.get("max_cycle_len"),
            max_cycles=cfg.get("max_cycles", 64),
            omega=None if omega is None else tuple(
                OmegaEntry(index[w["i"]], index[w["j"]], from_document(w["formula"], index))
                for w in omega
            ),
        )


def edge_name(g: TreeGraph, child: int) -> str:
    return f"λ({g.labels[g.pa(child)]}→{g.labels[child]})"


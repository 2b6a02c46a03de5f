import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import TextIO

import yaml

from src.config import CliConfig
from src.engine import run_treeid, verify_report
from src.graph import (
    GraphError,
    TreeGraph,
    canonicalize_path_graph,
    enumerate_missing_cycles,
    graph_to_document,
    load_graph,
    to_edgelist,
)
from src.report import IdReport
from src.symexpr import UnsupportedExpression

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INCOMPLETE = 2

INPUT_ERRORS = (GraphError, OSError, ValueError, KeyError, yaml.YAMLError, UnsupportedExpression)


def _write(out: TextIO | None, text: str) -> None:
    (out or sys.stdout).write(text)


def _dump(data: object) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def _load(cfg: CliConfig) -> TreeGraph | None:
    try:
        return load_graph(cfg.graph_path, cfg.format)
    except INPUT_ERRORS as e:
        logger.error(f"Cannot read graph {cfg.graph_path}: {e}")
        return None


def _load_report(path: Path) -> IdReport:
    if not path.exists():
        raise FileNotFoundError(f"Report file not found: {path}")
    with open(path) as f:
        return IdReport.from_document(yaml.safe_load(f))


def cmd_identify(cfg: CliConfig, out: TextIO | None = None) -> int:
    g = _load(cfg)
    if g is None:
        return EXIT_INPUT_ERROR
    report = run_treeid(g, cfg.config)
    _write(out, report.to_json() if cfg.output == "doc" else report.to_text())
    return EXIT_OK if report.fully_identified else EXIT_INCOMPLETE


def cmd_verify(cfg: CliConfig, out: TextIO | None = None) -> int:
    g = _load(cfg)
    if g is None:
        return EXIT_INPUT_ERROR

    if cfg.report_path is not None:
        try:
            report = _load_report(cfg.report_path)
        except INPUT_ERRORS as e:
            logger.error(f"Cannot read report {cfg.report_path}: {e}")
            return EXIT_INPUT_ERROR
        if report.graph != g:
            logger.error(f"Report {cfg.report_path} was produced for a different graph")
            return EXIT_INPUT_ERROR
    else:
        report = run_treeid(g, cfg.config)

    summary = verify_report(g, report, cfg.config.verify_models, cfg.config.pit.seed, cfg.config)
    _write(out, _dump(asdict(summary)) if cfg.output == "doc" else f"{summary}\n")
    return EXIT_OK if summary.ok else EXIT_INCOMPLETE


def cmd_cycles(cfg: CliConfig, out: TextIO | None = None) -> int:
    g = _load(cfg)
    if g is None:
        return EXIT_INPUT_ERROR

    search = cfg.config.search
    lab = g.labels
    listings = [
        enumerate_missing_cycles(g, i, max_len=search.max_cycle_len, max_cycles=search.max_cycles)
        for i in range(1, g.n_plus_one)
    ]
    distinct = {
        frozenset(frozenset(edge) for edge in cyc.edges())
        for listing in listings
        for cyc in listing.cycles
    }
    truncated = any(listing.truncated for listing in listings)

    if cfg.output == "doc":
        _write(out, _dump({
            "nodes": [
                {
                    "node": lab[listing.node],
                    "cycles": [list(cyc.relabel(lab)) for cyc in listing.cycles],
                    "truncated": listing.truncated,
                }
                for listing in listings
            ],
            "distinct": len(distinct),
            "truncated": truncated,
        }))
        return EXIT_OK

    if not distinct:
        _write(out, "no missing cycles\n")
        return EXIT_OK
    lines = []
    for listing in listings:
        if not listing.cycles:
            continue
        lines.append(f"node {lab[listing.node]}:")
        for cyc in listing.cycles:
            path = cyc.relabel(lab)
            lines.append("  " + " <-> ".join(str(v) for v in path + path[:1]))
        if listing.truncated:
            lines.append(f"  (truncated at {search.max_cycles})")
    lines.append(f"{len(distinct)} distinct missing cycles")
    if truncated:
        lines.append("warning: cycle listing truncated")
    _write(out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_canon(cfg: CliConfig, out: TextIO | None = None) -> int:
    g = _load(cfg)
    if g is None:
        return EXIT_INPUT_ERROR
    try:
        canonical, permutation = canonicalize_path_graph(g)
    except GraphError as e:
        logger.error(f"Cannot canonicalize {cfg.graph_path}: {e}")
        return EXIT_INPUT_ERROR

    if cfg.output == "doc":
        _write(out, _dump({
            "graph": graph_to_document(canonical),
            "permutation": [[old, new] for old, new in sorted(permutation.items())],
        }))
    else:
        mapping = ", ".join(f"{old}->{new}" for old, new in sorted(permutation.items()))
        _write(out, f"{to_edgelist(canonical)}\npermutation: {mapping}\n")
    return EXIT_OK


COMMANDS = {
    "identify": cmd_identify,
    "verify": cmd_verify,
    "cycles": cmd_cycles,
    "canon": cmd_canon,
}

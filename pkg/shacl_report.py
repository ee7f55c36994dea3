"""Rendering of validation reports as W3C report graphs and plain-text tables."""

import logging
from typing import Dict, List, Optional

from rdflib import BNode, Graph, Literal, URIRef
from rdflib.collection import Collection
from rdflib.namespace import RDF, SH, XSD

from rdf_core import new_graph
from shacl_engine import (
    AlternativePath,
    InversePath,
    PredicatePath,
    PropertyPath,
    SequencePath,
    Term,
    ValidationReport,
)

logger = logging.getLogger(__name__)

COLUMNS = ("Focus node", "Path", "Component", "Severity", "Message")


def path_to_rdf(graph: Graph, path: PropertyPath) -> Term:
    """Write a property path back in SHACL path syntax and return its node"""
    if isinstance(path, PredicatePath):
        return path.iri
    if isinstance(path, InversePath):
        node = BNode()
        graph.add((node, SH.inversePath, path_to_rdf(graph, path.path)))
        return node
    members = [path_to_rdf(graph, p) for p in path.paths]
    head = BNode()
    Collection(graph, head, members)
    if isinstance(path, SequencePath):
        return head
    node = BNode()
    graph.add((node, SH.alternativePath, head))
    return node


def report_to_graph(
    report: ValidationReport, namespaces: Optional[Dict[str, str]] = None
) -> Graph:
    prefixes = dict(namespaces or {})
    aml_namespace = prefixes.pop("aml", None)
    graph = new_graph(aml_namespace, prefixes) if aml_namespace else new_graph(prefixes=prefixes)

    root = BNode()
    graph.add((root, RDF.type, SH.ValidationReport))
    graph.add((root, SH.conforms, Literal(report.conforms, datatype=XSD.boolean)))

    for result in report.results:
        node = BNode()
        graph.add((root, SH.result, node))
        graph.add((node, RDF.type, SH.ValidationResult))
        graph.add((node, SH.focusNode, result.focus_node))
        if result.result_path is not None:
            graph.add((node, SH.resultPath, path_to_rdf(graph, result.result_path)))
        if result.value is not None:
            graph.add((node, SH.value, result.value))
        graph.add((node, SH.sourceShape, result.source_shape))
        graph.add((node, SH.sourceConstraintComponent, result.source_constraint_component))
        graph.add((node, SH.resultSeverity, result.severity.iri))
        graph.add((node, SH.resultMessage, Literal(result.message)))
    return graph


def _shorten(term: Term, namespaces: Dict[str, str]) -> str:
    if isinstance(term, URIRef):
        value = str(term)
        for prefix, namespace in sorted(namespaces.items(), key=lambda kv: -len(kv[1])):
            if value.startswith(namespace) and len(value) > len(namespace):
                return f"{prefix}:{value[len(namespace):]}"
        return f"<{value}>"
    return term.n3()


def _path_text(path: Optional[PropertyPath], namespaces: Dict[str, str]) -> str:
    if path is None:
        return "-"
    if isinstance(path, PredicatePath):
        return _shorten(path.iri, namespaces)
    if isinstance(path, InversePath):
        return f"^{_path_text(path.path, namespaces)}"
    joiner = "/" if isinstance(path, SequencePath) else "|"
    return "(" + joiner.join(_path_text(p, namespaces) for p in path.paths) + ")"


def render_report_text(
    report: ValidationReport, namespaces: Optional[Dict[str, str]] = None
) -> str:
    """Human-readable table of a report (report.txt)"""
    namespaces = dict(namespaces or {})
    namespaces.setdefault("sh", str(SH))

    lines = [
        f"Conforms: {'true' if report.conforms else 'false'}",
        f"Results: {len(report.results)}",
    ]
    if not report.results:
        return "\n".join(lines) + "\n"

    rows: List[tuple] = [COLUMNS]
    for result in report.results:
        component = _shorten(result.source_constraint_component, namespaces)
        rows.append(
            (
                _shorten(result.focus_node, namespaces),
                _path_text(result.result_path, namespaces),
                component.replace("sh:", "").replace("ConstraintComponent", ""),
                result.severity.iri.split("#")[-1],
                result.message,
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(COLUMNS) - 1)]

    def format_row(row: tuple) -> str:
        cells = [cell.ljust(width) for cell, width in zip(row, widths)]
        return "  ".join(cells + [row[-1]]).rstrip()

    lines.append("")
    lines.append(format_row(rows[0]))
    lines.append("  ".join("-" * w for w in widths) + "  " + "-" * len(COLUMNS[-1]))
    lines.extend(format_row(row) for row in rows[1:])
    return "\n".join(lines) + "\n"

"""
SHACL core cases in the W3C test-suite layout.

Files under shacl_core/w3c/ use the W3C data-shapes test suite's file names,
namespaces and layout (core/node, core/property, core/path, core/targets): the
file is both data and shapes graph, `<>` is the mf:Manifest and the single
sht:Validate entry carries the expected report as mf:result. The remaining
files under shacl_core/ are local cases with an `ex:case` entry in the same
vocabulary. Manifest, entry and expected report are removed before validating.
"""

from pathlib import Path
from typing import Set, Tuple

import pytest
from rdflib import BNode, Graph, Namespace
from rdflib.namespace import RDF, SH

from rdf_core import isomorphic, parse_turtle
from shacl_engine import parse_shapes, validate
from shacl_report import report_to_graph

CASES = Path(__file__).resolve().parent / "shacl_core"
W3C_CASES = CASES / "w3c"
MF = Namespace("http://www.w3.org/2001/sw/DataAccess/tests/test-manifest#")
SHT = Namespace("http://www.w3.org/ns/shacl-test#")


def closure(graph: Graph, root) -> Graph:
    """The triples reachable from root through blank nodes"""
    out = Graph()
    pending, seen = [root], set()
    while pending:
        node = pending.pop()
        if node in seen:
            continue
        seen.add(node)
        for p, o in graph.predicate_objects(node):
            out.add((node, p, o))
            if isinstance(o, BNode):
                pending.append(o)
    return out


def split_case(graph: Graph) -> Tuple[Graph, Graph, bool]:
    entry = graph.value(predicate=RDF.type, object=SHT.Validate)
    root = graph.value(entry, MF.result)
    expected = closure(graph, root)

    removed: Set = set(closure(graph, entry))
    for manifest in graph.subjects(RDF.type, MF.Manifest):
        removed.update(closure(graph, manifest))
    data = Graph()
    for triple in graph:
        if triple not in removed:
            data.add(triple)
    conforms = expected.value(root, SH.conforms).toPython()
    return data, expected, conforms


def without_messages(graph: Graph) -> Graph:
    stripped = Graph()
    for triple in graph:
        if triple[1] != SH.resultMessage:
            stripped.add(triple)
    return stripped


def run_case(case: Path) -> None:
    # relative IRIs (`<>`, `<class-001>`) resolve against the file itself
    graph = parse_turtle(case.read_text(encoding="utf-8"), base=case.as_uri())
    data, expected, conforms = split_case(graph)
    shapes = parse_shapes(data)
    report = validate(data, shapes)

    assert report.conforms == conforms
    assert shapes.diagnostics == []
    actual = without_messages(report_to_graph(report))
    assert isomorphic(actual, expected), "\n".join(
        f"{r.focus_node.n3()} {r.source_constraint_component.n3()} {r.value!r}" for r in report.results
    )


@pytest.mark.parametrize("case", sorted(CASES.glob("*.ttl")), ids=lambda p: p.stem)
def test_core_case(case):
    run_case(case)


@pytest.mark.parametrize(
    "case", sorted(W3C_CASES.rglob("*.ttl")), ids=lambda p: p.relative_to(W3C_CASES).as_posix()
)
def test_w3c_core_case(case):
    run_case(case)


def test_case_directories_are_populated():
    assert len(list(CASES.glob("*.ttl"))) >= 30
    for section in ("node", "property", "path", "targets"):
        assert list((W3C_CASES / "core" / section).glob("*.ttl")), section


if __name__ == "__main__":
    pytest.main([__file__])

import random

import pytest
from rdflib import BNode, Graph, Literal, URIRef
from rdflib.namespace import RDF, SH, XSD

from conftest import REFERENCE_SHAPES
from errors import TurtleSyntax
from rdf_core import (
    insert,
    is_absolute_iri,
    isomorphic,
    match,
    merge_graphs,
    new_graph,
    parse_turtle,
    serialize_turtle,
    size,
)
from shacl_engine import validate
from shacl_report import report_to_graph

EX = "http://e/"


def test_match_on_empty_graph():
    assert match(new_graph()) == []


def test_insert_is_idempotent():
    graph = new_graph()
    triple = (URIRef(EX + "a"), URIRef(EX + "p"), URIRef(EX + "b"))
    insert(graph, triple)
    insert(graph, triple)
    assert size(graph) == 1


def test_insert_rejects_bad_terms():
    graph = new_graph()
    with pytest.raises(ValueError):
        insert(graph, (Literal("x"), URIRef(EX + "p"), URIRef(EX + "b")))
    with pytest.raises(ValueError):
        insert(graph, (URIRef(EX + "a"), BNode(), URIRef(EX + "b")))
    with pytest.raises(ValueError):
        insert(graph, (URIRef("relative"), URIRef(EX + "p"), URIRef(EX + "b")))


def test_match_by_predicate():
    graph = new_graph()
    a, b, c = (URIRef(EX + n) for n in "abc")
    cls = URIRef(EX + "Class")
    for triple in [
        (a, RDF.type, cls),
        (b, RDF.type, cls),
        (a, URIRef(EX + "p"), b),
        (b, URIRef(EX + "p"), c),
        (c, URIRef(EX + "name"), Literal("c")),
    ]:
        insert(graph, triple)
    typing = match(graph, p=RDF.type)
    assert sorted(typing) == sorted([(a, RDF.type, cls), (b, RDF.type, cls)])
    assert len(match(graph, s=a)) == 2
    assert match(graph, s=a, p=RDF.type, o=cls) == [(a, RDF.type, cls)]


def test_new_graph_binds_standard_prefixes():
    namespaces = dict(new_graph("http://x/aml#").namespaces())
    assert str(namespaces["aml"]) == "http://x/aml#"
    assert str(namespaces["sh"]) == str(SH)
    assert {"rdf", "rdfs", "xsd", "owl"} <= set(namespaces)


def test_is_absolute_iri():
    assert is_absolute_iri("http://example.org/x")
    assert is_absolute_iri("urn:uuid:1")
    assert not is_absolute_iri("relative/path")


def test_parse_single_triple():
    graph = parse_turtle("@prefix ex: <http://e/> . ex:a ex:p ex:b .")
    assert size(graph) == 1


def test_parse_empty_string():
    assert size(parse_turtle("")) == 0


def test_parse_error_reports_line():
    with pytest.raises(TurtleSyntax) as info:
        parse_turtle("@prefix ex: <http://e/> .\nex:a ex:p ex:b .\nex:c ex:p .\n")
    assert info.value.line >= 1


def test_reference_shapes_have_node_shapes():
    graph = parse_turtle(REFERENCE_SHAPES.read_text(encoding="utf-8"))
    assert len(set(graph.subjects(RDF.type, SH.NodeShape))) >= 3


def test_serialize_empty_graph_is_prefix_header():
    text = serialize_turtle(new_graph())
    lines = text.strip().splitlines()
    assert lines
    assert all(line.startswith("@prefix") for line in lines)


def test_serialize_is_deterministic(reference_shapes_graph):
    first = serialize_turtle(reference_shapes_graph)
    reparsed = parse_turtle(first)
    assert serialize_turtle(reference_shapes_graph) == first
    assert serialize_turtle(reparsed) == first


def test_canonical_form_uses_prefixes_and_datatypes():
    graph = new_graph(prefixes={"ex": EX})
    graph.add((URIRef(EX + "a"), URIRef(EX + "count"), Literal(3)))
    graph.add((URIRef(EX + "a"), URIRef(EX + "label"), Literal("hi", lang="en")))
    text = serialize_turtle(graph)
    assert 'ex:a ex:count "3"^^xsd:integer .' in text
    assert 'ex:a ex:label "hi"@en .' in text


def test_unsorted_serialization_round_trips(reference_shapes_graph):
    text = serialize_turtle(reference_shapes_graph, sort=False)
    assert isomorphic(parse_turtle(text), reference_shapes_graph)


def test_isomorphic_basics(reference_shapes_graph):
    assert isomorphic(reference_shapes_graph, reference_shapes_graph)
    smaller = Graph()
    for triple in list(reference_shapes_graph)[1:]:
        smaller.add(triple)
    assert not isomorphic(reference_shapes_graph, smaller)


def test_isomorphic_ignores_blank_labels():
    g1 = parse_turtle("@prefix ex: <http://e/> . ex:a ex:p _:x . _:x ex:q ex:b .")
    g2 = parse_turtle("@prefix ex: <http://e/> . ex:a ex:p _:other . _:other ex:q ex:b .")
    assert isomorphic(g1, g2)


def test_merge_renames_blank_nodes():
    g1 = parse_turtle("@prefix ex: <http://e/> . _:b ex:p ex:a .")
    g2 = parse_turtle("@prefix ex: <http://e/> . _:b ex:p ex:a .")
    merged = merge_graphs([g1, g2])
    assert size(merged) == 2
    assert len({s for s in merged.subjects() if isinstance(s, BNode)}) == 2


def test_merge_later_prefix_binding_wins():
    g1 = parse_turtle("@prefix ex: <http://one/> . ex:a ex:p ex:b .")
    g2 = parse_turtle("@prefix ex: <http://two/> . ex:a ex:p ex:b .")
    merged = merge_graphs([g1, g2])
    assert str(dict(merged.namespaces())["ex"]) == "http://two/"
    assert size(merged) == 2


def test_pipeline_artifacts_round_trip(fig2_graph, reference_shapes, reference_shapes_graph):
    """Test every emitted Turtle artifact of the violating model"""
    report = report_to_graph(validate(fig2_graph, reference_shapes))
    for graph in (fig2_graph, reference_shapes_graph, report):
        text = serialize_turtle(graph)
        reparsed = parse_turtle(text)
        assert isomorphic(reparsed, graph)
        assert serialize_turtle(reparsed) == text


SAFE_TEXT = "abcdefgh xyz-_:.,"


def random_graph(rng: random.Random) -> Graph:
    graph = new_graph(prefixes={"ex": EX})
    nodes = [URIRef(f"{EX}n{i}") for i in range(6)] + [BNode(f"r{i}") for i in range(3)]
    predicates = [URIRef(f"{EX}p{i}") for i in range(4)]
    for _ in range(rng.randint(0, 25)):
        subject = rng.choice(nodes)
        roll = rng.random()
        if roll < 0.5:
            obj = rng.choice(nodes)
        elif roll < 0.7:
            obj = Literal("".join(rng.choice(SAFE_TEXT) for _ in range(rng.randint(0, 8))))
        elif roll < 0.85:
            obj = Literal(rng.randint(-50, 50))
        else:
            obj = Literal(rng.choice(["a", "b"]), lang=rng.choice(["en", "de"]))
        graph.add((subject, rng.choice(predicates), obj))
    return graph


@pytest.mark.parametrize("seed", range(200))
def test_canonical_round_trip(seed):
    graph = random_graph(random.Random(seed))
    text = serialize_turtle(graph)
    reparsed = parse_turtle(text)
    assert isomorphic(reparsed, graph)
    assert serialize_turtle(reparsed) == text


if __name__ == "__main__":
    pytest.main([__file__])

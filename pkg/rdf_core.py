"""
In-memory RDF graphs on top of rdflib.

Terms are rdflib's URIRef / BNode / Literal. This module fixes the prefix
set every pipeline graph starts with, wraps Turtle parsing so syntax errors
surface as TurtleSyntax, and provides the canonical (byte-deterministic)
Turtle writer used for all pipeline artifacts.
"""

import logging
import re
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from rdflib import BNode, Graph, Literal, URIRef
from rdflib.compare import isomorphic as _rdflib_isomorphic
from rdflib.compare import to_canonical_graph
from rdflib.namespace import OWL, RDF, RDFS, SH, XSD

from errors import TurtleSyntax

logger = logging.getLogger(__name__)

DEFAULT_AML_NAMESPACE = "http://example.org/aml/ontology#"

Term = Union[URIRef, BNode, Literal]
Triple = Tuple[Term, Term, Term]
RdfGraph = Graph

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_LOCAL_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


def standard_prefixes(aml_namespace: str = DEFAULT_AML_NAMESPACE) -> Dict[str, str]:
    return {
        "rdf": str(RDF),
        "rdfs": str(RDFS),
        "xsd": str(XSD),
        "owl": str(OWL),
        "sh": str(SH),
        "aml": aml_namespace,
    }


def new_graph(
    aml_namespace: str = DEFAULT_AML_NAMESPACE,
    prefixes: Optional[Dict[str, str]] = None,
) -> Graph:
    """Empty graph with the standard prefixes (and any extra ones) bound"""
    graph = Graph(bind_namespaces="none")
    bindings = standard_prefixes(aml_namespace)
    bindings.update(prefixes or {})
    for prefix, namespace in bindings.items():
        graph.bind(prefix, namespace, override=True, replace=True)
    return graph


def is_absolute_iri(value: str) -> bool:
    return bool(_SCHEME.match(value))


def insert(graph: Graph, triple: Triple) -> Graph:
    subject, predicate, obj = triple
    if isinstance(subject, Literal):
        raise ValueError(f"Literal {subject!r} cannot be a subject")
    if not isinstance(predicate, URIRef):
        raise ValueError(f"Predicate {predicate!r} must be an IRI")
    for term in triple:
        if isinstance(term, URIRef) and not is_absolute_iri(term):
            raise ValueError(f"IRI {term!r} is not absolute")
    graph.add(triple)
    return graph


def match(
    graph: Graph,
    s: Optional[Term] = None,
    p: Optional[Term] = None,
    o: Optional[Term] = None,
) -> List[Triple]:
    """All triples agreeing with every bound position"""
    return list(graph.triples((s, p, o)))


def size(graph: Graph) -> int:
    return len(graph)


def parse_turtle(text: str, base: Optional[str] = None) -> Graph:
    graph = Graph(bind_namespaces="none")
    if not text or not text.strip():
        return graph
    try:
        graph.parse(data=text, format="turtle", publicID=base)
    except Exception as e:
        # rdflib's BadSyntax counts lines from zero
        line = getattr(e, "lines", None)
        line = line + 1 if isinstance(line, int) else 0
        why = getattr(e, "_why", None)
        if not why:
            text_lines = str(e).strip().splitlines()
            why = text_lines[0] if text_lines else type(e).__name__
        raise TurtleSyntax(line, str(why)) from e
    return graph


def merge_graphs(parts: Iterable[Graph]) -> Graph:
    """Union with per-part blank-node renaming; later prefix bindings win"""
    merged = Graph(bind_namespaces="none")
    for part in parts:
        for prefix, namespace in part.namespaces():
            merged.bind(prefix, namespace, override=True, replace=True)
        fresh: Dict[BNode, BNode] = {}

        def rename(term: Term) -> Term:
            if isinstance(term, BNode):
                if term not in fresh:
                    fresh[term] = BNode()
                return fresh[term]
            return term

        for s, p, o in part:
            merged.add((rename(s), p, rename(o)))
    return merged


def isomorphic(g1: Graph, g2: Graph) -> bool:
    """Equal up to blank-node relabeling"""
    return _rdflib_isomorphic(g1, g2)


def _iri_renderer(graph: Graph) -> Callable[[URIRef], str]:
    namespaces = sorted(
        ((str(ns), prefix) for prefix, ns in graph.namespaces()),
        key=lambda pair: (-len(pair[0]), pair[1]),
    )

    def render(iri: URIRef) -> str:
        value = str(iri)
        for namespace, prefix in namespaces:
            if value.startswith(namespace):
                local = value[len(namespace):]
                if local == "" or _LOCAL_NAME.match(local):
                    return f"{prefix}:{local}"
        return f"<{value}>"

    return render


def _render_literal(term: Literal, render_iri: Callable[[URIRef], str]) -> str:
    quoted = Literal(str(term)).n3()
    if term.language:
        return f"{quoted}@{term.language}"
    if term.datatype is not None:
        return f"{quoted}^^{render_iri(term.datatype)}"
    return quoted


def _canonical_turtle(graph: Graph) -> str:
    render_iri = _iri_renderer(graph)
    header = [
        f"@prefix {prefix}: <{ns}> ."
        for prefix, ns in sorted((p, str(n)) for p, n in graph.namespaces())
    ]

    def sort_key(term: Term) -> str:
        if isinstance(term, BNode):
            return f"_:{term}"
        return term.n3()

    # canonical blank-node labels make the sort independent of parse order
    triples = sorted(
        to_canonical_graph(graph).triples((None, None, None)),
        key=lambda t: (sort_key(t[0]), sort_key(t[1]), sort_key(t[2])),
    )

    labels: Dict[BNode, str] = {}

    def render(term: Term) -> str:
        if isinstance(term, BNode):
            if term not in labels:
                labels[term] = f"_:b{len(labels)}"
            return labels[term]
        if isinstance(term, Literal):
            return _render_literal(term, render_iri)
        return render_iri(term)

    body = [f"{render(s)} {render(p)} {render(o)} ." for s, p, o in triples]
    lines = header + ([""] + body if body else [])
    return "\n".join(lines) + "\n"


def serialize_turtle(graph: Graph, sort: bool = True) -> str:
    """Turtle text; sort=True gives the canonical line-per-triple form"""
    if sort:
        return _canonical_turtle(graph)
    return graph.serialize(format="turtle")

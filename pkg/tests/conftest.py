from pathlib import Path

import pytest
from rdflib import Namespace

from aml_to_owl import DEFAULT_BASE_IRI, MappingConfig, map_document
from caex_model import merge_libraries, parse_aml_file
from rdf_core import DEFAULT_AML_NAMESPACE, parse_turtle
from shacl_engine import parse_shapes

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
AML_DIR = FIXTURES / "aml"
AR_LIBRARIES = AML_DIR / "ar_apc_libraries.aml"
FIG2_MODEL = AML_DIR / "fig2_violating.aml"
CORRECTED_MODEL = AML_DIR / "corrected.aml"
CAEX215_MODEL = AML_DIR / "caex215_plant.aml"
REFERENCE_SHAPES = FIXTURES / "shapes" / "ar_apc_rules.ttl"
CONSTRAINTS = FIXTURES / "constraints" / "ar_apc_rules.txt"
LLM_RESPONSES = FIXTURES / "llm" / "responses"
LLM_REPLAY = FIXTURES / "llm" / "replay"

AML = Namespace(DEFAULT_AML_NAMESPACE)
MODEL = Namespace(DEFAULT_BASE_IRI)
ICL = Namespace(DEFAULT_BASE_IRI + "CommunicationInterfaceClassLib/")
RCL = Namespace(DEFAULT_BASE_IRI + "AutomationProjectConfigurationRoleClassLib/")
SHAPES = Namespace("http://example.org/aml/shapes#")


def caex(body: str, version: str = "3.0") -> bytes:
    """Wrap CAEX content in a CAEXFile root"""
    return (
        '<?xml version="1.0" encoding="utf-8"?>\n'
        f'<CAEXFile xmlns="http://www.dke.de/CAEX" SchemaVersion="{version}" FileName="inline.aml">'
        f"{body}</CAEXFile>"
    ).encode("utf-8")


def load_model(path: Path):
    return merge_libraries(parse_aml_file(path), parse_aml_file(AR_LIBRARIES))


@pytest.fixture
def ar_doc():
    return parse_aml_file(AR_LIBRARIES)


@pytest.fixture
def fig2_doc():
    return load_model(FIG2_MODEL)


@pytest.fixture
def fig2_graph(fig2_doc):
    graph, _ = map_document(fig2_doc, MappingConfig())
    return graph


@pytest.fixture
def corrected_graph():
    graph, _ = map_document(load_model(CORRECTED_MODEL), MappingConfig())
    return graph


@pytest.fixture
def reference_shapes_graph():
    return parse_turtle(REFERENCE_SHAPES.read_text(encoding="utf-8"))


@pytest.fixture
def reference_shapes(reference_shapes_graph):
    return parse_shapes(reference_shapes_graph)

"""
AML -> OWL mapping.

Turns an AmlDocument into an RDF graph that mirrors the CAEX structure under
the aml: vocabulary. Library classes become OWL classes linked by
rdfs:subClassOf; instances are typed with the most specific resolved class.
"""

import logging
from collections import Counter
from enum import Enum
from typing import Dict, List, Optional, Tuple
from urllib.parse import quote

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from rdflib import Graph, Literal, Namespace, URIRef
from rdflib.namespace import OWL, RDF, RDFS

from caex_model import (
    CLASS_BODY_SEGMENT,
    AmlDocument,
    CaexClass,
    CaexElement,
    CaexKind,
    CaexLibrary,
    CaexWarning,
    LibraryKind,
    class_ancestry,
    resolve_class_path,
    resolve_interface_ref,
)
from rdf_core import DEFAULT_AML_NAMESPACE, is_absolute_iri, new_graph

logger = logging.getLogger(__name__)

DEFAULT_BASE_IRI = "http://example.org/aml/model/"


class LibNamespacePolicy(str, Enum):
    SHARED = "shared"
    PER_LIBRARY = "per-library"


class MappingConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    base_iri: str = DEFAULT_BASE_IRI
    aml_namespace: str = DEFAULT_AML_NAMESPACE
    lib_namespace_policy: LibNamespacePolicy = LibNamespacePolicy.SHARED

    @field_validator("base_iri", "aml_namespace")
    @classmethod
    def _namespace_iri(cls, value: str) -> str:
        if not is_absolute_iri(value):
            raise ValueError(f"'{value}' is not an absolute IRI")
        if not value.endswith(("/", "#")):
            raise ValueError(f"'{value}' must end in '/' or '#'")
        return value

    @model_validator(mode="after")
    def _library_fragment(self) -> "MappingConfig":
        # per-library class IRIs put the class path in the fragment
        if self.lib_namespace_policy == LibNamespacePolicy.PER_LIBRARY and self.base_iri.endswith("#"):
            raise ValueError("the per-library policy needs a base_iri ending in '/'")
        return self


class MappingWarning(BaseModel):
    kind: str
    subject: str
    message: str


class MappingReport(BaseModel):
    counts: Dict[str, int] = Field(default_factory=dict)
    warnings: List[MappingWarning] = Field(default_factory=list)


CONTAINMENT = {
    CaexKind.INTERNAL_ELEMENT: "hasInternalElement",
    CaexKind.EXTERNAL_INTERFACE: "hasExternalInterface",
    CaexKind.ATTRIBUTE: "hasAttribute",
    CaexKind.INTERNAL_LINK: "hasInternalLink",
    CaexKind.ROLE_REQUIREMENTS: "hasRoleRequirements",
    CaexKind.SUPPORTED_ROLE_CLASS: "hasSupportedRoleClass",
}

LIBRARY_MEMBERS = {
    LibraryKind.ROLE_CLASS_LIB: "hasRoleClass",
    LibraryKind.INTERFACE_CLASS_LIB: "hasInterfaceClass",
    LibraryKind.SYSTEM_UNIT_CLASS_LIB: "hasSystemUnitClass",
}

ROLE_KINDS = (CaexKind.ROLE_REQUIREMENTS, CaexKind.SUPPORTED_ROLE_CLASS)


def _encode(value: str) -> str:
    return quote(value, safe="")


def _path_segment(segment: str) -> str:
    # quote() never leaves a bare "@", so the marker cannot collide with a name
    return segment if segment == CLASS_BODY_SEGMENT else _encode(segment)


def mint_iri(element: CaexElement, cfg: MappingConfig) -> URIRef:
    """base_iri + encoded ID, or base_iri + encoded name path when ID-less"""
    if element.id:
        return URIRef(cfg.base_iri + _encode(element.id))
    return URIRef(cfg.base_iri + "/".join(_path_segment(s) for s in element.path))


def class_iri(cls: CaexClass, cfg: MappingConfig) -> URIRef:
    segments = cls.path.split("/")
    if cfg.lib_namespace_policy == LibNamespacePolicy.PER_LIBRARY:
        rest = "/".join(_encode(s) for s in segments[1:])
        return URIRef(f"{cfg.base_iri}{_encode(segments[0])}#{rest}")
    return URIRef(cfg.base_iri + "/".join(_encode(s) for s in segments))


def library_iri(library: CaexLibrary, cfg: MappingConfig) -> URIRef:
    return URIRef(cfg.base_iri + _encode(library.id or library.name))


def file_iri(doc: AmlDocument, cfg: MappingConfig) -> URIRef:
    return URIRef(cfg.base_iri + _encode(doc.file_name))


def describe_iri_scheme(cfg: MappingConfig) -> str:
    """IRI documentation handed to the shape-generation prompt"""
    if cfg.lib_namespace_policy == LibNamespacePolicy.PER_LIBRARY:
        class_rule = (
            f"<{cfg.base_iri}LIBRARY#CLASS> where LIBRARY is the percent-encoded "
            "library name and CLASS the percent-encoded class names below it joined by '/'. "
            f"Example: <{cfg.base_iri}CommunicationInterfaceClassLib#LogicalEndPoint>"
        )
    else:
        class_rule = (
            f"<{cfg.base_iri}PATH> where PATH is the CAEX class path (library name, then "
            "nested class names) with each segment percent-encoded and joined by '/'. "
            f"Example: <{cfg.base_iri}CommunicationInterfaceClassLib/LogicalEndPoint>"
        )
    return "\n".join(
        [
            f"Ontology vocabulary namespace (prefix aml:): <{cfg.aml_namespace}>",
            f"Instance namespace: <{cfg.base_iri}>",
            "Instance IRIs: elements with a CAEX ID become "
            f"<{cfg.base_iri}ID> with the ID percent-encoded; elements without an ID "
            "use the percent-encoded names of their path from the InstanceHierarchy, "
            "joined by '/'. ID-less elements declared inside a library class use the "
            "class path, then the segment '@', then their own names.",
            f"Class IRIs: {class_rule}",
            "Instances are typed (rdf:type) with the most specific class they reference; "
            "ancestors are reachable through rdfs:subClassOf.",
            "InternalLinks are directed: aml:refPartnerSideA and aml:refPartnerSideB point "
            "from the link node to the two interfaces. Use inverse and alternative paths "
            "to follow a link from either interface.",
        ]
    )


class _Mapper:
    def __init__(self, doc: AmlDocument, cfg: MappingConfig):
        self.doc = doc
        self.cfg = cfg
        self.aml = Namespace(cfg.aml_namespace)
        self.graph = new_graph(cfg.aml_namespace, prefixes={"model": cfg.base_iri})
        self.counts: Counter = Counter()
        self.warnings: List[MappingWarning] = []

    def warn(self, kind: str, subject: URIRef, message: str):
        logger.warning(f"{kind} at <{subject}>: {message}")
        self.warnings.append(MappingWarning(kind=kind, subject=str(subject), message=message))

    def add_labels(self, node: URIRef, name: str, element_id: Optional[str]):
        if name:
            self.graph.add((node, self.aml.hasName, Literal(name)))
        if element_id:
            self.graph.add((node, self.aml.hasID, Literal(element_id)))

    def type_by_class_path(self, node: URIRef, path: Optional[str]):
        if not path:
            return
        cls = resolve_class_path(self.doc, path)
        if cls is None:
            self.warn("UnresolvedClassPath", node, f"class path '{path}' does not resolve")
            return
        self.graph.add((node, RDF.type, class_iri(cls, self.cfg)))

    def map_document(self) -> Tuple[Graph, MappingReport]:
        root = file_iri(self.doc, self.cfg)
        self.graph.add((root, RDF.type, self.aml.CAEXFile))
        self.graph.add((root, self.aml.hasName, Literal(self.doc.file_name)))

        for library in self.doc.libraries:
            self.map_library(library, root)
        self.collect_cycles()

        for hierarchy in self.doc.instance_hierarchies:
            node = mint_iri(hierarchy, self.cfg)
            self.graph.add((node, RDF.type, self.aml.InstanceHierarchy))
            self.add_labels(node, hierarchy.name, hierarchy.id)
            self.graph.add((root, self.aml.hasInstanceHierarchy, node))
            self.counts[CaexKind.INSTANCE_HIERARCHY.value] += 1
            for child in hierarchy.children:
                self.map_element(child, node)

        report = MappingReport(counts=dict(sorted(self.counts.items())), warnings=self.warnings)
        logger.info(
            f"Mapped {self.doc.file_name}: {len(self.graph)} triples, "
            f"{len(self.warnings)} warnings"
        )
        return self.graph, report

    def map_library(self, library: CaexLibrary, root: URIRef):
        node = library_iri(library, self.cfg)
        self.graph.add((node, RDF.type, self.aml[library.kind.value]))
        self.add_labels(node, library.name, library.id)
        self.graph.add((root, self.aml["has" + library.kind.value], node))
        self.counts[library.kind.value] += 1
        member = self.aml[LIBRARY_MEMBERS[library.kind]]
        for cls in library.classes:
            self.map_class(cls, node, member)

    def map_class(self, cls: CaexClass, parent: URIRef, member: URIRef):
        node = class_iri(cls, self.cfg)
        self.graph.add((node, RDF.type, OWL.Class))
        self.graph.add((node, RDF.type, self.aml[cls.kind.value]))
        self.add_labels(node, cls.name, cls.id)
        self.graph.add((parent, member, node))
        self.counts[cls.kind.value] += 1

        if cls.ref_base_class_path:
            self.graph.add((node, self.aml.refBaseClassPath, Literal(cls.ref_base_class_path)))
            base = resolve_class_path(self.doc, cls.ref_base_class_path)
            if base is None:
                self.warn(
                    "UnresolvedClassPath",
                    node,
                    f"base class '{cls.ref_base_class_path}' does not resolve",
                )
            else:
                self.graph.add((node, RDFS.subClassOf, class_iri(base, self.cfg)))

        for element in cls.elements:
            self.map_element(element, node)
        for child in cls.children:
            self.map_class(child, node, member)

    def collect_cycles(self):
        seen = set()
        for cls in self.doc.iter_classes():
            found: List[CaexWarning] = []
            class_ancestry(self.doc, cls, found)
            for warning in found:
                if warning.kind != "CyclicInheritance" or warning.subject in seen:
                    continue
                seen.add(warning.subject)
                cycle_class = resolve_class_path(self.doc, warning.subject)
                subject = class_iri(cycle_class, self.cfg) if cycle_class else URIRef(self.cfg.base_iri)
                self.warn("CyclicInheritance", subject, warning.message)

    def map_element(self, element: CaexElement, parent: URIRef):
        if element.kind == CaexKind.OPAQUE:
            return
        node = mint_iri(element, self.cfg)
        self.graph.add((node, RDF.type, self.aml[element.kind.value]))
        self.add_labels(node, element.name, element.id)
        self.graph.add((parent, self.aml[CONTAINMENT[element.kind]], node))
        self.counts[element.kind.value] += 1

        if element.kind == CaexKind.INTERNAL_ELEMENT:
            if element.ref_base_class_path:
                self.graph.add(
                    (node, self.aml.refBaseSystemUnitPath, Literal(element.ref_base_class_path))
                )
                self.type_by_class_path(node, element.ref_base_class_path)
            for role in element.children:
                if role.kind in ROLE_KINDS:
                    self.type_by_class_path(node, role.ref_base_class_path)

        elif element.kind == CaexKind.EXTERNAL_INTERFACE:
            if element.ref_base_class_path:
                self.graph.add(
                    (node, self.aml.refBaseClassPath, Literal(element.ref_base_class_path))
                )
                self.type_by_class_path(node, element.ref_base_class_path)

        elif element.kind == CaexKind.ATTRIBUTE:
            if element.attribute_value is not None:
                self.graph.add((node, self.aml.hasValue, Literal(element.attribute_value)))
            if element.attribute_data_type:
                self.graph.add(
                    (node, self.aml.hasAttributeDataType, Literal(element.attribute_data_type))
                )

        elif element.kind in ROLE_KINDS:
            if element.ref_base_class_path:
                self.graph.add(
                    (node, self.aml.refRoleClassPath, Literal(element.ref_base_class_path))
                )

        elif element.kind == CaexKind.INTERNAL_LINK:
            sides = (
                (element.ref_partner_side_a, self.aml.refPartnerSideA),
                (element.ref_partner_side_b, self.aml.refPartnerSideB),
            )
            for ref, predicate in sides:
                target = resolve_interface_ref(self.doc, ref or "")
                if target is None:
                    self.warn("DanglingInterfaceRef", node, f"interface reference '{ref}' does not resolve")
                    continue
                self.graph.add((node, predicate, mint_iri(target, self.cfg)))

        for child in element.children:
            self.map_element(child, node)


def map_document(doc: AmlDocument, cfg: MappingConfig) -> Tuple[Graph, MappingReport]:
    """Map a parsed CAEX document onto the aml: ontology"""
    return _Mapper(doc, cfg).map_document()

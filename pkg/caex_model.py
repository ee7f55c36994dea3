"""
CAEX document model.

Parses AutomationML/CAEX files (models under test and Application
Recommendation libraries) into an immutable tree with ID and class-path
resolution. Both CAEX 2.15 and 3.0 element names are accepted.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

from lxml import etree

from errors import DuplicateId, MalformedXml, NotCaex

logger = logging.getLogger(__name__)

PATH_SEPARATOR = "/"
CLASS_BODY_SEGMENT = "@"


class CaexKind(str, Enum):
    INSTANCE_HIERARCHY = "InstanceHierarchy"
    INTERNAL_ELEMENT = "InternalElement"
    EXTERNAL_INTERFACE = "ExternalInterface"
    INTERNAL_LINK = "InternalLink"
    ATTRIBUTE = "Attribute"
    ROLE_REQUIREMENTS = "RoleRequirements"
    SUPPORTED_ROLE_CLASS = "SupportedRoleClass"
    OPAQUE = "Opaque"


class LibraryKind(str, Enum):
    ROLE_CLASS_LIB = "RoleClassLib"
    INTERFACE_CLASS_LIB = "InterfaceClassLib"
    SYSTEM_UNIT_CLASS_LIB = "SystemUnitClassLib"


class ClassKind(str, Enum):
    ROLE_CLASS = "RoleClass"
    INTERFACE_CLASS = "InterfaceClass"
    SYSTEM_UNIT_CLASS = "SystemUnitClass"


LIBRARY_TAGS = {kind.value for kind in LibraryKind}

LIBRARY_CLASS_KIND = {
    LibraryKind.ROLE_CLASS_LIB: ClassKind.ROLE_CLASS,
    LibraryKind.INTERFACE_CLASS_LIB: ClassKind.INTERFACE_CLASS,
    LibraryKind.SYSTEM_UNIT_CLASS_LIB: ClassKind.SYSTEM_UNIT_CLASS,
}

STRUCTURAL_TAGS = {
    kind.value: kind
    for kind in CaexKind
    if kind not in (CaexKind.INSTANCE_HIERARCHY, CaexKind.OPAQUE)
}

# CAEX children that carry data for their parent rather than forming a node
METADATA_TAGS = {
    "Value",
    "DefaultValue",
    "Description",
    "Version",
    "Revision",
    "Copyright",
    "AdditionalInformation",
    "RefSemantic",
    "Constraint",
    "SourceDocumentInformation",
    "SuperiorStandardVersion",
    "ExternalReference",
    "MappingObject",
    "SourceObjectInformation",
    "WriterHeader",
}

# Reference attribute per kind; CAEX 2.15 and 3.0 exports disagree on the
# role reference names, so each kind lists every spelling seen in the wild.
REFERENCE_ATTRIBUTES = {
    CaexKind.INTERNAL_ELEMENT: ("RefBaseSystemUnitPath",),
    CaexKind.EXTERNAL_INTERFACE: ("RefBaseClassPath",),
    CaexKind.ATTRIBUTE: ("RefAttributeType",),
    CaexKind.ROLE_REQUIREMENTS: ("RefBaseRoleClassPath", "RefRoleClassPath"),
    CaexKind.SUPPORTED_ROLE_CLASS: ("RefRoleClassPath", "RefBaseRoleClassPath"),
}


@dataclass(frozen=True, eq=False)
class CaexElement:
    kind: CaexKind
    name: str
    path: Tuple[str, ...]
    id: Optional[str] = None
    ref_base_class_path: Optional[str] = None
    ref_partner_side_a: Optional[str] = None
    ref_partner_side_b: Optional[str] = None
    attribute_value: Optional[str] = None
    attribute_data_type: Optional[str] = None
    tag: str = ""
    children: Tuple["CaexElement", ...] = ()

    def children_of_kind(self, kind: CaexKind) -> List["CaexElement"]:
        return [child for child in self.children if child.kind == kind]

    def walk(self) -> Iterator["CaexElement"]:
        """Depth-first, document order, self first"""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True, eq=False)
class CaexClass:
    kind: ClassKind
    name: str
    path: str
    library: str
    id: Optional[str] = None
    ref_base_class_path: Optional[str] = None
    elements: Tuple[CaexElement, ...] = ()
    children: Tuple["CaexClass", ...] = ()

    @property
    def attributes(self) -> List[CaexElement]:
        return [e for e in self.elements if e.kind == CaexKind.ATTRIBUTE]

    def walk(self) -> Iterator["CaexClass"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True, eq=False)
class CaexLibrary:
    name: str
    kind: LibraryKind
    id: Optional[str] = None
    classes: Tuple[CaexClass, ...] = ()
    opaque: Tuple[CaexElement, ...] = ()

    def walk(self) -> Iterator[CaexClass]:
        for cls in self.classes:
            yield from cls.walk()


Handle = Union[CaexElement, CaexClass, CaexLibrary]


@dataclass(frozen=True, eq=False)
class AmlDocument:
    file_name: str
    schema_version: Optional[str] = None
    instance_hierarchies: Tuple[CaexElement, ...] = ()
    role_class_libs: Tuple[CaexLibrary, ...] = ()
    interface_class_libs: Tuple[CaexLibrary, ...] = ()
    system_unit_class_libs: Tuple[CaexLibrary, ...] = ()
    opaque: Tuple[CaexElement, ...] = ()
    id_index: Mapping[str, Handle] = field(
        default_factory=lambda: MappingProxyType({})
    )

    @property
    def libraries(self) -> Tuple[CaexLibrary, ...]:
        return (
            self.role_class_libs
            + self.interface_class_libs
            + self.system_unit_class_libs
        )

    def iter_classes(self) -> Iterator[CaexClass]:
        for library in self.libraries:
            yield from library.walk()

    def iter_elements(self) -> Iterator[CaexElement]:
        """Every element of every instance hierarchy, class body and opaque extension"""
        for hierarchy in self.instance_hierarchies:
            for element in hierarchy.walk():
                if element.kind != CaexKind.INSTANCE_HIERARCHY:
                    yield element
        for library in self.libraries:
            for cls in library.walk():
                for element in cls.elements:
                    yield from element.walk()
            for extension in library.opaque:
                yield from extension.walk()
        for extension in self.opaque:
            yield from extension.walk()


@dataclass(frozen=True)
class CaexWarning:
    kind: str
    subject: str
    message: str


def _local_name(node: etree._Element) -> str:
    return etree.QName(node).localname


def _text(node: etree._Element, tag: str) -> Optional[str]:
    for child in node:
        if isinstance(child.tag, str) and _local_name(child) == tag:
            return child.text if child.text is not None else ""
    return None


def _segment(name: str, kind: str, index: int) -> str:
    return name if name else f"{kind}[{index}]"


class _CaexParser:
    def __init__(self, file_name: str):
        self.file_name = file_name
        self.id_index: Dict[str, Handle] = {}

    def register(self, element_id: Optional[str], handle: Handle):
        if element_id is None:
            return
        if element_id in self.id_index:
            raise DuplicateId(element_id)
        self.id_index[element_id] = handle

    def parse_element(
        self,
        node: etree._Element,
        kind: CaexKind,
        parent_path: Tuple[str, ...],
        index: int,
    ) -> CaexElement:
        name = node.get("Name", "")
        path = parent_path + (_segment(name, kind.value, index),)
        ref = None
        for attribute in REFERENCE_ATTRIBUTES.get(kind, ()):
            if node.get(attribute) is not None:
                ref = node.get(attribute)
                break
        value = None
        if kind == CaexKind.ATTRIBUTE:
            value = _text(node, "Value")
        children = self.parse_children(node, path, kind)
        element = CaexElement(
            kind=kind,
            name=name,
            path=path,
            id=node.get("ID"),
            ref_base_class_path=ref,
            ref_partner_side_a=node.get("RefPartnerSideA"),
            ref_partner_side_b=node.get("RefPartnerSideB"),
            attribute_value=value,
            attribute_data_type=node.get("AttributeDataType"),
            tag=_local_name(node),
            children=tuple(children),
        )
        if kind == CaexKind.INTERNAL_LINK and (
            element.ref_partner_side_a is None or element.ref_partner_side_b is None
        ):
            raise MalformedXml(
                f"InternalLink '{name}' lacks RefPartnerSideA/RefPartnerSideB",
                node.sourceline,
            )
        self.register(element.id, element)
        return element

    def parse_children(
        self, node: etree._Element, path: Tuple[str, ...], parent_kind: Optional[CaexKind]
    ) -> List[CaexElement]:
        children = []
        for index, child in enumerate(c for c in node if isinstance(c.tag, str)):
            tag = _local_name(child)
            if tag in METADATA_TAGS:
                continue
            kind = STRUCTURAL_TAGS.get(tag)
            if kind == CaexKind.INTERNAL_ELEMENT and parent_kind == CaexKind.EXTERNAL_INTERFACE:
                logger.warning(
                    f"{self.file_name}: InternalElement inside ExternalInterface "
                    f"at line {child.sourceline} kept as opaque content"
                )
                kind = None
            if kind is None:
                children.append(self.parse_opaque(child, path, index))
            else:
                children.append(self.parse_element(child, kind, path, index))
        return children

    def parse_opaque(
        self, node: etree._Element, parent_path: Tuple[str, ...], index: int
    ) -> CaexElement:
        """Unknown content: kept with its subtree, IDs indexed, never mapped"""
        tag = _local_name(node)
        path = parent_path + (f"{tag}[{index}]",)
        children = [
            self.parse_opaque(child, path, position)
            for position, child in enumerate(c for c in node if isinstance(c.tag, str))
            if _local_name(child) not in METADATA_TAGS
        ]
        element = CaexElement(
            kind=CaexKind.OPAQUE,
            name=node.get("Name", ""),
            path=path,
            id=node.get("ID"),
            tag=tag,
            children=tuple(children),
        )
        self.register(element.id, element)
        return element

    def parse_class(
        self,
        node: etree._Element,
        kind: ClassKind,
        library: str,
        parent_path: str,
    ) -> CaexClass:
        name = node.get("Name", "")
        path = f"{parent_path}{PATH_SEPARATOR}{name}"
        # the marker keeps body elements apart from nested classes of the same name
        segments = tuple(path.split(PATH_SEPARATOR)) + (CLASS_BODY_SEGMENT,)
        nested = []
        elements = []
        for index, child in enumerate(c for c in node if isinstance(c.tag, str)):
            tag = _local_name(child)
            if tag == kind.value:
                nested.append(self.parse_class(child, kind, library, path))
            elif tag in METADATA_TAGS:
                continue
            elif tag in STRUCTURAL_TAGS:
                elements.append(
                    self.parse_element(child, STRUCTURAL_TAGS[tag], segments, index)
                )
            else:
                elements.append(self.parse_opaque(child, segments, index))
        cls = CaexClass(
            kind=kind,
            name=name,
            path=path,
            library=library,
            id=node.get("ID"),
            ref_base_class_path=node.get("RefBaseClassPath"),
            elements=tuple(elements),
            children=tuple(nested),
        )
        self.register(cls.id, cls)
        return cls

    def parse_library(self, node: etree._Element, kind: LibraryKind) -> CaexLibrary:
        name = node.get("Name", "")
        class_kind = LIBRARY_CLASS_KIND[kind]
        seen = set()
        classes = []
        opaque = []
        for index, child in enumerate(c for c in node if isinstance(c.tag, str)):
            tag = _local_name(child)
            if tag in METADATA_TAGS:
                continue
            if tag != class_kind.value:
                opaque.append(self.parse_opaque(child, (name,), index))
                continue
            cls = self.parse_class(child, class_kind, name, name)
            if cls.name in seen:
                logger.warning(
                    f"{self.file_name}: class name '{cls.name}' repeated in library '{name}'"
                )
            seen.add(cls.name)
            classes.append(cls)
        library = CaexLibrary(
            name=name,
            kind=kind,
            id=node.get("ID"),
            classes=tuple(classes),
            opaque=tuple(opaque),
        )
        self.register(library.id, library)
        return library

    def parse_document(self, root: etree._Element) -> AmlDocument:
        hierarchies = []
        libraries: Dict[LibraryKind, List[CaexLibrary]] = {kind: [] for kind in LibraryKind}
        opaque = []
        for index, child in enumerate(c for c in root if isinstance(c.tag, str)):
            tag = _local_name(child)
            if tag == "InstanceHierarchy":
                name = child.get("Name", "")
                path = (_segment(name, tag, len(hierarchies)),)
                hierarchy = CaexElement(
                    kind=CaexKind.INSTANCE_HIERARCHY,
                    name=name,
                    path=path,
                    id=child.get("ID"),
                    tag=tag,
                    children=tuple(self.parse_children(child, path, None)),
                )
                self.register(hierarchy.id, hierarchy)
                hierarchies.append(hierarchy)
            elif tag in LIBRARY_TAGS:
                kind = LibraryKind(tag)
                libraries[kind].append(self.parse_library(child, kind))
            elif tag not in METADATA_TAGS:
                opaque.append(self.parse_opaque(child, (), index))

        return AmlDocument(
            file_name=self.file_name,
            schema_version=root.get("SchemaVersion"),
            instance_hierarchies=tuple(hierarchies),
            role_class_libs=tuple(libraries[LibraryKind.ROLE_CLASS_LIB]),
            interface_class_libs=tuple(libraries[LibraryKind.INTERFACE_CLASS_LIB]),
            system_unit_class_libs=tuple(libraries[LibraryKind.SYSTEM_UNIT_CLASS_LIB]),
            opaque=tuple(opaque),
            id_index=MappingProxyType(dict(self.id_index)),
        )


def parse_aml(xml_bytes: Union[bytes, str], file_name: str) -> AmlDocument:
    """Parse CAEX XML into an AmlDocument"""
    if isinstance(xml_bytes, str):
        xml_bytes = xml_bytes.encode("utf-8")
    parser = etree.XMLParser(
        remove_comments=True,
        remove_pis=True,
        resolve_entities=False,
        no_network=True,
    )
    try:
        root = etree.fromstring(xml_bytes, parser)
    except etree.XMLSyntaxError as e:
        raise MalformedXml(str(e.msg or e), getattr(e, "lineno", None)) from e

    if _local_name(root) != "CAEXFile":
        raise NotCaex(_local_name(root))

    document = _CaexParser(file_name).parse_document(root)
    logger.info(
        f"Parsed {file_name}: {len(document.instance_hierarchies)} hierarchies, "
        f"{len(document.libraries)} libraries, {len(document.id_index)} IDs"
    )
    return document


def parse_aml_file(path: Union[str, Path]) -> AmlDocument:
    path = Path(path)
    return parse_aml(path.read_bytes(), path.name)


def merge_libraries(doc: AmlDocument, *library_docs: AmlDocument) -> AmlDocument:
    """Attach the class libraries of AR files to a model document"""
    known = {library.name for library in doc.libraries}
    id_index = dict(doc.id_index)
    added: Dict[LibraryKind, List[CaexLibrary]] = {kind: [] for kind in LibraryKind}

    for other in library_docs:
        for library in other.libraries:
            if library.name in known:
                logger.warning(
                    f"Library '{library.name}' from {other.file_name} already present "
                    f"in {doc.file_name}; keeping the existing one"
                )
                continue
            known.add(library.name)
            added[library.kind].append(library)
            handles: List[Tuple[Optional[str], Handle]] = [(library.id, library)]
            for cls in library.walk():
                handles.append((cls.id, cls))
                for element in cls.elements:
                    handles.extend((e.id, e) for e in element.walk())
            for extension in library.opaque:
                handles.extend((e.id, e) for e in extension.walk())
            for element_id, handle in handles:
                if element_id is None:
                    continue
                if element_id in id_index:
                    raise DuplicateId(element_id)
                id_index[element_id] = handle

    return replace(
        doc,
        role_class_libs=doc.role_class_libs + tuple(added[LibraryKind.ROLE_CLASS_LIB]),
        interface_class_libs=doc.interface_class_libs
        + tuple(added[LibraryKind.INTERFACE_CLASS_LIB]),
        system_unit_class_libs=doc.system_unit_class_libs
        + tuple(added[LibraryKind.SYSTEM_UNIT_CLASS_LIB]),
        id_index=MappingProxyType(id_index),
    )


def resolve_class_path(doc: AmlDocument, caex_path: str) -> Optional[CaexClass]:
    """Walk library -> nested classes; None if any segment is missing"""
    if not caex_path:
        return None
    segments = [s for s in caex_path.strip().split(PATH_SEPARATOR)]
    if len(segments) < 2 or any(not s for s in segments):
        return None

    library_name, class_names = segments[0], segments[1:]
    for library in doc.libraries:
        if library.name != library_name:
            continue
        candidates = library.classes
        found = None
        for class_name in class_names:
            found = next((c for c in candidates if c.name == class_name), None)
            if found is None:
                break
            candidates = found.children
        if found is not None:
            return found
    return None


def class_ancestry(
    doc: AmlDocument,
    cls: CaexClass,
    warnings: Optional[List[CaexWarning]] = None,
) -> List[CaexClass]:
    """The class followed by its RefBaseClassPath chain, cycles cut at first repeat"""
    chain = [cls]
    current = cls
    while current.ref_base_class_path:
        base = resolve_class_path(doc, current.ref_base_class_path)
        if base is None:
            if warnings is not None:
                warnings.append(
                    CaexWarning(
                        "UnresolvedClassPath",
                        current.path,
                        f"base class '{current.ref_base_class_path}' not found",
                    )
                )
            break
        if any(base is seen for seen in chain):
            logger.warning(f"Cyclic inheritance at {current.path} -> {base.path}")
            if warnings is not None:
                warnings.append(
                    CaexWarning(
                        "CyclicInheritance",
                        current.path,
                        f"'{current.path}' derives from '{base.path}' which is already in the chain",
                    )
                )
            break
        chain.append(base)
        current = base
    return chain


def _find_interface(owner: CaexElement, name: str) -> Optional[CaexElement]:
    for child in owner.children_of_kind(CaexKind.EXTERNAL_INTERFACE):
        if child.name == name:
            return child
    for element in owner.walk():
        if element.kind == CaexKind.EXTERNAL_INTERFACE and element.name == name:
            return element
    return None


def resolve_interface_ref(doc: AmlDocument, ref: str) -> Optional[CaexElement]:
    """Resolve an InternalLink partner reference: ID first, then owner:interface"""
    if not ref:
        return None

    handle = doc.id_index.get(ref)
    if isinstance(handle, CaexElement) and handle.kind == CaexKind.EXTERNAL_INTERFACE:
        return handle

    if ":" not in ref:
        return None
    owner_ref, interface_name = ref.rsplit(":", 1)

    owner = doc.id_index.get(owner_ref)
    if not isinstance(owner, CaexElement):
        named = [
            element
            for element in doc.iter_elements()
            if element.name == owner_ref
            and element.kind in (CaexKind.INTERNAL_ELEMENT, CaexKind.EXTERNAL_INTERFACE)
        ]
        if len(named) != 1:
            if len(named) > 1:
                logger.warning(f"Interface reference '{ref}' is ambiguous ({len(named)} owners)")
            return None
        owner = named[0]

    return _find_interface(owner, interface_name)

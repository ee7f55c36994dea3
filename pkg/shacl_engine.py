"""
SHACL core engine.

parse_shapes() compiles a shapes graph into Shape values, validate() checks a
data graph against them and returns a ValidationReport. Only the constraint
components listed in COMPONENT_IRIS are evaluated; anything else in the sh:
namespace is reported as an UnsupportedComponent diagnostic instead of being
silently ignored.

Recursive shape references are cut with a visited set: re-entering a
(shape, node) pair that is already being checked counts as conforming.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

from rdflib import BNode, Graph, Literal, URIRef
from rdflib.namespace import OWL, RDF, RDFS, SH, XSD

from errors import IllFormedShape

logger = logging.getLogger(__name__)

Term = Union[URIRef, BNode, Literal]


class ShapeKind(str, Enum):
    NODE = "node"
    PROPERTY = "property"


class Severity(str, Enum):
    VIOLATION = str(SH.Violation)
    WARNING = str(SH.Warning)
    INFO = str(SH.Info)

    @property
    def iri(self) -> URIRef:
        return URIRef(self.value)


class TargetKind(str, Enum):
    CLASS = "targetClass"
    NODE = "targetNode"
    SUBJECTS_OF = "targetSubjectsOf"
    OBJECTS_OF = "targetObjectsOf"
    IMPLICIT_CLASS = "implicitClass"


@dataclass(frozen=True)
class Target:
    kind: TargetKind
    value: Term


# Property paths


@dataclass(frozen=True)
class PredicatePath:
    iri: URIRef


@dataclass(frozen=True)
class InversePath:
    path: "PropertyPath"


@dataclass(frozen=True)
class SequencePath:
    paths: Tuple["PropertyPath", ...]

    def __post_init__(self):
        if not self.paths:
            raise ValueError("sequence path needs at least one member")


@dataclass(frozen=True)
class AlternativePath:
    paths: Tuple["PropertyPath", ...]

    def __post_init__(self):
        if not self.paths:
            raise ValueError("alternative path needs at least one member")


PropertyPath = Union[PredicatePath, InversePath, SequencePath, AlternativePath]


# Constraint components


@dataclass(frozen=True)
class MinCount:
    count: int
    iri: ClassVar[URIRef] = SH.MinCountConstraintComponent


@dataclass(frozen=True)
class MaxCount:
    count: int
    iri: ClassVar[URIRef] = SH.MaxCountConstraintComponent


@dataclass(frozen=True)
class ClassConstraint:
    cls: URIRef
    iri: ClassVar[URIRef] = SH.ClassConstraintComponent


@dataclass(frozen=True)
class Datatype:
    datatype: URIRef
    iri: ClassVar[URIRef] = SH.DatatypeConstraintComponent


@dataclass(frozen=True)
class NodeKind:
    kind: URIRef
    iri: ClassVar[URIRef] = SH.NodeKindConstraintComponent


@dataclass(frozen=True)
class HasValue:
    value: Term
    iri: ClassVar[URIRef] = SH.HasValueConstraintComponent


@dataclass(frozen=True)
class In:
    values: Tuple[Term, ...]
    iri: ClassVar[URIRef] = SH.InConstraintComponent


@dataclass(frozen=True)
class Pattern:
    regex: str
    flags: str = ""
    iri: ClassVar[URIRef] = SH.PatternConstraintComponent

    def compiled(self) -> "re.Pattern[str]":
        return re.compile(self.regex, _regex_flags(self.flags))


@dataclass(frozen=True)
class Node:
    shape: Term
    iri: ClassVar[URIRef] = SH.NodeConstraintComponent


@dataclass(frozen=True)
class Not:
    shape: Term
    iri: ClassVar[URIRef] = SH.NotConstraintComponent


@dataclass(frozen=True)
class And:
    shapes: Tuple[Term, ...]
    iri: ClassVar[URIRef] = SH.AndConstraintComponent


@dataclass(frozen=True)
class Or:
    shapes: Tuple[Term, ...]
    iri: ClassVar[URIRef] = SH.OrConstraintComponent


@dataclass(frozen=True)
class QualifiedValueShape:
    shape: Term
    min_count: Optional[int] = None
    max_count: Optional[int] = None
    iri: ClassVar[URIRef] = SH.QualifiedMinCountConstraintComponent
    max_iri: ClassVar[URIRef] = SH.QualifiedMaxCountConstraintComponent


ConstraintComponent = Union[
    MinCount,
    MaxCount,
    ClassConstraint,
    Datatype,
    NodeKind,
    HasValue,
    In,
    Pattern,
    Node,
    Not,
    And,
    Or,
    QualifiedValueShape,
]

COMPONENT_IRIS = frozenset(
    [
        SH.MinCountConstraintComponent,
        SH.MaxCountConstraintComponent,
        SH.ClassConstraintComponent,
        SH.DatatypeConstraintComponent,
        SH.NodeKindConstraintComponent,
        SH.HasValueConstraintComponent,
        SH.InConstraintComponent,
        SH.PatternConstraintComponent,
        SH.NodeConstraintComponent,
        SH.NotConstraintComponent,
        SH.AndConstraintComponent,
        SH.OrConstraintComponent,
        SH.QualifiedMinCountConstraintComponent,
        SH.QualifiedMaxCountConstraintComponent,
    ]
)

NODE_KINDS = frozenset(
    [
        SH.IRI,
        SH.BlankNode,
        SH.Literal,
        SH.BlankNodeOrIRI,
        SH.BlankNodeOrLiteral,
        SH.IRIOrLiteral,
    ]
)

TARGET_PREDICATES = {
    SH.targetClass: TargetKind.CLASS,
    SH.targetNode: TargetKind.NODE,
    SH.targetSubjectsOf: TargetKind.SUBJECTS_OF,
    SH.targetObjectsOf: TargetKind.OBJECTS_OF,
}

SHAPE_REFERENCES = (SH.property, SH.node, SH["not"], SH.qualifiedValueShape)
SHAPE_LISTS = (SH["and"], SH["or"], SH.xone)

# sh: predicates that never produce results on their own
NON_VALIDATING = frozenset(
    [
        SH.path,
        SH.name,
        SH.description,
        SH.order,
        SH.group,
        SH.defaultValue,
        SH.message,
        SH.severity,
        SH.deactivated,
        SH.flags,
        SH.qualifiedMinCount,
        SH.qualifiedMaxCount,
        SH.targetClass,
        SH.targetNode,
        SH.targetSubjectsOf,
        SH.targetObjectsOf,
        SH.property,
        SH.declare,
        SH.prefixes,
    ]
)

UNSUPPORTED_PATHS = (SH.zeroOrMorePath, SH.oneOrMorePath, SH.zeroOrOnePath)

_FLAG_MAP = {"i": re.IGNORECASE, "m": re.MULTILINE, "s": re.DOTALL, "x": re.VERBOSE}


def _regex_flags(flags: str) -> int:
    value = 0
    for flag in flags:
        if flag not in _FLAG_MAP:
            raise ValueError(f"unsupported regex flag '{flag}'")
        value |= _FLAG_MAP[flag]
    return value


@dataclass(frozen=True)
class Shape:
    id: Term
    kind: ShapeKind
    targets: Tuple[Target, ...] = ()
    path: Optional[PropertyPath] = None
    components: Tuple[ConstraintComponent, ...] = ()
    properties: Tuple[Term, ...] = ()
    severity: Severity = Severity.VIOLATION
    messages: Tuple[str, ...] = ()
    deactivated: bool = False

    def __post_init__(self):
        if self.kind == ShapeKind.PROPERTY and self.path is None:
            raise ValueError("a property shape needs a path")
        if self.kind == ShapeKind.NODE and self.path is not None:
            raise ValueError("a node shape has no path")


@dataclass(frozen=True)
class Diagnostic:
    shape: Term
    component: URIRef
    message: str


@dataclass
class ShapesGraph:
    shapes: Dict[Term, Shape] = field(default_factory=dict)
    diagnostics: List[Diagnostic] = field(default_factory=list)
    graph: Graph = field(default_factory=Graph)

    def __len__(self) -> int:
        return len(self.shapes)

    @property
    def node_shapes(self) -> List[Shape]:
        return [s for s in self.shapes.values() if s.kind == ShapeKind.NODE]

    @property
    def property_shapes(self) -> List[Shape]:
        return [s for s in self.shapes.values() if s.kind == ShapeKind.PROPERTY]


@dataclass(frozen=True)
class ValidationResult:
    focus_node: Term
    source_shape: Term
    source_constraint_component: URIRef
    severity: Severity
    message: str
    result_path: Optional[PropertyPath] = None
    value: Optional[Term] = None

    def sort_key(self) -> Tuple[str, ...]:
        return (
            self.focus_node.n3(),
            self.source_shape.n3(),
            str(self.source_constraint_component),
            self.value.n3() if self.value is not None else "",
            repr(self.result_path),
        )


@dataclass
class ValidationReport:
    conforms: bool
    results: List[ValidationResult] = field(default_factory=list)

    @property
    def violations(self) -> List[ValidationResult]:
        return [r for r in self.results if r.severity == Severity.VIOLATION]


# Compilation


class _UnsupportedPath(Exception):
    def __init__(self, predicate: URIRef):
        self.predicate = predicate


class _ShapeCompiler:
    def __init__(self, graph: Graph):
        self.graph = graph
        self.diagnostics: List[Diagnostic] = []

    def fail(self, node: Term, message: str):
        raise IllFormedShape(node.n3(), message)

    def items(self, node: Term, owner: Term, predicate: URIRef) -> List[Term]:
        if node == RDF.nil:
            return []
        if (node, RDF.first, None) not in self.graph:
            self.fail(owner, f"value of {predicate.n3()} is not an RDF list")
        return list(self.graph.items(node))

    def candidate_nodes(self) -> List[Term]:
        g = self.graph
        found: Set[Term] = set()
        for shape_type in (SH.NodeShape, SH.PropertyShape):
            found.update(g.subjects(RDF.type, shape_type))
        for predicate in TARGET_PREDICATES:
            found.update(g.subjects(predicate, None))
        for predicate in SHAPE_REFERENCES:
            found.update(g.objects(None, predicate))
        for predicate in SHAPE_LISTS:
            for owner, head in g.subject_objects(predicate):
                found.update(self.items(head, owner, predicate))
        return sorted((n for n in found if not isinstance(n, Literal)), key=lambda n: n.n3())

    def path(self, node: Term, owner: Term) -> PropertyPath:
        g = self.graph
        if isinstance(node, Literal):
            self.fail(owner, f"path {node.n3()} is a literal")
        if isinstance(node, URIRef) and node != RDF.nil and (node, RDF.first, None) not in g:
            return PredicatePath(node)
        if (node, RDF.first, None) in g:
            members = self.items(node, owner, SH.path)
            if not members:
                self.fail(owner, "empty sequence path")
            return SequencePath(tuple(self.path(m, owner) for m in members))
        inverse = list(g.objects(node, SH.inversePath))
        if inverse:
            return InversePath(self.path(inverse[0], owner))
        alternative = list(g.objects(node, SH.alternativePath))
        if alternative:
            members = self.items(alternative[0], owner, SH.alternativePath)
            if not members:
                self.fail(owner, "empty alternative path")
            return AlternativePath(tuple(self.path(m, owner) for m in members))
        for predicate in UNSUPPORTED_PATHS:
            if (node, predicate, None) in g:
                raise _UnsupportedPath(predicate)
        self.fail(owner, f"unrecognised path node {node.n3()}")

    def single(self, node: Term, predicate: URIRef) -> Optional[Term]:
        values = list(self.graph.objects(node, predicate))
        if len(values) > 1:
            self.fail(node, f"{predicate.n3()} has {len(values)} values")
        return values[0] if values else None

    def count(self, node: Term, predicate: URIRef, value: Term) -> int:
        python_value = value.toPython() if isinstance(value, Literal) else None
        if isinstance(python_value, bool) or not isinstance(python_value, int) or python_value < 0:
            self.fail(node, f"{predicate.n3()} must be a non-negative integer, got {value.n3()}")
        return python_value

    def compile(self, node: Term) -> Optional[Shape]:
        g = self.graph
        path_node = self.single(node, SH.path)
        path = None
        if path_node is not None:
            try:
                path = self.path(path_node, node)
            except _UnsupportedPath as e:
                self.diagnostics.append(
                    Diagnostic(node, e.predicate, f"path operator {e.predicate.n3()} is not supported")
                )
                return None

        types = set(g.objects(node, RDF.type))
        if SH.PropertyShape in types and path is None:
            self.fail(node, "sh:PropertyShape without sh:path")
        if SH.NodeShape in types and path is not None:
            self.fail(node, "sh:NodeShape with sh:path")

        targets = []
        for predicate, kind in TARGET_PREDICATES.items():
            for value in g.objects(node, predicate):
                targets.append(Target(kind, value))
        if path is None and types & {RDFS.Class, OWL.Class}:
            targets.append(Target(TargetKind.IMPLICIT_CLASS, node))

        severity = Severity.VIOLATION
        severity_node = self.single(node, SH.severity)
        if severity_node is not None:
            try:
                severity = Severity(str(severity_node))
            except ValueError:
                self.fail(node, f"unknown severity {severity_node.n3()}")

        deactivated = any(
            isinstance(v, Literal) and v.toPython() is True for v in g.objects(node, SH.deactivated)
        )
        messages = tuple(sorted(str(m) for m in g.objects(node, SH.message)))

        components: List[ConstraintComponent] = []
        properties: List[Term] = []
        for predicate, value in sorted(g.predicate_objects(node), key=lambda po: (po[0].n3(), po[1].n3())):
            if predicate == SH.property:
                properties.append(value)
                continue
            component = self.component(node, predicate, value)
            if component is not None:
                components.append(component)

        qualified = self.qualified(node)
        if qualified is not None:
            components.append(qualified)

        return Shape(
            id=node,
            kind=ShapeKind.PROPERTY if path is not None else ShapeKind.NODE,
            targets=tuple(sorted(targets, key=lambda t: (t.kind.value, t.value.n3()))),
            path=path,
            components=tuple(components),
            properties=tuple(properties),
            severity=severity,
            messages=messages,
            deactivated=deactivated,
        )

    def component(self, node: Term, predicate: URIRef, value: Term) -> Optional[ConstraintComponent]:
        g = self.graph
        if predicate == SH.minCount:
            return MinCount(self.count(node, predicate, value))
        if predicate == SH.maxCount:
            return MaxCount(self.count(node, predicate, value))
        if predicate == SH["class"]:
            return ClassConstraint(value)
        if predicate == SH.datatype:
            return Datatype(value)
        if predicate == SH.nodeKind:
            if value not in NODE_KINDS:
                self.fail(node, f"unknown node kind {value.n3()}")
            return NodeKind(value)
        if predicate == SH.hasValue:
            return HasValue(value)
        if predicate == SH["in"]:
            return In(tuple(self.items(value, node, predicate)))
        if predicate == SH.pattern:
            flags = self.single(node, SH.flags)
            pattern = Pattern(str(value), str(flags) if flags is not None else "")
            try:
                pattern.compiled()
            except (re.error, ValueError) as e:
                self.fail(node, f"sh:pattern does not compile: {e}")
            return pattern
        if predicate == SH.node:
            return Node(value)
        if predicate == SH["not"]:
            return Not(value)
        if predicate == SH["and"]:
            return And(tuple(self.items(value, node, predicate)))
        if predicate == SH["or"]:
            return Or(tuple(self.items(value, node, predicate)))
        if predicate in (SH.qualifiedValueShape, SH.qualifiedValueShapesDisjoint):
            if predicate == SH.qualifiedValueShapesDisjoint and isinstance(value, Literal) and value.toPython() is True:
                self.diagnostics.append(
                    Diagnostic(node, predicate, "sh:qualifiedValueShapesDisjoint is not supported")
                )
            return None
        if predicate in NON_VALIDATING or predicate == RDF.type:
            return None
        if str(predicate).startswith(str(SH)):
            self.diagnostics.append(
                Diagnostic(node, predicate, f"constraint parameter {predicate.n3()} is not supported")
            )
        return None

    def qualified(self, node: Term) -> Optional[QualifiedValueShape]:
        shape = self.single(node, SH.qualifiedValueShape)
        min_node = self.single(node, SH.qualifiedMinCount)
        max_node = self.single(node, SH.qualifiedMaxCount)
        if shape is None:
            if min_node is not None or max_node is not None:
                self.fail(node, "qualified count without sh:qualifiedValueShape")
            return None
        if min_node is None and max_node is None:
            return None
        return QualifiedValueShape(
            shape=shape,
            min_count=self.count(node, SH.qualifiedMinCount, min_node) if min_node is not None else None,
            max_count=self.count(node, SH.qualifiedMaxCount, max_node) if max_node is not None else None,
        )


def parse_shapes(graph: Graph) -> ShapesGraph:
    """Compile every shape node of a shapes graph"""
    compiler = _ShapeCompiler(graph)
    shapes: Dict[Term, Shape] = {}
    for node in compiler.candidate_nodes():
        shape = compiler.compile(node)
        if shape is not None:
            shapes[node] = shape

    for diagnostic in compiler.diagnostics:
        logger.warning(f"UnsupportedComponent {diagnostic.component.n3()} on {diagnostic.shape.n3()}")
    logger.info(
        f"Compiled {len(shapes)} shapes ({sum(1 for s in shapes.values() if s.kind == ShapeKind.PROPERTY)} "
        f"property shapes), {len(compiler.diagnostics)} diagnostics"
    )
    return ShapesGraph(shapes=shapes, diagnostics=compiler.diagnostics, graph=graph)


# Evaluation


def instances_of(data: Graph, cls: Term) -> Set[Term]:
    """SHACL instances: rdf:type followed by rdfs:subClassOf* in the data graph"""
    members: Set[Term] = set()
    for subclass in data.transitive_subjects(RDFS.subClassOf, cls):
        members.update(data.subjects(RDF.type, subclass))
    return members


def is_instance(data: Graph, node: Term, cls: Term) -> bool:
    if isinstance(node, Literal):
        return False
    for node_type in data.objects(node, RDF.type):
        if cls in data.transitive_objects(node_type, RDFS.subClassOf):
            return True
    return False


def resolve_targets(shape: Shape, data: Graph) -> Set[Term]:
    focus: Set[Term] = set()
    for target in shape.targets:
        if target.kind in (TargetKind.CLASS, TargetKind.IMPLICIT_CLASS):
            focus.update(instances_of(data, target.value))
        elif target.kind == TargetKind.NODE:
            focus.add(target.value)
        elif target.kind == TargetKind.SUBJECTS_OF:
            focus.update(data.subjects(target.value, None))
        elif target.kind == TargetKind.OBJECTS_OF:
            focus.update(data.objects(None, target.value))
    return focus


def _inverse(path: PropertyPath, node: Term, data: Graph) -> Set[Term]:
    if isinstance(path, PredicatePath):
        return set(data.subjects(path.iri, node))
    if isinstance(path, InversePath):
        return evaluate_path(path.path, node, data)
    if isinstance(path, SequencePath):
        current = {node}
        for step in reversed(path.paths):
            current = set().union(*(_inverse(step, n, data) for n in current)) if current else set()
        return current
    return set().union(*(_inverse(p, node, data) for p in path.paths))


def evaluate_path(path: PropertyPath, node: Term, data: Graph) -> Set[Term]:
    """Value nodes reached from node along path (duplicates collapsed)"""
    if isinstance(path, PredicatePath):
        if isinstance(node, Literal):
            return set()
        return set(data.objects(node, path.iri))
    if isinstance(path, InversePath):
        return _inverse(path.path, node, data)
    if isinstance(path, SequencePath):
        current = {node}
        for step in path.paths:
            current = set().union(*(evaluate_path(step, n, data) for n in current)) if current else set()
        return current
    return set().union(*(evaluate_path(p, node, data) for p in path.paths))


def _datatype_of(value: Literal) -> URIRef:
    if value.language:
        return RDF.langString
    return value.datatype if value.datatype is not None else XSD.string


def _matches_node_kind(value: Term, kind: URIRef) -> bool:
    if isinstance(value, BNode):
        return kind in (SH.BlankNode, SH.BlankNodeOrIRI, SH.BlankNodeOrLiteral)
    if isinstance(value, Literal):
        return kind in (SH.Literal, SH.BlankNodeOrLiteral, SH.IRIOrLiteral)
    return kind in (SH.IRI, SH.BlankNodeOrIRI, SH.IRIOrLiteral)


def _local(iri: Term) -> str:
    text = str(iri)
    return re.split(r"[#/]", text)[-1] or text


def _shape_name(shape: Term) -> str:
    # blank node labels differ between runs, keep messages stable
    if isinstance(shape, BNode):
        return "an anonymous shape"
    return _local(shape)


def _describe(path: Optional[PropertyPath]) -> str:
    if path is None:
        return "focus node"
    if isinstance(path, PredicatePath):
        return _local(path.iri)
    if isinstance(path, InversePath):
        return f"^{_describe(path.path)}"
    if isinstance(path, SequencePath):
        return "/".join(_describe(p) for p in path.paths)
    return "|".join(_describe(p) for p in path.paths)


class _Validator:
    def __init__(self, data: Graph, shapes: ShapesGraph):
        self.data = data
        self.shapes = shapes

    def conforms(self, node: Term, shape_id: Term, visiting: FrozenSet[Tuple[Term, Term]]) -> bool:
        shape = self.shapes.shapes.get(shape_id)
        if shape is None:
            logger.debug(f"Reference to unknown shape {shape_id.n3()} treated as conforming")
            return True
        key = (shape_id, node)
        if key in visiting:
            return True
        return not self.validate_shape(shape, node, visiting | {key})

    def result(
        self,
        shape: Shape,
        focus: Term,
        iri: URIRef,
        default_message: str,
        value: Optional[Term] = None,
    ) -> ValidationResult:
        return ValidationResult(
            focus_node=focus,
            source_shape=shape.id,
            source_constraint_component=iri,
            severity=shape.severity,
            message=shape.messages[0] if shape.messages else default_message,
            result_path=shape.path,
            value=value,
        )

    def validate_shape(
        self, shape: Shape, focus: Term, visiting: FrozenSet[Tuple[Term, Term]] = frozenset()
    ) -> List[ValidationResult]:
        if shape.deactivated:
            return []
        values = evaluate_path(shape.path, focus, self.data) if shape.path is not None else {focus}
        ordered = sorted(values, key=lambda v: v.n3())
        where = _describe(shape.path)
        results: List[ValidationResult] = []

        for component in shape.components:
            results.extend(self.check(component, shape, focus, ordered, where, visiting))

        for property_id in shape.properties:
            prop = self.shapes.shapes.get(property_id)
            if prop is None:
                continue
            for value in ordered:
                key = (property_id, value)
                # re-entering a property shape on the same node counts as conforming
                if key in visiting:
                    continue
                results.extend(self.validate_shape(prop, value, visiting | {key}))
        return results

    def check(
        self,
        component: ConstraintComponent,
        shape: Shape,
        focus: Term,
        values: List[Term],
        where: str,
        visiting: FrozenSet[Tuple[Term, Term]],
    ) -> List[ValidationResult]:
        data = self.data
        out: List[ValidationResult] = []

        if isinstance(component, MinCount):
            if len(values) < component.count:
                out.append(self.result(
                    shape, focus, component.iri,
                    f"Expected at least {component.count} value(s) for {where}, found {len(values)}",
                ))
        elif isinstance(component, MaxCount):
            if len(values) > component.count:
                out.append(self.result(
                    shape, focus, component.iri,
                    f"Expected at most {component.count} value(s) for {where}, found {len(values)}",
                ))
        elif isinstance(component, ClassConstraint):
            for value in values:
                if not is_instance(data, value, component.cls):
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} is not an instance of {_local(component.cls)}",
                        value,
                    ))
        elif isinstance(component, Datatype):
            for value in values:
                ok = (
                    isinstance(value, Literal)
                    and _datatype_of(value) == component.datatype
                    and not getattr(value, "ill_typed", False)
                )
                if not ok:
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} does not have datatype {_local(component.datatype)}",
                        value,
                    ))
        elif isinstance(component, NodeKind):
            for value in values:
                if not _matches_node_kind(value, component.kind):
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} is not of node kind {_local(component.kind)}",
                        value,
                    ))
        elif isinstance(component, HasValue):
            if component.value not in values:
                out.append(self.result(
                    shape, focus, component.iri,
                    f"Missing expected value {component.value.n3()} for {where}",
                ))
        elif isinstance(component, In):
            for value in values:
                if value not in component.values:
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} is not among the allowed values",
                        value,
                    ))
        elif isinstance(component, Pattern):
            regex = component.compiled()
            for value in values:
                if isinstance(value, BNode) or not regex.search(str(value)):
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} does not match pattern '{component.regex}'",
                        value,
                    ))
        elif isinstance(component, Node):
            for value in values:
                if not self.conforms(value, component.shape, visiting):
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} does not conform to shape {_shape_name(component.shape)}",
                        value,
                    ))
        elif isinstance(component, Not):
            for value in values:
                if self.conforms(value, component.shape, visiting):
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} conforms to the negated shape {_shape_name(component.shape)}",
                        value,
                    ))
        elif isinstance(component, And):
            for value in values:
                if not all(self.conforms(value, s, visiting) for s in component.shapes):
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} does not conform to all shapes of sh:and",
                        value,
                    ))
        elif isinstance(component, Or):
            for value in values:
                if not any(self.conforms(value, s, visiting) for s in component.shapes):
                    out.append(self.result(
                        shape, focus, component.iri,
                        f"Value of {where} conforms to none of the shapes of sh:or",
                        value,
                    ))
        elif isinstance(component, QualifiedValueShape):
            matching = sum(1 for v in values if self.conforms(v, component.shape, visiting))
            if component.min_count is not None and matching < component.min_count:
                out.append(self.result(
                    shape, focus, component.iri,
                    f"Expected at least {component.min_count} value(s) of {where} conforming to "
                    f"{_shape_name(component.shape)}, found {matching}",
                ))
            if component.max_count is not None and matching > component.max_count:
                out.append(self.result(
                    shape, focus, component.max_iri,
                    f"Expected at most {component.max_count} value(s) of {where} conforming to "
                    f"{_shape_name(component.shape)}, found {matching}",
                ))
        return out


def validate(data: Graph, shapes: ShapesGraph) -> ValidationReport:
    """Validate a data graph; never raises on findings, it reports them"""
    validator = _Validator(data, shapes)
    results: List[ValidationResult] = []
    for shape in sorted(shapes.shapes.values(), key=lambda s: s.id.n3()):
        if shape.deactivated or not shape.targets:
            continue
        for focus in sorted(resolve_targets(shape, data), key=lambda n: n.n3()):
            results.extend(validator.validate_shape(shape, focus))

    results = sorted(set(results), key=ValidationResult.sort_key)
    conforms = not any(r.severity == Severity.VIOLATION for r in results)
    logger.info(f"Validation finished: conforms={conforms}, {len(results)} results")
    return ValidationReport(conforms=conforms, results=results)

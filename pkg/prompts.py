"""
Prompt templates for shape generation and report interpretation.

The templates are plain module-level strings; build_shape_prompt() and
build_interpretation_prompt() assemble them into a PromptBundle whose bytes
depend only on the inputs. Changing any text here changes the prompt hashes,
so recorded LLM fixtures have to be recorded again afterwards.
"""

from enum import Enum
from typing import Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from aml_to_owl import DEFAULT_BASE_IRI
from errors import BadReport, EmptyConstraints, TurtleSyntax
from rdf_core import DEFAULT_AML_NAMESPACE, parse_turtle


class SectionLabel(str, Enum):
    ONTOLOGY_CONTEXT = "OntologyContext"
    RELEVANT_LIBRARIES = "RelevantLibraries"
    EXAMPLES = "Examples"
    CONSTRAINTS = "Constraints"
    REPORT = "Report"
    ONTOLOGY = "Ontology"


class PromptSection(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: SectionLabel
    body: str


class PromptBundle(BaseModel):
    model_config = ConfigDict(frozen=True)

    system_text: str
    user_text: str
    sections: Tuple[PromptSection, ...]

    def messages(self) -> List[Dict[str, str]]:
        return [
            {"role": "system", "content": self.system_text},
            {"role": "user", "content": self.user_text},
        ]

    def section(self, label: SectionLabel) -> str:
        for section in self.sections:
            if section.label == label:
                return section.body
        raise KeyError(label.value)


def section_header(label: SectionLabel) -> str:
    return f"### {label.value}"


def render_sections(sections: Sequence[PromptSection]) -> str:
    return "\n\n".join(f"{section_header(s.label)}\n{s.body.strip()}" for s in sections) + "\n"


def _bundle(system_text: str, sections: List[PromptSection]) -> PromptBundle:
    return PromptBundle(
        system_text=system_text.strip() + "\n",
        user_text=render_sections(sections),
        sections=tuple(sections),
    )


ONTOLOGY_CONTEXT = """
The engineering model is an AutomationML (CAEX) file mapped to RDF with the
vocabulary aml: <{aml}>.

Structure
- aml:CAEXFile aml:hasInstanceHierarchy aml:InstanceHierarchy.
- aml:InstanceHierarchy and aml:InternalElement aml:hasInternalElement aml:InternalElement
  (plant topology: devices, subnets, nodes and their parts).
- aml:InternalElement aml:hasExternalInterface aml:ExternalInterface
  (connection points of an element).
- aml:InternalElement aml:hasInternalLink aml:InternalLink.
- aml:InternalLink aml:refPartnerSideA / aml:refPartnerSideB point from the link
  to the two aml:ExternalInterface nodes it connects. Links are undirected in
  meaning: a constraint about "connected" interfaces must follow the link from
  side A to side B and from side B to side A.
- aml:InternalElement aml:hasAttribute aml:Attribute; aml:Attribute aml:hasValue
  a literal and aml:hasAttributeDataType the declared XML data type.
- Every node carries aml:hasName and, when it has a CAEX ID, aml:hasID.
- aml:hasRoleRequirements / aml:hasSupportedRoleClass link an element to its
  role declarations; aml:refRoleClassPath holds the referenced role class path.

Classes
- Role classes, interface classes and system unit classes of the libraries are
  owl:Class nodes, additionally typed aml:RoleClass, aml:InterfaceClass or
  aml:SystemUnitClass, arranged with rdfs:subClassOf along RefBaseClassPath.
- An InternalElement is rdf:type of every role class it requires or supports
  and of its system unit class; an ExternalInterface is rdf:type of its
  interface class. Use sh:class to test for these types; subclasses count.
"""

SHAPE_INSTRUCTIONS = """
You translate plain-text engineering constraints into SHACL shapes (Turtle) that
validate an AutomationML model mapped to RDF.

Rules for your answer:
- Output one Turtle document and nothing else: no explanations and no markdown.
- Declare every prefix you use with @prefix, including sh:, rdf:, rdfs:, xsd:
  and aml:.
- Reference classes and instances only with IRIs built by the identifier scheme
  below; never invent other namespaces for model content.
- Use only these SHACL features: sh:NodeShape, sh:PropertyShape, sh:targetClass,
  sh:targetNode, sh:targetSubjectsOf, sh:targetObjectsOf, sh:path (predicate,
  sh:inversePath, sequence lists, sh:alternativePath), sh:property, sh:minCount,
  sh:maxCount, sh:class, sh:datatype, sh:nodeKind, sh:hasValue, sh:in,
  sh:pattern, sh:flags, sh:node, sh:not, sh:and, sh:or, sh:qualifiedValueShape,
  sh:qualifiedMinCount, sh:qualifiedMaxCount, sh:message, sh:severity.
- Give every top-level shape an IRI in the namespace
  <http://example.org/aml/shapes#> (prefix ex:) and an sh:message that states
  the constraint in one sentence.
"""

INTERPRETATION_INSTRUCTIONS = """
You explain SHACL validation reports about AutomationML engineering models to
the engineers who maintain those models.

For every sh:result in the report:
- name the affected element and interface by their aml:hasName,
- say which constraint is violated and why the model breaks it,
- suggest concrete fixes in terms of the AutomationML model (which element,
  interface or InternalLink to add, remove or reconnect).
If the report conforms and has no results, say that the model satisfies all
constraints and list the constraints that were checked.
Answer in Markdown with one subsection per result.
"""

# fixed text: retry prompts must hash the same on every run
CORRECTIVE_INSTRUCTION = (
    "Your previous answer could not be used as SHACL shapes. "
    "Output only valid Turtle: a single Turtle document with all prefixes "
    "declared, no explanations and no markdown."
)


def ontology_context(aml_namespace: str = DEFAULT_AML_NAMESPACE) -> str:
    return ONTOLOGY_CONTEXT.format(aml=aml_namespace).strip()


def default_shape_examples(
    base_iri: str = DEFAULT_BASE_IRI, aml_namespace: str = DEFAULT_AML_NAMESPACE
) -> List[Tuple[str, str]]:
    """Two worked constraint/shape pairs for the generation prompt"""
    prefixes = (
        "@prefix sh: <http://www.w3.org/ns/shacl#> .\n"
        "@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n"
        f"@prefix aml: <{aml_namespace}> .\n"
        f"@prefix rcl: <{base_iri}AutomationProjectConfigurationRoleClassLib/> .\n"
        f"@prefix icl: <{base_iri}CommunicationInterfaceClassLib/> .\n"
        "@prefix ex: <http://example.org/aml/shapes#> .\n"
    )
    device_endpoint = (
        "A Device must provide at least one PhysicalEndPoint interface.",
        prefixes
        + "\n"
        + "ex:DevicePhysicalEndPointShape a sh:NodeShape ;\n"
        + "    sh:targetClass rcl:Device ;\n"
        + '    sh:message "A Device must provide at least one PhysicalEndPoint interface." ;\n'
        + "    sh:property [\n"
        + "        sh:path aml:hasExternalInterface ;\n"
        + "        sh:qualifiedValueShape [ sh:class icl:PhysicalEndPoint ] ;\n"
        + "        sh:qualifiedMinCount 1\n"
        + "    ] .\n",
    )
    subnet_name = (
        "The name of every Subnet must start with \"SN_\".",
        prefixes
        + "\n"
        + "ex:SubnetNamingShape a sh:NodeShape ;\n"
        + "    sh:targetClass rcl:Subnet ;\n"
        + '    sh:message "The name of every Subnet must start with SN_." ;\n'
        + "    sh:property [\n"
        + "        sh:path aml:hasName ;\n"
        + "        sh:minCount 1 ;\n"
        + "        sh:datatype xsd:string ;\n"
        + '        sh:pattern "^SN_"\n'
        + "    ] .\n",
    )
    return [device_endpoint, subnet_name]


INTERPRETATION_EXAMPLE_REPORT = """@prefix sh: <http://www.w3.org/ns/shacl#> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
@prefix model: <http://example.org/aml/model/> .
@prefix ex: <http://example.org/aml/shapes#> .

[] a sh:ValidationReport ;
    sh:conforms false ;
    sh:result [
        a sh:ValidationResult ;
        sh:focusNode model:device-7 ;
        sh:sourceShape ex:DevicePhysicalEndPointShape ;
        sh:sourceConstraintComponent sh:QualifiedMinCountConstraintComponent ;
        sh:resultSeverity sh:Violation ;
        sh:resultMessage "A Device must provide at least one PhysicalEndPoint interface."
    ] .
"""

INTERPRETATION_EXAMPLE_EXPLANATION = """## ConveyorDrive (model:device-7)

**Violated constraint:** A Device must provide at least one PhysicalEndPoint interface.

ConveyorDrive has the Device role but none of its ExternalInterfaces is of the
PhysicalEndPoint interface class, so the engineering tool cannot attach it to a
physical network port.

**Suggested fix:** add an ExternalInterface with
RefBaseClassPath="CommunicationInterfaceClassLib/PhysicalEndPoint" to
ConveyorDrive, or change the class of its existing Ethernet interface to
PhysicalEndPoint if that interface is the physical port.
"""

INTERPRETATION_EXAMPLE = (INTERPRETATION_EXAMPLE_REPORT, INTERPRETATION_EXAMPLE_EXPLANATION)


def _libraries_body(libraries: Sequence[str]) -> str:
    if not libraries:
        return "(no application recommendation libraries supplied)"
    return "\n\n".join(
        f"Library {index}:\n{text.strip()}" for index, text in enumerate(libraries, start=1)
    )


def build_shape_prompt(
    ontology_summary: str,
    libraries: Sequence[str],
    fewshot_examples: Sequence[Tuple[str, str]],
    constraints: Sequence[str],
    iri_docs: str,
) -> PromptBundle:
    if not constraints:
        raise EmptyConstraints()

    context = f"{ontology_summary.strip()}\n\nIdentifier scheme\n{iri_docs.strip()}"
    examples = "\n\n".join(
        f"Example {index}\nConstraint:\n{text.strip()}\nSHACL shapes:\n{shapes.strip()}"
        for index, (text, shapes) in enumerate(fewshot_examples, start=1)
    )
    constraint_body = "\n\n".join(
        f"Constraint {index}:\n{text.strip()}" for index, text in enumerate(constraints, start=1)
    )
    sections = [
        PromptSection(label=SectionLabel.ONTOLOGY_CONTEXT, body=context),
        PromptSection(label=SectionLabel.RELEVANT_LIBRARIES, body=_libraries_body(libraries)),
        PromptSection(label=SectionLabel.EXAMPLES, body=examples or "(none)"),
        PromptSection(label=SectionLabel.CONSTRAINTS, body=constraint_body),
    ]
    return _bundle(SHAPE_INSTRUCTIONS, sections)


def build_interpretation_prompt(
    report_turtle: str,
    shapes_turtle: str,
    ontology_turtle: str,
    libraries: Sequence[str],
    fewshot_example: Tuple[str, str],
) -> PromptBundle:
    """One-shot prompt asking for an explanation of a validation report"""
    try:
        parse_turtle(report_turtle)
    except TurtleSyntax as e:
        raise BadReport(str(e)) from e

    example_report, example_explanation = fewshot_example
    example = (
        f"Validation report:\n{example_report.strip()}\n\n"
        f"Explanation:\n{example_explanation.strip()}"
    )
    sections = [
        PromptSection(label=SectionLabel.RELEVANT_LIBRARIES, body=_libraries_body(libraries)),
        PromptSection(label=SectionLabel.ONTOLOGY, body=ontology_turtle or "(empty)"),
        PromptSection(label=SectionLabel.CONSTRAINTS, body=shapes_turtle or "(empty)"),
        PromptSection(label=SectionLabel.EXAMPLES, body=example),
        PromptSection(label=SectionLabel.REPORT, body=report_turtle),
    ]
    return _bundle(INTERPRETATION_INSTRUCTIONS, sections)

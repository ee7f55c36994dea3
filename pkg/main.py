#!/usr/bin/env python3
"""
Command-line front end of the AML validation pipeline.

    python main.py validate --aml model.aml --ar libs.aml \
        --constraints rules.txt --out out/ [--shapes shapes.ttl] \
        [--stages map,generate,validate,interpret] [--llm-mode live|replay]

Stages run in the order map -> generate -> validate -> interpret and write
their artifacts into --out as soon as they finish. Exit codes: 0 the model
conforms, 1 violations were found, 2 the pipeline failed.
"""

import argparse
import asyncio
import logging
import sys
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

import httpx
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from rdflib import Graph

from aml_to_owl import MappingConfig, describe_iri_scheme, map_document
from caex_model import merge_libraries, parse_aml_file
from errors import PipelineError, StageError
from llm_bridge import (
    LlmClientConfig,
    LlmExchange,
    LlmMode,
    generate_shapes,
    interpret_report,
    write_exchange_log,
)
from prompts import (
    INTERPRETATION_EXAMPLE,
    build_interpretation_prompt,
    default_shape_examples,
    ontology_context,
)
from rdf_core import parse_turtle, serialize_turtle
from settings import load_settings
from shacl_engine import ValidationReport, parse_shapes, validate
from shacl_report import render_report_text, report_to_graph

logger = logging.getLogger(__name__)

EXIT_CONFORMS = 0
EXIT_VIOLATIONS = 1
EXIT_ERROR = 2


class Stage(str, Enum):
    MAP = "map"
    GENERATE = "generate"
    VALIDATE = "validate"
    INTERPRET = "interpret"


STAGE_ORDER = [Stage.MAP, Stage.GENERATE, Stage.VALIDATE, Stage.INTERPRET]


class RunArtifacts(BaseModel):
    out_dir: Path

    @property
    def ontology(self) -> Path:
        return self.out_dir / "ontology.ttl"

    @property
    def shapes(self) -> Path:
        return self.out_dir / "shapes.ttl"

    @property
    def report(self) -> Path:
        return self.out_dir / "report.ttl"

    @property
    def report_text(self) -> Path:
        return self.out_dir / "report.txt"

    @property
    def interpretation(self) -> Path:
        return self.out_dir / "interpretation.md"

    @property
    def exchanges(self) -> Path:
        return self.out_dir / "exchanges.log"


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    aml_file: Path
    ar_files: List[Path] = Field(default_factory=list)
    constraints_file: Optional[Path] = None
    out_dir: Path
    mapping: MappingConfig = Field(default_factory=MappingConfig)
    llm: LlmClientConfig = Field(default_factory=LlmClientConfig)
    stages: List[Stage] = Field(default_factory=lambda: list(STAGE_ORDER))
    shapes_override: Optional[Path] = None

    @model_validator(mode="after")
    def _stage_dependencies(self) -> "RunConfig":
        stages = set(self.stages)
        if Stage.VALIDATE in stages:
            if Stage.MAP not in stages:
                raise ValueError("the validate stage needs the map stage")
            if Stage.GENERATE not in stages and self.shapes_override is None:
                raise ValueError("the validate stage needs generated shapes or --shapes")
        if Stage.INTERPRET in stages and Stage.VALIDATE not in stages:
            raise ValueError("the interpret stage needs the validate stage")
        return self

    def enabled(self, stage: Stage) -> bool:
        if stage == Stage.GENERATE and self.shapes_override is not None:
            return False
        return stage in self.stages


def parse_constraints(text: str) -> List[str]:
    """Blank-line separated blocks; lines starting with '#' are comments"""
    constraints: List[str] = []
    block: List[str] = []
    for line in text.splitlines():
        if line.lstrip().startswith("#"):
            continue
        if line.strip():
            block.append(line.rstrip())
        elif block:
            constraints.append("\n".join(block))
            block = []
    if block:
        constraints.append("\n".join(block))
    return constraints


@contextmanager
def stage_errors(stage: Stage, path: Optional[Path] = None) -> Iterator[None]:
    """Re-raise failures inside a stage as StageError naming stage and file"""
    try:
        yield
    except StageError:
        raise
    except (PipelineError, OSError, ValueError) as e:
        raise StageError(stage.value, str(path) if path else None, e) from e


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def _namespaces(*graphs: Graph) -> Dict[str, str]:
    found: Dict[str, str] = {}
    for graph in graphs:
        for prefix, namespace in graph.namespaces():
            if prefix:
                found[prefix] = str(namespace)
    return found


async def _run(config: RunConfig, transport: Optional[httpx.AsyncBaseTransport]) -> int:
    artifacts = RunArtifacts(out_dir=config.out_dir)
    first = config.stages[0] if config.stages else Stage.MAP
    with stage_errors(first, config.out_dir):
        config.out_dir.mkdir(parents=True, exist_ok=True)
    exchanges: List[LlmExchange] = []
    ontology = Graph()
    shapes_graph = Graph()
    report: Optional[ValidationReport] = None
    libraries: List[str] = []

    client = None
    if transport is not None:
        client = httpx.AsyncClient(transport=transport, timeout=config.llm.timeout)

    try:
        if config.enabled(Stage.MAP):
            logger.info(f"Stage map: {config.aml_file} with {len(config.ar_files)} library file(s)")
            with stage_errors(Stage.MAP, config.aml_file):
                doc = parse_aml_file(config.aml_file)
            library_docs = []
            for ar_file in config.ar_files:
                with stage_errors(Stage.MAP, ar_file):
                    library_docs.append(parse_aml_file(ar_file))
                    libraries.append(ar_file.read_text(encoding="utf-8"))
            with stage_errors(Stage.MAP, config.aml_file):
                doc = merge_libraries(doc, *library_docs)
                ontology, mapping_report = map_document(doc, config.mapping)
                _write(artifacts.ontology, serialize_turtle(ontology))
            logger.info(f"Mapped {len(ontology)} triples, counts {mapping_report.counts}")

        if config.enabled(Stage.GENERATE):
            path = config.constraints_file
            logger.info(f"Stage generate: constraints from {path}")
            with stage_errors(Stage.GENERATE, path):
                if path is None:
                    raise ValueError("no constraints file given")
                constraints = parse_constraints(path.read_text(encoding="utf-8"))
                try:
                    _, shapes_graph = await generate_shapes(
                        constraints,
                        config.llm,
                        ontology_context(config.mapping.aml_namespace),
                        libraries,
                        default_shape_examples(config.mapping.base_iri, config.mapping.aml_namespace),
                        describe_iri_scheme(config.mapping),
                        client,
                        collected=exchanges,
                    )
                finally:
                    write_exchange_log(artifacts.exchanges, exchanges)
                _write(artifacts.shapes, serialize_turtle(shapes_graph))
        elif config.shapes_override is not None and Stage.VALIDATE in config.stages:
            path = config.shapes_override
            with stage_errors(Stage.GENERATE, path):
                shapes_graph = parse_turtle(path.read_text(encoding="utf-8"))
                _write(artifacts.shapes, serialize_turtle(shapes_graph))

        if config.enabled(Stage.VALIDATE):
            logger.info("Stage validate")
            with stage_errors(Stage.VALIDATE, artifacts.shapes):
                shapes = parse_shapes(shapes_graph)
                report = validate(ontology, shapes)
                namespaces = _namespaces(ontology, shapes_graph)
                _write(artifacts.report, serialize_turtle(report_to_graph(report, namespaces)))
                _write(artifacts.report_text, render_report_text(report, namespaces))

        if config.enabled(Stage.INTERPRET):
            logger.info("Stage interpret")
            with stage_errors(Stage.INTERPRET, artifacts.report):
                bundle = build_interpretation_prompt(
                    artifacts.report.read_text(encoding="utf-8"),
                    artifacts.shapes.read_text(encoding="utf-8"),
                    artifacts.ontology.read_text(encoding="utf-8"),
                    libraries,
                    INTERPRETATION_EXAMPLE,
                )
                exchange = await interpret_report(bundle, config.llm, client)
                exchanges.append(exchange)
                write_exchange_log(artifacts.exchanges, exchanges)
                _write(artifacts.interpretation, exchange.extracted or "")
    finally:
        if client is not None:
            await client.aclose()

    if report is None:
        return EXIT_CONFORMS
    if report.conforms:
        logger.info("Model conforms to all shapes")
        return EXIT_CONFORMS
    logger.info(f"Model violates shapes: {len(report.violations)} violation(s)")
    return EXIT_VIOLATIONS


def run(config: RunConfig, transport: Optional[httpx.AsyncBaseTransport] = None) -> int:
    """Execute the enabled stages; returns the process exit code"""
    try:
        return asyncio.run(_run(config, transport))
    except StageError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logger.exception(f"Pipeline aborted: {type(e).__name__}: {e}")
        print(f"error: unexpected {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


def parse_stages(value: str) -> List[Stage]:
    try:
        requested = {Stage(part.strip()) for part in value.split(",") if part.strip()}
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    return [stage for stage in STAGE_ORDER if stage in requested]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aml-shacl",
        description="Validate AutomationML models against constraints turned into SHACL shapes",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("validate", help="run the validation pipeline")
    cmd.add_argument("--aml", required=True, type=Path, help="AML file to check")
    cmd.add_argument("--ar", nargs="+", action="extend", default=[], type=Path, help="AR library files")
    cmd.add_argument("--constraints", type=Path, help="text file with one constraint per block")
    cmd.add_argument("--out", required=True, type=Path, help="output directory")
    cmd.add_argument("--shapes", type=Path, help="use these shapes instead of generating them")
    cmd.add_argument(
        "--stages",
        type=parse_stages,
        default=list(STAGE_ORDER),
        help="comma separated subset of map,generate,validate,interpret",
    )
    cmd.add_argument("--llm-mode", choices=[m.value for m in LlmMode])
    cmd.add_argument("--model", help="chat completion model name")
    cmd.add_argument("--endpoint", help="chat completion endpoint URL")
    cmd.add_argument("--fixtures-dir", type=Path, help="recorded LLM responses (replay) or where to record them")
    cmd.add_argument("--base-iri")
    cmd.add_argument("--aml-namespace")
    cmd.add_argument("--config", type=Path, help="JSON config file")
    cmd.add_argument("--log-level")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        settings = load_settings(
            args.config,
            llm_mode=args.llm_mode,
            model_name=args.model,
            endpoint_url=args.endpoint,
            fixtures_dir=args.fixtures_dir,
            base_iri=args.base_iri,
            aml_namespace=args.aml_namespace,
            log_level=args.log_level,
        )
        logging.basicConfig(
            level=settings.log_level.upper(),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        config = RunConfig(
            aml_file=args.aml,
            ar_files=args.ar,
            constraints_file=args.constraints,
            out_dir=args.out,
            mapping=settings.mapping_config(),
            llm=settings.llm_config(),
            stages=args.stages,
            shapes_override=args.shapes,
        )
    except (ValidationError, OSError, ValueError) as e:
        logging.basicConfig(level=logging.INFO)
        logger.error(f"Invalid configuration: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    return run(config)


if __name__ == "__main__":
    sys.exit(main())

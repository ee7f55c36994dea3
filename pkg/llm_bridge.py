"""
Client side of the LLM steps: chat-completion calls, replay fixtures,
Turtle extraction and the shape-generation retry loop.

Live mode posts OpenAI-compatible chat-completion requests with httpx.
Replay mode answers from `<prompt_hash>.txt` files in a fixtures directory
and never opens a connection. A live client configured with a fixtures
directory records every answer there, so the next run can replay it.
"""

import asyncio
import hashlib
import json
import logging
import os
import re
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import httpx
from pydantic import BaseModel, ConfigDict, Field, model_validator
from rdflib import Graph

from errors import (
    HttpStatusError,
    IllFormedShape,
    LlmConfigError,
    LlmTimeout,
    MissingFixture,
    NetworkError,
    NoTurtleFound,
    TurtleSyntax,
)
from prompts import CORRECTIVE_INSTRUCTION, PromptBundle, build_shape_prompt
from rdf_core import merge_graphs, parse_turtle
from shacl_engine import parse_shapes

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-4.1-2025-04-14"
DEFAULT_KEY_VARIABLE = "OPENAI_API_KEY"

Message = Dict[str, str]

_FENCE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n(.*?)(?:```|\Z)", re.DOTALL)
_DIRECTIVE = re.compile(r"^\s*(?:@prefix\s+[^\s:]*:\s*<|@base\s+<|(?i:PREFIX)\s+[^\s:]*:\s*<|(?i:BASE)\s+<)")


class LlmMode(str, Enum):
    LIVE = "live"
    REPLAY = "replay"


class LlmClientConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    endpoint_url: str = DEFAULT_ENDPOINT
    model_name: str = DEFAULT_MODEL
    api_key_env_var: str = DEFAULT_KEY_VARIABLE
    temperature: float = Field(default=0.0, ge=0.0, le=2.0)
    max_retries: int = Field(default=2, ge=0)
    timeout: float = Field(default=60.0, gt=0)
    mode: LlmMode = LlmMode.LIVE
    fixtures_dir: Optional[Path] = None

    @model_validator(mode="after")
    def _replay_needs_fixtures(self) -> "LlmClientConfig":
        if self.mode == LlmMode.REPLAY and self.fixtures_dir is None:
            raise ValueError("replay mode requires fixtures_dir")
        return self


class LlmExchange(BaseModel):
    prompt_hash: str
    raw_response: str
    extracted: Optional[str] = None
    attempts: int = Field(default=1, ge=1)
    label: str = ""


def prompt_hash(messages: Sequence[Message]) -> str:
    """sha256 over the canonical JSON form of the chat messages"""
    canonical = json.dumps(
        [dict(m) for m in messages], sort_keys=True, ensure_ascii=False, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def fixture_path(fixtures_dir: Path, digest: str) -> Path:
    return Path(fixtures_dir) / f"{digest}.txt"


def _api_key(cfg: LlmClientConfig) -> str:
    key = os.environ.get(cfg.api_key_env_var)
    if not key:
        raise LlmConfigError(
            f"Environment variable {cfg.api_key_env_var} is not set; it is required in live mode"
        )
    return key


async def _post(client: httpx.AsyncClient, cfg: LlmClientConfig, messages: List[Message], key: str) -> str:
    payload = {
        "model": cfg.model_name,
        "messages": messages,
        "temperature": cfg.temperature,
    }
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
    try:
        response = await client.post(cfg.endpoint_url, json=payload, headers=headers, timeout=cfg.timeout)
    except httpx.TimeoutException as e:
        raise LlmTimeout(f"No answer from {cfg.endpoint_url} within {cfg.timeout}s") from e
    except httpx.HTTPError as e:
        raise NetworkError(f"Request to {cfg.endpoint_url} failed: {type(e).__name__}: {e}") from e

    if response.status_code >= 400:
        raise HttpStatusError(response.status_code, response.text[:500])
    try:
        return response.json()["choices"][0]["message"]["content"] or ""
    except (ValueError, KeyError, IndexError, TypeError) as e:
        raise NetworkError(f"Unexpected chat completion payload: {e}") from e


async def complete(
    bundle: PromptBundle,
    cfg: LlmClientConfig,
    client: Optional[httpx.AsyncClient] = None,
    history: Sequence[Message] = (),
) -> LlmExchange:
    """One chat completion for the bundle (plus any retry turns in history)"""
    messages = bundle.messages() + [dict(m) for m in history]
    digest = prompt_hash(messages)

    if cfg.mode == LlmMode.REPLAY:
        path = fixture_path(cfg.fixtures_dir, digest)
        if not path.is_file():
            raise MissingFixture(digest)
        logger.info(f"Replaying LLM response {digest[:12]} from {path}")
        return LlmExchange(prompt_hash=digest, raw_response=path.read_text(encoding="utf-8"))

    key = _api_key(cfg)
    logger.info(f"Calling LLM {cfg.model_name} at {cfg.endpoint_url} (prompt {digest[:12]})")
    if client is None:
        async with httpx.AsyncClient(timeout=cfg.timeout) as own_client:
            raw = await _post(own_client, cfg, messages, key)
    else:
        raw = await _post(client, cfg, messages, key)

    if cfg.fixtures_dir is not None:
        path = fixture_path(cfg.fixtures_dir, digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(raw, encoding="utf-8")
        logger.info(f"Recorded LLM response {digest[:12]} to {path}")
    return LlmExchange(prompt_hash=digest, raw_response=raw)


def _parses(text: str) -> bool:
    try:
        return len(parse_turtle(text)) > 0
    except TurtleSyntax:
        return False


def extract_turtle(response: str) -> str:
    """
    Pull the Turtle document out of a model answer.

    Code fences are removed, then the text is taken from a directive line
    and trailing prose is cut back to the last statement end at which the
    text still parses. Each directive line is tried as a start in order.
    """
    text = response.replace("\r\n", "\n")
    fenced = [m.group(1) for m in _FENCE.finditer(text)]
    with_directive = [
        block for block in fenced if any(_DIRECTIVE.match(line) for line in block.splitlines())
    ]
    if with_directive:
        text = with_directive[0]
    elif fenced:
        text = fenced[0]

    lines = text.splitlines()
    starts = [i for i, line in enumerate(lines) if _DIRECTIVE.match(line)]
    if not starts:
        raise NoTurtleFound(1, "no @prefix/PREFIX directive in the response")

    for start in starts:
        window = lines[start:]
        for end in range(len(window), 0, -1):
            if not window[end - 1].rstrip().endswith("."):
                continue
            candidate = "\n".join(window[:end]).strip()
            if _parses(candidate):
                return candidate + "\n"
    raise NoTurtleFound(1, "the response contains no parseable Turtle statements")


async def request_shapes(
    bundle: PromptBundle,
    cfg: LlmClientConfig,
    client: Optional[httpx.AsyncClient] = None,
    label: str = "",
) -> Tuple[LlmExchange, Graph]:
    """Ask for shapes until the answer extracts, parses and compiles"""
    history: List[Message] = []
    cause = ""
    attempts = cfg.max_retries + 1
    for attempt in range(1, attempts + 1):
        exchange = await complete(bundle, cfg, client, history)
        try:
            text = extract_turtle(exchange.raw_response)
            graph = parse_turtle(text)
            parse_shapes(graph)
        except (NoTurtleFound, TurtleSyntax, IllFormedShape) as e:
            cause = str(e)
            logger.warning(f"Attempt {attempt}/{attempts} for {label or 'shapes'} unusable: {cause}")
            history += [
                {"role": "assistant", "content": exchange.raw_response},
                {"role": "user", "content": CORRECTIVE_INSTRUCTION},
            ]
            continue
        logger.info(f"Shapes for {label or 'constraint'} accepted after {attempt} attempt(s), {len(graph)} triples")
        return exchange.model_copy(update={"extracted": text, "attempts": attempt, "label": label}), graph
    raise NoTurtleFound(attempts, cause)


def merge_shape_graphs(parts: Sequence[Graph]) -> Graph:
    """Union of per-constraint shape graphs, blank nodes kept apart"""
    return merge_graphs(parts)


async def generate_shapes(
    constraints: Sequence[str],
    cfg: LlmClientConfig,
    ontology_summary: str,
    libraries: Sequence[str],
    fewshot_examples: Sequence[Tuple[str, str]],
    iri_docs: str,
    client: Optional[httpx.AsyncClient] = None,
    collected: Optional[List[LlmExchange]] = None,
) -> Tuple[List[LlmExchange], Graph]:
    """
    One request per constraint, run concurrently, merged in constraint order.

    Every request runs to completion before the first failure is raised, so
    the client stays open for all of them. Finished exchanges are appended to
    `collected` (when given) even if another constraint fails.
    """
    bundles = [
        build_shape_prompt(ontology_summary, libraries, fewshot_examples, [constraint], iri_docs)
        for constraint in constraints
    ]
    if not bundles:
        # raises EmptyConstraints
        build_shape_prompt(ontology_summary, libraries, fewshot_examples, [], iri_docs)

    async def run_all(http: Optional[httpx.AsyncClient]):
        return await asyncio.gather(
            *(
                request_shapes(bundle, cfg, http, label=f"constraint {index}")
                for index, bundle in enumerate(bundles, start=1)
            ),
            return_exceptions=True,
        )

    if client is None and cfg.mode == LlmMode.LIVE:
        _api_key(cfg)
        async with httpx.AsyncClient(timeout=cfg.timeout) as own_client:
            outcomes = await run_all(own_client)
    else:
        outcomes = await run_all(client)

    finished = [outcome for outcome in outcomes if not isinstance(outcome, BaseException)]
    exchanges = [exchange for exchange, _ in finished]
    if collected is not None:
        collected.extend(exchanges)
    failures = [outcome for outcome in outcomes if isinstance(outcome, BaseException)]
    if failures:
        logger.error(f"Shape generation failed for {len(failures)} of {len(bundles)} constraints")
        raise failures[0]

    merged = merge_shape_graphs([graph for _, graph in finished])
    logger.info(f"Generated shapes for {len(bundles)} constraints: {len(merged)} triples")
    return exchanges, merged


async def interpret_report(
    bundle: PromptBundle,
    cfg: LlmClientConfig,
    client: Optional[httpx.AsyncClient] = None,
) -> LlmExchange:
    exchange = await complete(bundle, cfg, client)
    return exchange.model_copy(update={"extracted": exchange.raw_response.strip() + "\n", "label": "interpretation"})


def write_exchange_log(path: Path, exchanges: Sequence[LlmExchange]) -> Path:
    """JSON lines, one per exchange, in pipeline order"""
    lines = [
        json.dumps(
            {
                "label": e.label,
                "prompt_hash": e.prompt_hash,
                "attempts": e.attempts,
                "extracted": e.extracted is not None,
                "raw_response": e.raw_response,
            },
            ensure_ascii=False,
            sort_keys=True,
        )
        for e in exchanges
    ]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path

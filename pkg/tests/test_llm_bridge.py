import json

import httpx
import pytest
from pydantic import ValidationError
from rdflib.namespace import SH

from aml_to_owl import MappingConfig, describe_iri_scheme
from conftest import CONSTRAINTS, LLM_RESPONSES, MODEL
from errors import (
    BadReport,
    EmptyConstraints,
    HttpStatusError,
    LlmConfigError,
    LlmTimeout,
    MissingFixture,
    NetworkError,
    NoTurtleFound,
)
from llm_bridge import (
    LlmClientConfig,
    LlmExchange,
    LlmMode,
    complete,
    extract_turtle,
    generate_shapes,
    interpret_report,
    merge_shape_graphs,
    prompt_hash,
    request_shapes,
    write_exchange_log,
)
from main import parse_constraints
from prompts import (
    CORRECTIVE_INSTRUCTION,
    INTERPRETATION_EXAMPLE,
    SectionLabel,
    build_interpretation_prompt,
    build_shape_prompt,
    default_shape_examples,
    ontology_context,
)
from rdf_core import isomorphic, parse_turtle, serialize_turtle
from shacl_engine import parse_shapes, validate
from shacl_report import report_to_graph

KEY_VARIABLE = "AMLSHACL_TEST_KEY"

RULE_RESPONSES = {
    "exactly one LogicalEndPoint": "rule1.txt",
    "only be connected to another LogicalEndPoint": "rule2.txt",
    "LogicalEndPoint of a Subnet may only": "rule3.txt",
}


def constraints():
    return parse_constraints(CONSTRAINTS.read_text(encoding="utf-8"))


def shape_bundle(constraint_texts):
    return build_shape_prompt(
        ontology_context(),
        [],
        default_shape_examples(),
        constraint_texts,
        describe_iri_scheme(MappingConfig()),
    )


def chat_answer(content: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


def canned_rules(request: httpx.Request) -> httpx.Response:
    """Answer each shape request with the recorded response for its constraint"""
    messages = json.loads(request.content)["messages"]
    constraint_section = messages[1]["content"].split("### Constraints", 1)[1]
    for needle, name in RULE_RESPONSES.items():
        if needle in " ".join(constraint_section.split()):
            return chat_answer((LLM_RESPONSES / name).read_text(encoding="utf-8"))
    return httpx.Response(400, text="unexpected prompt")


def live_config(tmp_path, monkeypatch, **kwargs) -> LlmClientConfig:
    monkeypatch.setenv(KEY_VARIABLE, "test-key")
    return LlmClientConfig(api_key_env_var=KEY_VARIABLE, fixtures_dir=tmp_path, **kwargs)


def replay_config(tmp_path) -> LlmClientConfig:
    return LlmClientConfig(mode=LlmMode.REPLAY, fixtures_dir=tmp_path, api_key_env_var=KEY_VARIABLE)


# prompts


def test_shape_prompt_is_deterministic():
    """Test that equal inputs give byte-identical prompts"""
    first = shape_bundle(constraints())
    second = shape_bundle(constraints())
    assert first == second
    assert prompt_hash(first.messages()) == prompt_hash(second.messages())


def test_shape_prompt_sections():
    """Test the four labelled sections of a generation prompt"""
    bundle = shape_bundle(constraints())
    assert [s.label for s in bundle.sections] == [
        SectionLabel.ONTOLOGY_CONTEXT,
        SectionLabel.RELEVANT_LIBRARIES,
        SectionLabel.EXAMPLES,
        SectionLabel.CONSTRAINTS,
    ]
    headers = [line for line in bundle.user_text.splitlines() if line.startswith("### ")]
    assert headers == ["### OntologyContext", "### RelevantLibraries", "### Examples", "### Constraints"]
    body = bundle.section(SectionLabel.CONSTRAINTS)
    assert "Constraint 1:" in body and "Constraint 3:" in body and "Constraint 4:" not in body
    assert "no explanations and no markdown" in bundle.system_text


def test_shape_prompt_includes_libraries():
    bundle = build_shape_prompt(ontology_context(), ["<CAEXFile />"], [], ["c"], "docs")
    assert "Library 1:\n<CAEXFile />" in bundle.section(SectionLabel.RELEVANT_LIBRARIES)
    assert bundle.section(SectionLabel.EXAMPLES) == "(none)"


def test_empty_constraints_rejected():
    with pytest.raises(EmptyConstraints):
        shape_bundle([])


def test_interpretation_prompt_rejects_bad_report():
    with pytest.raises(BadReport):
        build_interpretation_prompt("this is (not turtle", "", "", [], INTERPRETATION_EXAMPLE)


def test_interpretation_prompt_carries_report(fig2_graph, reference_shapes, reference_shapes_graph):
    """Test that all three results of the violating model reach the prompt"""
    report = validate(fig2_graph, reference_shapes)
    report_turtle = serialize_turtle(report_to_graph(report))
    bundle = build_interpretation_prompt(
        report_turtle,
        serialize_turtle(reference_shapes_graph),
        serialize_turtle(fig2_graph),
        [],
        INTERPRETATION_EXAMPLE,
    )
    assert [s.label for s in bundle.sections] == [
        SectionLabel.RELEVANT_LIBRARIES,
        SectionLabel.ONTOLOGY,
        SectionLabel.CONSTRAINTS,
        SectionLabel.EXAMPLES,
        SectionLabel.REPORT,
    ]
    embedded = parse_turtle(bundle.section(SectionLabel.REPORT))
    assert len(list(embedded.objects(None, SH.result))) == 3
    assert "suggest concrete fixes" in bundle.system_text


def test_prompt_hash_canonical():
    """Test that key order does not change the hash but content does"""
    a = prompt_hash([{"role": "user", "content": "x"}])
    b = prompt_hash([{"content": "x", "role": "user"}])
    c = prompt_hash([{"role": "user", "content": "y"}])
    assert a == b
    assert a != c
    assert len(a) == 64


# extraction


def test_extract_bare_turtle():
    raw = (LLM_RESPONSES / "rule1.txt").read_text(encoding="utf-8")
    text = extract_turtle(raw)
    assert text.startswith("@prefix sh:")
    assert isomorphic(parse_turtle(text), parse_turtle(raw))


def test_extract_from_fence_with_prose():
    raw = (LLM_RESPONSES / "rule2.txt").read_text(encoding="utf-8")
    text = extract_turtle(raw)
    assert text.startswith("@prefix sh:")
    assert "```" not in text
    assert "alternative path follows" not in text
    assert len(parse_shapes(parse_turtle(text))) >= 1


def test_extract_cuts_trailing_prose():
    raw = "Sure.\n@prefix ex: <http://e/> .\nex:a ex:p ex:b .\nThat is all you need."
    assert extract_turtle(raw) == "@prefix ex: <http://e/> .\nex:a ex:p ex:b .\n"


def test_extract_is_idempotent():
    for name in ("rule1.txt", "rule2.txt", "rule3.txt"):
        once = extract_turtle((LLM_RESPONSES / name).read_text(encoding="utf-8"))
        assert extract_turtle(once) == once


def test_extract_prose_only():
    with pytest.raises(NoTurtleFound):
        extract_turtle((LLM_RESPONSES / "corrupted.txt").read_text(encoding="utf-8"))


def test_extract_skips_prose_that_reads_like_a_directive():
    raw = "Prefix declarations are included below.\n@prefix ex: <http://e/> .\nex:a ex:p ex:b .\n"
    assert extract_turtle(raw) == "@prefix ex: <http://e/> .\nex:a ex:p ex:b .\n"


def test_extract_sparql_style_prefix():
    raw = "Base it on this graph:\nPREFIX ex: <http://e/>\nex:a ex:p ex:b .\n"
    assert extract_turtle(raw) == "PREFIX ex: <http://e/>\nex:a ex:p ex:b .\n"


# completion


async def test_replay_miss_raises(tmp_path):
    with pytest.raises(MissingFixture) as info:
        await complete(shape_bundle(["c"]), replay_config(tmp_path))
    assert info.value.prompt_hash == prompt_hash(shape_bundle(["c"]).messages())


async def test_live_without_key(monkeypatch):
    monkeypatch.delenv(KEY_VARIABLE, raising=False)
    cfg = LlmClientConfig(api_key_env_var=KEY_VARIABLE)
    with pytest.raises(LlmConfigError):
        await complete(shape_bundle(["c"]), cfg)


def test_replay_needs_fixtures_dir():
    with pytest.raises(ValidationError):
        LlmClientConfig(mode=LlmMode.REPLAY)


async def test_live_records_then_replay_answers(tmp_path, monkeypatch):
    """Test that a recorded answer replays without a client or key"""
    seen = []

    def handler(request: httpx.Request) -> httpx.Response:
        seen.append(request)
        return chat_answer("recorded answer")

    bundle = shape_bundle(["c"])
    async with httpx.AsyncClient(transport=httpx.MockTransport(handler)) as client:
        live = await complete(bundle, live_config(tmp_path, monkeypatch), client)
    assert live.raw_response == "recorded answer"
    assert seen[0].headers["Authorization"] == "Bearer test-key"
    payload = json.loads(seen[0].content)
    assert payload["temperature"] == 0.0
    assert payload["messages"] == bundle.messages()

    monkeypatch.delenv(KEY_VARIABLE)
    replayed = await complete(bundle, replay_config(tmp_path))
    assert replayed == live


@pytest.mark.parametrize(
    "handler,error",
    [
        (lambda request: httpx.Response(500, text="boom"), HttpStatusError),
        (lambda request: httpx.Response(200, json={"unexpected": True}), NetworkError),
    ],
)
async def test_http_failures(tmp_path, monkeypatch, handler, error):
    async with httpx.AsyncClient(transport=httpx.MockTransport(handler)) as client:
        with pytest.raises(error):
            await complete(shape_bundle(["c"]), live_config(tmp_path, monkeypatch), client)


async def test_status_code_is_kept(tmp_path, monkeypatch):
    transport = httpx.MockTransport(lambda request: httpx.Response(429, text="slow down"))
    async with httpx.AsyncClient(transport=transport) as client:
        with pytest.raises(HttpStatusError) as info:
            await complete(shape_bundle(["c"]), live_config(tmp_path, monkeypatch), client)
    assert info.value.code == 429
    assert list(tmp_path.iterdir()) == []


async def test_timeout_and_connection_errors(tmp_path, monkeypatch):
    def slow(request):
        raise httpx.ReadTimeout("too slow", request=request)

    def refused(request):
        raise httpx.ConnectError("refused", request=request)

    cfg = live_config(tmp_path, monkeypatch)
    async with httpx.AsyncClient(transport=httpx.MockTransport(slow)) as client:
        with pytest.raises(LlmTimeout):
            await complete(shape_bundle(["c"]), cfg, client)
    async with httpx.AsyncClient(transport=httpx.MockTransport(refused)) as client:
        with pytest.raises(NetworkError):
            await complete(shape_bundle(["c"]), cfg, client)


# shape generation


async def test_generated_shapes_find_three_violations(tmp_path, monkeypatch, fig2_graph, corrected_graph):
    """Test recording, replaying and validating the generated shapes"""
    args = (ontology_context(), [], default_shape_examples(), describe_iri_scheme(MappingConfig()))
    async with httpx.AsyncClient(transport=httpx.MockTransport(canned_rules)) as client:
        exchanges, merged = await generate_shapes(constraints(), live_config(tmp_path, monkeypatch), *args, client=client)
    assert [e.label for e in exchanges] == ["constraint 1", "constraint 2", "constraint 3"]
    assert all(e.attempts == 1 and e.extracted for e in exchanges)
    assert len(list(tmp_path.glob("*.txt"))) == 3

    monkeypatch.delenv(KEY_VARIABLE)
    replayed_exchanges, replayed = await generate_shapes(constraints(), replay_config(tmp_path), *args)
    assert isomorphic(replayed, merged)
    assert [e.prompt_hash for e in replayed_exchanges] == [e.prompt_hash for e in exchanges]

    shapes = parse_shapes(replayed)
    report = validate(fig2_graph, shapes)
    assert not report.conforms
    found = sorted((str(r.focus_node), r.source_constraint_component) for r in report.results)
    assert found == sorted(
        [
            (str(MODEL["subnet-1"]), SH.QualifiedMaxCountConstraintComponent),
            (str(MODEL["subnet-1-lep-1"]), SH.ClassConstraintComponent),
            (str(MODEL["subnet-1-lep-1"]), SH.OrConstraintComponent),
        ]
    )
    assert validate(corrected_graph, shapes).conforms


async def test_generate_without_constraints():
    with pytest.raises(EmptyConstraints):
        await generate_shapes([], LlmClientConfig(), "ctx", [], [], "docs")


async def test_corrupted_answers_exhaust_retries(tmp_path, monkeypatch):
    """Test that three unusable answers end in NoTurtleFound"""
    requests = []

    def handler(request):
        requests.append(json.loads(request.content)["messages"])
        return chat_answer((LLM_RESPONSES / "corrupted.txt").read_text(encoding="utf-8"))

    async with httpx.AsyncClient(transport=httpx.MockTransport(handler)) as client:
        with pytest.raises(NoTurtleFound) as info:
            await request_shapes(shape_bundle(["c"]), live_config(tmp_path, monkeypatch), client)
    assert info.value.attempts == 3
    assert [len(messages) for messages in requests] == [2, 4, 6]
    assert requests[1][-1] == {"role": "user", "content": CORRECTIVE_INSTRUCTION}
    assert requests[1][-2]["role"] == "assistant"


async def test_retry_recovers_and_replays(tmp_path, monkeypatch):
    """Test a second attempt that succeeds, live and then replayed"""
    answers = iter(["corrupted.txt", "rule1.txt"])

    def handler(request):
        return chat_answer((LLM_RESPONSES / next(answers)).read_text(encoding="utf-8"))

    bundle = shape_bundle(["c"])
    async with httpx.AsyncClient(transport=httpx.MockTransport(handler)) as client:
        exchange, graph = await request_shapes(bundle, live_config(tmp_path, monkeypatch), client, label="one")
    assert exchange.attempts == 2
    assert exchange.label == "one"

    replayed, replayed_graph = await request_shapes(bundle, replay_config(tmp_path))
    assert replayed.attempts == 2
    assert isomorphic(replayed_graph, graph)


async def test_no_retries_configured(tmp_path, monkeypatch):
    transport = httpx.MockTransport(lambda request: chat_answer("no shapes here"))
    async with httpx.AsyncClient(transport=transport) as client:
        with pytest.raises(NoTurtleFound) as info:
            await request_shapes(shape_bundle(["c"]), live_config(tmp_path, monkeypatch, max_retries=0), client)
    assert info.value.attempts == 1


async def test_failed_constraint_keeps_sibling_exchanges(tmp_path, monkeypatch):
    """Test that one failing request lets the others finish and keeps their exchanges"""
    sent = []

    def handler(request):
        sent.append(request)
        section = json.loads(request.content)["messages"][1]["content"].split("### Constraints", 1)[1]
        if "only be connected to another LogicalEndPoint" in " ".join(section.split()):
            return httpx.Response(500, text="overloaded")
        return canned_rules(request)

    collected = []
    args = (ontology_context(), [], default_shape_examples(), describe_iri_scheme(MappingConfig()))
    async with httpx.AsyncClient(transport=httpx.MockTransport(handler)) as client:
        with pytest.raises(HttpStatusError):
            await generate_shapes(
                constraints(), live_config(tmp_path, monkeypatch), *args, client=client, collected=collected
            )
    assert len(sent) == 3
    assert [e.label for e in collected] == ["constraint 1", "constraint 3"]


def test_merge_keeps_blank_nodes_apart():
    one = parse_turtle("@prefix ex: <http://e/> . _:s ex:p ex:a .")
    two = parse_turtle("@prefix ex: <http://e/> . _:s ex:p ex:a .")
    assert len(merge_shape_graphs([one, two])) == 2
    assert len(merge_shape_graphs([])) == 0
    assert isomorphic(merge_shape_graphs([one]), one)


# interpretation


async def test_interpret_report(tmp_path, monkeypatch, fig2_graph, reference_shapes):
    answer = (LLM_RESPONSES / "interpretation.md").read_text(encoding="utf-8")
    transport = httpx.MockTransport(lambda request: chat_answer("\n" + answer + "\n\n"))
    report_turtle = serialize_turtle(report_to_graph(validate(fig2_graph, reference_shapes)))
    bundle = build_interpretation_prompt(report_turtle, "", "", [], INTERPRETATION_EXAMPLE)
    async with httpx.AsyncClient(transport=transport) as client:
        exchange = await interpret_report(bundle, live_config(tmp_path, monkeypatch), client)
    assert exchange.label == "interpretation"
    assert exchange.extracted == answer.strip() + "\n"
    assert "Suggested fix" in exchange.extracted


def test_exchange_log_lines(tmp_path):
    exchanges = [
        LlmExchange(prompt_hash="a" * 64, raw_response="x", extracted="x\n", label="constraint 1"),
        LlmExchange(prompt_hash="b" * 64, raw_response="y", attempts=3, label="constraint 2"),
    ]
    path = write_exchange_log(tmp_path / "exchanges.log", exchanges)
    records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
    assert [r["label"] for r in records] == ["constraint 1", "constraint 2"]
    assert records[0]["extracted"] is True
    assert records[1]["extracted"] is False
    assert records[1]["attempts"] == 3


if __name__ == "__main__":
    pytest.main([__file__])

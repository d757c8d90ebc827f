import json
import threading
import time

import httpx
import pytest
from hypothesis import given, settings, strategies as st

from ckgdetect.graph import ontology_schema, summarize_graph
from ckgdetect.llm import (
    ChatMessage, DialogueRound, DialogueTranscript, EndpointConfig, EndpointError, ExtractionFailure, LlmGateway,
    MissingFixture, TokenBucket, complete, extract_sparql, fixture_path, message_key, round_one_messages,
    round_two_messages, run_two_rounds, write_fixture,
)
from ckgdetect.prompts import cwe_pattern
from ckgdetect.pruning import prune_access_control

from _support import PLANTED_QUERY, ROUND1_REPLY, build_graph, fixture_source, round2_reply

SCHEMA, _ = ontology_schema()
MSGS = [ChatMessage("system", "s"), ChatMessage("user", "hello")]


def _http_cfg(**kw) -> EndpointConfig:
    return EndpointConfig(backend="http", base_url="http://llm.test/v1", backoff_base=0.01, **kw)


def _ok(text: str = "pong") -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


class Script:
    """MockTransport handler replaying a fixed list of responses and recording requests."""

    def __init__(self, *responses):
        self.responses = list(responses)
        self.requests: list[httpx.Request] = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(request)
        r = self.responses.pop(0)
        if isinstance(r, Exception):
            raise r
        return r


def _gateway(cfg, script, sleeps=None):
    return LlmGateway(cfg, transport=httpx.MockTransport(script), sleep=(sleeps.append if sleeps is not None else lambda s: None))


# -- config and messages --------------------------------------------------------------------------


def test_message_validation():
    with pytest.raises(ValueError):
        ChatMessage("tool", "x")
    with pytest.raises(ValueError):
        ChatMessage("user", "")
    ChatMessage("system", "")


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        EndpointConfig(backend="http")
    with pytest.raises(ValueError):
        EndpointConfig(backend="mock")
    with pytest.raises(ValueError):
        EndpointConfig(backend="mock", fixture_dir=tmp_path, temperature=-1)
    with pytest.raises(ValueError):
        EndpointConfig(backend="mock", fixture_dir=tmp_path, max_retries=-1)
    with pytest.raises(ValueError):
        EndpointConfig(backend="grpc", fixture_dir=tmp_path)


# -- mock backend --------------------------------------------------------------------------------------


def test_message_key_stable():
    key = message_key(MSGS)
    assert key == message_key([ChatMessage("system", "s"), ChatMessage("user", "hello")])
    assert len(key) == 64
    assert key != message_key([ChatMessage("user", "hello")])


def test_mock_returns_fixture(tmp_path):
    write_fixture(tmp_path, MSGS, "fixture reply")
    cfg = EndpointConfig(backend="mock", fixture_dir=tmp_path)
    assert complete(MSGS, cfg) == "fixture reply"
    assert fixture_path(tmp_path, MSGS).name == message_key(MSGS) + ".txt"


def test_mock_sample_falls_back_to_base(tmp_path):
    write_fixture(tmp_path, MSGS, "base")
    write_fixture(tmp_path, MSGS, "second", sample=1)
    cfg = EndpointConfig(backend="mock", fixture_dir=tmp_path)
    assert complete(MSGS, cfg, sample=1) == "second"
    assert complete(MSGS, cfg, sample=0) == "base"


def test_mock_missing_fixture(tmp_path):
    cfg = EndpointConfig(backend="mock", fixture_dir=tmp_path)
    with pytest.raises(MissingFixture) as info:
        complete(MSGS, cfg)
    assert info.value.key == message_key(MSGS)


# -- http backend --------------------------------------------------------------------------------------


def test_http_request_shape(monkeypatch):
    monkeypatch.setenv("CKG_LLM_API_KEY", "secret")
    script = Script(_ok())
    with _gateway(_http_cfg(model_name="m1"), script) as gw:
        assert gw.complete(MSGS).text == "pong"
    (req,) = script.requests
    assert str(req.url) == "http://llm.test/v1/chat/completions"
    assert req.headers["Authorization"] == "Bearer secret"
    body = json.loads(req.content)
    assert body == {"model": "m1", "messages": [m.to_dict() for m in MSGS], "temperature": 0.0}


def test_http_no_key_no_header(monkeypatch):
    monkeypatch.delenv("CKG_LLM_API_KEY", raising=False)
    script = Script(_ok())
    with _gateway(_http_cfg(), script) as gw:
        gw.complete(MSGS)
    assert "Authorization" not in script.requests[0].headers


def test_http_429_then_200():
    sleeps = []
    script = Script(httpx.Response(429, text="slow down"), _ok())
    with _gateway(_http_cfg(), script, sleeps) as gw:
        c = gw.complete(MSGS)
    assert c.text == "pong" and c.attempts == 2
    assert sleeps == [0.01]


def test_http_401_no_retry():
    script = Script(httpx.Response(401, text="bad key"), _ok())
    with _gateway(_http_cfg(), script) as gw:
        with pytest.raises(EndpointError) as info:
            gw.complete(MSGS)
    assert info.value.status == 401 and info.value.attempts == 1
    assert "bad key" in info.value.body
    assert len(script.requests) == 1


def test_http_retries_exhausted_with_backoff():
    sleeps = []
    script = Script(*[httpx.Response(503, text="down")] * 4)
    with _gateway(_http_cfg(max_retries=3), script, sleeps) as gw:
        with pytest.raises(EndpointError) as info:
            gw.complete(MSGS)
    assert info.value.status == 503 and info.value.attempts == 4
    assert sleeps == [0.01, 0.02, 0.04]


def test_http_timeout_is_transient():
    script = Script(httpx.ReadTimeout("slow"), httpx.ConnectError("refused"), _ok("late"))
    with _gateway(_http_cfg(), script) as gw:
        c = gw.complete(MSGS)
    assert c.text == "late" and c.attempts == 3


@pytest.mark.parametrize("status", [408, 500, 502])
def test_other_transient_statuses(status):
    script = Script(httpx.Response(status), _ok())
    with _gateway(_http_cfg(), script) as gw:
        assert gw.complete(MSGS).attempts == 2


def test_malformed_body():
    script = Script(httpx.Response(200, json={"choices": []}))
    with _gateway(_http_cfg(), script) as gw:
        with pytest.raises(EndpointError):
            gw.complete(MSGS)


def test_in_flight_cap():
    active, peak = [0], [0]
    lock = threading.Lock()

    def handler(request):
        with lock:
            active[0] += 1
            peak[0] = max(peak[0], active[0])
        time.sleep(0.02)
        with lock:
            active[0] -= 1
        return _ok()

    gw = LlmGateway(_http_cfg(max_in_flight=2), transport=httpx.MockTransport(handler))
    threads = [threading.Thread(target=gw.complete, args=(MSGS,)) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    gw.close()
    assert peak[0] <= 2


def test_token_bucket_spacing():
    now = [0.0]
    waits = []

    def sleep(s):
        waits.append(s)
        now[0] += s

    bucket = TokenBucket(rate=2.0, capacity=1.0, clock=lambda: now[0], sleep=sleep)
    for _ in range(4):
        bucket.acquire()
    # first token is free, the rest arrive every 0.5 s
    assert now[0] == pytest.approx(1.5)
    assert all(w == pytest.approx(0.5) for w in waits)


# -- extraction -----------------------------------------------------------------------------------------


def test_extract_single_fence():
    assert extract_sparql("text\n```sparql\nSELECT ?x WHERE { ?x ?p ?o }\n```\nbye") == "SELECT ?x WHERE { ?x ?p ?o }"


def test_extract_last_fence_wins():
    reply = "```sparql\nSELECT ?a WHERE { ?a ?p ?o }\n```\nfixed:\n```sparql\nSELECT ?b WHERE { ?b ?p ?o }\n```"
    assert extract_sparql(reply) == "SELECT ?b WHERE { ?b ?p ?o }"


def test_extract_unlabelled_fence_with_select():
    reply = "```\nSELECT ?a WHERE { ?a ?p ?o }\n```\n```python\nprint(1)\n```"
    assert extract_sparql(reply) == "SELECT ?a WHERE { ?a ?p ?o }"


def test_extract_bare_fallback_with_limit():
    reply = "Answer: PREFIX ex: <urn:ex:> SELECT ?a WHERE { ?a ?p ?o } LIMIT 5 and that is all."
    assert extract_sparql(reply) == "PREFIX ex: <urn:ex:> SELECT ?a WHERE { ?a ?p ?o } LIMIT 5"


def test_extract_prose_fails():
    with pytest.raises(ExtractionFailure):
        extract_sparql("I cannot answer")


_QUERY_TEXT = st.from_regex(r"SELECT \?[a-z]{1,4} WHERE \{ \?[a-z]{1,4} [a-z:]{1,8} \?[a-z]{1,4} \}( LIMIT [1-9])?", fullmatch=True)


@settings(max_examples=100, deadline=None)
@given(_QUERY_TEXT, st.text(alphabet="abc \n.", max_size=20))
def test_extract_idempotent(query, prose):
    first = extract_sparql(f"{prose}\n```sparql\n{query}\n```\n{prose}")
    assert first == query
    assert extract_sparql(f"```sparql\n{first}\n```") == first
    assert extract_sparql(first) == first


# -- dialogue ----------------------------------------------------------------------------------------------


def _summary():
    g = build_graph(fixture_source("owned_unguarded.sol"), "u.sol")
    return summarize_graph(prune_access_control(g))


def _seed_dialogue(tmp_path, round2: str):
    pattern = cwe_pattern("CWE-284")
    summary = _summary()
    write_fixture(tmp_path, round_one_messages(pattern, SCHEMA, summary), ROUND1_REPLY)
    write_fixture(tmp_path, round_two_messages(ROUND1_REPLY, pattern, SCHEMA), round2)
    return pattern, summary, EndpointConfig(backend="mock", fixture_dir=tmp_path)


def test_two_round_mock_dialogue(tmp_path):
    pattern, summary, cfg = _seed_dialogue(tmp_path, round2_reply())
    tr = run_two_rounds(pattern, SCHEMA, summary, cfg)
    assert len(tr.rounds) == 2
    assert tr.extracted_query == PLANTED_QUERY
    assert all(r.latency >= 0 for r in tr.rounds)
    assert tr.latency == pytest.approx(sum(r.latency for r in tr.rounds))
    # completeness: every prompt and reply appears verbatim
    assert tr.rounds[0].reply == ROUND1_REPLY
    assert ROUND1_REPLY in tr.rounds[1].messages[1].content
    dumped = json.dumps(tr.to_dict())
    for r in tr.rounds:
        for m in r.messages:
            assert json.dumps(m.content)[1:-1] in dumped
        assert json.dumps(r.reply)[1:-1] in dumped


def test_mock_dialogue_deterministic(tmp_path):
    pattern, summary, cfg = _seed_dialogue(tmp_path, round2_reply())
    a = run_two_rounds(pattern, SCHEMA, summary, cfg)
    b = run_two_rounds(pattern, SCHEMA, summary, cfg)
    assert a.digest() == b.digest()
    assert a.to_dict(include_latency=False) == b.to_dict(include_latency=False)


def test_round_two_without_query_fails(tmp_path):
    pattern, summary, cfg = _seed_dialogue(tmp_path, "Sorry, nothing to query here.")
    transcript = DialogueTranscript()
    with pytest.raises(ExtractionFailure) as info:
        run_two_rounds(pattern, SCHEMA, summary, cfg, transcript=transcript)
    assert info.value.transcript is transcript
    assert len(transcript.rounds) == 2 and transcript.extracted_query is None


def test_transcript_limits():
    tr = DialogueTranscript()
    rnd = DialogueRound(MSGS, "r", 0.0)
    tr.add(rnd)
    tr.add(rnd)
    with pytest.raises(ValueError):
        tr.add(rnd)
    with pytest.raises(ValueError):
        DialogueTranscript().add(DialogueRound(MSGS, "r", -1.0))


def test_endpoint_error_propagates():
    pattern = cwe_pattern("CWE-284")
    script = Script(httpx.Response(403, text="forbidden"))
    gw = _gateway(_http_cfg(), script)
    with pytest.raises(EndpointError):
        run_two_rounds(pattern, SCHEMA, _summary(), _http_cfg(), gateway=gw)

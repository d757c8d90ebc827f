"""End-to-end detection: source -> IR -> KG -> prune -> prompts -> LLM -> query -> report."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .graph.instances import build_instance_graph
from .graph.iris import decode_iri
from .graph.ontology import OntologySchema, ontology_schema
from .graph.summary import KgSummary, summarize_graph
from .graph.terms import Graph, Iri
from .llm import (
    DialogueTranscript, EndpointConfig, EndpointError, ExtractionFailure, LlmGateway,
    MissingFixture, round_one_messages, round_two_messages, run_two_rounds, write_fixture,
)
from .prompts.builder import DEFAULT_TOKEN_BUDGET, TEMPLATE_VERSION, SummaryTooLarge
from .prompts.cwe import CwePattern, UnknownCwe, cwe_pattern
from .prompts.reasoning import CONFIDENCE_LEVELS, parse_reasoning
from .pruning import PruneConfig, prune_access_control
from .solidity.ast import Span
from .solidity.inheritance import LinearizationError
from .solidity.lowering import ContractIR, lower_to_ir
from .solidity.parser import ParseError, parse_source
from .sparql.engine import EvaluationError, ResultSet, execute
from .sparql.feasibility import FeasibilityReport, validate_feasibility
from .sparql.parser import QuerySyntaxError, UnsupportedFeature, parse_query

VERDICTS = ("vulnerable", "clean", "inconclusive")
TIMING_FIELDS = ("build", "prune", "prompt", "llm", "query", "total")


class UnknownEntity(LookupError):
    pass


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start: int
    end: int
    line: int


@dataclass(frozen=True)
class DetectionFinding:
    entity: Iri
    span: SourceSpan
    cwe: str
    binding_row: tuple[tuple[str, str], ...]
    confidence: str

    def to_dict(self) -> dict:
        return {
            "entity": self.entity.value,
            "file": self.span.file,
            "line": self.span.line,
            "start": self.span.start,
            "end": self.span.end,
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class ExecutionOutcome:
    """What happened to the extracted query; feeds the rubric."""

    extracted: bool = False
    parsed: bool = False
    executed: bool = False
    rows: int = 0
    relevant_rows: int = 0

    def to_dict(self) -> dict:
        return {
            "extracted": self.extracted,
            "parsed": self.parsed,
            "executed": self.executed,
            "rows": self.rows,
            "relevant_rows": self.relevant_rows,
        }


@dataclass
class DetectionReport:
    contract_id: str
    cwe: str
    verdict: str
    findings: list[DetectionFinding] = field(default_factory=list)
    query: Optional[str] = None
    feasibility: Optional[FeasibilityReport] = None
    timings: dict[str, float] = field(default_factory=lambda: {k: 0.0 for k in TIMING_FIELDS})
    template_version: str = TEMPLATE_VERSION
    diagnostics: list[str] = field(default_factory=list)
    execution: ExecutionOutcome = field(default_factory=ExecutionOutcome)
    transcript: Optional[DialogueTranscript] = None

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")

    def to_dict(self, mask_timings: bool = False) -> dict:
        return {
            "contract_id": self.contract_id,
            "cwe": self.cwe,
            "verdict": self.verdict,
            "findings": [f.to_dict() for f in self.findings],
            "query": self.query,
            "timings": {k: (0.0 if mask_timings else round(self.timings.get(k, 0.0), 6)) for k in TIMING_FIELDS},
            "template_version": self.template_version,
            "diagnostics": list(self.diagnostics),
            "feasibility": self.feasibility.to_dict() if self.feasibility else None,
            "execution": self.execution.to_dict(),
            "transcript_digest": self.transcript.digest() if self.transcript else None,
        }

    def to_json(self, mask_timings: bool = False) -> str:
        return json.dumps(self.to_dict(mask_timings), indent=2, ensure_ascii=False) + "\n"


def _member_decl_span(ir: ContractIR, contract: str, member: str) -> Span:
    c = ir.unit.contract(contract)
    for v in c.state_vars:
        if v.name == member:
            return v.span
    key = f"{contract}.{member}"
    if key in ir.callables:
        return ir.callables[key].decl.span
    raise UnknownEntity(f"{contract} has no member {member!r}")


def map_iri_to_source(ir: ContractIR, entity: Iri) -> SourceSpan:
    """Declaring span of the contract, member, statement or local an IRI names."""
    try:
        d = decode_iri(entity)
    except ValueError as exc:
        raise UnknownEntity(str(exc)) from None
    if d.builtin is not None or d.external_kind is not None or d.contract is None:
        raise UnknownEntity(f"{entity.value} has no declaration in the source")
    if d.source_id != ir.unit.source_id:
        raise UnknownEntity(f"{entity.value} belongs to source {d.source_id!r}, not {ir.unit.source_id!r}")
    try:
        contract = ir.unit.contract(d.contract)
    except KeyError:
        raise UnknownEntity(f"no contract {d.contract!r}") from None
    file = ir.unit.source_id
    if d.member is None:
        span = contract.span
    elif d.statement is not None or d.local is not None:
        key = f"{d.contract}.{d.member}"
        if key not in ir.callables:
            raise UnknownEntity(f"no callable {key!r}")
        decl = ir.callables[key].decl
        if d.statement is not None:
            body = decl.body or ()
            hits = [s for s in body if s.index == d.statement]
            if not hits:
                raise UnknownEntity(f"{key} has no statement {d.statement}")
            span = hits[0].span
        else:
            candidates = list(decl.params) + list(getattr(decl, "returns", ()))
            candidates += [v for s in (decl.body or ()) for v in s.declares]
            hits = [p for p in candidates if p.name == d.local]
            if not hits:
                raise UnknownEntity(f"{key} has no local {d.local!r}")
            span = hits[0].span
    else:
        span = _member_decl_span(ir, d.contract, d.member)
    return SourceSpan(file, span.start, span.end, span.line)


def _rank(confidence: str) -> int:
    return CONFIDENCE_LEVELS.index(confidence) if confidence in CONFIDENCE_LEVELS else len(CONFIDENCE_LEVELS)


def assemble_report(
    rows: ResultSet,
    ir: ContractIR,
    cwe: str,
    confidence: Union[str, Sequence[str]] = "low",
    contract_id: Optional[str] = None,
) -> DetectionReport:
    """One finding per distinct IRI in the first column; best confidence wins on duplicates."""
    per_row = [confidence] * len(rows.rows) if isinstance(confidence, str) else list(confidence)
    if len(per_row) != len(rows.rows):
        raise ValueError("one confidence per row is required")
    diagnostics: list[str] = []
    best: dict[Iri, DetectionFinding] = {}
    order: list[Iri] = []
    first = rows.columns[0] if rows.columns else None
    for i, (row, conf) in enumerate(zip(rows.rows, per_row)):
        value = row.get(first) if first is not None else None
        if not isinstance(value, Iri):
            diagnostics.append(f"row {i}: first column ?{first} is not an IRI; skipped")
            continue
        try:
            span = map_iri_to_source(ir, value)
        except UnknownEntity as exc:
            diagnostics.append(f"row {i}: {exc}; skipped")
            continue
        cells = tuple((c, row[c].n3()) for c in rows.columns if row.get(c) is not None)
        finding = DetectionFinding(value, span, cwe, cells, conf)
        if value not in best:
            order.append(value)
            best[value] = finding
        elif _rank(conf) < _rank(best[value].confidence):
            best[value] = finding
    findings = [best[e] for e in order]
    return DetectionReport(
        contract_id=contract_id or ir.unit.source_id,
        cwe=cwe,
        verdict="vulnerable" if findings else "clean",
        findings=findings,
        diagnostics=diagnostics,
    )


@dataclass
class PreparedContract:
    """Everything the pipeline derives from the source before talking to a model."""

    ir: ContractIR
    graph: Graph
    pruned: Graph
    summary: KgSummary
    full_summary: KgSummary
    schema: OntologySchema


def prepare(source: str, source_id: str = "contract.sol", prune_cfg: PruneConfig = PruneConfig()) -> PreparedContract:
    ir = lower_to_ir(parse_source(source, source_id))
    g = build_instance_graph(ir)
    pruned = prune_access_control(g, prune_cfg)
    schema, _ = ontology_schema()
    return PreparedContract(ir, g, pruned, summarize_graph(pruned), summarize_graph(g), schema)


def write_dialogue_fixtures(
    prepared: PreparedContract,
    pattern: CwePattern,
    fixture_dir: Path,
    round1_reply: str,
    round2_reply: str,
    sample: Optional[int] = None,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> tuple[Path, Path]:
    """Record mock replies for both rounds of the dialogue about ``prepared``."""
    m1 = round_one_messages(pattern, prepared.schema, prepared.summary, token_budget)
    m2 = round_two_messages(round1_reply, pattern, prepared.schema)
    return (
        write_fixture(fixture_dir, m1, round1_reply, sample),
        write_fixture(fixture_dir, m2, round2_reply, sample),
    )


def _relevant(rows: ResultSet, g: Graph) -> int:
    """Rows whose first cell is a typed instance of the graph."""
    if not rows.columns:
        return 0
    first = rows.columns[0]
    return sum(1 for r in rows.rows if isinstance(r.get(first), Iri) and g.types(r[first]))


def detect(
    source: str,
    cwe_id: str,
    prune_cfg: PruneConfig = PruneConfig(),
    endpoint_cfg: Optional[EndpointConfig] = None,
    *,
    source_id: str = "contract.sol",
    contract_id: Optional[str] = None,
    gateway: Optional[LlmGateway] = None,
    sample: Optional[int] = None,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
) -> DetectionReport:
    """Run every stage; failures become an ``inconclusive`` report, never an exception."""
    clock = time.perf_counter
    t0 = clock()
    timings = {k: 0.0 for k in TIMING_FIELDS}
    cid = contract_id or source_id
    report = DetectionReport(cid, str(cwe_id), "inconclusive")

    def finish(r: DetectionReport) -> DetectionReport:
        timings["total"] = clock() - t0
        r.timings = dict(timings)
        return r

    try:
        pattern = cwe_pattern(cwe_id)
    except UnknownCwe as exc:
        report.diagnostics.append(f"UnknownCwe: {exc}")
        return finish(report)
    report.cwe = pattern.id
    if endpoint_cfg is None and gateway is None:
        report.diagnostics.append("no endpoint configured")
        return finish(report)
    cfg = endpoint_cfg if endpoint_cfg is not None else gateway.cfg  # type: ignore[union-attr]

    t = clock()
    try:
        ir = lower_to_ir(parse_source(source, source_id))
        g = build_instance_graph(ir)
    except (ParseError, LinearizationError) as exc:
        timings["build"] = clock() - t
        report.diagnostics.append(f"{type(exc).__name__}: {exc}")
        return finish(report)
    timings["build"] = clock() - t

    t = clock()
    pruned = prune_access_control(g, prune_cfg)
    summary = summarize_graph(pruned)
    full_summary = summarize_graph(g)
    schema, _ = ontology_schema()
    timings["prune"] = clock() - t

    t = clock()
    transcript = DialogueTranscript()
    report.transcript = transcript
    try:
        run_two_rounds(pattern, schema, summary, cfg, gateway=gateway, sample=sample,
                       token_budget=token_budget, transcript=transcript)
    except (SummaryTooLarge, MissingFixture, EndpointError, ExtractionFailure) as exc:
        timings["llm"] = transcript.latency
        timings["prompt"] = max(0.0, clock() - t - timings["llm"])
        report.diagnostics.append(f"{type(exc).__name__}: {exc}")
        return finish(report)
    timings["llm"] = transcript.latency
    timings["prompt"] = max(0.0, clock() - t - timings["llm"])
    query_text = transcript.extracted_query or ""
    report.query = query_text
    reasoning = parse_reasoning(transcript.rounds[0].reply, schema)
    report.diagnostics.extend(f"reasoning: {f}" for f in reasoning.flags)

    t = clock()
    try:
        q = parse_query(query_text)
    except (QuerySyntaxError, UnsupportedFeature) as exc:
        timings["query"] = clock() - t
        report.execution = ExecutionOutcome(extracted=True)
        report.diagnostics.append(f"{type(exc).__name__}: {exc}")
        return finish(report)
    feas = validate_feasibility(q, schema, full_summary)
    report.feasibility = feas
    if feas.status == "infeasible":
        timings["query"] = clock() - t
        report.execution = ExecutionOutcome(extracted=True, parsed=True)
        report.diagnostics.extend(f"infeasible pattern {i}: {m}" for i, m in feas.diagnostics)
        return finish(report)
    report.diagnostics.extend(f"unknown term at pattern {i}: {m}" for i, m in feas.diagnostics)
    try:
        rows = execute(q, g)
    except EvaluationError as exc:
        timings["query"] = clock() - t
        report.execution = ExecutionOutcome(extracted=True, parsed=True)
        report.diagnostics.append(f"EvaluationError: {exc}")
        return finish(report)
    assembled = assemble_report(rows, ir, pattern.id, reasoning.confidence, cid)
    timings["query"] = clock() - t

    report.verdict = assembled.verdict
    report.findings = assembled.findings
    report.diagnostics.extend(assembled.diagnostics)
    if rows.truncated:
        report.diagnostics.append("result truncated by LIMIT")
    report.execution = ExecutionOutcome(True, True, True, len(rows.rows), _relevant(rows, g))
    return finish(report)


def detect_file(path: Path, cwe_id: str, endpoint_cfg: EndpointConfig,
                prune_cfg: PruneConfig = PruneConfig(), **kwargs) -> DetectionReport:
    path = Path(path)
    try:
        source = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        r = DetectionReport(kwargs.get("contract_id") or path.name, str(cwe_id), "inconclusive")
        r.diagnostics.append(f"{type(exc).__name__}: {exc}")
        return r
    kwargs.setdefault("source_id", path.name)
    return detect(source, cwe_id, prune_cfg, endpoint_cfg, **kwargs)

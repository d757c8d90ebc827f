"""Command-line interface.

Exit status: 0 on success, 1 on input or runtime errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .evaluation import ManifestError, evaluate, generate_pairs, load_manifest, write_pairs_jsonl
from .graph import NTriplesSyntaxError, build_instance_graph, ontology_schema, parse_ntriples, serialize_ntriples, summarize_graph
from .llm import DEFAULT_API_KEY_ENV, EndpointConfig
from .pipeline import detect_file
from .prompts import SUPPORTED_CWES, SummaryTooLarge, UnknownCwe, build_round_one, build_round_two, cwe_pattern
from .pruning import PruneConfig, prune_access_control
from .solidity import LinearizationError, ParseError, lower_to_ir, parse_source
from .sparql import EvaluationError, QuerySyntaxError, UnsupportedFeature, execute, parse_query, validate_feasibility


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_graph(path: str):
    return parse_ntriples(Path(path).read_text(encoding="utf-8"))


def _endpoint(args: argparse.Namespace) -> EndpointConfig:
    return EndpointConfig(
        backend=args.backend,
        base_url=args.base_url,
        model_name=args.model,
        api_key_ref=args.api_key_env,
        fixture_dir=Path(args.fixtures) if args.fixtures else None,
        max_retries=args.max_retries,
        timeout=args.timeout,
    )


def cmd_build(args: argparse.Namespace) -> int:
    path = Path(args.source)
    ir = lower_to_ir(parse_source(path.read_text(encoding="utf-8"), path.name))
    for w in ir.warnings:
        print(f"warning: {w.message} at {w.span.line}:{w.span.column}", file=sys.stderr)
    _write(serialize_ntriples(build_instance_graph(ir)), args.out)
    return 0


def _prune_config(args: argparse.Namespace) -> PruneConfig:
    base = PruneConfig()
    return PruneConfig(
        guard_modifier_names=frozenset(args.guards) if args.guards else base.guard_modifier_names,
        guard_builtin_names=frozenset(args.guard_builtins) if args.guard_builtins else base.guard_builtin_names,
        authority_var_names=frozenset(args.authority_vars) if args.authority_vars else base.authority_var_names,
        guard_prefixes=frozenset(args.guard_pattern or ()),
    )


def cmd_prune(args: argparse.Namespace) -> int:
    pruned = prune_access_control(_read_graph(args.kg), _prune_config(args))
    _write(serialize_ntriples(pruned), args.out)
    if args.summary:
        print(summarize_graph(pruned).render(), file=sys.stderr)
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    g = _read_graph(args.kg)
    text = sys.stdin.read() if args.query == "-" else Path(args.query).read_text(encoding="utf-8")
    q = parse_query(text)
    schema, _ = ontology_schema()
    report = validate_feasibility(q, schema, summarize_graph(g))
    if not report.feasible:
        for idx, msg in report.diagnostics:
            print(f"{report.status}: pattern {idx}: {msg}", file=sys.stderr)
        if report.status == "infeasible" and not args.force:
            return 1
    rows = execute(q, g)
    if args.format == "json":
        _write(json.dumps(rows.to_records(), indent=2, ensure_ascii=False) + "\n", args.out)
    else:
        _write(rows.to_tsv(), args.out)
    return 0


def cmd_prompt(args: argparse.Namespace) -> int:
    pattern = cwe_pattern(args.cwe)
    schema, _ = ontology_schema()
    if args.round == 1:
        g = _read_graph(args.kg)
        if not args.no_prune:
            g = prune_access_control(g)
        prompt = build_round_one(pattern, schema, summarize_graph(g), args.token_budget)
    else:
        if not args.reasoning:
            print("error: --round 2 needs --reasoning FILE with the round-1 reply", file=sys.stderr)
            return 2
        prompt = build_round_two(Path(args.reasoning).read_text(encoding="utf-8"), pattern, schema)
    _write(prompt.text, args.out)
    return 0


def _sources(path: Path) -> list[Path]:
    return sorted(path.rglob("*.sol")) if path.is_dir() else [path]


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = _endpoint(args)
    reports = [detect_file(p, args.cwe, cfg, token_budget=args.token_budget) for p in _sources(Path(args.source))]
    if args.out and len(reports) > 1:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for r in reports:
            (out / f"{Path(r.contract_id).stem}.json").write_text(r.to_json(), encoding="utf-8")
    else:
        _write("".join(r.to_json() for r in reports), args.out)
    for r in reports:
        print(f"{r.contract_id}: {r.verdict} ({len(r.findings)} finding(s))", file=sys.stderr)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    result = evaluate(load_manifest(args.manifest), args.cwe, _endpoint(args), workers=args.workers)
    sys.stdout.write(result.render())
    return 0


def cmd_gen_pairs(args: argparse.Namespace) -> int:
    gen = generate_pairs(load_manifest(args.manifest), args.cwe, _endpoint(args))
    with open(args.out, "w", encoding="utf-8") as fh:
        n = write_pairs_jsonl(gen.pairs, fh)
    for d in gen.diagnostics:
        print(d, file=sys.stderr)
    print(f"wrote {n} pair(s) to {args.out}", file=sys.stderr)
    return 0


def _endpoint_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("mock", "http"), default="mock")
    p.add_argument("--fixtures", help="mock fixture directory")
    p.add_argument("--base-url", help="OpenAI-compatible endpoint, e.g. http://localhost:8000/v1")
    p.add_argument("--model", default="default")
    p.add_argument("--api-key-env", default=DEFAULT_API_KEY_ENV, help="environment variable holding the API key")
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--timeout", type=float, default=60.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckgdetect", description="Access-control analysis over contract knowledge graphs")
    sub = parser.add_subparsers(dest="command", required=True)
    cwe_help = f"one of {', '.join(SUPPORTED_CWES)}"

    p = sub.add_parser("build", help="Solidity source to N-Triples knowledge graph")
    p.add_argument("--source", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("prune", help="keep the access-control subgraph")
    p.add_argument("--in", "--kg", dest="kg", required=True, help="input N-Triples graph")
    p.add_argument("--guards", nargs="+", help="guard modifier names (default onlyOwner onlyRole)")
    p.add_argument("--guard-builtins", nargs="+", help="guard builtins (default msg.sender require hasRole)")
    p.add_argument("--authority-vars", nargs="+", help="authority variable names (default owner roles)")
    p.add_argument("--guard-pattern", nargs="+", help="also treat modifiers starting with these prefixes as guards")
    p.add_argument("--out")
    p.add_argument("--summary", action="store_true", help="print the tabular summary to stderr")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("query", help="run a query file against a graph and print TSV")
    p.add_argument("--kg", required=True)
    p.add_argument("--query", required=True, help="query file, or - for stdin")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.add_argument("--out")
    p.add_argument("--force", action="store_true", help="execute even when the query is infeasible")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("prompt", help="render a round-1 or round-2 prompt")
    p.add_argument("--cwe", required=True, help=cwe_help)
    p.add_argument("--kg", required=True)
    p.add_argument("--round", type=int, choices=(1, 2), default=1)
    p.add_argument("--reasoning", help="round-1 reply (required for round 2)")
    p.add_argument("--no-prune", action="store_true", help="summarize the graph as given")
    p.add_argument("--token-budget", type=int, default=8000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("detect", help="full detection pipeline for a file or directory")
    p.add_argument("--source", required=True)
    p.add_argument("--cwe", required=True, help=cwe_help)
    p.add_argument("--token-budget", type=int, default=8000)
    p.add_argument("--out", help="report file (or directory when several sources)")
    _endpoint_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detection over a labelled manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--cwe", required=True, help=cwe_help)
    p.add_argument("--workers", type=int, default=1)
    _endpoint_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-pairs", help="write DPO preference pairs as JSONL")
    p.add_argument("--manifest", required=True)
    p.add_argument("--cwe", required=True, help=cwe_help)
    p.add_argument("--out", required=True)
    _endpoint_args(p)
    p.set_defaults(func=cmd_gen_pairs)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, UnicodeDecodeError, ParseError, LinearizationError, NTriplesSyntaxError,
            QuerySyntaxError, UnsupportedFeature, EvaluationError, ManifestError, SummaryTooLarge) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except UnknownCwe as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:  # invalid endpoint configuration and similar
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Walk a planted access-control flaw through every stage with a recorded mock dialogue.

Two versions of the same ownable contract are processed: one lets anybody call
``setOwner``, the other guards it with ``onlyOwner``. The LLM replies are
recorded as mock fixtures in a temporary directory, so the script runs offline
and prints the same reports on every run.

    python demos/planted_flaw.py
"""

import tempfile
from pathlib import Path

from ckgdetect.graph import serialize_ntriples
from ckgdetect.llm import EndpointConfig
from ckgdetect.pipeline import detect, prepare, write_dialogue_fixtures
from ckgdetect.prompts import cwe_pattern
from ckgdetect.sparql import execute, parse_query

UNGUARDED = """pragma solidity ^0.8.0;

contract Owned {
    address public owner;

    constructor() {
        owner = msg.sender;
    }

    function setOwner(address newOwner) public {
        owner = newOwner;
    }
}
"""

GUARDED = UNGUARDED.replace(
    "    constructor() {",
    "    modifier onlyOwner() {\n        require(msg.sender == owner, \"not owner\");\n        _;\n    }\n\n"
    "    constructor() {",
).replace("public {\n        owner = newOwner;", "public onlyOwner {\n        owner = newOwner;")

QUERY = """SELECT DISTINCT ?f ?name WHERE {
  ?f a ckg:Function ;
     ckg:kindIs "function" ;
     ckg:visibilityIs ?vis ;
     ckg:nameIs ?name ;
     ckg:writesVar ?v .
  ?v ckg:nameIs "owner" .
  FILTER(?vis = "public" || ?vis = "external")
  FILTER NOT EXISTS { ?f ckg:appliesModifier ?m }
}"""

# What a model might say in the reasoning round; only its text is replayed.
ROUND1 = """Intent: externally callable functions that write the owner variable with no modifier applied.
Slots:
callable from outside -> ckg:visibilityIs
changes ownership -> ckg:writesVar
no guard -> ckg:appliesModifier (absent)
Feasibility: each slot maps to a declared property and "owner" is a StateVar name.
Query plan:
?f rdf:type ckg:Function with public or external visibility
?f ckg:writesVar ?v where ?v is named "owner"
no ?f ckg:appliesModifier ?m
Confidence: high
"""
ROUND2 = f"```sparql\n{QUERY}\n```\n"


def show_stages(name: str, source: str) -> None:
    prepared = prepare(source, name)
    print(f"== {name}")
    print(f"full graph: {len(prepared.graph)} triples, pruned: {len(prepared.pruned)} triples")
    print(prepared.summary.render())
    rows = execute(parse_query(QUERY), prepared.graph)
    print(f"query rows on the full graph: {len(rows.tuples())}")
    print(serialize_ntriples(prepared.pruned).splitlines()[0])
    print()


def main() -> None:
    contracts = {"unguarded.sol": UNGUARDED, "guarded.sol": GUARDED}
    for name, source in contracts.items():
        show_stages(name, source)

    with tempfile.TemporaryDirectory() as tmp:
        fixtures = Path(tmp)
        pattern = cwe_pattern("CWE-284")
        for name, source in contracts.items():
            write_dialogue_fixtures(prepare(source, name), pattern, fixtures, ROUND1, ROUND2)
        cfg = EndpointConfig(backend="mock", fixture_dir=fixtures)
        for name, source in contracts.items():
            report = detect(source, "CWE-284", endpoint_cfg=cfg, source_id=name)
            print(f"== report for {name}: {report.verdict}")
            print(report.to_json(mask_timings=True))
            for f in report.findings:
                print(f"   line {f.span.line}: {source[f.span.start:f.span.end].splitlines()[0]}")


if __name__ == "__main__":
    main()

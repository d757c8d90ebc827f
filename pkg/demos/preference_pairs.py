"""Turn two sampled dialogues per contract into a chosen/rejected preference pair.

One sample returns a well-formed query and the other a truncated one. The rubric
scores both and the higher-scoring query becomes ``chosen``. Fixtures are
recorded in a temporary directory, so no endpoint is contacted.

    python demos/preference_pairs.py
"""

import io
import json
import tempfile
from pathlib import Path

from ckgdetect.evaluation import generate_pairs, load_manifest, write_pairs_jsonl
from ckgdetect.llm import EndpointConfig
from ckgdetect.pipeline import prepare, write_dialogue_fixtures
from ckgdetect.prompts import cwe_pattern

SOURCE = """contract Owned{i} {{
    address public owner;
    constructor() {{ owner = msg.sender; }}
    function setOwner(address newOwner) public {{ owner = newOwner; }}
}}
"""

GOOD = """SELECT ?f WHERE {
  ?f a ckg:Function ; ckg:writesVar ?v ; ckg:visibilityIs "public" .
  ?v ckg:nameIs "owner" .
  FILTER NOT EXISTS { ?f ckg:appliesModifier ?m }
}"""
BAD = GOOD[: len(GOOD) // 2]
ROUND1 = "Intent: public functions that write owner without a modifier.\nConfidence: high\n"


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        fixtures = root / "fixtures"
        pattern = cwe_pattern("CWE-284")
        entries = []
        for i in range(3):
            name = f"c{i}.sol"
            source = SOURCE.format(i=i)
            (root / name).write_text(source)
            entries.append({"path": name, "contract_id": f"c{i}", "labels": ["CWE-284"]})
            prepared = prepare(source, name)
            for sample, query in ((0, GOOD), (1, BAD)):
                write_dialogue_fixtures(prepared, pattern, fixtures, ROUND1, f"```sparql\n{query}\n```", sample)
        manifest = root / "manifest.json"
        manifest.write_text(json.dumps({"split": "train", "entries": entries}))

        cfg = EndpointConfig(backend="mock", fixture_dir=fixtures)
        result = generate_pairs(load_manifest(manifest), "CWE-284", cfg)
        for pair in result.pairs:
            print(f"chosen {pair.chosen.score.overall:.3f} over {pair.rejected.score.overall:.3f}: "
                  f"{pair.rejected.score.rationale}")
        buf = io.StringIO()
        write_pairs_jsonl(result.pairs, buf)
        print(buf.getvalue().splitlines()[0][:200], "...")


if __name__ == "__main__":
    main()

import json
import shutil

import pytest

from ckgdetect.cli import main
from ckgdetect.graph import parse_ntriples

from _support import CONTRACTS, PLANTED_QUERY, ROUND1_REPLY, seed_pair_corpus, seed_planted


@pytest.fixture
def kg(tmp_path):
    out = tmp_path / "g.nt"
    assert main(["build", "--source", str(CONTRACTS / "owned_unguarded.sol"), "--out", str(out)]) == 0
    return out


def test_build_to_stdout(capsys):
    assert main(["build", "--source", str(CONTRACTS / "owned_guarded.sol")]) == 0
    text = capsys.readouterr().out
    g = parse_ntriples(text)
    assert len(g) > 0 and text.endswith(" .\n")


def test_build_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.sol"
    bad.write_text("contract {")
    assert main(["build", "--source", str(bad)]) == 1
    assert "ParseError" in capsys.readouterr().err


def test_build_missing_file(tmp_path, capsys):
    assert main(["build", "--source", str(tmp_path / "none.sol")]) == 1


def test_build_warning_on_stderr(capsys):
    assert main(["build", "--source", str(CONTRACTS / "legacy_default.sol")]) == 0
    assert "warning:" in capsys.readouterr().err


def test_prune_subset(kg, tmp_path, capsys):
    out = tmp_path / "p.nt"
    assert main(["prune", "--in", str(kg), "--out", str(out), "--summary"]) == 0
    full, pruned = parse_ntriples(kg.read_text()), parse_ntriples(out.read_text())
    assert pruned.triples <= full.triples
    assert "Class ckg:" in capsys.readouterr().err


def test_prune_custom_guards(kg, tmp_path):
    out = tmp_path / "p.nt"
    assert main(["prune", "--kg", str(kg), "--guards", "onlyAdmin", "--authority-vars", "owner", "--out", str(out)]) == 0


def test_prune_malformed_graph(tmp_path, capsys):
    bad = tmp_path / "bad.nt"
    bad.write_text("<a> <b>\n")
    assert main(["prune", "--in", str(bad)]) == 1
    assert "NTriplesSyntaxError" in capsys.readouterr().err


def test_query_tsv_and_json(kg, tmp_path, capsys):
    q = tmp_path / "q.rq"
    q.write_text(PLANTED_QUERY)
    assert main(["query", "--kg", str(kg), "--query", str(q)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "?f\t?name" and len(lines) == 2
    assert main(["query", "--kg", str(kg), "--query", str(q), "--format", "json"]) == 0
    records = json.loads(capsys.readouterr().out)
    assert records[0]["name"] == '"setOwner"'


def test_query_stdin(kg, monkeypatch, capsys):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("SELECT ?c WHERE { ?c a ckg:Contract }"))
    assert main(["query", "--kg", str(kg), "--query", "-"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_query_infeasible_refused_unless_forced(kg, tmp_path, capsys):
    q = tmp_path / "q.rq"
    q.write_text("SELECT ?f WHERE { ?f ckg:hasOwner ?o }")
    assert main(["query", "--kg", str(kg), "--query", str(q)]) == 1
    assert "infeasible" in capsys.readouterr().err
    assert main(["query", "--kg", str(kg), "--query", str(q), "--force"]) == 0


def test_query_unsupported(kg, tmp_path, capsys):
    q = tmp_path / "q.rq"
    q.write_text("SELECT ?f WHERE { ?f a ckg:Function OPTIONAL { ?f ckg:nameIs ?n } }")
    assert main(["query", "--kg", str(kg), "--query", str(q)]) == 1
    assert "OPTIONAL unsupported" in capsys.readouterr().err


def test_prompt_round_one_and_two(kg, tmp_path, capsys):
    assert main(["prompt", "--cwe", "CWE-284", "--kg", str(kg)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("## Task") and "## Example" in text
    reply = tmp_path / "r1.txt"
    reply.write_text(ROUND1_REPLY)
    assert main(["prompt", "--cwe", "CWE-284", "--kg", str(kg), "--round", "2", "--reasoning", str(reply)]) == 0
    assert ROUND1_REPLY in capsys.readouterr().out


def test_prompt_round_two_needs_reasoning(kg):
    assert main(["prompt", "--cwe", "CWE-284", "--kg", str(kg), "--round", "2"]) == 2


def test_prompt_unknown_cwe(kg, capsys):
    assert main(["prompt", "--cwe", "CWE-79", "--kg", str(kg)]) == 1
    assert "CWE-79" in capsys.readouterr().err


def test_prompt_budget_exceeded(kg, capsys):
    assert main(["prompt", "--cwe", "CWE-284", "--kg", str(kg), "--token-budget", "10"]) == 1
    assert "SummaryTooLarge" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["detect"])
    assert info.value.code == 2


def test_detect_file_and_directory(tmp_path, capsys):
    fixtures = tmp_path / "fx"
    seed_planted(fixtures)
    src_dir = tmp_path / "src"
    src_dir.mkdir()
    for name in ("owned_unguarded.sol", "owned_guarded.sol"):
        shutil.copy(CONTRACTS / name, src_dir / name)
    common = ["--cwe", "CWE-284", "--backend", "mock", "--fixtures", str(fixtures)]
    out = tmp_path / "r.json"
    assert main(["detect", "--source", str(src_dir / "owned_unguarded.sol"), "--out", str(out)] + common) == 0
    report = json.loads(out.read_text())
    assert report["verdict"] == "vulnerable" and len(report["findings"]) == 1
    assert main(["detect", "--source", str(src_dir), "--out", str(tmp_path / "reports")] + common) == 0
    verdicts = {p.name: json.loads(p.read_text())["verdict"] for p in (tmp_path / "reports").iterdir()}
    assert verdicts == {"owned_guarded.json": "clean", "owned_unguarded.json": "vulnerable"}
    assert "owned_guarded.sol: clean" in capsys.readouterr().err


def test_detect_http_without_url(tmp_path, capsys):
    assert main(["detect", "--source", str(CONTRACTS / "owned_guarded.sol"), "--cwe", "CWE-284",
                 "--backend", "http"]) == 2
    assert "base_url" in capsys.readouterr().err


def test_eval_and_gen_pairs(tmp_path, capsys):
    manifest, fixtures, injected = seed_pair_corpus(tmp_path, 6, seed=1)
    common = ["--manifest", str(manifest), "--cwe", "CWE-284", "--backend", "mock", "--fixtures", str(fixtures)]
    assert main(["eval"] + common + ["--workers", "2"]) == 0
    out = capsys.readouterr().out
    assert "Precision" in out and "F1" in out and "ADT(s)" in out
    pairs = tmp_path / "pairs.jsonl"
    assert main(["gen-pairs", "--out", str(pairs)] + common) == 0
    records = [json.loads(line) for line in pairs.read_text().splitlines()]
    assert len(records) == 6
    assert all(set(r) == {"prompt", "chosen", "rejected"} for r in records)
    assert all(r["rejected"] in injected for r in records)


def test_eval_bad_manifest(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"entries": [{"path": "x.sol", "contract_id": "x"}]}))
    assert main(["eval", "--manifest", str(m), "--cwe", "CWE-284", "--fixtures", str(tmp_path)]) == 1
    assert "ManifestError" in capsys.readouterr().err

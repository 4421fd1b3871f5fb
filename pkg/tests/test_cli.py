"""Command line interface: exit codes, output formats, env fallbacks."""
import json

import pytest

from conftest import fixture_path
from histcov.cli import main


def test_typecheck_reports_type_and_effect(capsys):
    code = main(["typecheck", fixture_path("writes_range.ltg"),
                 "--universe-int", "4"])
    out = capsys.readouterr().out
    assert code == 0
    assert "type:" in out
    assert "effect:" in out


def test_typecheck_json_format(capsys):
    code = main(["typecheck", fixture_path("const_int.ltg"),
                 "--universe-int", "4", "--format", "json"])
    data = json.loads(capsys.readouterr().out)
    assert code == 0
    assert data["ok"] is True
    assert "v == 3" in data["type"]


def test_parse_error_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.ltg"
    bad.write_text("let = in")
    code = main(["typecheck", str(bad)])
    assert code == 1
    assert "error" in capsys.readouterr().out


def test_policy_pass_and_fail_exit_codes(capsys):
    base = ["check-policy", fixture_path("palindromes.ltg"),
            "--ctx", fixture_path("palindromes_ctx.json"), "--mu-depth", "4"]
    assert main(base + ["--policy", fixture_path("palindromes.pol")]) == 0
    code = main(base + ["--policy", fixture_path("palindromes_results.pol")])
    out = capsys.readouterr().out
    assert code == 2
    assert "counterexample" in out


def test_missing_policy_exits_one(capsys):
    code = main(["check-policy", fixture_path("palindromes.ltg"),
                 "--ctx", fixture_path("palindromes_ctx.json")])
    assert code == 1


def test_eval_lists_runs(capsys):
    code = main(["eval", fixture_path("writes_range.ltg"),
                 "--universe-int", "4", "--format", "json"])
    data = json.loads(capsys.readouterr().out)
    assert code == 0
    assert data["complete"] is True
    values = sorted(r["value"] for r in data["runs"])
    assert values == ["1", "2", "3"]


def test_denote_on_history_file(capsys):
    code = main(["denote", fixture_path("fig3_effect.hist"),
                 "--universe-int", "4", "--mu-depth", "4", "--format", "json"])
    data = json.loads(capsys.readouterr().out)
    assert code == 0
    assert data["complete"] is True
    assert data["histories"]


def test_denote_truncation_exits_three(tmp_path, capsys):
    h = tmp_path / "loop.hist"
    h.write_text("mu G1(n:(int: true))(eps + read(file: true)"
                 " . call(v == G1; n:(int: true)))"
                 " . call(v == G1; n:(int: true))")
    code = main(["denote", str(h), "--universe-int", "4", "--mu-depth", "2"])
    assert code == 3


def test_nf_outputs_normal_form(tmp_path, capsys):
    h = tmp_path / "in.hist"
    h.write_text("(open(file: true) + close(file: true)) . read(file: true)")
    code = main(["nf", str(h), "--format", "json"])
    data = json.loads(capsys.readouterr().out)
    assert code == 0
    assert "+" in data["normal_form"]


def test_env_fallback_for_format(monkeypatch, capsys):
    monkeypatch.setenv("HISTCOV_FORMAT", "json")
    code = main(["typecheck", fixture_path("const_int.ltg"),
                 "--universe-int", "4"])
    data = json.loads(capsys.readouterr().out)
    assert code == 0
    assert data["ok"] is True

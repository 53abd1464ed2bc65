import csv
import json
import os
import subprocess
import sys

import jsonschema
import pytest

from ctxprob.cli import main
from ctxprob.errors import ScenarioError
from ctxprob.scenario import bundled_scenarios, loads, report_schema

QUBIT = {
    "dim": 2,
    "states": {"z+": "z+", "z-": "z-", "x+": "x+"},
    "properties": {"z+": "z+", "x+": "x+"},
}


def write(tmp_path, doc, name="case"):
    p = tmp_path / f"{name}.scenario"
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return p


def run(args, tmp_path):
    return main(["run", *map(str, args), "-o", str(tmp_path / "out"), "--quiet"])


def report(tmp_path, name):
    return json.loads((tmp_path / "out" / f"{name}.report.json").read_text())


def test_bundled_scenarios_present():
    assert {"qubit-embed", "nondistributive", "classical-toy"} <= set(bundled_scenarios())


@pytest.mark.parametrize("name", sorted(bundled_scenarios()))
def test_bundled_scenarios_pass_and_match_schema(name, tmp_path):
    assert run([name], tmp_path) == 0
    rep = report(tmp_path, name)
    jsonschema.validate(rep, report_schema())
    assert rep["passed"] and rep["scenario"] == name


def test_qubit_embed_reports_zero_deviation(tmp_path):
    assert main(["run", "qubit-embed", "-o", str(tmp_path / "out"), "--quiet", "--format", "both"]) == 0
    verify = next(t for t in report(tmp_path, "qubit-embed")["tasks"] if t["task"] == "verify")
    assert verify["max_deviation"] == "0"
    with open(tmp_path / "out" / "qubit-embed.verify.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert {r["deviation"] for r in rows} == {"0"}
    assert {(r["state"], r["property"], r["classical_mean"]) for r in rows} >= {("z+", "x+", "1/2"), ("z-", "z+", "0")}


def test_nondistributive_witness(tmp_path):
    assert run(["nondistributive"], tmp_path) == 0
    task = next(t for t in report(tmp_path, "nondistributive")["tasks"] if t["task"] == "witness-nonclassicality")
    w = task["witness"]
    assert (w["e1"], w["e2"], w["condition"]) == ("z+", "z-", "x+")
    assert w["left"] == pytest.approx(1.0, abs=1e-9) and w["right"] == pytest.approx(0.0, abs=1e-9)


def test_malformed_json_exits_2_with_offset(tmp_path, capsys):
    text = '{"name": "é",\n "tasks": [}'
    assert run([write(tmp_path, text)], tmp_path) == 2
    err = capsys.readouterr().err
    assert f"at byte {len(text[:text.rindex('}')].encode())}" in err


def test_bad_formula_exits_2_with_offset(tmp_path, capsys):
    doc = json.loads((bundled_scenarios()["classical-toy"]).read_text())
    doc["queries"] = [{"a": "P:F@(x)", "b": "S:s0(x)"}]
    assert run([write(tmp_path, doc)], tmp_path) == 2
    assert "queries/0/a" in capsys.readouterr().err


def test_schema_violation_exits_2(tmp_path):
    assert run([write(tmp_path, {"name": "x", "tasks": ["bogus"]})], tmp_path) == 2


def test_missing_section_exits_2(tmp_path):
    assert run([write(tmp_path, {"name": "x", "tasks": ["born"]})], tmp_path) == 2


def test_missing_file_exits_2(tmp_path):
    assert run([tmp_path / "nope.scenario"], tmp_path) == 2


def test_failing_task_exits_1_and_is_named(tmp_path, capsys):
    doc = {"name": "loose", "quantum": QUBIT,
           "embedding": {"groups": [["z+"], ["x+"]], "scheme": "ontic", "resolution": 3},
           "tolerances": {"embedding": "0"}, "tasks": ["born", "verify"]}
    assert run([write(tmp_path, doc)], tmp_path) == 1
    assert "verify" in capsys.readouterr().err
    rep = report(tmp_path, "loose")
    assert not rep["passed"]
    assert [t["passed"] for t in rep["tasks"]] == [True, False]


def test_default_tolerance_follows_scheme(tmp_path):
    doc = {"name": "det", "quantum": QUBIT,
           "embedding": {"groups": [["z+"], ["x+"]], "scheme": "deterministic-context", "contexts": 3},
           "tasks": ["verify"]}
    assert run([write(tmp_path, doc)], tmp_path) == 0
    verify = report(tmp_path, "det")["tasks"][0]
    assert verify["tolerance"] == "1/6"


def test_library_errors_fail_the_task(tmp_path):
    doc = {"name": "badgroup", "quantum": QUBIT,
           "embedding": {"groups": [["z+", "x+"]], "scheme": "ontic"}, "tasks": ["embed"]}
    assert run([write(tmp_path, doc)], tmp_path) == 1
    task = report(tmp_path, "badgroup")["tasks"][0]
    assert "IncompatibleGroup" in task["error"]


def test_unexpected_witness_absence_fails(tmp_path):
    doc = {"name": "commuting", "quantum": {"dim": 2, "states": {"z+": "z+"},
                                            "properties": {"z+": "z+", "z-": "z-"}},
           "witness": {"state": "z+", "condition": "z+", "expect": True},
           "tasks": ["witness-nonclassicality"]}
    assert run([write(tmp_path, doc)], tmp_path) == 1


def test_task_filter_and_seed_override(tmp_path):
    assert main(["run", "classical-toy", "-o", str(tmp_path / "out"), "--quiet",
                 "--task", "mean-prob", "--seed", "99"]) == 0
    rep = report(tmp_path, "classical-toy")
    assert [t["task"] for t in rep["tasks"]] == ["mean-prob"] and rep["seed"] == 99


def test_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "classical-toy", "-o", str(a), "--quiet"])
    main(["run", "classical-toy", "-o", str(b), "--quiet", "--parallel"])
    assert (a / "classical-toy.report.json").read_bytes() == (b / "classical-toy.report.json").read_bytes()


def test_list(capsys):
    assert main(["list"]) == 0
    assert "qubit-embed" in capsys.readouterr().out


def test_summary_printed(tmp_path, capsys):
    main(["run", "nondistributive", "-o", str(tmp_path)])
    out = capsys.readouterr().out
    assert "PASS  witness-nonclassicality" in out and out.strip().endswith("PASSED")


def test_mean_prob_report_content(tmp_path):
    run(["classical-toy"], tmp_path)
    task = next(t for t in report(tmp_path, "classical-toy")["tasks"] if t["task"] == "mean-prob")
    first = task["queries"][0]
    assert first["independence"]["means"] == {"M1": "3/4", "M2": "3/4"}
    assert [c["conditional"] for c in first["per_context"]["M2"]] == ["0", "1"]
    assert task["queries"][1]["independence"]["vacuous"]


def test_scenario_loader_rejects_non_injective_extension():
    doc = json.loads((bundled_scenarios()["classical-toy"]).read_text())
    doc["classical"]["extensions"]["S:s1"] = doc["classical"]["extensions"]["S:s0"]
    with pytest.raises(ScenarioError):
        loads(json.dumps(doc))


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ctxprob.cli", "run", "nondistributive", "-o", str(tmp_path), "-q"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr


def test_reports_identical_across_hash_seeds(tmp_path):
    outputs = []
    for hs in ("0", "12345"):
        d = tmp_path / hs
        env = dict(os.environ, PYTHONHASHSEED=hs)
        for name in sorted(bundled_scenarios()):
            subprocess.run([sys.executable, "-m", "ctxprob.cli", "run", name, "-o", str(d), "-q"],
                           check=True, env=env)
        outputs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outputs[0] == outputs[1]

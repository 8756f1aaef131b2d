import json
import shutil
import subprocess
import sys

import jsonschema
import pytest

from indexprop import cli
from indexprop.analysis import analyze
from indexprop.frontend import parse

from helpers import CORPUS_FILES, DATA, ROOT, load
from trace_golden import mismatches

SCHEMA = json.loads((ROOT / "docs" / "report-schema.json").read_text())


@pytest.fixture
def work(tmp_path):
    for p in CORPUS_FILES:
        shutil.copy(p, tmp_path / p.name)
    shutil.copy(DATA / "cg_decrement.knl", tmp_path / "cg_decrement.knl")
    return tmp_path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_analyze_annotate_cg(work, capsys):
    assert run("analyze", work / "cg.knl", "--annotate") == 0
    report = json.loads((work / "cg.knl.report.json").read_text())
    jsonschema.validate(report, SCHEMA)
    loops = {lp["loop"]: lp for lp in report["loops"]}
    assert loops["loop@18"]["decision"] == "parallel"
    assert loops["loop@18"]["rule"] == "MonotonicRanges"
    assert loops["loop@18"]["span"] == [18, 26]
    par = (work / "cg.par.knl").read_text()
    assert "#pragma omp parallel for private(j,j1)" in par
    # the annotated kernel is still a valid kernel with the same loops
    assert [lp.loop_id for lp in parse(par).loops()] == list(loops)
    out = capsys.readouterr().out
    assert "loop@18: parallel (MonotonicRanges)" in out


def test_analyze_out_of_scope_reason(work):
    assert run("analyze", work / "fig3_jmatch.knl") == 0
    report = json.loads((work / "fig3_jmatch.knl.report.json").read_text())
    (lp,) = report["loops"]
    assert lp["decision"] == "unknown"
    assert "no inference rule for subset injectivity" in lp["reason"]


def test_missing_file(tmp_path, capsys):
    assert run("analyze", tmp_path / "missing.knl") == 1
    assert "file not found" in capsys.readouterr().err


def test_parse_error_does_not_abort_batch(work, capsys):
    bad = work / "bad.knl"
    bad.write_text("param N;\nint a[N];\nint i;\nwhile (i < N) { i++; }\n")
    assert run("analyze", bad, work / "fig1_injective.knl", "--report", work / "out") == 1
    err = capsys.readouterr().err
    assert f"{bad}:4:1: while-loops are not supported" in err
    assert (work / "out" / "fig1_injective.knl.report.json").exists()
    assert not (work / "out" / "bad.knl.report.json").exists()


def test_internal_error_exit_code(work, monkeypatch, capsys):
    def boom(program, extra_facts=()):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "analyze", boom)
    assert run("analyze", work / "cg.knl") == 2
    assert "internal error" in capsys.readouterr().err


def test_report_single_path_and_directory(work):
    assert run("analyze", work / "cg.knl", "--report", work / "r.json") == 0
    assert json.loads((work / "r.json").read_text())["schema_version"] == 1
    files = [work / p.name for p in CORPUS_FILES]
    assert run("analyze", *files, "--report", work / "reports") == 0
    for p in CORPUS_FILES:
        jsonschema.validate(json.loads((work / "reports" / f"{p.name}.report.json").read_text()), SCHEMA)


def test_reports_are_byte_identical(work):
    files = [work / p.name for p in CORPUS_FILES]
    assert run("analyze", *files, "--report", work / "a") == 0
    assert run("analyze", *files, "--report", work / "b", "--jobs", "1") == 0
    for p in CORPUS_FILES:
        name = f"{p.name}.report.json"
        assert (work / "a" / name).read_bytes() == (work / "b" / name).read_bytes()


def test_report_keys_sorted(work):
    run("analyze", work / "cg.knl")
    text = (work / "cg.knl.report.json").read_text()
    data = json.loads(text)
    assert json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n" == text


def test_trace_aggregation_golden(work, capsys):
    assert run("analyze", work / "cg.knl", "--trace-aggregation") == 0
    trace = [line for line in capsys.readouterr().out.splitlines() if line.startswith("Phase")]
    assert mismatches(trace) == []
    heads = [line.split(":")[0] for line in trace]
    assert heads[:6] == ["Phase 1 (3)", "Phase 2 (3)", "Phase 1 (1)", "Phase 2 (1)", "Phase 1 (13)", "Phase 2 (13)"]


def test_golden_rejects_wrong_trace():
    assert mismatches(["Phase 2 (13): rowptr: [1:ROWLEN], Injective"]) != []


def test_explain(work, capsys):
    assert run("analyze", work / "cg.knl", "--explain", "loop@18") == 0
    out = capsys.readouterr().out
    assert "loop@18: parallel via MonotonicRanges" in out
    assert "using rowptr: [1:ROWLEN], Monotonic_inc" in out
    assert run("analyze", work / "cg.knl", "--explain", "loop@99") == 1


def test_validate_ok(work, capsys):
    assert run("validate", work / "fig1_injective.knl", work / "fig2a_rowstr.knl", "--trials", "5", "--seed", "7") == 0
    out = capsys.readouterr().out
    assert "fig1_injective.knl: ok (5 trials" in out


def test_validate_zero_trials_warns(work, capsys):
    assert run("validate", work / "cg.knl", "--trials", "0") == 0
    assert "warning" in capsys.readouterr().err


def test_validate_failure_prints_seed(work, capsys):
    # the mutated kernel indexes below zero on some inputs
    assert run("validate", work / "cg_decrement.knl", "--trials", "3", "--seed", "0") == 1
    err = capsys.readouterr().err
    assert "FAIL" in err and "seed 0 trial 2" in err and "out-of-bounds" in err


def test_validate_param_override(work, capsys):
    assert run("validate", work / "cg.knl", "--trials", "2", "--params", "ROWLEN=4,COLUMNLEN=5") == 0
    assert run("validate", work / "cg.knl", "--trials", "1", "--params", "ROWLEN") == 1


def test_oracle_run_json(work, capsys):
    assert run("oracle", "run", work / "cg.knl", "--param", "ROWLEN=3", "--param", "COLUMNLEN=4",
               "--seed", "2", "--dump", "json") == 0
    data = json.loads(capsys.readouterr().out)
    assert data["params"] == {"COLUMNLEN": 4, "ROWLEN": 3}
    rp = data["memory"]["rowptr"]
    assert len(rp) == 4 and rp == sorted(rp)


def test_oracle_run_text_and_errors(work, capsys):
    assert run("oracle", "run", work / "fig1_injective.knl", "--param", "nelt=3") == 0
    assert "nelt = 3" in capsys.readouterr().out
    assert run("oracle", "run", work / "nope.knl") == 1


def test_module_entry_point(work):
    r = subprocess.run([sys.executable, "-m", "indexprop", "analyze", str(work / "fig1_injective.knl")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "loop@1: parallel (InjectiveWrite)" in r.stdout


def test_corpus_expectations_met():
    for p in CORPUS_FILES:
        a = analyze(load(p.name))
        for lp in a.program.loops():
            if lp.expect:
                assert a.verdicts[lp.loop_id].decision == lp.expect, (p.name, lp.loop_id)

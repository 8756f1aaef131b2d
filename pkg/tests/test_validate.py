from indexprop.analysis import analyze
from indexprop.facts import FactEntry
from indexprop.frontend import parse
from indexprop.symbolic import Property, SymRange, lit, var
from indexprop.validate import check_fact, validate_program

from helpers import load

FORCED = FactEntry("rowptr", SymRange(lit(1), var("ROWLEN")), prop=Property.Monotonic_inc, rule="injected")


def test_decrement_kernel_has_no_monotonic_fact():
    a = analyze(load("cg_decrement.knl"))
    assert not [f for f in a.facts if f.array == "rowptr" and f.prop is not None]
    assert a.verdicts["loop@18"].decision == "unknown"


def test_injected_fact_is_refuted():
    program = load("cg_decrement.knl")
    rep = validate_program(program, trials=4, seed=0, extra_facts=[FORCED])
    msgs = [f.message for f in rep.failures]
    assert any("rowptr: [1:ROWLEN], Monotonic_inc: counterexample" in m for m in msgs), msgs


def test_injected_fact_makes_false_parallel_claim_detectable():
    """Feeding the wrong fact to the analysis yields a parallel verdict the oracle refutes."""
    program = load("cg_decrement.knl")
    a = analyze(program, [FORCED])
    assert a.verdicts["loop@18"].decision == "parallel"
    rep = validate_program(program, trials=12, seed=0, extra_facts=[FORCED], analysis=a)
    assert not rep.ok
    assert any("counterexample" in f.message or "out-of-bounds" in f.message for f in rep.failures)


def test_check_fact_messages():
    f = FactEntry("x", SymRange(lit(1), var("N")), prop=Property.Monotonic_inc)
    assert check_fact(f, {"x": [0, 1, 1, 3]}, {"N": 3}) is None
    msg = check_fact(f, {"x": [0, 2, 1, 3]}, {"N": 3})
    assert msg.endswith("counterexample x[1]=2, x[2]=1")
    g = FactEntry("x", SymRange(lit(0), var("N")), value=SymRange(lit(0), lit(2)))
    assert "x[3] = 3 not in [0:2]" in check_fact(g, {"x": [0, 2, 1, 3]}, {"N": 3})
    h = FactEntry("x", SymRange(lit(0), var("N") + 1), value=SymRange(lit(0), lit(2)))
    assert "outside the array" in check_fact(h, {"x": [0, 2, 1, 3]}, {"N": 3})


def test_serial_verdict_witnessed():
    rep = validate_program(load("serial_invariant.knl"), trials=3)
    assert rep.ok and rep.loops_checked == 1


def test_serial_on_doubled_trip_count():
    program = parse("//@param N 1 1\nparam N;\nint x[1];\nint i;\nfor (i = 0; i < 2 * N; i++) {\n  x[0] = i;\n}\n")
    a = analyze(program)
    assert a.verdicts["loop@5"].decision == "serial"
    assert validate_program(program, trials=3, analysis=a).ok


def test_unwitnessed_serial_reported():
    # the validator itself must reject a serial claim it cannot reproduce
    program = load("fig1_injective.knl")
    a = analyze(program)
    a.verdicts["loop@1"].decision = "serial"
    rep = validate_program(program, trials=3, analysis=a)
    assert any("no conflict was reproduced" in f.message for f in rep.failures)


def test_zero_trials_vacuous():
    rep = validate_program(load("cg.knl"), trials=0)
    assert rep.ok and rep.facts_checked == 0


def test_negative_controls_validate():
    for name in ("scatter_uniform.knl", "scatter_nonstrict.knl", "serial_invariant.knl"):
        rep = validate_program(load(name), trials=20, seed=1)
        assert rep.ok, [str(f) for f in rep.failures]

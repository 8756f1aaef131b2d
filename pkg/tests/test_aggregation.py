"""Phase 1 (per-iteration) and Phase 2 (per-loop) results checked against executions."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indexprop.frontend import parse
from indexprop.oracle import InputGenerator, OracleError, check_property, evaluate, frame_values, interpret
from indexprop.phase2 import sum_closed_form
from indexprop.pipeline import run_pipeline, trace_lines
from indexprop.symbolic import Elem, Property, lit, var

from helpers import CORPUS_FILES, DATA, load

KERNELS = CORPUS_FILES + [DATA / "scatter_nonstrict.knl", DATA / "serial_invariant.knl"]


def _between(v, r, env) -> bool:
    if r.is_bottom:
        return True
    return evaluate(r.lo, **env) <= v <= evaluate(r.hi, **env)


def _fact_holds(f, env) -> bool:
    rng = f.element_range()
    lo, hi = int(evaluate(rng.lo, **env)), int(evaluate(rng.hi, **env))
    values = env["values"][f.array]
    if hi < lo:
        return True
    if f.value is not None:
        return all(_between(values[t], f.value, env) for t in range(lo, hi + 1))
    return check_property(values, lo, hi, f.prop) is None


def _elem_arrays(summary) -> set:
    out = set()
    ranges = list(summary.body.scalars.values())
    ranges += [r for eff in summary.body.arrays.values() for r in eff.writes.values()]
    for r in ranges:
        if not r.is_bottom:
            for e in (r.lo, r.hi):
                out |= {a.array for a in e.all_atoms() if isinstance(a, Elem)}
    return out


def check_run(program, params, memory):
    """Execute ``program`` and check every Phase 1 and Phase 2 result at run time.

    Phase 1 array elements denote values at iteration start, so the arrays
    they mention are copied when each iteration begins.
    """
    result = run_pipeline(program)
    summaries = result.summaries
    elem_arrays = {lid: _elem_arrays(s) for lid, s in summaries.items()}
    lam, big, start = {}, {}, {}
    problems = []

    def env(frame, lid, phase1=False):
        vals = frame_values(frame)
        scal = {k: v for k, v in vals.items() if not isinstance(v, list)}
        return {
            "params": {**scal, **params},
            "values": vals,
            "lam": lam.get(lid),
            "big": big.get(lid),
            "elem_memory": {**vals, **start[lid]} if phase1 else vals,
        }

    def hook(event, where, frame):
        if event == "enter":
            big[where] = dict(frame_values(frame))
        elif event == "iter":
            vals = frame_values(frame)
            lam[where] = dict(vals)
            start[where] = {a: list(vals[a]) for a in elem_arrays[where]}
        elif event == "iter_end":
            s = summaries[where]
            e = env(frame, where, phase1=True)
            vals = e["values"]
            for x, r in s.body.scalars.items():
                if not _between(vals[x], r, e):
                    problems.append(f"{where} phase 1: {x}={vals[x]} not in {r.render(owner=x)}")
            i = vals[s.loop.var]
            for a, eff in s.body.arrays.items():
                if eff.poisoned:
                    continue
                for k, r in eff.writes.items():
                    v = vals[a][i + k]
                    if not _between(v, r, e):
                        problems.append(f"{where} phase 1: {a}[{i + k}]={v} not in {r.render()}")
        elif event == "exit":
            s = summaries[where]
            e = env(frame, where)
            vals = e["values"]
            for x, r in s.scalars.items():
                if not _between(vals[x], r, e):
                    problems.append(f"{where} phase 2: {x}={vals[x]} not in {r.render(owner=x)}")
            for f in s.facts:
                if not _fact_holds(f, e):
                    problems.append(f"{where} phase 2: {f.render()} violated")

    interpret(program, params, memory, hook=hook)
    return problems


@pytest.mark.parametrize("path", KERNELS, ids=lambda p: p.name)
def test_phase_results_hold_at_run_time(path):
    program = load(path.name)
    gen = InputGenerator(11)
    for trial in range(8):
        params, memory = gen.generate(program, trial)
        problems = check_run(program, params, memory)
        assert not problems, (trial, params, problems[:5])


def test_negative_addend_kernel_results_hold_where_defined():
    program = load("cg_decrement.knl")
    gen = InputGenerator(3)
    checked = 0
    for trial in range(6):
        params, memory = gen.generate(program, trial)
        try:
            problems = check_run(program, params, memory)
        except OracleError:
            continue  # the mutated kernel may index out of bounds
        checked += 1
        assert not problems, (trial, params, problems[:5])
    assert checked > 0


# --------------------------------------------------------------------------- #
# closed forms
# --------------------------------------------------------------------------- #


@settings(max_examples=300, deadline=None)
@given(st.integers(-5, 5), st.integers(-10, 10), st.integers(0, 64), st.integers(-10, 10))
def test_sum_closed_form_matches_iteration(c, k, n, lower):
    expect = sum(c * t + k for t in range(lower, lower + n))
    got = sum_closed_form(c, lit(k), lit(n), lit(lower))
    assert got.is_literal and got.const == expect


@pytest.mark.parametrize("c, k", [(0, 1), (1, 0), (2, 3), (-1, 2), (3, -4)])
def test_induction_scalar_is_exact(c, k):
    src = f"param N;\nint i, s;\ns = 5;\nfor (i = 2; i < N + 2; i++) {{\n  s = s + {c} * i + {k};\n}}\n"
    program = parse(src)
    r = run_pipeline(program).summaries["loop@4"].scalars["s"]
    assert r.is_point
    for n in (1, 2, 7, 64):
        m = interpret(program, {"N": n})
        assert evaluate(r.lo, {"N": n}, big={"s": 5}) == m.memory["s"]


def test_conditional_increment_gives_range():
    program = parse("param N;\nint f[N];\nint i, s;\ns = 0;\nfor (i = 0; i < N; i++) {\n"
                    "  if (f[i] > 0) { s = s + 1; }\n}\n")
    res = run_pipeline(program)
    assert res.summaries["loop@5"].scalars["s"].render(owner="s") == "[Λ:Λ+N]"
    assert res.facts.scalars["s"].render() == "[0:N]"


def test_recurrence_gives_monotonic_fact():
    program = parse("param N;\nint f[N], d[N], x[N+1];\nint i, k;\n"
                    "for (k = 0; k < N; k++) {\n  if (f[k] > 0) { d[k] = 1; } else { d[k] = 0; }\n}\n"
                    "x[0] = 0;\nfor (i = 1; i < N + 1; i++) {\n  x[i] = x[i-1] + d[i-1] + 1;\n}\n")
    facts = {(f.array, f.payload, f.rule) for f in run_pipeline(program).facts.facts}
    assert ("x", "StrictMonotonic_inc", "R4") in facts
    assert ("x", "Injective", "derived") in facts


def test_recurrence_with_unknown_sign_gives_no_property():
    program = parse("param N;\nint d[N], x[N+1];\nint i;\nx[0] = 0;\nfor (i = 1; i < N + 1; i++) {\n"
                    "  x[i] = x[i-1] - d[i-1] + 1;\n}\n")
    assert all(f.prop is None for f in run_pipeline(program).facts.facts if f.array == "x")


def test_identity_rule():
    program = parse("param N;\nint x[N];\nint i;\nfor (i = 0; i < N; i++) {\n  x[i] = i;\n}\n")
    (f,) = run_pipeline(program).facts.facts
    assert (f.payload, f.rule, f.subscript.render()) == ("Identity", "R5", "[0:N-1]")


def test_invariant_value_rule():
    program = parse("param N, M;\nint x[N];\nint i;\nfor (i = 0; i < N; i++) {\n  x[i] = M + 2;\n}\n")
    (f,) = run_pipeline(program).facts.facts
    assert f.render() == "x: [0:N-1], [M+2:M+2]" and f.rule == "R1"


def test_overwrite_kills_fact():
    program = parse("param N;\nint x[N], y[N];\nint i;\nfor (i = 0; i < N; i++) {\n  x[i] = i;\n}\n"
                    "x[0] = y[0];\n")
    assert run_pipeline(program).facts.facts == []


def test_trace_lines_format(cg):
    lines = trace_lines(cg.result)
    assert lines[0].startswith("Phase 1 (3): ")
    assert all(line == line.rstrip() for line in lines)
    assert len(lines) == 2 * len(cg.result.summaries)


def test_unknown_trip_count_sign_bottoms_loop_var():
    program = parse("param N, M;\nint i, s;\ns = 0;\nfor (i = N; i < M; i++) {\n  s = s + 1;\n}\n")
    sm = run_pipeline(program).summaries["loop@4"]
    assert sm.scalars["i"].is_bottom and sm.scalars["s"].is_bottom


def test_fraction_free_closed_form():
    e = sum_closed_form(1, lit(0), var("N"), lit(0))
    assert e.evaluate(lambda a: 10) == Fraction(45)
    assert Property.Monotonic_inc.increasing


COMPOSE = """param n;
int a[n];
int k, i;
k = 0;
for (i = 0; i < n; i++) {
  k = k + 1;
}
for (i = 0; i < n; i++) {
  a[i] = k;
}
"""


def test_entry_values_compose_across_sequential_loops():
    p = parse(COMPOSE)
    facts = run_pipeline(p).facts.facts
    assert [f.render() for f in facts] == ["a: [0:n-1], [n:n]"]
    assert facts[0].to_json()["provenance"] == {"loop": "loop@8", "rule": "R1", "composed": True}
    for n in (1, 5, 13):
        assert interpret(p, {"n": n}).memory["a"] == [n] * n

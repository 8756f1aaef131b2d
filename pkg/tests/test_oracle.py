import pytest

from indexprop.frontend import parse
from indexprop.oracle import (
    InputGenerator,
    OracleError,
    check_iteration_independence,
    check_output_independence,
    check_property,
    check_value_range,
    interpret,
    python_source,
)
from indexprop.symbolic import Property

from helpers import CORPUS_FILES, load

CG_FILLER = load("cg.knl")


def test_cg_filler_on_small_matrix():
    a = [[1, 0, 2], [0, 0, 0], [3, 4, 5]]
    m = interpret(CG_FILLER, {"ROWLEN": 3, "COLUMNLEN": 3}, {"a": a})
    assert m.memory["rowsize"] == [2, 0, 3]
    assert m.memory["rowptr"] == [0, 2, 2, 5]
    assert m.memory["column_number"][:5] == [0, 2, 0, 1, 2]


def test_dense_row_reaches_columnlen():
    # a full row gives count == COLUMNLEN, so [0:COLUMNLEN-1] is too narrow
    m = interpret(CG_FILLER, {"ROWLEN": 2, "COLUMNLEN": 4}, {"a": [[1, 2, 3, 4], [0, 5, 0, 0]]})
    assert m.memory["rowsize"] == [4, 1]
    assert check_value_range(m.memory["rowsize"], 0, 1, 0, 4) is None
    assert check_value_range(m.memory["rowsize"], 0, 1, 0, 3) == 0


def test_empty_program_leaves_memory():
    p = parse("param N;\nint a[N];\n")
    m = interpret(p, {"N": 3}, {"a": [4, 5, 6]})
    assert m.memory["a"] == [4, 5, 6]


SCATTER = "param nelt;\nint mt_to_id[nelt], id_to_mt[nelt];\nint miel, iel;\n" \
          "for (miel = 0; miel < nelt; miel++) {\n  iel = mt_to_id[miel];\n  id_to_mt[iel] = miel;\n}\n"


def test_scatter_simulation():
    m = interpret(parse(SCATTER), {"nelt": 3}, {"mt_to_id": [2, 0, 1]})
    assert m.memory["id_to_mt"] == [1, 2, 0]


@pytest.mark.parametrize(
    "values, lo, hi, prop, expect",
    [
        ([0, 2, 2, 5], 0, 3, Property.Monotonic_inc, None),
        ([0, 2, 2, 5], 0, 3, Property.Injective, (1, 2)),
        ([0, 2, 2, 5], 0, 3, Property.StrictMonotonic_inc, (1, 2)),
        ([3], 0, 0, Property.Injective, None),
        ([3], 0, 0, Property.StrictMonotonic_dec, None),
        ([5, 4, 6, 1], 0, 3, Property.Monotonic_dec, (0, 2)),
        ([0, 1, 2, 4], 0, 3, Property.Identity, (3, 3)),
        ([9, 1, 2, 3], 1, 3, Property.Identity, None),
        ([1, 0, 1, 0], 0, 3, Property.Injective, (0, 2)),
        ([3, 1, 2], 0, 2, Property.Monotonic_inc, (0, 1)),
    ],
)
def test_check_property(values, lo, hi, prop, expect):
    assert check_property(values, lo, hi, prop) == expect


def test_check_property_empty_and_out_of_range():
    assert check_property([1, 1], 1, 0, Property.Injective) is None
    with pytest.raises(OracleError):
        check_property([1, 2], 0, 2, Property.Injective)


def test_check_value_range():
    assert check_value_range([0, 3, 7], 0, 2, 0, 7) is None
    assert check_value_range([0, 3, 8], 0, 2, 0, 7) == 2


def test_duplicate_scatter_conflict():
    p = parse("param N;\nint a[N], b[N];\nint i;\nfor (i = 0; i < N; i++) {\n  a[b[i]] = i;\n}\n")
    c = check_output_independence(p, "loop@4", {"N": 3}, {"b": [0, 0, 1]})
    assert (c.iter1, c.iter2, c.array, c.index) == (0, 1, "a", 0)
    assert check_output_independence(p, "loop@4", {"N": 3}, {"b": [2, 0, 1]}) is None


def test_read_write_conflict_detected():
    p = parse("param N;\nint a[N+1];\nint i;\nfor (i = 0; i < N; i++) {\n  a[i] = a[i+1];\n}\n")
    assert check_output_independence(p, "loop@4", {"N": 3}) is None
    c = check_iteration_independence(p, "loop@4", {"N": 3})
    assert c is not None and c.kind != "output"


def test_cg_product_loop_independent_on_generated_inputs():
    gen = InputGenerator(2)
    for trial in range(8):
        params, mem = gen.generate(CG_FILLER, trial)
        assert check_output_independence(CG_FILLER, "loop@18", params, mem) is None


def test_rowstr_loop_independent_on_generated_inputs():
    p = load("fig2a_rowstr.knl")
    gen = InputGenerator(2)
    for trial in range(8):
        params, mem = gen.generate(p, trial)
        assert check_iteration_independence(p, "loop@1", params, mem) is None


@pytest.mark.parametrize("name", ["fig2b_nzloc.knl", "fig3_jmatch.knl", "fig4_blk.knl",
                                  "fig5_tree.knl", "fig6_mt_to_id.knl"])
def test_out_of_scope_kernels_are_dynamically_independent(name):
    """The loops the analysis cannot prove are independent on every generated input."""
    p = load(name)
    gen = InputGenerator(4)
    for trial in range(25):
        params, mem = gen.generate(p, trial)
        assert check_output_independence(p, "loop@1", params, mem) is None, (trial, params)


def test_documented_dynamic_properties():
    gen = InputGenerator(9)
    for trial in range(20):
        # non-negative entries of jmatch are injective
        p = load("fig3_jmatch.knl")
        params, mem = gen.generate(p, trial)
        sub = [v for v in mem["jmatch"] if v >= 0]
        assert check_property(sub, 0, len(sub) - 1, Property.Injective) is None
        # Blk: r is non-decreasing and p is injective
        p = load("fig4_blk.knl")
        params, mem = gen.generate(p, trial)
        assert check_property(mem["r"], 0, len(mem["r"]) - 1, Property.Monotonic_inc) is None
        assert check_property(mem["p"], 0, len(mem["p"]) - 1, Property.Injective) is None
        # nzloc-corrected row starts never decrease
        p = load("fig2b_nzloc.knl")
        params, mem = gen.generate(p, trial)
        n = params["nrows"]
        lo = [mem["rowstr"][j] - (mem["nzloc"][j - 1] if j else 0) for j in range(n)]
        hi = [mem["rowstr"][j + 1] - mem["nzloc"][j] for j in range(n)]
        assert all(hi[j] <= lo[j + 1] for j in range(n - 1))
        # tree blocks: front composed with action is injective
        p = load("fig5_tree.knl")
        params, mem = gen.generate(p, trial)
        starts = [mem["front"][mem["action"][k]] for k in range(params["num_refine"])]
        assert check_property(starts, 0, len(starts) - 1, Property.Injective) is None
        # mt_to_id: subscripts of both branches together are injective
        p = load("fig6_mt_to_id.knl")
        params, mem = gen.generate(p, trial)
        subs = []
        for miel in range(params["nelt"]):
            block = mem["front"][miel] - (1 if mem["ich"][mem["mt_to_id_old"][miel]] == 4 else 0)
            subs.append(miel + 7 * block)
        assert check_property(subs, 0, len(subs) - 1, Property.Injective) is None


def test_generator_csr_validity():
    gen = InputGenerator(0)
    for trial in range(12):
        params, mem = gen.generate(CG_FILLER, trial)
        nnz = sum(v != 0 for row in mem["a"] for v in row)
        m = interpret(CG_FILLER, params, mem)
        assert m.memory["rowptr"][params["ROWLEN"]] == nnz


def test_generator_covers_bounds_and_zero_matrix():
    gen = InputGenerator(0)
    p0, m0 = gen.generate(CG_FILLER, 0)
    p1, _ = gen.generate(CG_FILLER, 1)
    assert p0 == {"ROWLEN": 1, "COLUMNLEN": 1} and p1 == {"ROWLEN": 200, "COLUMNLEN": 200}
    assert all(v == 0 for row in m0["a"] for v in row)


def test_generator_is_deterministic():
    for seed in (0, 7):
        a = InputGenerator(seed).generate(CG_FILLER, 5)
        b = InputGenerator(seed).generate(CG_FILLER, 5)
        assert a == b
        ma = interpret(CG_FILLER, a[0], a[1], trace=("loop@18",))
        mb = interpret(CG_FILLER, b[0], b[1], trace=("loop@18",))
        assert ma.memory == mb.memory and ma.trace == mb.trace
    assert InputGenerator(0).generate(CG_FILLER, 5) != InputGenerator(1).generate(CG_FILLER, 5)


def test_param_ranges_must_be_positive():
    p = parse("//@param N 0 4\nparam N;\nint a[N];\n")
    with pytest.raises(OracleError):
        InputGenerator(0).generate(p, 0)


def test_out_of_bounds_trapped():
    p = parse("param N;\nint a[N];\nint i;\nfor (i = 0; i <= N; i++) {\n  a[i] = 1;\n}\n")
    with pytest.raises(OracleError, match="out-of-bounds"):
        interpret(p, {"N": 3})
    q = parse("param N;\nint a[N];\nint i;\nfor (i = 0; i < N; i++) {\n  a[i - 1] = 1;\n}\n")
    with pytest.raises(OracleError, match="out-of-bounds"):
        interpret(q, {"N": 3})


def test_mutated_kernel_runs_off_the_array():
    p = load("cg_decrement.knl")
    a = [[0, 0, 0], [0, 0, 0], [1, 1, 1]]
    with pytest.raises(OracleError):
        interpret(p, {"ROWLEN": 3, "COLUMNLEN": 3}, {"a": a})


def test_overflow_trapped():
    p = parse("param N;\nint i, s;\ns = 1;\nfor (i = 0; i < N; i++) {\n  s = s * 2;\n}\n")
    assert interpret(p, {"N": 62}).memory["s"] == 2 ** 62
    with pytest.raises(OracleError, match="overflow"):
        interpret(p, {"N": 63})


def test_uninitialised_modes():
    p = parse("param N;\nint a[N], b[N];\nint i;\nfor (i = 0; i < N; i++) {\n  a[i] = b[i] + 1;\n}\n")
    assert interpret(p, {"N": 2}).memory["a"] == [1, 1]
    with pytest.raises(OracleError, match="uninitialised"):
        interpret(p, {"N": 2}, uninit="error")


def test_trace_records_loop_instances():
    p = parse("param N;\nint a[N*N];\nint i, j;\nfor (i = 0; i < N; i++) {\n  for (j = 0; j < N; j++) {\n"
              "    a[i*1 + j] = 0;\n  }\n}\n")
    m = interpret(p, {"N": 2}, trace=("loop@5",))
    assert {(t[1], t[2]) for t in m.trace} == {(0, 0), (0, 1), (1, 0), (1, 1)}
    # a location written in two instances of the inner loop is not a conflict of that loop
    assert check_output_independence(p, "loop@5", {"N": 2}) is None


def test_python_source_is_inspectable():
    src = python_source(CG_FILLER)
    assert "def " in src and "v_rowptr" in src


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.name)
def test_corpus_runs_on_generated_inputs(path):
    p = load(path.name)
    gen = InputGenerator(3)
    for trial in range(4):
        params, mem = gen.generate(p, trial)
        interpret(p, params, mem)

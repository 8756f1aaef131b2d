import pytest

from indexprop.analysis import analyze
from indexprop.cemit import compile_and_run, compiler, openmp_available, to_c
from indexprop.frontend import parse
from indexprop.oracle import InputGenerator, interpret

from helpers import load

needs_cc = pytest.mark.skipif(compiler() is None, reason="no C compiler")
needs_omp = pytest.mark.skipif(not openmp_available(), reason="no OpenMP-capable C compiler")


def _parse_output(text):
    out, cur = {}, None
    for line in text.splitlines():
        if line and not line.lstrip("-").replace(".", "").isdigit() and not line.startswith(("0x", "-0x")):
            cur = line
            out[cur] = []
        else:
            out[cur].append(line)
    return out


def test_pragmas_for_cg():
    a = analyze(load("cg.knl"))
    # loop@25 is parallel too, but nested inside the annotated loop@18
    assert a.verdicts["loop@25"].decision == "parallel"
    assert a.pragmas() == {"loop@18": "#pragma omp parallel for private(j,j1)"}


def test_c_source_shape():
    p = load("cg.knl")
    params, mem = InputGenerator(0).generate(p, 2)
    src = to_c(p, params, mem, {"loop@18": "#pragma omp parallel for private(j,j1)"})
    assert "#define ROWLEN" in src
    assert "#pragma omp parallel for private(j,j1)" in src
    assert "#line" not in src


@needs_cc
def test_serial_c_matches_oracle():
    p = parse("param N;\nint a[N], b[N+1];\nint i;\nb[0] = 0;\nfor (i = 0; i < N; i++) {\n"
              "  b[i+1] = b[i] + a[i];\n}\n")
    m = interpret(p, {"N": 4}, {"a": [3, 1, 4, 1]})
    got = _parse_output(compile_and_run(to_c(p, {"N": 4}, {"a": [3, 1, 4, 1]})))
    assert [int(x) for x in got["b"]] == m.memory["b"]


@needs_omp
@pytest.mark.parametrize("trial", [1, 2, 3])
def test_annotated_cg_matches_serial(trial):
    p = load("cg.knl")
    a = analyze(p)
    params, mem = InputGenerator(7).generate(p, trial)
    serial = compile_and_run(to_c(p, params, mem))
    parallel = compile_and_run(to_c(p, params, mem, a.pragmas()), openmp=True, threads=4)
    assert serial == parallel
    oracle = interpret(p, params, mem).memory
    assert [int(x) for x in _parse_output(serial)["rowptr"]] == oracle["rowptr"]

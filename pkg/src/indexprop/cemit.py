"""Transliteration of a kernel plus concrete inputs into a standalone C program.

The program runs the kernel once and prints its arrays: integers in
decimal, floats as hex (``%a``) so outputs can be compared bit-exactly.
"""

from __future__ import annotations

import shutil
import subprocess
import tempfile
from pathlib import Path
from typing import Dict, Mapping, Optional

from .frontend.ast import Program
from .frontend.printer import _Writer
from .oracle import fresh_memory, shapes


def _c_value(v, kind: str) -> str:
    if kind == "float":
        return repr(float(v))
    return f"{int(v)}LL"


def _initializer(v, kind: str) -> str:
    if isinstance(v, list):
        return "{" + ", ".join(_initializer(x, kind) for x in v) + "}"
    return _c_value(v, kind)


def to_c(program: Program, params: Dict[str, int], memory: Optional[Dict[str, object]] = None,
         pragmas: Optional[Mapping[str, str]] = None, print_scalars: bool = False) -> str:
    """C source running ``program`` on ``memory``; ``pragmas`` maps loop ids to pragma lines.

    Scalars are not printed by default: loop indices and private scalars
    have unspecified values after an OpenMP loop.
    """
    mem = fresh_memory(program, params, "zero", memory)
    out = ["#include <stdio.h>", ""]
    for p in program.params:
        out.append(f"#define {p} {params[p]}LL")
    out.append("")
    for name, shape in shapes(program, params).items():
        kind = program.decl(name).kind
        ctype = "double" if kind == "float" else "long long"
        dims = "".join(f"[{max(n, 1)}]" for n in shape)
        if shape and 0 in shape:
            out.append(f"static {ctype} {name}{dims};")
        else:
            out.append(f"static {ctype} {name}{dims} = {_initializer(mem[name], kind)};")
    w = _Writer(pragmas or {})
    w.block(program.body, 1)
    out.append("")
    out.append("static void kernel(void) {")
    out.extend(line for line in w.lines if not line.startswith("#line"))
    out.append("}")
    out.append("")
    out.append("int main(void) {")
    out.append("    kernel();")
    for name, shape in shapes(program, params).items():
        if not shape and not print_scalars:
            continue
        kind = program.decl(name).kind
        fmt = "%a" if kind == "float" else "%lld"
        idx = "".join(f"[i{k}]" for k in range(len(shape)))
        out.append(f'    printf("{name}\\n");')
        body = f'printf("{fmt}\\n", {name}{idx});'
        for k in reversed(range(len(shape))):
            body = f"for (long long i{k} = 0; i{k} < {shape[k]}; i{k}++) {{ {body} }}"
        out.append(f"    {{ {body} }}")
    out.append("    return 0;")
    out.append("}")
    return "\n".join(out) + "\n"


def compiler() -> Optional[str]:
    for cc in ("gcc", "cc", "clang"):
        path = shutil.which(cc)
        if path:
            return path
    return None


def openmp_available() -> bool:
    cc = compiler()
    if cc is None:
        return False
    with tempfile.TemporaryDirectory() as d:
        src = Path(d) / "t.c"
        src.write_text("#include <omp.h>\nint main(void){return omp_get_max_threads() > 0 ? 0 : 1;}\n")
        r = subprocess.run([cc, "-fopenmp", str(src), "-o", str(Path(d) / "t")], capture_output=True)
        return r.returncode == 0


def compile_and_run(source: str, openmp: bool = False, threads: int = 4) -> str:
    """Compile ``source`` with the system C compiler and return its stdout."""
    cc = compiler()
    if cc is None:
        raise RuntimeError("no C compiler found")
    with tempfile.TemporaryDirectory() as d:
        src = Path(d) / "k.c"
        exe = Path(d) / "k"
        src.write_text(source)
        flags = ["-O2", "-fopenmp"] if openmp else ["-O2"]
        r = subprocess.run([cc, *flags, str(src), "-o", str(exe)], capture_output=True, text=True)
        if r.returncode != 0:
            raise RuntimeError(f"compilation failed:\n{r.stderr}")
        env = {"OMP_NUM_THREADS": str(threads), "PATH": "/usr/bin:/bin"}
        r = subprocess.run([str(exe)], capture_output=True, text=True, env=env, check=True)
        return r.stdout

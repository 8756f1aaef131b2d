"""Command-line driver: ``indexprop analyze | validate | oracle run``.

Exit codes: 0 success, 1 diagnostics or failed checks, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .analysis import analyze
from .frontend.parser import KernelError, parse_file
from .oracle import InputGenerator, OracleError, interpret
from .validate import validate_program

EXIT_OK, EXIT_DIAG, EXIT_INTERNAL = 0, 1, 2


@dataclass
class Config:
    annotate: bool = False
    report: Optional[str] = None  # path (one file) or directory (several)
    trace_aggregation: bool = False
    explain: Optional[str] = None
    trials: int = 100
    seed: int = 0
    params: Dict[str, int] = field(default_factory=dict)
    jobs: int = 4


@dataclass
class FileResult:
    path: str
    code: int
    out: List[str] = field(default_factory=list)
    err: List[str] = field(default_factory=list)


def parse_assignments(items: Sequence[str]) -> Dict[str, int]:
    out = {}
    for item in items or ():
        for part in item.split(","):
            if not part:
                continue
            key, sep, value = part.partition("=")
            if not sep:
                raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {part!r}")
            out[key.strip()] = int(value)
    return out


def _report_path(path: str, cfg: Config, many: bool) -> Path:
    if cfg.report is None:
        return Path(path + ".report.json")
    if many:
        return Path(cfg.report) / (Path(path).name + ".report.json")
    return Path(cfg.report)


def _load(path: str, res: FileResult):
    if not Path(path).is_file():
        res.err.append(f"{path}: file not found")
        res.code = EXIT_DIAG
        return None
    try:
        return parse_file(path)
    except KernelError as exc:
        res.err.extend(d.format(exc.filename) for d in exc.diagnostics)
        res.code = EXIT_DIAG
        return None


def _guard(fn):
    def run(path: str, cfg: Config, many: bool) -> FileResult:
        res = FileResult(path, EXIT_OK)
        try:
            fn(path, cfg, many, res)
        except Exception:  # noqa: BLE001 - reported as internal error
            res.code = EXIT_INTERNAL
            res.err.append(f"{path}: internal error")
            res.err.append(traceback.format_exc().rstrip())
        return res

    return run


@_guard
def _analyze_one(path: str, cfg: Config, many: bool, res: FileResult) -> None:
    program = _load(path, res)
    if program is None:
        return
    result = analyze(program)
    if cfg.explain is not None:
        if cfg.explain not in result.verdicts:
            res.err.append(f"{path}: no loop {cfg.explain} (loops: {', '.join(result.verdicts)})")
            res.code = EXIT_DIAG
            return
    report = result.report()
    out = _report_path(path, cfg, many)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    if cfg.annotate:
        par = Path(str(Path(path).with_suffix("")) + ".par.knl")
        par.write_text(result.annotated())
    if cfg.trace_aggregation:
        res.out.extend(result.trace())
    for lid, v in result.verdicts.items():
        rule = f" ({v.rule})" if v.rule else ""
        peel = " [first iteration peeled]" if v.peeled else ""
        why = f": {v.reason}" if v.reason else ""
        res.out.append(f"{path} {lid}: {v.decision}{rule}{peel}{why}")
    if cfg.explain is not None:
        res.out.append(result.verdicts[cfg.explain].explain())


@_guard
def _validate_one(path: str, cfg: Config, many: bool, res: FileResult) -> None:
    program = _load(path, res)
    if program is None:
        return
    rep = validate_program(program, cfg.trials, cfg.seed, cfg.params)
    for f in rep.failures:
        res.err.append(f"FAIL {f}")
    status = "ok" if rep.ok else "FAILED"
    res.out.append(
        f"{path}: {status} ({rep.trials} trials, {rep.facts_checked} fact checks, "
        f"{rep.loops_checked} loop verdicts checked)"
    )
    if not rep.ok:
        res.code = EXIT_DIAG


def _run_files(fn, paths: Sequence[str], cfg: Config) -> int:
    many = len(paths) > 1
    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        results = list(pool.map(lambda p: fn(p, cfg, many), paths))
    code = EXIT_OK
    for r in results:
        for line in r.out:
            print(line)
        for line in r.err:
            print(line, file=sys.stderr)
        code = max(code, r.code)
    return code


def cmd_analyze(args) -> int:
    cfg = Config(
        annotate=args.annotate,
        report=args.report,
        trace_aggregation=args.trace_aggregation,
        explain=args.explain,
        jobs=args.jobs,
    )
    return _run_files(_analyze_one, args.files, cfg)


def cmd_validate(args) -> int:
    cfg = Config(trials=args.trials, seed=args.seed, params=parse_assignments(args.params), jobs=args.jobs)
    if cfg.trials == 0:
        print("warning: --trials 0, nothing is checked", file=sys.stderr)
    return _run_files(_validate_one, args.files, cfg)


def _preview(v, limit: int = 16) -> str:
    if not isinstance(v, list):
        return str(v)
    items = ", ".join(_preview(x, 4) for x in v[:limit])
    more = f", ... ({len(v)} elements)" if len(v) > limit else ""
    return f"[{items}{more}]"


def cmd_oracle_run(args) -> int:
    res = FileResult(args.file, EXIT_OK)
    program = _load(args.file, res)
    if program is None:
        for line in res.err:
            print(line, file=sys.stderr)
        return res.code
    params, memory = InputGenerator(args.seed).generate(program, args.trial, parse_assignments(args.params))
    try:
        m = interpret(program, params, memory, uninit=args.uninit)
    except OracleError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_DIAG
    if args.dump == "json":
        print(json.dumps({"params": m.params, "memory": m.memory}, sort_keys=True))
    else:
        for k, v in sorted(m.params.items()):
            print(f"{k} = {v}")
        for k, v in m.memory.items():
            print(f"{k} = {_preview(v)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="indexprop", description="Index-array property analysis for loop parallelization.")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="derive facts and classify loops")
    a.add_argument("files", nargs="+")
    a.add_argument("--annotate", action="store_true", help="write <file>.par.knl with OpenMP pragmas")
    a.add_argument("--report", metavar="PATH", help="report path (a directory when several files are given)")
    a.add_argument("--trace-aggregation", action="store_true", help="print Phase 1/Phase 2 results per loop")
    a.add_argument("--explain", metavar="LOOP_ID", help="print the proof trace of one loop")
    a.add_argument("--jobs", type=int, default=4)
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="check facts and verdicts against the oracle")
    v.add_argument("files", nargs="+")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--params", "--param", action="append", default=[], metavar="K=V",
                   help="fix parameter values (repeatable)")
    v.add_argument("--jobs", type=int, default=4)
    v.set_defaults(func=cmd_validate)

    o = sub.add_parser("oracle", help="reference interpreter")
    osub = o.add_subparsers(dest="oracle_command", required=True)
    r = osub.add_parser("run", help="run a kernel on generated inputs")
    r.add_argument("file")
    r.add_argument("--param", "--params", dest="params", action="append", default=[], metavar="K=V")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trial", type=int, default=2, help="generator trial number (0: low bounds, 1: high bounds)")
    r.add_argument("--uninit", choices=("zero", "error"), default="zero")
    r.add_argument("--dump", choices=("json",))
    r.set_defaults(func=cmd_oracle_run)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAG
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

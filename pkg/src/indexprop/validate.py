"""Differential validation of analysis results against the oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .analysis import Analysis, analyze
from .facts import FactEntry
from .frontend.ast import Program
from .oracle import (
    InputGenerator,
    OracleError,
    _conflicts,
    check_property,
    check_value_range,
    evaluate,
    frame_values,
    interpret,
)
from .symbolic import SymRange


@dataclass
class Failure:
    file: str
    seed: int
    trial: int
    params: Dict[str, int]
    message: str

    def __str__(self) -> str:
        ps = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.file}: seed {self.seed} trial {self.trial} ({ps}): {self.message}"


@dataclass
class ValidationReport:
    file: str
    trials: int
    facts_checked: int = 0
    loops_checked: int = 0
    failures: List[Failure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _bound(e, params) -> int:
    v = evaluate(e, params)
    if v != int(v):
        raise OracleError(f"non-integral bound {e.render()}")
    return int(v)


def check_fact(fact: FactEntry, memory: Dict[str, object], params: Dict[str, int]) -> Optional[str]:
    """None if ``fact`` holds on ``memory``, else a description of the violation."""
    values = memory[fact.array]
    rng = fact.element_range()
    lo, hi = _bound(rng.lo, params), _bound(rng.hi, params)
    if hi >= lo and (lo < 0 or hi >= len(values)):
        return f"{fact.render()}: element range [{lo}:{hi}] outside the array"
    if fact.value is not None:
        vlo, vhi = evaluate(fact.value.lo, params), evaluate(fact.value.hi, params)
        bad = check_value_range(values, lo, hi, vlo, vhi)
        if bad is not None:
            return f"{fact.render()}: {fact.array}[{bad}] = {values[bad]} not in [{vlo}:{vhi}]"
        return None
    pair = check_property(values, lo, hi, fact.prop)
    if pair is not None:
        i, j = pair
        return f"{fact.render()}: counterexample {fact.array}[{i}]={values[i]}, {fact.array}[{j}]={values[j]}"
    return None


def _check_scalar(name: str, r: SymRange, value, params) -> Optional[str]:
    if r.is_bottom:
        return None
    try:
        lo, hi = evaluate(r.lo, params), evaluate(r.hi, params)
    except KeyError:
        return None  # not a closed form over params
    if not lo <= value <= hi:
        return f"scalar {name} = {value} not in {r.render(owner=name)}"
    return None


def validate_program(program: Program, trials: int = 100, seed: int = 0,
                     overrides: Optional[Dict[str, int]] = None,
                     extra_facts: Sequence[FactEntry] = (),
                     analysis: Optional[Analysis] = None) -> ValidationReport:
    """Check every emitted fact and every parallel/serial verdict on generated inputs.

    ``extra_facts`` are checked against the final memory of each run (a test
    hook for facts the analysis did not derive).
    """
    analysis = analysis or analyze(program)
    report = ValidationReport(program.filename, trials)
    gen = InputGenerator(seed)
    timeline = analysis.result.facts.timeline
    parallel = [lid for lid, v in analysis.verdicts.items() if v.decision == "parallel"]
    serial = [lid for lid, v in analysis.verdicts.items() if v.decision == "serial"]
    witnessed = set()
    report.loops_checked = len(parallel) + len(serial)
    for trial in range(trials):
        params, memory = gen.generate(program, trial, overrides)
        problems: List[str] = []
        checked = [0]

        def hook(event, where, frame):
            if event != "stmt":
                return
            snap = timeline[where - 1]
            mem = frame_values(frame)
            for f in snap.facts:
                checked[0] += 1
                msg = check_fact(f, mem, params)
                if msg:
                    problems.append(f"after line {snap.line}: {msg}")
            for x, r in snap.scalars.items():
                msg = _check_scalar(x, r, mem[x], params)
                if msg:
                    problems.append(f"after line {snap.line}: {msg}")

        try:
            m = interpret(program, params, memory, trace=tuple(parallel + serial), hook=hook)
        except OracleError as exc:
            report.failures.append(Failure(program.filename, seed, trial, params, f"oracle error: {exc}"))
            continue
        for f in extra_facts:
            checked[0] += 1
            msg = check_fact(f, m.memory, params)
            if msg:
                problems.append(f"at exit: {msg}")
        for lid in parallel:
            v = analysis.verdicts[lid]
            c = _conflicts(m.trace, lid, True, skip_first=v.peeled)
            if c is not None:
                problems.append(f"{lid} classified parallel but {c}")
        for lid in serial:
            if _conflicts(m.trace, lid, False) is not None:
                witnessed.add(lid)
        report.facts_checked += checked[0]
        for msg in problems:
            report.failures.append(Failure(program.filename, seed, trial, params, msg))
    if trials > 0:
        for lid in serial:
            if lid not in witnessed:
                report.failures.append(
                    Failure(program.filename, seed, -1, {}, f"{lid} classified serial but no conflict was reproduced")
                )
    return report

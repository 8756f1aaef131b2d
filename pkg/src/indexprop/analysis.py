"""Whole-program analysis: facts, loop verdicts and the JSON report."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .dependence import Verdict, classify_loop
from .facts import FactEntry
from .frontend.ast import Program, last_line
from .frontend.printer import annotate, pragma_map
from .pipeline import PipelineResult, run_pipeline

SCHEMA_VERSION = 1


@dataclass
class Analysis:
    program: Program
    result: PipelineResult
    verdicts: Dict[str, Verdict] = field(default_factory=dict)

    @property
    def facts(self) -> List[FactEntry]:
        return list(self.result.facts.facts)

    def trace(self) -> List[str]:
        return self.result.trace()

    def annotated(self) -> str:
        return annotate(self.program, self.verdicts)

    def pragmas(self) -> Dict[str, str]:
        return pragma_map(self.program, self.verdicts)

    def report(self, diagnostics: Sequence[str] = ()) -> dict:
        loops = []
        for lp in self.program.loops():
            v = self.verdicts[lp.loop_id]
            entry = v.to_json()
            entry["span"] = [lp.line, last_line(lp)]
            entry["expect"] = lp.expect
            loops.append(entry)
        return {
            "schema_version": SCHEMA_VERSION,
            "file": self.program.filename,
            "loops": loops,
            "facts": [f.to_json() for f in self.facts],
            "trace": self.trace(),
            "diagnostics": list(diagnostics),
        }


def loop_facts(result: PipelineResult, loop_id: str) -> List[FactEntry]:
    """Facts usable inside ``loop_id``: those about arrays its nest never writes."""
    e = result.entries[loop_id]
    return [f for f in e.facts if f.array not in e.nest_written]


def analyze(program: Program, extra_facts: Sequence[FactEntry] = ()) -> Analysis:
    """Derive facts in program order, then classify every loop."""
    result = run_pipeline(program)
    out = Analysis(program, result)
    for lp in program.loops():
        facts = loop_facts(result, lp.loop_id) + list(extra_facts)
        out.verdicts[lp.loop_id] = classify_loop(lp, program, facts, result.entries[lp.loop_id].scalars)
    return out


def analyze_loop_id(program: Program, loop_id: str, facts: Optional[Sequence[FactEntry]] = None) -> Verdict:
    result = run_pipeline(program)
    if facts is None:
        facts = loop_facts(result, loop_id)
    return classify_loop(program.loop(loop_id), program, facts, result.entries[loop_id].scalars)

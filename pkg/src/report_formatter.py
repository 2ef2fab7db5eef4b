"""
Report formatter for analysis results.

Renders models, cause reports and explanations either as readable text or in
the line-oriented structured form documented in docs/output-format.md.
"""

import logging
from typing import List, Sequence, Tuple

from .analysis import CauseReport, ExplanationReport, GammaCauses
from .grounding import Bounds, GroundProgram, Interpretation
from .model import DEF, Diagnostic
from .solver import AnswerSet

logger = logging.getLogger(__name__)

STRUCTURED_VERSION = 1
TEXT = "text"
STRUCTURED = "structured"
FORMATS = (TEXT, STRUCTURED)


def _header(command: str, bounds: Bounds) -> List[str]:
    return [
        f"wcause-report: {STRUCTURED_VERSION}",
        f"command: {command}",
        f"horizon: {bounds.horizon}",
        f"duration_cap: {bounds.duration_cap}",
    ]


def _cause_set(atoms: Sequence[str]) -> str:
    return "{" + ", ".join(atoms) + "}"


class ReportFormatter:
    """Formats analysis results for the command line and the HTTP surface."""

    @staticmethod
    def format_diagnostics(diagnostics: Sequence[Diagnostic]) -> str:
        """One diagnostic per line, prefixed by its source span."""
        return "".join(f"{d}\n" for d in diagnostics)

    @staticmethod
    def format_models(results: Sequence[Tuple[Interpretation, Sequence[AnswerSet]]], bounds: Bounds, fmt: str = TEXT) -> str:
        """
        Format the answer sets of every interpretation.

        Args:
            results: (interpretation, answer sets) pairs in enumeration order
            bounds: Bounds the interpretations were enumerated under
            fmt: ``text`` or ``structured``

        Returns:
            Rendered answer sets, literals sorted
        """
        if fmt == STRUCTURED:
            lines = _header("models", bounds)
            lines.append("interpretations:")
            for gamma, models in results:
                lines.append(f"  - gamma: {gamma}")
                lines.append(f"    answer_sets: {len(models)}")
                for number, model in enumerate(models, start=1):
                    lines.append(f"    - answer_set: {number}")
                    lines.extend(f"      - {atom.text}" for atom in model.literals if atom.symbol != DEF)
            return "\n".join(lines) + "\n"

        lines = []
        for gamma, models in results:
            lines.append(f"% interpretation {gamma}")
            if not models:
                lines.append("no answer sets")
            for number, model in enumerate(models, start=1):
                lines.append(f"Answer set {number}:")
                lines.append(model.dump().rstrip("\n"))
        return "\n".join(lines) + "\n"

    @staticmethod
    def format_ground(results: Sequence[Tuple[Interpretation, GroundProgram]]) -> str:
        """Ground programs, one rule per line with its provenance."""
        parts = []
        for gamma, program in results:
            parts.append(f"% interpretation {gamma}\n{program.dump()}")
        return "".join(parts)

    @staticmethod
    def _gamma_causes_text(result: GammaCauses) -> List[str]:
        lines = [
            f"under {result.gamma}: change {result.change}",
            f"  candidate inflection points: {', '.join(map(str, result.candidates)) or 'none'}",
            f"  inflection points: {', '.join(map(str, result.points)) or 'none'}",
        ]
        if result.undecided:
            steps = ", ".join(map(str, result.undecided))
            lines.append(f"  undecided (truncated theory not deterministic): {steps}")
        if not result.causes:
            lines.append("  no causes")
        for cause in result.causes:
            lines.append(f"  cause {cause} from {cause.point}: {cause.chain}")
        return lines

    @staticmethod
    def format_causes(report: CauseReport, fmt: str = TEXT, per_interpretation: bool = False) -> str:
        """
        Format a cause report.

        The verdict lists the causes shared by every interpretation that has
        the change. Per-interpretation detail is added when requested, which
        the command line does when the interpretation is pinned.

        Args:
            report: Result of ``analysis.causes``
            fmt: ``text`` or ``structured``
            per_interpretation: Include causes, chains and inflection points per interpretation

        Returns:
            Rendered report
        """
        if fmt == STRUCTURED:
            lines = _header("causes", report.bounds)
            lines.append(f"pattern: {report.pattern}")
            lines.append(f"interpretations: {report.checked}")
            lines.append(f"skipped: {len(report.skipped)}")
            lines.append("verdicts:")
            for verdict in report.verdicts:
                lines.append(f"  - change: {verdict.ordinal + 1}")
                lines.append(f"    interpretations: {verdict.interpretations}")
                lines.append("    causes:")
                lines.extend(f"      - [{', '.join(cause)}]" for cause in verdict.causes)
            if per_interpretation:
                lines.append("results:")
                for result in report.results:
                    lines.append(f"  - gamma: {result.gamma}")
                    lines.append(f"    change: {result.change}")
                    lines.append(f"    candidates: [{', '.join(map(str, result.candidates))}]")
                    lines.append(f"    inflection_points: [{', '.join(map(str, result.points))}]")
                    if result.undecided:
                        lines.append(f"    undecided: [{', '.join(map(str, result.undecided))}]")
                    lines.append("    causes:")
                    for cause in result.causes:
                        atoms = ", ".join(a.text for a in cause.do_atoms)
                        lines.append(f"      - do_atoms: [{atoms}]")
                        lines.append(f"        point: {cause.point}")
                        lines.append(f"        chain: [{cause.chain}]")
            return "\n".join(lines) + "\n"

        lines = [
            f"causes of {report.pattern} within {report.bounds.describe()} "
            f"({report.checked + len(report.skipped)} interpretations: {report.checked} analysed, {len(report.skipped)} skipped)"
        ]
        for verdict in report.verdicts:
            lines.append(f"change #{verdict.ordinal + 1} (shared by the {verdict.interpretations} interpretations with the change):")
            if not verdict.causes:
                lines.append("  no cause holds under every interpretation")
            lines.extend(f"  {_cause_set(cause)}" for cause in verdict.causes)
        if per_interpretation:
            for result in report.results:
                lines.extend(ReportFormatter._gamma_causes_text(result))
        for gamma, reason in report.skipped:
            logger.info(f"skipped {gamma}: {reason}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def format_explanations(report: ExplanationReport, fmt: str = TEXT) -> str:
        """
        Format the explanations of an unexpected observation.

        Args:
            report: Result of ``analysis.explain_observation``
            fmt: ``text`` or ``structured``

        Returns:
            Rendered explanations, followed by the compact range forms
        """
        if fmt == STRUCTURED:
            lines = _header("explain", report.bounds)
            lines.append(f"observation: {report.observation}")
            lines.append("explanations:")
            for explanation in report.explanations:
                lines.append(f"  - gamma: {explanation.gamma}")
                lines.append(f"    support: {explanation.support}")
                lines.append(f"    do_atoms: [{', '.join(a.text for a in explanation.added)}]")
                lines.append(f"    change: {explanation.change if explanation.change else '-'}")
                lines.append("    causes:")
                for cause in explanation.causes:
                    lines.append(f"      - [{', '.join(a.text for a in cause.do_atoms)}]")
            lines.append("compact:")
            lines.extend(f"  - {form}" for form in report.compact)
            return "\n".join(lines) + "\n"

        lines = [f"explanations of {report.observation} within {report.bounds.describe()}"]
        if not report.explanations:
            lines.append("no explanations")
        for explanation in report.explanations:
            lines.append(f"under {explanation.gamma}: {explanation}")
            lines.append(f"  support {explanation.support}")
            if explanation.change is None:
                lines.append("  no change of the observed fluent")
                continue
            causes = "; ".join(str(c) for c in explanation.causes) or "none"
            lines.append(f"  change {explanation.change}, causes {causes}")
        for form in report.compact:
            lines.append(f"compactly: {form}")
        return "\n".join(lines) + "\n"

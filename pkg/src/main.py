"""
Main entry point for the W causal workbench.

Loads .w files and runs one of the commands: check, models, ground, causes,
explain. Reports go to stdout, diagnostics and logging to stderr.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .analysis import causes, explain_observation
from .errors import NoAnswerSet, NotDeterministic, NotUnexpected, ParseFailed, PatternMatchesNoChange, WError
from .grounding import DEFAULT_DURATION_CAP, DEFAULT_HORIZON, Bounds, enumerate_interpretations, ground
from .model import CausalTheory, validate
from .parser import format_theory, parse_files, parse_observation
from .report_formatter import FORMATS, TEXT, ReportFormatter
from .solver import is_deterministic, models_by_interpretation, resource_cap_from_env

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


def parse_gamma(text: str) -> Tuple[Tuple[str, int], ...]:
    """Parse ``k=v[,k=v...]`` into sorted (constant, value) pairs."""
    values = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, value = part.partition("=")
        name = name.strip().lstrip("#")
        if not sep or not name:
            raise argparse.ArgumentTypeError(f"expected name=value, got {part!r}")
        try:
            number = int(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"value of {name} must be a natural number, got {value!r}")
        if number < 0:
            raise argparse.ArgumentTypeError(f"value of {name} must be a natural number, got {number}")
        values[name] = number
    return tuple(sorted(values.items()))


def default_workers() -> int:
    value = os.getenv("W_WORKERS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        logger.warning(f"ignoring non-numeric W_WORKERS={value!r}")
        return 1


@dataclass(frozen=True)
class RunConfig:
    """Everything one command-line run needs."""

    paths: Tuple[Path, ...]
    command: str
    horizon: int = DEFAULT_HORIZON
    duration_cap: int = DEFAULT_DURATION_CAP
    gamma: Tuple[Tuple[str, int], ...] = ()
    output_format: str = TEXT
    dump_ground: bool = False
    dump_models: bool = False
    workers: int = 1
    pattern: Optional[str] = None
    observation: Optional[str] = None
    print_theory: bool = False
    check_determinism: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            paths=tuple(Path(p) for p in args.files),
            command=args.command,
            horizon=args.horizon,
            duration_cap=args.duration_cap,
            gamma=args.gamma or (),
            output_format=args.format,
            dump_ground=args.dump_ground,
            dump_models=args.dump_models,
            workers=args.workers,
            pattern=getattr(args, "pattern", None),
            observation=getattr(args, "observation", None),
            print_theory=getattr(args, "print", False),
            check_determinism=getattr(args, "deterministic", False),
        )

    @property
    def bounds(self) -> Bounds:
        return Bounds(self.horizon, self.duration_cap, self.gamma, resource_cap_from_env())


class Workbench:
    """Runs one command against the theory loaded from the configured files."""

    def __init__(self, config: RunConfig, out=None):
        """
        Initialize the workbench.

        Args:
            config: Parsed command-line configuration
            out: Stream for reports (default: stdout)
        """
        self.config = config
        self.out = out if out is not None else sys.stdout
        self.formatter = ReportFormatter()

    def write(self, text: str) -> None:
        self.out.write(text)

    def load(self) -> CausalTheory:
        """Parse and validate the input files.

        Raises:
            ParseFailed: on syntax errors or structural diagnostics
            OSError: if a file cannot be read
        """
        theory = parse_files(list(self.config.paths))
        diagnostics = validate(theory)
        if diagnostics:
            raise ParseFailed(diagnostics)
        return theory

    def run(self) -> int:
        handler = getattr(self, f"cmd_{self.config.command}")
        return handler()

    def cmd_check(self) -> int:
        """Parse and validate; exit 0 iff there are no diagnostics."""
        try:
            theory = self.load()
        except ParseFailed as e:
            self.write(self.formatter.format_diagnostics(e.errors))
            return EXIT_INVALID
        if self.config.print_theory:
            self.write(format_theory(theory))
        if self.config.check_determinism:
            verdict = is_deterministic(theory, self.config.bounds)
            if not verdict:
                self.write(
                    f"not deterministic under {verdict.offending_gamma}: "
                    f"{verdict.answer_set_count} answer sets\n"
                )
                return NotDeterministic.exit_code
            self.write(f"deterministic: {verdict.checked} interpretations checked, {verdict.skipped} skipped\n")
        logger.info(f"{', '.join(map(str, self.config.paths))}: no diagnostics")
        return EXIT_OK

    def _dump_ground(self, results) -> None:
        if self.config.dump_ground:
            self.write(self.formatter.format_ground([(gamma, program) for gamma, _, program in results]))

    def _dumps(self, results) -> None:
        self._dump_ground(results)
        if self.config.dump_models:
            self.write(self.formatter.format_models([(gamma, models) for gamma, models, _ in results], self.config.bounds))

    def cmd_models(self) -> int:
        """Print the answer sets of every interpretation."""
        theory = self.load()
        bounds = self.config.bounds
        results = models_by_interpretation(theory, bounds)
        self._dump_ground(results)
        if not any(models for _, models, _ in results):
            self.write("no answer sets\n")
            return NoAnswerSet.exit_code
        self.write(
            self.formatter.format_models([(gamma, models) for gamma, models, _ in results], bounds, self.config.output_format)
        )
        return EXIT_OK

    def cmd_ground(self) -> int:
        """Print the ground program of every interpretation."""
        theory = self.load()
        bounds = self.config.bounds
        programs = [(gamma, ground(theory, gamma, bounds)) for gamma in enumerate_interpretations(theory, bounds)]
        self.write(self.formatter.format_ground(programs))
        return EXIT_OK

    def cmd_causes(self) -> int:
        """Print the causes of the changes matching the pattern."""
        theory = self.load()
        bounds = self.config.bounds
        if self.config.dump_ground or self.config.dump_models:
            self._dumps(models_by_interpretation(theory, bounds))
        report = causes(theory, self.config.pattern, bounds, workers=self.config.workers, require_change=False)
        self.write(
            self.formatter.format_causes(report, self.config.output_format, per_interpretation=bool(self.config.gamma))
        )
        if not report.verdicts:
            logger.error(f"Fatal error: {PatternMatchesNoChange(self.config.pattern)}")
            return PatternMatchesNoChange.exit_code
        return EXIT_OK

    def cmd_explain(self) -> int:
        """Print the causal explanations of an unexpected observation."""
        theory = self.load()
        observation = parse_observation(self.config.observation, theory.signature)
        bounds = self.config.bounds
        if self.config.dump_ground or self.config.dump_models:
            extended = theory.with_scenario(theory.scenario.with_facts(observations=[observation]))
            self._dumps(models_by_interpretation(extended, bounds))
        try:
            report = explain_observation(theory, observation, bounds)
        except NotUnexpected as e:
            self.write(f"nothing to explain: {e}\n")
            return NotUnexpected.exit_code
        self.write(self.formatter.format_explanations(report, self.config.output_format))
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--horizon',
        type=int,
        default=DEFAULT_HORIZON,
        help=f'Largest time-step (default: {DEFAULT_HORIZON})'
    )
    common.add_argument(
        '--duration-cap',
        type=int,
        default=DEFAULT_DURATION_CAP,
        help=f'Largest value of a non-step abstract constant (default: {DEFAULT_DURATION_CAP})'
    )
    common.add_argument(
        '--gamma',
        type=parse_gamma,
        help='Pin abstract constants, e.g. t1=0,d1=2'
    )
    common.add_argument(
        '--format',
        choices=FORMATS,
        default=TEXT,
        help='Output format (default: text)'
    )
    common.add_argument('--dump-ground', action='store_true', help='Also print the ground program per interpretation')
    common.add_argument('--dump-models', action='store_true', help='Also print the answer sets per interpretation')
    common.add_argument(
        '--workers',
        type=int,
        default=default_workers(),
        help='Processes for per-interpretation analysis (default: W_WORKERS or 1)'
    )
    common.add_argument('--verbose', action='store_true', help='Log progress')
    common.add_argument('--debug', action='store_true', help='Log everything')

    parser = argparse.ArgumentParser(
        prog='wcause',
        description='Parse, solve and analyse causal theories written in W'
    )
    commands = parser.add_subparsers(dest='command', required=True)

    check = commands.add_parser('check', parents=[common], help='Parse and validate theories')
    check.add_argument('files', nargs='+', help='.w files, read in order')
    check.add_argument('--print', action='store_true', help='Print the theory back in surface syntax')
    check.add_argument('--deterministic', action='store_true', help='Also check determinism per interpretation')

    for name, text in (('models', 'Print answer sets'), ('ground', 'Print ground programs')):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument('files', nargs='+', help='.w files, read in order')

    cause = commands.add_parser('causes', parents=[common], help='Find the causes of a change')
    cause.add_argument('files', nargs='+', help='.w files, read in order')
    cause.add_argument('pattern', help='Fluent or action name, or a ground atom such as "arrived(dest)"')

    explain = commands.add_parser('explain', parents=[common], help='Explain an unexpected observation')
    explain.add_argument('files', nargs='+', help='.w files, read in order')
    explain.add_argument('observation', help='Observation such as "obs(broken,true,3)"')
    return parser


def main(argv: Optional[Sequence[str]] = None):
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )

    try:
        config = RunConfig.from_args(args)
        code = Workbench(config).run()
    except KeyboardInterrupt:
        logger.info("\nInterrupted by user")
        sys.exit(EXIT_INVALID)
    except ParseFailed as e:
        for error in e.errors:
            print(error, file=sys.stderr)
        sys.exit(e.exit_code)
    except WError as e:
        logger.error(f"Fatal error: {e}")
        sys.exit(e.exit_code)
    except OSError as e:
        logger.error(f"Cannot read input: {e}")
        sys.exit(EXIT_IO)
    except ValueError as e:
        logger.error(f"Invalid configuration: {e}")
        sys.exit(EXIT_INVALID)
    sys.exit(code)


if __name__ == '__main__':
    main()

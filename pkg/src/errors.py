"""
Exception hierarchy shared by the parser, grounder, solver and analysis.

Every error carries the exit code the command-line front end maps it to.
"""

from typing import Any, List, Optional


class WError(Exception):
    """Base class for all workbench errors."""

    exit_code = 3

    def __reduce__(self):
        # unpickled from the constructor arguments
        return (self.__class__, getattr(self, "_init_args", self.args))


class ParseFailed(WError, ValueError):
    """Raised when source text cannot be turned into a causal theory."""

    exit_code = 1

    def __init__(self, errors: List[Any]):
        self.errors = list(errors)
        self._init_args = (self.errors,)
        first = str(self.errors[0]) if self.errors else "parse failed"
        more = f" (+{len(self.errors) - 1} more)" if len(self.errors) > 1 else ""
        super().__init__(f"{first}{more}")


class SemanticError(WError, RuntimeError):
    """A well-formed theory whose semantics cannot be analysed as requested."""

    exit_code = 3


class MalformedMechanism(SemanticError):
    """A ground mechanism has a time-dependent head without a time-step."""


class NotDeterministic(SemanticError):
    """A concrete theory has more than one answer set."""

    def __init__(self, gamma: Any = None, count: Optional[int] = None):
        self.gamma = gamma
        self.count = count
        self._init_args = (gamma, count)
        where = f" under {gamma}" if gamma is not None else ""
        super().__init__(f"theory is not deterministic{where}")


class NoAnswerSet(SemanticError):
    """A concrete theory is inconsistent."""

    def __init__(self, gamma: Any = None):
        self.gamma = gamma
        self._init_args = (gamma,)
        where = f" under {gamma}" if gamma is not None else ""
        super().__init__(f"no answer sets{where}")


class NoInterpretation(SemanticError):
    """No interpretation within bounds yields a consistent theory."""


class TargetNotInModel(SemanticError):
    """A proof was requested for an atom the answer set does not contain."""


class TruncatedNotDeterministic(SemanticError):
    """The theory truncated after a candidate step has several answer sets."""

    def __init__(self, step: int, gamma: Any = None):
        self.step = step
        self.gamma = gamma
        self._init_args = (step, gamma)
        super().__init__(f"theory truncated after step {step} is not deterministic")


class AssumptionViolated(SemanticError):
    """An abductive support does not lead to exactly one answer set."""

    def __init__(self, support: Any, count: int):
        self.support = support
        self.count = count
        self._init_args = (support, count)
        super().__init__(f"support {support} yields {count} answer sets, expected exactly one")


class PatternMatchesNoChange(SemanticError):
    """A change pattern matched no change in any interpretation."""

    def __init__(self, pattern: str):
        self.pattern = pattern
        self._init_args = (pattern,)
        super().__init__(f"pattern '{pattern}' matches no change within bounds")


class NotStronglyConsistent(SemanticError):
    """The scenario without the observation already has no regular answer set."""


class NotUnexpected(WError):
    """The observation is consistent with the regular part; nothing to explain."""

    exit_code = 0


class ResourceLimitExceeded(WError):
    """The ground program is larger than the configured atom cap."""

    exit_code = 4

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        self._init_args = (count, cap)
        super().__init__(f"ground program has {count} atoms, above the cap of {cap}")

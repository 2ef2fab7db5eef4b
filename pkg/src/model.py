"""
Core values of a W causal theory.

Holds the sorted signature, terms and atoms, labeled causal mechanisms,
scenarios, the structural checks run by ``validate`` and the principle of
causality. Every value here is an immutable dataclass.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from itertools import product
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from .errors import MalformedMechanism

logger = logging.getLogger(__name__)

BOOLEAN = "boolean"
NAT = "nat"
STEP = "step"
ACTION = "action"
BUILTIN_SORTS = (BOOLEAN, NAT, STEP, ACTION)

OCCURS = "occurs"
AB = "ab"
DEF = "def"
DO = "do"
INIT = "init"
OBS = "obs"
RESERVED_SYMBOLS = frozenset({OCCURS, AB, DEF, DO, INIT, OBS})

RELATIONS = ("=", "!=")
COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


class SymbolKind(str, Enum):
    STATIC = "static"
    ACTION = "action"
    INERTIAL = "inertial"
    TRANSIENT = "transient"
    TIMELESS = "timeless"

    @property
    def is_fluent(self) -> bool:
        return self in (SymbolKind.INERTIAL, SymbolKind.TRANSIENT, SymbolKind.TIMELESS)

    @property
    def time_dependent(self) -> bool:
        return self in (SymbolKind.ACTION, SymbolKind.INERTIAL, SymbolKind.TRANSIENT)


@dataclass(frozen=True)
class SourceSpan:
    """A region of source text; lines and columns are 1-based."""

    file: str
    start_line: int
    start_column: int
    end_line: int
    end_column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_column}"


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Const:
    """An object constant, a ground action term such as flipTo(right), or a label."""

    name: str
    args: Tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Num:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Abstract:
    """A symbolic natural-valued constant fixed only by an interpretation."""

    name: str

    def __str__(self) -> str:
        return f"#{self.name}"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Term"
    right: "Term"

    def __str__(self) -> str:
        prec = _PRECEDENCE[self.op]
        left = str(self.left)
        if isinstance(self.left, BinOp) and _PRECEDENCE[self.left.op] < prec:
            left = f"({left})"
        right = str(self.right)
        if isinstance(self.right, BinOp) and _PRECEDENCE[self.right.op] <= prec:
            right = f"({right})"
        return f"{left} {self.op} {right}"


@dataclass(frozen=True)
class StaticTerm:
    """A static function term used as a value inside arithmetic, e.g. duration(a1)."""

    symbol: str
    args: Tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.symbol
        return f"{self.symbol}({', '.join(str(a) for a in self.args)})"


Term = Union[Const, Num, Var, Abstract, BinOp, StaticTerm]

_PRECEDENCE = {"+": 1, "-": 1, "*": 2}

TRUE = Const("true")
FALSE = Const("false")


def term_variables(term: Term) -> Iterator[str]:
    """Yield variable names of a term in left-to-right order."""
    if isinstance(term, Var):
        yield term.name
    elif isinstance(term, BinOp):
        yield from term_variables(term.left)
        yield from term_variables(term.right)
    elif isinstance(term, (Const, StaticTerm)):
        for arg in term.args:
            yield from term_variables(arg)


def term_abstracts(term: Term) -> Iterator[str]:
    if isinstance(term, Abstract):
        yield term.name
    elif isinstance(term, BinOp):
        yield from term_abstracts(term.left)
        yield from term_abstracts(term.right)
    elif isinstance(term, (Const, StaticTerm)):
        for arg in term.args:
            yield from term_abstracts(arg)


def substitute(
    term: Term,
    variables: Optional[Mapping[str, Term]] = None,
    abstracts: Optional[Mapping[str, int]] = None,
) -> Term:
    """Replace variables and abstract constants; arithmetic is left unevaluated."""
    if isinstance(term, Var):
        if variables and term.name in variables:
            return variables[term.name]
        return term
    if isinstance(term, Abstract):
        if abstracts and term.name in abstracts:
            return Num(abstracts[term.name])
        return term
    if isinstance(term, BinOp):
        return BinOp(term.op, substitute(term.left, variables, abstracts), substitute(term.right, variables, abstracts))
    if isinstance(term, Const) and term.args:
        return Const(term.name, tuple(substitute(a, variables, abstracts) for a in term.args))
    if isinstance(term, StaticTerm):
        return StaticTerm(term.symbol, tuple(substitute(a, variables, abstracts) for a in term.args))
    return term


def evaluate(term: Term) -> int:
    """Evaluate a ground arithmetic term.

    Raises:
        ValueError: if the term is not numeric or not ground.
    """
    if isinstance(term, Num):
        return term.value
    if isinstance(term, BinOp):
        left = evaluate(term.left)
        right = evaluate(term.right)
        if term.op == "+":
            return left + right
        if term.op == "-":
            return left - right
        return left * right
    raise ValueError(f"cannot evaluate non-numeric term {term}")


def normalize_value(term: Term) -> Term:
    """Evaluate arithmetic in a ground term; compound constants are normalized argument-wise."""
    if isinstance(term, BinOp):
        return Num(evaluate(term))
    if isinstance(term, Const) and term.args:
        return Const(term.name, tuple(normalize_value(a) for a in term.args))
    return term


def compare(left: int, op: str, right: int) -> bool:
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise ValueError(f"unknown comparison {op}")


# ---------------------------------------------------------------------------
# Signature


@dataclass(frozen=True)
class Sort:
    name: str
    values: Tuple[str, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class FunctionSymbol:
    """A declared function symbol; surface arity excludes the time-step argument."""

    name: str
    params: Tuple[str, ...] = ()
    value_sort: str = BOOLEAN
    kind: SymbolKind = SymbolKind.STATIC
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def time_dependent(self) -> bool:
        return self.kind.time_dependent


@dataclass(frozen=True)
class Signature:
    """Sorts with their object constants, and the declared function symbols.

    Declarations are kept in source order, duplicates included, so that
    ``validate`` can report them.
    """

    sorts: Tuple[Sort, ...] = ()
    symbols: Tuple[FunctionSymbol, ...] = ()

    @cached_property
    def _sort_index(self) -> Dict[str, Sort]:
        index: Dict[str, Sort] = {}
        for sort in self.sorts:
            index.setdefault(sort.name, sort)
        return index

    @cached_property
    def _symbol_index(self) -> Dict[str, FunctionSymbol]:
        index: Dict[str, FunctionSymbol] = {}
        for symbol in self.symbols:
            index.setdefault(symbol.name, symbol)
        return index

    @cached_property
    def _constant_index(self) -> Dict[str, str]:
        index: Dict[str, str] = {}
        for sort in self.sorts:
            for value in sort.values:
                index.setdefault(value, sort.name)
        return index

    def sort(self, name: str) -> Optional[Sort]:
        return self._sort_index.get(name)

    def symbol(self, name: str) -> Optional[FunctionSymbol]:
        return self._symbol_index.get(name)

    def constant_sort(self, name: str) -> Optional[str]:
        """Sort of an object constant, ``boolean`` for true/false, ``action`` for 0-ary actions."""
        if name in ("true", "false"):
            return BOOLEAN
        if name in self._constant_index:
            return self._constant_index[name]
        symbol = self.symbol(name)
        if symbol is not None and symbol.kind is SymbolKind.ACTION:
            return ACTION
        return None

    def kind_of(self, name: str) -> Optional[SymbolKind]:
        if name == OCCURS:
            return SymbolKind.ACTION
        symbol = self.symbol(name)
        return symbol.kind if symbol else None

    def has_sort(self, name: str) -> bool:
        return name in BUILTIN_SORTS or name in self._sort_index

    def of_kind(self, *kinds: SymbolKind) -> List[FunctionSymbol]:
        return [s for s in self._symbol_index.values() if s.kind in kinds]

    def domain(self, sort_name: str, horizon: int, nat_max: int) -> List[Term]:
        """Finite domain of a sort under the given bounds."""
        if sort_name == BOOLEAN:
            return [TRUE, FALSE]
        if sort_name == STEP:
            return [Num(i) for i in range(horizon + 1)]
        if sort_name == NAT:
            return [Num(i) for i in range(nat_max + 1)]
        if sort_name == ACTION:
            return list(self.ground_actions(horizon, nat_max))
        sort = self.sort(sort_name)
        if sort is None:
            return []
        return [Const(v) for v in sort.values]

    def ground_terms(self, symbol: FunctionSymbol, horizon: int, nat_max: int) -> List[Tuple[Term, ...]]:
        """Every argument tuple of a symbol, in declaration order of its parameter domains."""
        domains = [self.domain(p, horizon, nat_max) for p in symbol.params]
        return [tuple(combo) for combo in product(*domains)]

    def ground_actions(self, horizon: int = 0, nat_max: int = 0) -> List[Const]:
        actions = []
        for symbol in self.of_kind(SymbolKind.ACTION):
            for args in self.ground_terms(symbol, horizon, nat_max):
                actions.append(Const(symbol.name, args))
        return actions

    def belongs(self, value: Term, sort_name: str) -> bool:
        """Whether a ground value term is a member of a sort."""
        if isinstance(value, (Num, Abstract, BinOp, StaticTerm)):
            return sort_name in (NAT, STEP)
        if isinstance(value, Var):
            return True
        if sort_name == ACTION:
            symbol = self.symbol(value.name)
            return symbol is not None and symbol.kind is SymbolKind.ACTION and len(symbol.params) == len(value.args)
        if sort_name == BOOLEAN:
            return value in (TRUE, FALSE)
        sort = self.sort(sort_name)
        return sort is not None and not value.args and value.name in sort.values


# ---------------------------------------------------------------------------
# Atoms, mechanisms, scenarios


@dataclass(frozen=True)
class Atom:
    """e(t̄[, step]) = value or e(t̄[, step]) != value.

    Action atoms use the reserved symbol ``occurs`` with the action term as
    the single argument.
    """

    symbol: str
    args: Tuple[Term, ...] = ()
    step: Optional[Term] = None
    relation: str = "="
    value: Term = TRUE
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __str__(self) -> str:
        if self.symbol == OCCURS:
            action = self.args[0]
            if isinstance(action, Const):
                call = _call(action.name, [str(a) for a in action.args] + [str(self.step)])
            else:
                call = _call(OCCURS, [str(action), str(self.step)])
        else:
            parts = [str(a) for a in self.args]
            if self.step is not None:
                parts.append(str(self.step))
            call = _call(self.symbol, parts)
        if self.relation == "=" and self.value == TRUE:
            return call
        if self.relation == "=" and self.value == FALSE:
            return f"neg {call}"
        return f"{call} {self.relation} {self.value}"

    @property
    def terms(self) -> Tuple[Term, ...]:
        terms = tuple(self.args)
        if self.step is not None:
            terms += (self.step,)
        return terms + (self.value,)

    def variables(self) -> Iterator[str]:
        for term in self.terms:
            yield from term_variables(term)


@dataclass(frozen=True)
class ArithmeticAtom:
    left: Term
    op: str
    right: Term
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"

    def variables(self) -> Iterator[str]:
        yield from term_variables(self.left)
        yield from term_variables(self.right)

    def holds(self) -> bool:
        return compare(evaluate(self.left), self.op, evaluate(self.right))


Literal = Union[Atom, ArithmeticAtom]


def _call(name: str, parts: Sequence[str]) -> str:
    if not parts:
        return name
    return f"{name}({', '.join(parts)})"


@dataclass(frozen=True)
class CausalMechanism:
    """m : head <- body, neg ab(m, step).

    The guard is implicit; ``step`` is the variable (or term) it is
    instantiated at.
    """

    label: Const
    head: Atom
    body: Tuple[Literal, ...] = ()
    step: Term = Var("I")
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def guard(self) -> Atom:
        return Atom(AB, (self.label,), self.step, "=", FALSE)

    @property
    def full_body(self) -> Tuple[Literal, ...]:
        return self.body + (self.guard,)

    @property
    def is_trigger(self) -> bool:
        return self.head.symbol == OCCURS

    def variables(self) -> List[str]:
        seen: Dict[str, None] = {}
        for name in term_variables(self.label):
            seen.setdefault(name)
        for name in self.head.variables():
            seen.setdefault(name)
        for literal in self.body:
            for name in literal.variables():
                seen.setdefault(name)
        for name in term_variables(self.step):
            seen.setdefault(name)
        return list(seen)

    def __str__(self) -> str:
        body = ", ".join(str(b) for b in self.full_body)
        return f"mechanism {self.label} : {self.head} <- {body}."


@dataclass(frozen=True)
class Init:
    symbol: str
    args: Tuple[Term, ...] = ()
    value: Term = TRUE
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def fluent(self) -> Const:
        return Const(self.symbol, self.args)

    def __str__(self) -> str:
        fluent = str(self.fluent)
        if self.value == TRUE:
            return f"init({fluent})"
        if self.value == FALSE:
            return f"init(neg {fluent})"
        return f"init({fluent} = {self.value})"


@dataclass(frozen=True)
class Do:
    action: Const
    step: Term
    positive: bool = True
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __str__(self) -> str:
        sign = "" if self.positive else "neg "
        return f"do({sign}{self.action}, {self.step})"


@dataclass(frozen=True)
class Obs:
    symbol: str
    args: Tuple[Term, ...] = ()
    value: Term = TRUE
    step: Optional[Term] = None
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def fluent(self) -> Const:
        return Const(self.symbol, self.args)

    def __str__(self) -> str:
        parts = [str(self.fluent), str(self.value)]
        if self.step is not None:
            parts.append(str(self.step))
        return f"obs({', '.join(parts)})"


@dataclass(frozen=True)
class Scenario:
    statics: Tuple[Atom, ...] = ()
    constraints: Tuple[ArithmeticAtom, ...] = ()
    inits: Tuple[Init, ...] = ()
    dos: Tuple[Do, ...] = ()
    observations: Tuple[Obs, ...] = ()

    @property
    def abstract_constants(self) -> Tuple[str, ...]:
        names: Set[str] = set()
        for atom in self.statics:
            for term in atom.terms:
                names.update(term_abstracts(term))
        for constraint in self.constraints:
            names.update(term_abstracts(constraint.left))
            names.update(term_abstracts(constraint.right))
        for do in self.dos:
            names.update(term_abstracts(do.step))
        for obs in self.observations:
            if obs.step is not None:
                names.update(term_abstracts(obs.step))
        return tuple(sorted(names))

    def with_facts(self, dos: Iterable[Do] = (), observations: Iterable[Obs] = ()) -> "Scenario":
        return replace(self, dos=self.dos + tuple(dos), observations=self.observations + tuple(observations))

    def __iter__(self) -> Iterator[object]:
        yield from self.statics
        yield from self.constraints
        yield from self.inits
        yield from self.dos
        yield from self.observations


@dataclass(frozen=True)
class CausalTheory:
    """A background theory (signature and mechanisms) paired with a scenario."""

    signature: Signature = field(default_factory=Signature)
    mechanisms: Tuple[CausalMechanism, ...] = ()
    scenario: Scenario = field(default_factory=Scenario)

    def with_scenario(self, scenario: Scenario) -> "CausalTheory":
        return replace(self, scenario=scenario)

    def mechanism(self, name: str) -> Optional[CausalMechanism]:
        for mechanism in self.mechanisms:
            if mechanism.label.name == name:
                return mechanism
        return None


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: Optional[SourceSpan] = None
    severity: str = "error"

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.severity}: {self.message}"


# ---------------------------------------------------------------------------
# Validation


def validate(theory: CausalTheory) -> List[Diagnostic]:
    """Check the structural invariants of a theory.

    Args:
        theory: The theory to check

    Returns:
        One diagnostic per violation, in source order; empty when valid
    """
    diagnostics: List[Diagnostic] = []
    sig = theory.signature
    diagnostics.extend(_validate_signature(sig))

    labels: Dict[Tuple[str, int], CausalMechanism] = {}
    for mechanism in theory.mechanisms:
        key = (mechanism.label.name, len(mechanism.label.args))
        if key in labels:
            diagnostics.append(Diagnostic(f"duplicate mechanism label {mechanism.label.name}", mechanism.span))
        labels.setdefault(key, mechanism)
        diagnostics.extend(_validate_mechanism(mechanism, sig))

    diagnostics.extend(_validate_scenario(theory.scenario, sig))
    return diagnostics


def _validate_signature(sig: Signature) -> List[Diagnostic]:
    diagnostics = []
    seen: Dict[str, str] = {}

    def declare(name: str, what: str, span: Optional[SourceSpan]) -> None:
        if name in seen or name in BUILTIN_SORTS:
            diagnostics.append(Diagnostic(f"duplicate declaration of {name}", span))
        else:
            seen[name] = what

    for sort in sig.sorts:
        declare(sort.name, "sort", sort.span)
        for value in sort.values:
            declare(value, "constant", sort.span)
    for symbol in sig.symbols:
        declare(symbol.name, "symbol", symbol.span)
        if symbol.name in RESERVED_SYMBOLS:
            diagnostics.append(Diagnostic(f"{symbol.name} is reserved", symbol.span))
        for param in symbol.params:
            if not sig.has_sort(param):
                diagnostics.append(Diagnostic(f"unknown sort {param} in declaration of {symbol.name}", symbol.span))
        if not sig.has_sort(symbol.value_sort):
            diagnostics.append(Diagnostic(f"unknown sort {symbol.value_sort} in declaration of {symbol.name}", symbol.span))
        if symbol.kind is SymbolKind.ACTION and symbol.value_sort != BOOLEAN:
            diagnostics.append(Diagnostic(f"action {symbol.name} must have boolean value sort", symbol.span))
    return diagnostics


def _validate_atom(atom: Atom, sig: Signature, span: Optional[SourceSpan]) -> List[Diagnostic]:
    diagnostics = []
    where = atom.span or span
    if atom.symbol in (OCCURS, AB):
        return diagnostics
    symbol = sig.symbol(atom.symbol)
    if symbol is None:
        return [Diagnostic(f"unknown symbol {atom.symbol}", where)]
    if len(atom.args) != len(symbol.params):
        diagnostics.append(Diagnostic(f"{atom.symbol} expects {len(symbol.params)} arguments", where))
    for arg, param in zip(atom.args, symbol.params):
        if isinstance(arg, Const) and not sig.belongs(arg, param):
            diagnostics.append(Diagnostic(f"{arg} is not of sort {param}", where))
    if symbol.time_dependent and atom.step is None:
        diagnostics.append(Diagnostic(f"{atom.symbol} needs a time-step", where))
    if isinstance(atom.value, Const) and not sig.belongs(atom.value, symbol.value_sort):
        diagnostics.append(Diagnostic(f"value {atom.value} is not of sort {symbol.value_sort}", where))
    return diagnostics


def _validate_arithmetic(atom: ArithmeticAtom, span: Optional[SourceSpan]) -> List[Diagnostic]:
    for side in (atom.left, atom.right):
        for term in _subterms(side):
            if isinstance(term, Const):
                return [Diagnostic(f"arithmetic over non-numeric term {term}", atom.span or span)]
    return []


def _subterms(term: Term) -> Iterator[Term]:
    yield term
    if isinstance(term, BinOp):
        yield from _subterms(term.left)
        yield from _subterms(term.right)


def _validate_mechanism(mechanism: CausalMechanism, sig: Signature) -> List[Diagnostic]:
    diagnostics = []
    head = mechanism.head
    kind = sig.kind_of(head.symbol)
    if kind is SymbolKind.STATIC:
        diagnostics.append(Diagnostic("head must be non-static", head.span or mechanism.span))
    diagnostics.extend(_validate_atom(head, sig, mechanism.span))
    for literal in mechanism.body:
        if isinstance(literal, Atom):
            diagnostics.extend(_validate_atom(literal, sig, mechanism.span))
        else:
            diagnostics.extend(_validate_arithmetic(literal, mechanism.span))
    offending = static_causality_violation(mechanism, sig)
    if offending is not None:
        diagnostics.append(
            Diagnostic(f"body atom {offending} does not precede the head of {mechanism.label}", offending.span or mechanism.span)
        )
    return diagnostics


def _validate_scenario(scenario: Scenario, sig: Signature) -> List[Diagnostic]:
    diagnostics = []
    for atom in scenario.statics:
        if sig.kind_of(atom.symbol) is not SymbolKind.STATIC:
            diagnostics.append(Diagnostic(f"{atom.symbol} is not a static", atom.span))
        diagnostics.extend(_validate_atom(atom, sig, None))
    for constraint in scenario.constraints:
        diagnostics.extend(_validate_arithmetic(constraint, None))
    for init in scenario.inits:
        if sig.kind_of(init.symbol) is not SymbolKind.INERTIAL:
            diagnostics.append(Diagnostic(f"init applies only to inertial fluents, not {init.symbol}", init.span))
            continue
        symbol = sig.symbol(init.symbol)
        if isinstance(init.value, Const) and not sig.belongs(init.value, symbol.value_sort):
            diagnostics.append(Diagnostic(f"value {init.value} is not of sort {symbol.value_sort}", init.span))
    for do in scenario.dos:
        if sig.kind_of(do.action.name) is not SymbolKind.ACTION:
            diagnostics.append(Diagnostic(f"do applies only to actions, not {do.action.name}", do.span))
    for obs in scenario.observations:
        kind = sig.kind_of(obs.symbol)
        if kind is None or not kind.is_fluent:
            diagnostics.append(Diagnostic(f"obs applies only to fluents, not {obs.symbol}", obs.span))
        elif kind.time_dependent and obs.step is None:
            diagnostics.append(Diagnostic(f"obs of {obs.symbol} needs a time-step", obs.span))
    return diagnostics


# ---------------------------------------------------------------------------
# Principle of causality


def _linear(term: Term) -> Optional[Tuple[Dict[str, int], int]]:
    """Linear form (coefficients, constant) of a step expression, if it has one."""
    if isinstance(term, Num):
        return {}, term.value
    if isinstance(term, Var):
        return {term.name: 1}, 0
    if isinstance(term, Abstract):
        return {"#" + term.name: 1}, 0
    if isinstance(term, BinOp):
        left = _linear(term.left)
        right = _linear(term.right)
        if left is None or right is None:
            return None
        if term.op in ("+", "-"):
            sign = 1 if term.op == "+" else -1
            coeffs = dict(left[0])
            for name, c in right[0].items():
                coeffs[name] = coeffs.get(name, 0) + sign * c
            return coeffs, left[1] + sign * right[1]
        if not left[0]:
            return {n: c * left[1] for n, c in right[0].items()}, left[1] * right[1]
        if not right[0]:
            return {n: c * right[1] for n, c in left[0].items()}, left[1] * right[1]
    return None


def static_causality_violation(mechanism: CausalMechanism, sig: Signature) -> Optional[Atom]:
    """First body atom that statically cannot precede the head, if any.

    Only differences that do not depend on variables are decided here; the
    rest is rechecked on every ground instance.
    """
    head = mechanism.head
    if head.step is None or sig.kind_of(head.symbol) is SymbolKind.TIMELESS:
        return None
    head_form = _linear(head.step)
    if head_form is None:
        return None
    for literal in mechanism.body:
        if not isinstance(literal, Atom) or literal.step is None:
            continue
        body_form = _linear(literal.step)
        if body_form is None:
            continue
        names = set(head_form[0]) | set(body_form[0])
        if any(body_form[0].get(n, 0) != head_form[0].get(n, 0) for n in names):
            continue
        difference = body_form[1] - head_form[1]
        if literal.symbol == OCCURS and difference >= 0:
            return literal
        if literal.symbol != OCCURS and difference > 0:
            return literal
    return None


# ---------------------------------------------------------------------------
# Shorthand expansion


def _name_part(term: Term) -> str:
    text = str(term)
    return "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in text.replace(" ", ""))


def _fresh_name(term: StaticTerm, taken: Set[str]) -> str:
    base = ".".join([term.symbol] + [_name_part(a) for a in term.args])
    name = base
    suffix = 2
    while name in taken:
        name = f"{base}_{suffix}"
        suffix += 1
    taken.add(name)
    return name


def expand_shorthands(scenario: Scenario) -> Scenario:
    """Replace static terms inside scenario arithmetic by abstract constants.

    A comparison ``f(t) < y`` becomes the static atom ``f(t) = #d`` plus the
    arithmetic atom ``#d < y``. Existing bindings ``f(t) = v`` are reused, so
    applying the expansion twice changes nothing.
    """
    bindings: Dict[Tuple[str, Tuple[Term, ...]], Term] = {}
    for atom in scenario.statics:
        if atom.relation == "=" and isinstance(atom.value, (Num, Abstract)):
            bindings.setdefault((atom.symbol, atom.args), atom.value)
    taken = set(scenario.abstract_constants)
    statics = list(scenario.statics)

    def expand(term: Term, span: Optional[SourceSpan]) -> Term:
        if isinstance(term, StaticTerm):
            key = (term.symbol, term.args)
            if key not in bindings:
                fresh = Abstract(_fresh_name(term, taken))
                bindings[key] = fresh
                statics.append(Atom(term.symbol, term.args, None, "=", fresh, span=span))
                logger.debug(f"expanded {term} into {fresh}")
            return bindings[key]
        if isinstance(term, BinOp):
            return BinOp(term.op, expand(term.left, span), expand(term.right, span))
        return term

    constraints = tuple(
        ArithmeticAtom(expand(c.left, c.span), c.op, expand(c.right, c.span), span=c.span) for c in scenario.constraints
    )
    return replace(scenario, statics=tuple(statics), constraints=constraints)


# ---------------------------------------------------------------------------
# Ground atoms and mechanism instances


def render_ground(term: Term) -> str:
    """Compact rendering of a ground term, without spaces."""
    if isinstance(term, Const):
        if not term.args:
            return term.name
        return f"{term.name}({','.join(render_ground(a) for a in term.args)})"
    if isinstance(term, Abstract):
        return term.name
    return str(term)


def _compact_call(name: str, parts: Sequence[str]) -> str:
    if not parts:
        return name
    return f"{name}({','.join(parts)})"


@dataclass(frozen=True)
class GroundAtom:
    """A ground literal of the logic program.

    For function symbols ``negated`` selects the relation (``!=``); for the
    reserved symbols ab, do, init and obs the value carries the polarity.
    ``def`` atoms have no value.
    """

    symbol: str
    args: Tuple[Term, ...] = ()
    step: Optional[int] = None
    value: Optional[Term] = TRUE
    negated: bool = False

    def __hash__(self) -> int:
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash((self.symbol, self.args, self.step, self.value, self.negated))
            object.__setattr__(self, "_hash", cached)
        return cached

    def __reduce__(self):
        # string hashes are salted per process; rebuild instead of copying the cache
        return (GroundAtom, (self.symbol, self.args, self.step, self.value, self.negated))

    @cached_property
    def text(self) -> str:
        return self._render()

    def __str__(self) -> str:
        return self.text

    def _render(self) -> str:
        step = [str(self.step)] if self.step is not None else []
        if self.symbol == DEF:
            fluent = self.args[0]
            inner = _compact_call(fluent.name, [render_ground(a) for a in fluent.args] + step)
            return f"def({inner})"
        if self.symbol == AB:
            call = _compact_call(AB, [render_ground(self.args[0])] + step)
            return call if self.value == TRUE else f"neg {call}"
        if self.symbol == DO:
            sign = "" if self.value == TRUE else "neg "
            return f"do({sign}{render_ground(self.args[0])},{self.step})"
        if self.symbol == INIT:
            fluent = render_ground(self.args[0])
            if self.value == TRUE:
                return f"init({fluent})"
            if self.value == FALSE:
                return f"init(neg {fluent})"
            return f"init({fluent}={render_ground(self.value)})"
        if self.symbol == OBS:
            parts = [render_ground(self.args[0]), render_ground(self.value)] + step
            return f"obs({','.join(parts)})"
        if self.symbol == OCCURS:
            action = self.args[0]
            call = _compact_call(action.name, [render_ground(a) for a in action.args] + step)
        else:
            call = _compact_call(self.symbol, [render_ground(a) for a in self.args] + step)
        if self.value in (TRUE, FALSE) and not self.negated:
            return call if self.value == TRUE else f"neg {call}"
        relation = "!=" if self.negated else "="
        return f"{call}{relation}{render_ground(self.value)}"

    @property
    def is_function_atom(self) -> bool:
        return self.symbol not in RESERVED_SYMBOLS or self.symbol == OCCURS

    @property
    def term(self) -> Tuple[str, Tuple[Term, ...], Optional[int]]:
        """The ground function term this atom is about, e.g. (switch, (), 3)."""
        return (self.symbol, self.args, self.step)

    def complement(self) -> Optional["GroundAtom"]:
        """The classically contradicting literal, if the atom has one."""
        if self.is_function_atom:
            return GroundAtom(self.symbol, self.args, self.step, self.value, not self.negated)
        if self.symbol == AB:
            return GroundAtom(AB, self.args, self.step, FALSE if self.value == TRUE else TRUE)
        return None

    def sort_key(self) -> Tuple[str, str, int, str]:
        args = ",".join(render_ground(a) for a in self.args)
        return (self.symbol, args, -1 if self.step is None else self.step, self.text)


def literal_sort_key(atom: GroundAtom) -> Tuple[str, str, int, str]:
    return atom.sort_key()


@dataclass(frozen=True)
class GroundMechanism:
    """A ground instance of a mechanism; ``body`` ends with the ab guard."""

    label: Const
    step: int
    head: GroundAtom
    body: Tuple[GroundAtom, ...]
    timeless_head: bool = False

    @property
    def name(self) -> str:
        return render_ground(self.label)

    @property
    def guard(self) -> GroundAtom:
        return GroundAtom(AB, (self.label,), self.step, FALSE)

    def __str__(self) -> str:
        return f"{self.name}@{self.step}"


@dataclass(frozen=True)
class CausalityCheck:
    ok: bool
    offending: Optional[GroundAtom] = None

    def __bool__(self) -> bool:
        return self.ok


def check_causality(mechanism: GroundMechanism) -> CausalityCheck:
    """The cause must precede its effect.

    Body actions need a step strictly before the head step, every other body
    atom a step no later than it. Time-independent heads pass.

    Raises:
        MalformedMechanism: if a time-dependent head has no time-step
    """
    if mechanism.timeless_head:
        return CausalityCheck(True)
    head_step = mechanism.head.step
    if head_step is None:
        raise MalformedMechanism(f"head of {mechanism.name} has no time-step")
    for atom in mechanism.body:
        if atom.step is None or atom.symbol == AB:
            continue
        if atom.symbol == OCCURS and atom.step >= head_step:
            return CausalityCheck(False, atom)
        if atom.symbol != OCCURS and atom.step > head_step:
            return CausalityCheck(False, atom)
    return CausalityCheck(True)

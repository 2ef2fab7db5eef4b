"""
Grounding of W theories.

Enumerates interpretations of the abstract constants within bounds, reduces an
abstract theory under one interpretation to a concrete theory, and builds the
ground logic program (mechanism instances plus the general axioms).
"""

import logging
from collections import Counter
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from ortools.sat.python import cp_model

from .errors import MalformedMechanism
from .model import (
    AB,
    ACTION,
    DEF,
    DO,
    FALSE,
    INIT,
    NAT,
    OBS,
    OCCURS,
    STEP,
    TRUE,
    Abstract,
    ArithmeticAtom,
    Atom,
    BinOp,
    CausalMechanism,
    CausalTheory,
    Const,
    GroundAtom,
    GroundMechanism,
    Num,
    Signature,
    StaticTerm,
    SymbolKind,
    Term,
    Var,
    check_causality,
    compare,
    evaluate,
    normalize_value,
    substitute,
    term_abstracts,
    term_variables,
)

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 10
DEFAULT_DURATION_CAP = 4
DEFAULT_RESOURCE_CAP = 50_000


@dataclass(frozen=True)
class Bounds:
    """Finite bounds for enumerating interpretations and grounding."""

    horizon: int = DEFAULT_HORIZON
    duration_cap: int = DEFAULT_DURATION_CAP
    pinned: Tuple[Tuple[str, int], ...] = ()
    resource_cap: int = DEFAULT_RESOURCE_CAP

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.duration_cap < 1:
            raise ValueError(f"duration cap must be at least 1, got {self.duration_cap}")

    @property
    def pinned_values(self) -> Dict[str, int]:
        return dict(self.pinned)

    def with_pinned(self, values: Mapping[str, int]) -> "Bounds":
        return replace(self, pinned=tuple(sorted(values.items())))

    def describe(self) -> str:
        return f"horizon={self.horizon} duration_cap={self.duration_cap}"


@dataclass(frozen=True)
class Interpretation:
    """A total map from abstract constants to natural numbers, sorted by name."""

    values: Tuple[Tuple[str, int], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[str, int]) -> "Interpretation":
        return cls(tuple(sorted(mapping.items())))

    def as_dict(self) -> Dict[str, int]:
        return dict(self.values)

    def __getitem__(self, name: str) -> int:
        for key, value in self.values:
            if key == name:
                return value
        raise KeyError(name)

    def __len__(self) -> int:
        return len(self.values)

    def __str__(self) -> str:
        if not self.values:
            return "{}"
        return ",".join(f"{k}={v}" for k, v in self.values)


def step_constants(theory: CausalTheory) -> List[str]:
    """Abstract constants used as time-steps; they range over [0, horizon]."""
    sig = theory.signature
    scenario = theory.scenario
    names = set()
    for do in scenario.dos:
        names.update(term_abstracts(do.step))
    for obs in scenario.observations:
        if obs.step is not None:
            names.update(term_abstracts(obs.step))
    for atom in scenario.statics:
        symbol = sig.symbol(atom.symbol)
        if symbol is None:
            continue
        if symbol.value_sort == STEP:
            names.update(term_abstracts(atom.value))
        for arg, param in zip(atom.args, symbol.params):
            if param == STEP:
                names.update(term_abstracts(arg))
    return sorted(names)


def constant_ranges(theory: CausalTheory, bounds: Bounds) -> Dict[str, Tuple[int, int]]:
    """Range of every abstract constant of the scenario under the bounds."""
    names = theory.scenario.abstract_constants
    pinned = bounds.pinned_values
    unknown = sorted(set(pinned) - set(names))
    if unknown:
        raise ValueError(f"pinned constants are not abstract constants of the scenario: {', '.join(unknown)}")
    steps = set(step_constants(theory))
    ranges = {}
    for name in names:
        if name in pinned:
            ranges[name] = (pinned[name], pinned[name])
        elif name in steps:
            ranges[name] = (0, bounds.horizon)
        else:
            ranges[name] = (1, bounds.duration_cap)
    return ranges


class _SolutionCollector(cp_model.CpSolverSolutionCallback):
    """Collects every solution of the interpretation model."""

    def __init__(self, variables: Dict[str, cp_model.IntVar]):
        cp_model.CpSolverSolutionCallback.__init__(self)
        self._variables = variables
        self.solutions: List[Dict[str, int]] = []

    def on_solution_callback(self) -> None:
        self.solutions.append({name: self.value(var) for name, var in self._variables.items()})


def _interval(term: Term, ranges: Dict[str, Tuple[int, int]]) -> Tuple[int, int]:
    if isinstance(term, Num):
        return term.value, term.value
    if isinstance(term, Abstract):
        return ranges[term.name]
    if isinstance(term, BinOp):
        llo, lhi = _interval(term.left, ranges)
        rlo, rhi = _interval(term.right, ranges)
        if term.op == "+":
            return llo + rlo, lhi + rhi
        if term.op == "-":
            return llo - rhi, lhi - rlo
        corners = [llo * rlo, llo * rhi, lhi * rlo, lhi * rhi]
        return min(corners), max(corners)
    raise ValueError(f"term {term} cannot appear in a scenario constraint")


def _cp_expression(term: Term, model: cp_model.CpModel, variables, ranges):
    if isinstance(term, Num):
        return term.value
    if isinstance(term, Abstract):
        return variables[term.name]
    if isinstance(term, StaticTerm):
        raise ValueError(f"unexpanded static term {term} in a scenario constraint")
    if isinstance(term, BinOp):
        left = _cp_expression(term.left, model, variables, ranges)
        right = _cp_expression(term.right, model, variables, ranges)
        if term.op == "+":
            return left + right
        if term.op == "-":
            return left - right
        if isinstance(left, int) or isinstance(right, int):
            return left * right
        factors = []
        for operand, sub in ((left, term.left), (right, term.right)):
            lo, hi = _interval(sub, ranges)
            factor = model.new_int_var(lo, hi, "")
            model.add(factor == operand)
            factors.append(factor)
        lo, hi = _interval(term, ranges)
        product_var = model.new_int_var(lo, hi, "")
        model.add_multiplication_equality(product_var, factors)
        return product_var
    raise ValueError(f"term {term} cannot appear in a scenario constraint")


def _add_comparison(model: cp_model.CpModel, left, op: str, right) -> None:
    if op == "=":
        model.add(left == right)
    elif op == "!=":
        model.add(left != right)
    elif op == "<":
        model.add(left < right)
    elif op == "<=":
        model.add(left <= right)
    elif op == ">":
        model.add(left > right)
    else:
        model.add(left >= right)


def _constraints_hold(constraints: Sequence[ArithmeticAtom], values: Mapping[str, int]) -> bool:
    for constraint in constraints:
        left = evaluate(substitute(constraint.left, abstracts=values))
        right = evaluate(substitute(constraint.right, abstracts=values))
        if not compare(left, constraint.op, right):
            return False
    return True


def enumerate_interpretations(theory: CausalTheory, bounds: Bounds) -> Iterator[Interpretation]:
    """Yield every interpretation within bounds, in ascending order.

    Time-step constants range over [0, horizon], all other abstract constants
    over [1, duration_cap]; pinned constants take their pinned value only.
    Each yielded map satisfies every scenario arithmetic atom.

    Args:
        theory: Theory whose scenario introduces the abstract constants
        bounds: Horizon, duration cap and pinned values

    Returns:
        Iterator over Interpretation values
    """
    constraints = theory.scenario.constraints
    ranges = constant_ranges(theory, bounds)
    if not ranges:
        if _constraints_hold(constraints, {}):
            yield Interpretation()
        return

    model = cp_model.CpModel()
    variables = {name: model.new_int_var(lo, hi, name) for name, (lo, hi) in ranges.items()}
    for constraint in constraints:
        left = _cp_expression(constraint.left, model, variables, ranges)
        right = _cp_expression(constraint.right, model, variables, ranges)
        if isinstance(left, int) and isinstance(right, int):
            if not compare(left, constraint.op, right):
                logger.info(f"constraint {constraint} is false; no interpretations")
                return
            continue
        _add_comparison(model, left, constraint.op, right)

    collector = _SolutionCollector(variables)
    solver = cp_model.CpSolver()
    solver.parameters.enumerate_all_solutions = True
    status = solver.solve(model, collector)
    logger.debug(f"interpretation search: {solver.status_name(status)}, {len(collector.solutions)} solutions")

    names = sorted(variables)
    seen = set()
    for values in sorted(collector.solutions, key=lambda s: tuple(s[n] for n in names)):
        key = tuple(values[n] for n in names)
        if key in seen or not _constraints_hold(constraints, values):
            continue
        seen.add(key)
        yield Interpretation.of(values)


# ---------------------------------------------------------------------------
# Reduction


@dataclass(frozen=True)
class ConcreteTheory:
    """A theory with every abstract constant replaced and all arithmetic evaluated."""

    signature: Signature
    gamma: Interpretation
    horizon: int
    mechanisms: Tuple[GroundMechanism, ...] = ()
    statics: Tuple[GroundAtom, ...] = ()
    inits: Tuple[GroundAtom, ...] = ()
    dos: Tuple[GroundAtom, ...] = ()
    observations: Tuple[GroundAtom, ...] = ()
    dropped: Tuple[Tuple[str, int], ...] = ()

    @cached_property
    def nat_max(self) -> int:
        values = [self.horizon]
        for atom in self.statics:
            if isinstance(atom.value, Num):
                values.append(atom.value.value)
        return max(values)

    def truncated(self, step: int) -> "ConcreteTheory":
        """The same theory without do-atoms after ``step``."""
        return replace(self, dos=tuple(d for d in self.dos if d.step <= step))

    def with_facts(self, dos: Iterable[GroundAtom] = (), observations: Iterable[GroundAtom] = ()) -> "ConcreteTheory":
        return replace(self, dos=self.dos + tuple(dos), observations=self.observations + tuple(observations))

    @property
    def axioms(self) -> frozenset:
        """Atoms that enter proofs as axiom elements: do-atoms and statics."""
        return frozenset(self.dos) | frozenset(self.statics)


class _Instantiator:
    """Sort-driven instantiation of one mechanism."""

    def __init__(self, mechanism: CausalMechanism, sig: Signature, facts: Dict[str, List[GroundAtom]], horizon: int, nat_max: int):
        self.mechanism = mechanism
        self.sig = sig
        self.facts = facts
        self.horizon = horizon
        self.nat_max = nat_max
        self.variables = mechanism.variables()
        self.sorts = self._variable_sorts()
        body = mechanism.body
        self.matchers = [
            lit for lit in body
            if isinstance(lit, Atom) and sig.kind_of(lit.symbol) is SymbolKind.STATIC and lit.relation == "="
        ]
        self.arithmetic = [lit for lit in body if isinstance(lit, ArithmeticAtom)]
        self.pruned = 0

    def _variable_sorts(self) -> Dict[str, str]:
        sorts: Dict[str, str] = {}

        def note(term: Term, sort: str) -> None:
            if isinstance(term, Var):
                current = sorts.get(term.name)
                if current is None or (current == STEP and sort == NAT):
                    sorts[term.name] = sort

        mechanism = self.mechanism
        for atom in (mechanism.head,) + tuple(a for a in mechanism.body if isinstance(a, Atom)):
            if atom.symbol == OCCURS:
                action = atom.args[0]
                note(action, ACTION)
                if isinstance(action, Const):
                    symbol = self.sig.symbol(action.name)
                    for arg, param in zip(action.args, symbol.params if symbol else ()):
                        note(arg, param)
            else:
                symbol = self.sig.symbol(atom.symbol)
                if symbol is None:
                    continue
                for arg, param in zip(atom.args, symbol.params):
                    note(arg, param)
                note(atom.value, symbol.value_sort)
            if atom.step is not None:
                note(atom.step, STEP)
        note(mechanism.step, STEP)
        for literal in mechanism.body:
            if isinstance(literal, ArithmeticAtom):
                for name in literal.variables():
                    sorts.setdefault(name, NAT)
        return sorts

    def bindings(self) -> Iterator[Dict[str, Term]]:
        yield from self._match({}, 0)

    def _match(self, binding: Dict[str, Term], index: int) -> Iterator[Dict[str, Term]]:
        if index < len(self.matchers):
            atom = self.matchers[index]
            for fact in self.facts.get(atom.symbol, ()):
                extended = self._unify_atom(atom, fact, binding)
                if extended is not None:
                    yield from self._match(extended, index + 1)
            return
        yield from self._complete(binding)

    def _unify_atom(self, atom: Atom, fact: GroundAtom, binding: Dict[str, Term]) -> Optional[Dict[str, Term]]:
        if fact.negated or len(fact.args) != len(atom.args):
            return None
        current = dict(binding)
        for pattern, value in zip(atom.args + (atom.value,), fact.args + (fact.value,)):
            if not _unify(pattern, value, current):
                return None
        return current

    def _complete(self, binding: Dict[str, Term]) -> Iterator[Dict[str, Term]]:
        binding = self._apply_binders(binding)
        if binding is None or not self._arithmetic_consistent(binding):
            self.pruned += 1
            return
        unbound = [v for v in self.variables if v not in binding]
        if not unbound:
            yield binding
            return
        name = unbound[0]
        sort = self.sorts.get(name)
        if sort is None:
            raise MalformedMechanism(f"cannot infer the sort of variable {name} in {self.mechanism.label}")
        for value in self.sig.domain(sort, self.horizon, self.nat_max):
            yield from self._complete({**binding, name: value})

    def _apply_binders(self, binding: Dict[str, Term]) -> Optional[Dict[str, Term]]:
        changed = True
        while changed:
            changed = False
            for literal in self.arithmetic:
                if literal.op != "=":
                    continue
                for target, source in ((literal.left, literal.right), (literal.right, literal.left)):
                    if isinstance(target, Var) and target.name not in binding:
                        value = _try_evaluate(source, binding)
                        if value is not None:
                            binding = {**binding, target.name: Num(value)}
                            changed = True
                            break
        return binding

    def _arithmetic_consistent(self, binding: Dict[str, Term]) -> bool:
        for literal in self.arithmetic:
            left = _try_evaluate(literal.left, binding)
            right = _try_evaluate(literal.right, binding)
            if left is not None and right is not None and not compare(left, literal.op, right):
                return False
        return True


def _try_evaluate(term: Term, binding: Mapping[str, Term]) -> Optional[int]:
    ground = substitute(term, binding)
    if any(True for _ in term_variables(ground)):
        return None
    try:
        return evaluate(ground)
    except ValueError:
        return None


def _unify(pattern: Term, value: Term, binding: Dict[str, Term]) -> bool:
    if isinstance(pattern, Var):
        if pattern.name in binding:
            return binding[pattern.name] == value
        binding[pattern.name] = value
        return True
    if isinstance(pattern, Const):
        if not isinstance(value, Const) or value.name != pattern.name or len(value.args) != len(pattern.args):
            return False
        return all(_unify(p, v, binding) for p, v in zip(pattern.args, value.args))
    if isinstance(pattern, BinOp):
        result = _try_evaluate(pattern, binding)
        return result is not None and value == Num(result)
    return pattern == value


class _Drop(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def _ground_value(term: Term, binding: Mapping[str, Term]) -> Term:
    value = normalize_value(substitute(term, binding))
    if isinstance(value, Num) and value.value < 0:
        raise _Drop("negative value")
    return value


def _ground_step(term: Optional[Term], binding: Mapping[str, Term], horizon: int) -> Optional[int]:
    if term is None:
        return None
    step = evaluate(substitute(term, binding))
    if step < 0:
        raise _Drop("negative time-step")
    if step > horizon:
        raise _Drop("time-step beyond horizon")
    return step


def _ground_atom(atom: Atom, binding: Mapping[str, Term], sig: Signature, horizon: int) -> GroundAtom:
    args = tuple(_ground_value(a, binding) for a in atom.args)
    step = _ground_step(atom.step, binding, horizon)
    value = _ground_value(atom.value, binding)
    if atom.symbol != OCCURS:
        symbol = sig.symbol(atom.symbol)
        if symbol is not None and symbol.value_sort == STEP and isinstance(value, Num) and value.value > horizon:
            raise _Drop("time-step beyond horizon")
    return GroundAtom(atom.symbol, args, step, value, atom.relation == "!=")


def _instantiate(
    mechanism: CausalMechanism, binding: Mapping[str, Term], sig: Signature, horizon: int
) -> GroundMechanism:
    for literal in mechanism.body:
        if isinstance(literal, ArithmeticAtom):
            left = evaluate(substitute(literal.left, binding))
            right = evaluate(substitute(literal.right, binding))
            if not compare(left, literal.op, right):
                raise _Drop("false arithmetic atom")
    step = _ground_step(mechanism.step, binding, horizon)
    label = normalize_value(substitute(mechanism.label, binding))
    head = _ground_atom(mechanism.head, binding, sig, horizon)
    body = tuple(_ground_atom(lit, binding, sig, horizon) for lit in mechanism.body if isinstance(lit, Atom))
    guard = GroundAtom(AB, (label,), step, FALSE)
    timeless = sig.kind_of(mechanism.head.symbol) is SymbolKind.TIMELESS
    ground = GroundMechanism(label, step, head, body + (guard,), timeless_head=timeless)
    if not check_causality(ground):
        raise _Drop("principle of causality")
    return ground


def _ground_fact_value(term: Term, gamma: Mapping[str, int]) -> Term:
    return normalize_value(substitute(term, abstracts=gamma))


def reduce(theory: CausalTheory, gamma: Interpretation, bounds: Bounds) -> ConcreteTheory:
    """Reduce an abstract theory under an interpretation.

    Substitutes the interpretation, evaluates arithmetic and drops mechanism
    instances with a false arithmetic atom, a negative or out-of-horizon
    time-step, or a violation of the principle of causality.

    Args:
        theory: Abstract theory
        gamma: Interpretation of the scenario's abstract constants
        bounds: Bounds; only the horizon is used here

    Returns:
        The concrete theory, with drop counts by reason
    """
    sig = theory.signature
    horizon = bounds.horizon
    values = gamma.as_dict()
    missing = sorted(set(theory.scenario.abstract_constants) - set(values))
    if missing:
        raise ValueError(f"interpretation does not map {', '.join(missing)}")
    dropped: Counter = Counter()
    scenario = theory.scenario

    statics = []
    for atom in scenario.statics:
        args = tuple(_ground_fact_value(a, values) for a in atom.args)
        statics.append(GroundAtom(atom.symbol, args, None, _ground_fact_value(atom.value, values), atom.relation == "!="))
    inits = [
        GroundAtom(INIT, (Const(i.symbol, tuple(_ground_fact_value(a, values) for a in i.args)),), None, _ground_fact_value(i.value, values))
        for i in scenario.inits
    ]
    dos = []
    for do in scenario.dos:
        step = evaluate(substitute(do.step, abstracts=values))
        if not 0 <= step <= horizon:
            dropped["do-atom outside horizon"] += 1
            continue
        dos.append(GroundAtom(DO, (_ground_fact_value(do.action, values),), step, TRUE if do.positive else FALSE))
    observations = []
    for obs in scenario.observations:
        step = evaluate(substitute(obs.step, abstracts=values)) if obs.step is not None else None
        if step is not None and not 0 <= step <= horizon:
            dropped["observation outside horizon"] += 1
            continue
        fluent = Const(obs.symbol, tuple(_ground_fact_value(a, values) for a in obs.args))
        observations.append(GroundAtom(OBS, (fluent,), step, _ground_fact_value(obs.value, values)))

    facts: Dict[str, List[GroundAtom]] = {}
    for atom in statics:
        facts.setdefault(atom.symbol, []).append(atom)
    nat_max = max([horizon] + [a.value.value for a in statics if isinstance(a.value, Num)])

    mechanisms: List[GroundMechanism] = []
    seen = set()
    for mechanism in theory.mechanisms:
        instantiator = _Instantiator(mechanism, sig, facts, horizon, nat_max)
        for binding in instantiator.bindings():
            try:
                ground = _instantiate(mechanism, binding, sig, horizon)
            except _Drop as drop:
                dropped[drop.reason] += 1
                continue
            if ground not in seen:
                seen.add(ground)
                mechanisms.append(ground)
        if instantiator.pruned:
            dropped["false arithmetic atom"] += instantiator.pruned

    if dropped:
        logger.debug(f"reduction under {gamma} dropped: " + ", ".join(f"{k}={v}" for k, v in sorted(dropped.items())))
    return ConcreteTheory(
        signature=sig,
        gamma=gamma,
        horizon=horizon,
        mechanisms=tuple(mechanisms),
        statics=tuple(statics),
        inits=tuple(inits),
        dos=tuple(dos),
        observations=tuple(observations),
        dropped=tuple(sorted(dropped.items())),
    )


# ---------------------------------------------------------------------------
# Ground programs

_KIND_ORDER = {"fact": 0, "mechanism": 1, "axiom": 2, "injected": 3}

AXIOM_SCHEMAS = (
    "defined",
    "undefined",
    "single-value",
    "defeasible",
    "initial",
    "inertia",
    "inertia-differs",
    "do",
    "refrain",
    "may-occur",
    "overridden",
    "observation",
)


@dataclass(frozen=True)
class Provenance:
    """Where a ground rule comes from: a mechanism instance, an axiom schema or a scenario fact."""

    kind: str
    ident: str = ""
    step: Optional[int] = None

    def __str__(self) -> str:
        if self.kind == "mechanism":
            return f"{self.ident}@{self.step}"
        if self.kind == "axiom":
            return f"axiom {self.ident}"
        return self.kind

    def sort_key(self) -> Tuple[int, int, str, int]:
        number = AXIOM_SCHEMAS.index(self.ident) if self.ident in AXIOM_SCHEMAS else 0
        return (_KIND_ORDER.get(self.kind, 9), number, self.ident, -1 if self.step is None else self.step)


FACT = Provenance("fact")


@dataclass(frozen=True)
class GroundRule:
    """head <- pos, not neg. A rule without head is a constraint."""

    head: Optional[GroundAtom]
    pos: Tuple[GroundAtom, ...] = ()
    neg: Tuple[GroundAtom, ...] = ()
    provenance: Provenance = FACT
    cr: bool = False

    @classmethod
    def fact(cls, atom: GroundAtom, provenance: Provenance = FACT) -> "GroundRule":
        return cls(atom, (), (), provenance)

    def __hash__(self) -> int:
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash((self.head, self.pos, self.neg, self.provenance, self.cr))
            object.__setattr__(self, "_hash", cached)
        return cached

    def __reduce__(self):
        return (GroundRule, (self.head, self.pos, self.neg, self.provenance, self.cr))

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def is_mechanism(self) -> bool:
        return self.provenance.kind == "mechanism"

    @cached_property
    def text(self) -> str:
        body = [str(a) for a in self.pos] + [f"not {a}" for a in self.neg]
        head = str(self.head) if self.head is not None else ""
        arrow = ":+" if self.cr else ":-"
        if not body:
            return f"{head} {arrow}." if self.cr else f"{head}."
        return f"{head} {arrow} {', '.join(body)}.".lstrip()

    def __str__(self) -> str:
        return self.text

    def regularized(self) -> "GroundRule":
        return replace(self, cr=False)


@dataclass(frozen=True)
class GroundProgram:
    rules: Tuple[GroundRule, ...]
    horizon: int

    @cached_property
    def atoms(self) -> frozenset:
        """The atom universe: every literal occurring in some rule."""
        universe = set()
        for rule in self.rules:
            if rule.head is not None:
                universe.add(rule.head)
            universe.update(rule.pos)
            universe.update(rule.neg)
        return frozenset(universe)

    @property
    def cr_rules(self) -> Tuple[GroundRule, ...]:
        return tuple(r for r in self.rules if r.cr)

    def regular(self) -> "GroundProgram":
        return GroundProgram(tuple(r for r in self.rules if not r.cr), self.horizon)

    def with_rules(self, rules: Iterable[GroundRule]) -> "GroundProgram":
        return GroundProgram(self.rules + tuple(rules), self.horizon)

    def dump(self) -> str:
        """One rule per line with a provenance comment, sorted by provenance then text."""
        ordered = sorted(self.rules, key=lambda r: (r.provenance.sort_key(), r.text))
        return "".join(f"{r.text}  % {r.provenance}\n" for r in ordered)


def _axiom(name: str, step: Optional[int] = None) -> Provenance:
    return Provenance("axiom", name, step)


def build_program(concrete: ConcreteTheory) -> GroundProgram:
    """Build the ground logic program of a concrete theory.

    Emits the scenario facts, every mechanism instance and the general
    axioms: the functional reading of !=, defeasibility of mechanisms,
    initial values, inertia, actions and observations.
    Transient fluents get no default axioms.
    """
    sig = concrete.signature
    horizon = concrete.horizon
    nat_max = concrete.nat_max
    rules: List[GroundRule] = []

    for atom in concrete.statics + concrete.inits + concrete.dos + concrete.observations:
        rules.append(GroundRule.fact(atom))

    for mechanism in concrete.mechanisms:
        provenance = Provenance("mechanism", mechanism.name, mechanism.step)
        rules.append(GroundRule(mechanism.head, mechanism.body, (), provenance))
        ab = GroundAtom(AB, (mechanism.label,), mechanism.step, TRUE)
        rules.append(GroundRule(mechanism.guard, (), (ab,), _axiom("defeasible", mechanism.step)))

    for init in concrete.inits:
        fluent = init.args[0]
        head = GroundAtom(fluent.name, fluent.args, 0, init.value)
        rules.append(GroundRule(head, (init,), (), _axiom("initial", 0)))

    for symbol in sig.of_kind(SymbolKind.INERTIAL):
        values = sig.domain(symbol.value_sort, horizon, nat_max)
        for args in sig.ground_terms(symbol, horizon, nat_max):
            for step in range(1, horizon + 1):
                for value in values:
                    now = GroundAtom(symbol.name, args, step, value)
                    before = GroundAtom(symbol.name, args, step - 1, value)
                    now_neq = GroundAtom(symbol.name, args, step, value, True)
                    before_neq = GroundAtom(symbol.name, args, step - 1, value, True)
                    rules.append(GroundRule(now, (before,), (now_neq,), _axiom("inertia", step)))
                    rules.append(GroundRule(now_neq, (before_neq,), (now,), _axiom("inertia-differs", step)))

    for do in concrete.dos:
        action = GroundAtom(OCCURS, do.args, do.step, do.value)
        rules.append(GroundRule(action, (do,), (), _axiom("do", do.step)))

    for action in sig.ground_actions(horizon, nat_max):
        for step in range(horizon + 1):
            occurs = GroundAtom(OCCURS, (action,), step, TRUE)
            refrains = GroundAtom(OCCURS, (action,), step, FALSE)
            rules.append(GroundRule(refrains, (), (occurs,), _axiom("refrain", step)))
            rules.append(GroundRule(occurs, (), (), _axiom("may-occur", step), cr=True))

    for do in concrete.dos:
        for mechanism in concrete.mechanisms:
            head = mechanism.head
            if head.symbol != OCCURS or head.args != do.args or head.step != do.step:
                continue
            if head.value != do.value:
                ab = GroundAtom(AB, (mechanism.label,), mechanism.step, TRUE)
                rules.append(GroundRule(ab, (do,), (), _axiom("overridden", mechanism.step)))

    for obs in concrete.observations:
        fluent = obs.args[0]
        holds = GroundAtom(fluent.name, fluent.args, obs.step, obs.value)
        rules.append(GroundRule(None, (obs,), (holds,), _axiom("observation", obs.step)))

    rules.extend(_functional_axioms(rules, concrete))
    program = GroundProgram(tuple(rules), horizon)
    logger.debug(f"built program under {concrete.gamma}: {len(program.rules)} rules, {len(program.atoms)} atoms")
    return program


def _functional_axioms(rules: Sequence[GroundRule], concrete: ConcreteTheory) -> List[GroundRule]:
    """Functional axioms for every ground function term in use; statics only for facts."""
    sig = concrete.signature
    terms: Dict[Tuple, None] = {}
    static_terms = {(a.symbol, a.args, a.step) for a in concrete.statics}
    for rule in rules:
        atoms = ([rule.head] if rule.head is not None else []) + list(rule.pos) + list(rule.neg)
        for atom in atoms:
            if not atom.is_function_atom:
                continue
            if sig.kind_of(atom.symbol) is SymbolKind.STATIC and atom.term not in static_terms:
                continue
            terms.setdefault(atom.term)

    axioms = []
    for symbol_name, args, step in terms:
        if symbol_name == OCCURS:
            values = [TRUE, FALSE]
        else:
            symbol = sig.symbol(symbol_name)
            if symbol is None:
                continue
            values = sig.domain(symbol.value_sort, concrete.horizon, concrete.nat_max)
        defined = GroundAtom(DEF, (Const(symbol_name, args),), step, None)
        for value in values:
            holds = GroundAtom(symbol_name, args, step, value)
            differs = GroundAtom(symbol_name, args, step, value, True)
            axioms.append(GroundRule(defined, (holds,), (), _axiom("defined", step)))
            axioms.append(GroundRule(None, (differs,), (defined,), _axiom("undefined", step)))
            for other in values:
                if other != value:
                    axioms.append(
                        GroundRule(GroundAtom(symbol_name, args, step, other, True), (holds,), (), _axiom("single-value", step))
                    )
    return axioms


def ground(theory: CausalTheory, gamma: Interpretation, bounds: Bounds) -> GroundProgram:
    """Reduce and build in one step."""
    return build_program(reduce(theory, gamma, bounds))

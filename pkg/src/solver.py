"""
Stable-model solver for ground W programs.

Answer sets are found by propagation over rule and atom counters, an
unfounded-set check at every fixpoint and chronological backtracking on the
remaining atoms. Every candidate is confirmed against the reduct before it is
returned. Consistency-restoring rules are handled separately by
``abductive_supports``.
"""

import logging
import os
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import AssumptionViolated, NoInterpretation, ResourceLimitExceeded
from .grounding import DEFAULT_RESOURCE_CAP, Bounds, GroundProgram, GroundRule, Interpretation, enumerate_interpretations, ground
from .model import DEF, CausalTheory, GroundAtom, Term, literal_sort_key

logger = logging.getLogger(__name__)


def resource_cap_from_env(default: int = DEFAULT_RESOURCE_CAP) -> int:
    value = os.getenv("W_RESOURCE_CAP")
    if not value:
        return default
    try:
        return int(value)
    except ValueError:
        logger.warning(f"ignoring non-numeric W_RESOURCE_CAP={value!r}")
        return default


@dataclass(frozen=True)
class AnswerSet:
    """A stable model: the set of ground literals it contains."""

    atoms: FrozenSet[GroundAtom]

    def __contains__(self, atom: GroundAtom) -> bool:
        return atom in self.atoms

    def __iter__(self) -> Iterator[GroundAtom]:
        return iter(self.literals)

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def literals(self) -> Tuple[GroundAtom, ...]:
        return tuple(sorted(self.atoms, key=literal_sort_key))

    @cached_property
    def _values(self) -> Dict[Tuple, Term]:
        values = {}
        for atom in self.atoms:
            if atom.is_function_atom and not atom.negated:
                values[atom.term] = atom.value
        return values

    def value_of(self, symbol: str, args: Tuple[Term, ...], step: Optional[int]) -> Optional[Term]:
        """The value y with symbol(args, step) = y in the model, or None when undefined."""
        return self._values.get((symbol, args, step))

    def dump(self, include_def: bool = False) -> str:
        """Sorted literals, one per line."""
        return "".join(f"{a}\n" for a in self.literals if include_def or a.symbol != DEF)


@dataclass(frozen=True)
class AbductiveSupport:
    """A minimal set of cr-rules whose regular versions restore consistency."""

    rules: Tuple[GroundRule, ...] = ()

    @property
    def heads(self) -> Tuple[GroundAtom, ...]:
        return tuple(r.head for r in self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __str__(self) -> str:
        if not self.rules:
            return "{}"
        return "{" + ", ".join(r.text for r in self.rules) + "}"


# ---------------------------------------------------------------------------
# Search


class _Conflict(Exception):
    pass


class _Search:
    """Propagation state over integer-indexed atoms and rules.

    ``missing[r]`` counts body literals of rule r not yet true,
    ``falsified[r]`` body literals already false, and ``support[a]`` the rules
    with head a whose body is not false.
    """

    def __init__(self, rules: Sequence[GroundRule], atoms: Sequence[GroundAtom]):
        self.atoms = list(atoms)
        index = {atom: i for i, atom in enumerate(self.atoms)}
        n = len(self.atoms)
        self.head: List[int] = []
        self.pos: List[Tuple[int, ...]] = []
        self.neg: List[Tuple[int, ...]] = []
        for rule in rules:
            self.head.append(index[rule.head] if rule.head is not None else -1)
            self.pos.append(tuple(index[a] for a in rule.pos))
            self.neg.append(tuple(index[a] for a in rule.neg))
        for atom, i in index.items():
            other = atom.complement()
            if other is not None and other in index and i < index[other]:
                self.head.append(-1)
                self.pos.append((i, index[other]))
                self.neg.append(())

        self.heads: List[List[int]] = [[] for _ in range(n)]
        self.occ_pos: List[List[int]] = [[] for _ in range(n)]
        self.occ_neg: List[List[int]] = [[] for _ in range(n)]
        for r, h in enumerate(self.head):
            if h >= 0:
                self.heads[h].append(r)
            for a in self.pos[r]:
                self.occ_pos[a].append(r)
            for a in self.neg[r]:
                self.occ_neg[a].append(r)

        self.value = [0] * n
        self.missing = [len(p) + len(q) for p, q in zip(self.pos, self.neg)]
        self.falsified = [0] * len(self.head)
        self.support = [len(rs) for rs in self.heads]
        self.trail: List[int] = []
        self.queue: List[int] = []
        self.decisions = 0

    # -- assignment ----------------------------------------------------------

    def assign(self, atom: int, truth: int) -> None:
        current = self.value[atom]
        if current == truth:
            return
        if current != 0:
            raise _Conflict()
        self.value[atom] = truth
        self.trail.append(atom)
        self.queue.append(atom)
        satisfied, falsified = (self.occ_pos[atom], self.occ_neg[atom]) if truth > 0 else (self.occ_neg[atom], self.occ_pos[atom])
        for r in satisfied:
            self.missing[r] -= 1
        for r in falsified:
            self.falsified[r] += 1
            if self.falsified[r] == 1 and self.head[r] >= 0:
                self.support[self.head[r]] -= 1

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            atom = self.trail.pop()
            truth = self.value[atom]
            satisfied, falsified = (self.occ_pos[atom], self.occ_neg[atom]) if truth > 0 else (self.occ_neg[atom], self.occ_pos[atom])
            for r in satisfied:
                self.missing[r] += 1
            for r in falsified:
                if self.falsified[r] == 1 and self.head[r] >= 0:
                    self.support[self.head[r]] += 1
                self.falsified[r] -= 1
            self.value[atom] = 0
        self.queue.clear()

    # -- propagation ---------------------------------------------------------

    def _force_body(self, r: int) -> None:
        for a in self.pos[r]:
            self.assign(a, 1)
        for a in self.neg[r]:
            self.assign(a, -1)

    def _unique_support(self, atom: int) -> int:
        for r in self.heads[atom]:
            if self.falsified[r] == 0:
                return r
        raise _Conflict()

    def _check_rule(self, r: int) -> None:
        if self.falsified[r]:
            return
        h = self.head[r]
        if self.missing[r] == 0:
            if h < 0:
                raise _Conflict()
            self.assign(h, 1)
        elif self.missing[r] == 1 and (h < 0 or self.value[h] < 0):
            for a in self.pos[r]:
                if self.value[a] == 0:
                    self.assign(a, -1)
                    return
            for a in self.neg[r]:
                if self.value[a] == 0:
                    self.assign(a, 1)
                    return

    def _check_atom(self, atom: int) -> None:
        truth = self.value[atom]
        if self.support[atom] == 0:
            if truth > 0:
                raise _Conflict()
            if truth == 0:
                self.assign(atom, -1)
        elif self.support[atom] == 1 and truth > 0:
            self._force_body(self._unique_support(atom))

    def propagate(self) -> None:
        while self.queue:
            atom = self.queue.pop()
            truth = self.value[atom]
            self._check_atom(atom)
            for r in self.occ_pos[atom] + self.occ_neg[atom]:
                self._check_rule(r)
                h = self.head[r]
                if h >= 0 and self.falsified[r]:
                    self._check_atom(h)
            if truth < 0:
                for r in self.heads[atom]:
                    self._check_rule(r)

    def unfounded(self) -> List[int]:
        """Atoms not false that no rule with a non-false body can still derive."""
        pending = [len(p) for p in self.pos]
        founded = [False] * len(self.atoms)
        stack = [r for r in range(len(self.head)) if self.falsified[r] == 0 and pending[r] == 0]
        while stack:
            r = stack.pop()
            h = self.head[r]
            if h < 0 or founded[h]:
                continue
            founded[h] = True
            for r2 in self.occ_pos[h]:
                pending[r2] -= 1
                if pending[r2] == 0 and self.falsified[r2] == 0:
                    stack.append(r2)
        return [a for a in range(len(self.atoms)) if not founded[a] and self.value[a] >= 0]

    def fixpoint(self) -> None:
        for atom in range(len(self.atoms)):
            self._check_atom(atom)
        for r in range(len(self.head)):
            self._check_rule(r)
        while True:
            self.propagate()
            unfounded = self.unfounded()
            if not unfounded:
                return
            for atom in unfounded:
                self.assign(atom, -1)

    def settle(self) -> None:
        while True:
            self.propagate()
            unfounded = self.unfounded()
            if not unfounded:
                return
            for atom in unfounded:
                self.assign(atom, -1)

    def model(self) -> FrozenSet[int]:
        return frozenset(a for a in range(len(self.atoms)) if self.value[a] > 0)


def _least_model(rules: Sequence[GroundRule], candidate: FrozenSet[GroundAtom]) -> FrozenSet[GroundAtom]:
    """Least model of the reduct of ``rules`` with respect to ``candidate``."""
    reduct = [r for r in rules if r.head is not None and not any(a in candidate for a in r.neg)]
    waiting: Dict[GroundAtom, List[int]] = {}
    pending = []
    derived = set()
    stack = []
    for i, rule in enumerate(reduct):
        pending.append(len(rule.pos))
        for a in rule.pos:
            waiting.setdefault(a, []).append(i)
        if not rule.pos:
            stack.append(i)
    while stack:
        rule = reduct[stack.pop()]
        if rule.head in derived:
            continue
        derived.add(rule.head)
        for i in waiting.get(rule.head, ()):
            pending[i] -= 1
            if pending[i] == 0:
                stack.append(i)
    return frozenset(derived)


def is_stable(rules: Sequence[GroundRule], candidate: FrozenSet[GroundAtom]) -> bool:
    """Whether ``candidate`` is the least model of its reduct, satisfies every
    constraint and contains no complementary pair."""
    if _least_model(rules, candidate) != candidate:
        return False
    for rule in rules:
        if rule.head is None and all(a in candidate for a in rule.pos) and not any(a in candidate for a in rule.neg):
            return False
    for atom in candidate:
        other = atom.complement()
        if other is not None and other in candidate:
            return False
    return True


def answer_sets(
    program: GroundProgram, limit: Optional[int] = None, resource_cap: Optional[int] = None
) -> List[AnswerSet]:
    """Compute the answer sets of the regular part of a program.

    Args:
        program: Ground program; cr-rules are ignored
        limit: Stop after this many answer sets
        resource_cap: Maximum number of ground atoms (defaults to W_RESOURCE_CAP or 50000)

    Returns:
        Answer sets sorted by their literal lists; empty when the program is inconsistent

    Raises:
        ResourceLimitExceeded: if the atom universe exceeds the cap
    """
    cap = resource_cap if resource_cap is not None else resource_cap_from_env()
    rules = [r for r in program.rules if not r.cr]
    atoms = sorted(program.regular().atoms, key=literal_sort_key)
    if len(atoms) > cap:
        raise ResourceLimitExceeded(len(atoms), cap)

    search = _Search(rules, atoms)
    found: List[AnswerSet] = []
    try:
        search.fixpoint()
    except _Conflict:
        logger.debug("program is inconsistent at the root")
        return found

    # each frame: (trail mark, atom, values still to try)
    frames: List[Tuple[int, int, List[int]]] = []
    descend = True
    while True:
        if descend:
            unknown = next((a for a in range(len(atoms)) if search.value[a] == 0), None)
            if unknown is None:
                candidate = frozenset(atoms[a] for a in search.model())
                if is_stable(rules, candidate):
                    found.append(AnswerSet(candidate))
                    if limit is not None and len(found) >= limit:
                        break
                else:
                    logger.debug("discarded a candidate that failed the reduct check")
            else:
                search.decisions += 1
                frames.append((len(search.trail), unknown, [-1, 1]))
        if not frames:
            break
        mark, atom, remaining = frames[-1]
        search.undo(mark)
        if not remaining:
            frames.pop()
            descend = False
            continue
        truth = remaining.pop()
        try:
            search.assign(atom, truth)
            search.settle()
            descend = True
        except _Conflict:
            descend = False

    logger.debug(f"solved {len(rules)} rules over {len(atoms)} atoms: {len(found)} answer sets, {search.decisions} decisions")
    return sorted(found, key=lambda m: [a.text for a in m.literals])


def is_strongly_consistent(program: GroundProgram, resource_cap: Optional[int] = None) -> bool:
    """A program is strongly consistent when its regular part has an answer set."""
    return bool(answer_sets(program.regular(), limit=1, resource_cap=resource_cap))


def abductive_supports(
    program: GroundProgram,
    before_step: Optional[int] = None,
    max_size: Optional[int] = None,
    resource_cap: Optional[int] = None,
) -> List[AbductiveSupport]:
    """All subset-minimal sets of cr-rules that restore consistency.

    Supports are tried by increasing cardinality, ties broken by rule text,
    and supersets of found supports are skipped.

    Args:
        program: Ground program with cr-rules
        before_step: Only consider cr-rules for steps strictly before this one
        max_size: Largest support to try (default: all cr-rules)
        resource_cap: Atom cap passed on to the solver

    Returns:
        The supports in search order; ``[AbductiveSupport()]`` if the regular part is consistent

    Raises:
        AssumptionViolated: if some support leaves more than one answer set
    """
    regular = program.regular()
    if answer_sets(regular, limit=1, resource_cap=resource_cap):
        return [AbductiveSupport()]

    candidates = sorted(program.cr_rules, key=lambda r: r.text)
    if before_step is not None:
        candidates = [r for r in candidates if r.head.step is not None and r.head.step < before_step]
    largest = len(candidates) if max_size is None else min(max_size, len(candidates))
    logger.debug(f"searching abductive supports among {len(candidates)} cr-rules")

    found: List[AbductiveSupport] = []
    for size in range(1, largest + 1):
        for combo in combinations(candidates, size):
            chosen = set(combo)
            if any(set(s.rules) <= chosen for s in found):
                continue
            extended = regular.with_rules(r.regularized() for r in combo)
            models = answer_sets(extended, limit=2, resource_cap=resource_cap)
            if not models:
                continue
            support = AbductiveSupport(tuple(combo))
            if len(models) > 1:
                raise AssumptionViolated(str(support), len(models))
            found.append(support)
    logger.info(f"found {len(found)} abductive supports")
    return found


@dataclass(frozen=True)
class DeterminismVerdict:
    deterministic: bool
    offending_gamma: Optional[Interpretation] = None
    answer_set_count: int = 1
    checked: int = 0
    skipped: int = 0

    def __bool__(self) -> bool:
        return self.deterministic


def is_deterministic(
    theory: CausalTheory,
    bounds: Bounds,
    inject: Optional[Callable[[Interpretation], Iterable[GroundRule]]] = None,
) -> DeterminismVerdict:
    """Check that every interpretation within bounds has exactly one answer set.

    Maps under which the reduced program is inconsistent are not
    interpretations and are skipped. ``inject`` may add extra ground rules
    to the program of each interpretation.

    Raises:
        NoInterpretation: if no map within bounds yields a consistent program
    """
    checked = 0
    skipped = 0
    for gamma in enumerate_interpretations(theory, bounds):
        program = ground(theory, gamma, bounds)
        if inject is not None:
            program = program.with_rules(inject(gamma))
        models = answer_sets(program, limit=2, resource_cap=bounds.resource_cap)
        if not models:
            skipped += 1
            continue
        checked += 1
        if len(models) > 1:
            logger.info(f"interpretation {gamma} has more than one answer set")
            return DeterminismVerdict(False, gamma, len(models), checked, skipped)
    if not checked:
        raise NoInterpretation(f"no interpretation within {bounds.describe()}")
    return DeterminismVerdict(True, None, 1, checked, skipped)


def models_by_interpretation(
    theory: CausalTheory, bounds: Bounds, limit: Optional[int] = None
) -> List[Tuple[Interpretation, List[AnswerSet], GroundProgram]]:
    """Ground and solve the theory once per interpretation within bounds."""
    results = []
    for gamma in enumerate_interpretations(theory, bounds):
        program = ground(theory, gamma, bounds)
        models = answer_sets(program, limit=limit, resource_cap=bounds.resource_cap)
        logger.info(f"{gamma}: {len(models)} answer sets")
        results.append((gamma, models, program))
    return results

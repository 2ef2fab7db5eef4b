"""
Actual-causality analysis of deterministic W theories.

Works on the unique answer set of a concrete theory: changes, proofs and
tight proofs, causal chains, inflection points and deliberate causes, and the
causal explanation of unexpected observations through abductive supports.
Abstract theories are analysed per interpretation and summarised into a
verdict that holds for every interpretation within bounds.
"""

import logging
import re
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from multiprocessing import Pool
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from .errors import (
    AssumptionViolated,
    NoAnswerSet,
    NoInterpretation,
    NotDeterministic,
    NotStronglyConsistent,
    NotUnexpected,
    PatternMatchesNoChange,
    TargetNotInModel,
    TruncatedNotDeterministic,
)
from .grounding import (
    Bounds,
    ConcreteTheory,
    GroundProgram,
    GroundRule,
    Interpretation,
    build_program,
    enumerate_interpretations,
    reduce,
)
from .model import (
    DO,
    OCCURS,
    TRUE,
    CausalTheory,
    Do,
    GroundAtom,
    Obs,
    SymbolKind,
    Term,
    evaluate,
    literal_sort_key,
    normalize_value,
    render_ground,
    substitute,
)
from .solver import AbductiveSupport, AnswerSet, abductive_supports, answer_sets, is_strongly_consistent

logger = logging.getLogger(__name__)

# upper bound on distinct derivation skeletons kept per atom
MAX_DERIVATIONS = 256

# distinct concrete theories kept solved per process
SOLVE_CACHE_SIZE = 256

_NAME = re.compile(r"[a-z][A-Za-z0-9_]*")


@dataclass
class TheoryInstance:
    """A concrete theory with its ground program and unique answer set.

    Instances whose concrete theories differ only in the interpretation share
    the program, the answer set and the proof and truncation caches.
    """

    theory: CausalTheory
    concrete: ConcreteTheory
    program: GroundProgram
    answer_set: AnswerSet
    bounds: Bounds
    _proofs: Dict[FrozenSet[GroundAtom], List["Proof"]] = field(default_factory=dict, repr=False)
    _truncations: Dict[int, Optional["TheoryInstance"]] = field(default_factory=dict, repr=False)
    _chains: Dict[GroundAtom, "ChainSearch"] = field(default_factory=dict, repr=False)

    @property
    def gamma(self) -> Interpretation:
        return self.concrete.gamma


@dataclass
class _Solved:
    program: GroundProgram
    answer_set: AnswerSet
    proofs: Dict = field(default_factory=dict)
    truncations: Dict = field(default_factory=dict)
    chains: Dict = field(default_factory=dict)


@lru_cache(maxsize=SOLVE_CACHE_SIZE)
def _solve_shared(concrete: ConcreteTheory, resource_cap: int):
    """The solved state of a concrete theory, or its number of answer sets when that is not one."""
    program = build_program(concrete)
    models = answer_sets(program, limit=2, resource_cap=resource_cap)
    if len(models) != 1:
        return len(models)
    return _Solved(program, models[0])


def solve_concrete(theory: CausalTheory, concrete: ConcreteTheory, bounds: Bounds) -> TheoryInstance:
    """Build and solve a concrete theory that must be deterministic.

    Programs are built and solved once per process for each distinct concrete
    theory; the interpretation only labels the result.

    Raises:
        NoAnswerSet: if the program is inconsistent
        NotDeterministic: if it has more than one answer set
    """
    solved = _solve_shared(replace(concrete, gamma=Interpretation(), dropped=()), bounds.resource_cap)
    if isinstance(solved, int):
        if solved == 0:
            raise NoAnswerSet(concrete.gamma)
        raise NotDeterministic(concrete.gamma, solved)
    return TheoryInstance(
        theory,
        concrete,
        solved.program,
        solved.answer_set,
        bounds,
        solved.proofs,
        solved.truncations,
        solved.chains,
    )


def clear_solve_cache() -> None:
    _solve_shared.cache_clear()


def instantiate(
    theory: CausalTheory, gamma: Interpretation, bounds: Bounds, extra_dos: Iterable[GroundAtom] = ()
) -> TheoryInstance:
    """Reduce under ``gamma``, optionally add ground do-atoms, and solve."""
    concrete = reduce(theory, gamma, bounds)
    extra = tuple(extra_dos)
    if extra:
        concrete = concrete.with_facts(dos=extra)
    return solve_concrete(theory, concrete, bounds)


# ---------------------------------------------------------------------------
# Changes


@dataclass(frozen=True)
class Change:
    atom: GroundAtom
    kind: SymbolKind

    @property
    def step(self) -> Optional[int]:
        return self.atom.step

    def __str__(self) -> str:
        return self.atom.text


def changes(instance: TheoryInstance) -> List[Change]:
    """All changes in the unique answer set, sorted by time-step then text.

    Inertial atoms change when the previous value differs or is undefined;
    action atoms (value true), transient and time-independent fluents count
    whenever they hold. Step 0 of an inertial fluent is the initial
    situation and never a change.
    """
    model = instance.answer_set
    sig = instance.concrete.signature
    found = []
    for atom in model.atoms:
        if not atom.is_function_atom or atom.negated:
            continue
        kind = sig.kind_of(atom.symbol)
        if kind is None or kind is SymbolKind.STATIC:
            continue
        if kind is SymbolKind.ACTION:
            if atom.value != TRUE:
                continue
        elif kind is SymbolKind.INERTIAL:
            if atom.step is None or atom.step == 0:
                continue
            if model.value_of(atom.symbol, atom.args, atom.step - 1) == atom.value:
                continue
        found.append(Change(atom, kind))
    horizon = instance.concrete.horizon
    return sorted(found, key=lambda c: (horizon + 1 if c.step is None else c.step, c.atom.text))


def matches(change: Change, pattern: str) -> bool:
    """Match a change against a bare symbol or action name, or a ground atom text."""
    pattern = "".join(pattern.split())
    if _NAME.fullmatch(pattern):
        atom = change.atom
        if atom.symbol == OCCURS:
            return atom.args[0].name == pattern
        return atom.symbol == pattern
    return "".join(change.atom.text.split()) == pattern


# ---------------------------------------------------------------------------
# Proofs


@dataclass(frozen=True)
class ProofElement:
    """One element of a proof: an axiom atom, a rule, or the head of an earlier rule."""

    kind: str
    atom: Optional[GroundAtom] = None
    rule: Optional[GroundRule] = None

    @property
    def step(self) -> int:
        if self.rule is not None:
            step = self.rule.provenance.step
            if step is None and self.rule.head is not None:
                step = self.rule.head.step
        else:
            step = self.atom.step
        return -1 if step is None else step

    def sort_key(self) -> Tuple:
        order = {"axiom": 0, "rule": 1, "atom": 2}[self.kind]
        provenance = self.rule.provenance.sort_key() if self.rule is not None else (0, 0, "", -1)
        text = self.rule.text if self.rule is not None else self.atom.text
        return (self.step, order, provenance, text)

    def __str__(self) -> str:
        if self.rule is None:
            return self.atom.text
        provenance = self.rule.provenance
        if provenance.kind == "mechanism":
            return f"{provenance.ident} at I={provenance.step}"
        if provenance.kind == "axiom":
            return f"axiom ({provenance.ident}) {self.rule.text}"
        return f"fact {self.rule.text}"


@dataclass(frozen=True)
class Proof:
    """A subsequence-minimal derivation of a set of atoms, in canonical order."""

    elements: Tuple[ProofElement, ...]
    target: FrozenSet[GroundAtom]

    @cached_property
    def mechanisms(self) -> FrozenSet[GroundRule]:
        return frozenset(e.rule for e in self.elements if e.rule is not None and e.rule.is_mechanism)

    @cached_property
    def do_atoms(self) -> FrozenSet[GroundAtom]:
        return frozenset(e.atom for e in self.elements if e.kind == "axiom" and e.atom.symbol == DO)

    @property
    def skeleton(self) -> Tuple[FrozenSet[GroundRule], FrozenSet[GroundAtom]]:
        return self.mechanisms, self.do_atoms

    def is_valid(self, model: AnswerSet, axioms: FrozenSet[GroundAtom]) -> bool:
        return _valid_sequence(self.elements, self.target, model, axioms)

    def is_minimal(self, model: AnswerSet, axioms: FrozenSet[GroundAtom]) -> bool:
        """No single-element deletion leaves a valid proof."""
        for i in range(len(self.elements)):
            shorter = self.elements[:i] + self.elements[i + 1:]
            if _valid_sequence(shorter, self.target, model, axioms):
                return False
        return True

    def __str__(self) -> str:
        return "\n".join(str(e) for e in self.elements)


def _valid_sequence(
    elements: Sequence[ProofElement], target: FrozenSet[GroundAtom], model: AnswerSet, axioms: FrozenSet[GroundAtom]
) -> bool:
    atoms = set()
    heads = set()
    for element in elements:
        if element.kind == "rule":
            rule = element.rule
            if rule.head is None or rule.head not in model:
                return False
            if any(a not in atoms for a in rule.pos) or any(a in model for a in rule.neg):
                return False
            heads.add(rule.head)
        elif element.kind == "axiom":
            if element.atom not in axioms:
                return False
            atoms.add(element.atom)
        else:
            if element.atom not in heads:
                return False
            atoms.add(element.atom)
    return target <= atoms


# derivation: atom -> justifying rule, None for axioms
Derivation = Dict[GroundAtom, Optional[GroundRule]]


def _skeleton(derivation: Derivation) -> FrozenSet:
    parts = set()
    for atom, rule in derivation.items():
        if rule is None:
            if atom.symbol == DO:
                parts.add(atom)
        elif rule.is_mechanism:
            parts.add(rule)
    return frozenset(parts)


def _extract(derivation: Derivation, roots: Sequence[GroundAtom]) -> Optional[Derivation]:
    """Keep what the roots need; None if the justifications form a cycle."""
    kept: Derivation = {}
    state: Dict[GroundAtom, int] = {}

    def visit(atom: GroundAtom) -> bool:
        if state.get(atom) == 2:
            return True
        if state.get(atom) == 1 or atom not in derivation:
            return False
        state[atom] = 1
        rule = derivation[atom]
        if rule is not None:
            for p in rule.pos:
                if not visit(p):
                    return False
        state[atom] = 2
        kept[atom] = rule
        return True

    for root in roots:
        if not visit(root):
            return None
    return kept


def _merge(first: Derivation, second: Derivation, roots: Sequence[GroundAtom]) -> List[Derivation]:
    if all(first.get(k, v) == v for k, v in second.items()):
        return [{**first, **second}]
    merged = []
    for winner, loser in ((first, second), (second, first)):
        pruned = _extract({**loser, **winner}, roots)
        if pruned is not None:
            merged.append(pruned)
    return merged


class _DerivationSearch:
    """Backward chaining over the answer set, one derivation kept per skeleton."""

    def __init__(self, instance: TheoryInstance):
        model = instance.answer_set
        self.axioms = instance.concrete.axioms
        self.supports: Dict[GroundAtom, List[GroundRule]] = {}
        for rule in instance.program.rules:
            if rule.cr or rule.head is None or rule.head in self.axioms:
                continue
            if rule.head in model and all(a in model for a in rule.pos) and not any(a in model for a in rule.neg):
                self.supports.setdefault(rule.head, []).append(rule)
        for rules in self.supports.values():
            rules.sort(key=lambda r: (r.provenance.sort_key(), r.text))
        self.memo: Dict[GroundAtom, Dict[FrozenSet, Derivation]] = {}
        self.truncated = False

    def _limit(self, options: Dict[FrozenSet, Derivation], atom: GroundAtom) -> Dict[FrozenSet, Derivation]:
        if len(options) <= MAX_DERIVATIONS:
            return options
        if not self.truncated:
            logger.warning(f"more than {MAX_DERIVATIONS} derivations of {atom}; keeping the smallest")
            self.truncated = True
        kept = sorted(options.items(), key=lambda kv: (len(kv[0]), sorted(str(x) for x in kv[0])))
        return dict(kept[:MAX_DERIVATIONS])

    def derivations(
        self, atom: GroundAtom, stack: FrozenSet[GroundAtom] = frozenset()
    ) -> Tuple[Dict[FrozenSet, Derivation], bool]:
        """Derivations of ``atom`` keyed by skeleton, and whether a cycle was cut."""
        if atom in self.axioms:
            derivation: Derivation = {atom: None}
            return {_skeleton(derivation): derivation}, False
        if atom in self.memo:
            return self.memo[atom], False
        inner = stack | {atom}
        options: Dict[FrozenSet, Derivation] = {}
        cut = False
        for rule in self.supports.get(atom, ()):
            if any(p in inner for p in rule.pos):
                cut = True
                continue
            start: Derivation = {atom: rule}
            partial = {_skeleton(start): start}
            for p in dict.fromkeys(rule.pos):
                sub, sub_cut = self.derivations(p, inner)
                cut = cut or sub_cut
                combined: Dict[FrozenSet, Derivation] = {}
                for left in partial.values():
                    for right in sub.values():
                        for merged in _merge(left, right, (atom,)):
                            combined.setdefault(_skeleton(merged), merged)
                partial = self._limit(combined, atom)
                if not partial:
                    break
            for key, derivation in partial.items():
                options.setdefault(key, derivation)
        options = self._limit(options, atom)
        if not cut:
            self.memo[atom] = options
        return options, cut


def _element_for(atom: GroundAtom, derivation: Derivation) -> ProofElement:
    if derivation[atom] is None:
        return ProofElement("axiom", atom)
    return ProofElement("atom", atom)


def _to_proof(derivation: Derivation, target: FrozenSet[GroundAtom]) -> Proof:
    graph = nx.DiGraph()
    for atom, rule in derivation.items():
        node = _element_for(atom, derivation)
        graph.add_node(node)
        if rule is None:
            continue
        rule_node = ProofElement("rule", rule=rule)
        graph.add_edge(rule_node, node)
        for p in rule.pos:
            graph.add_edge(_element_for(p, derivation), rule_node)
    order = nx.lexicographical_topological_sort(graph, key=lambda e: e.sort_key())
    return Proof(tuple(order), target)


def _minimize(proof: Proof, model: AnswerSet, axioms: FrozenSet[GroundAtom]) -> Proof:
    """Delete single elements while the sequence stays a proof."""
    elements = proof.elements
    changed = True
    while changed:
        changed = False
        for i in range(len(elements)):
            shorter = elements[:i] + elements[i + 1:]
            if _valid_sequence(shorter, proof.target, model, axioms):
                elements = shorter
                changed = True
                break
    return proof if elements == proof.elements else Proof(elements, proof.target)


def proofs(instance: TheoryInstance, target: Iterable[GroundAtom]) -> List[Proof]:
    """All proofs of a set of atoms, one per skeleton of mechanisms and do-atoms.

    Args:
        instance: Solved concrete theory
        target: Atoms of the unique answer set to prove

    Returns:
        Proofs ordered by number of mechanisms, then length, then text

    Raises:
        TargetNotInModel: if some target atom is not in the answer set
    """
    targets = tuple(sorted(set(target), key=literal_sort_key))
    for atom in targets:
        if atom not in instance.answer_set:
            raise TargetNotInModel(f"{atom} is not in the answer set under {instance.gamma}")
    key = frozenset(targets)
    if key in instance._proofs:
        return instance._proofs[key]

    search = _DerivationSearch(instance)
    combined: Dict[FrozenSet, Derivation] = {frozenset(): {}}
    for count, atom in enumerate(targets, start=1):
        sub, _ = search.derivations(atom)
        step: Dict[FrozenSet, Derivation] = {}
        for left in combined.values():
            for right in sub.values():
                for merged in _merge(left, right, targets[:count]):
                    step.setdefault(_skeleton(merged), merged)
        combined = step

    model = instance.answer_set
    axioms = instance.concrete.axioms
    best: Dict[Tuple, Proof] = {}
    for derivation in combined.values():
        proof = _minimize(_to_proof(derivation, key), model, axioms)
        current = best.get(proof.skeleton)
        if current is None or (len(proof.elements), str(proof)) < (len(current.elements), str(current)):
            best[proof.skeleton] = proof
    result = sorted(best.values(), key=lambda p: (len(p.mechanisms), len(p.elements), str(p)))
    instance._proofs[key] = result
    logger.debug(f"{len(result)} proofs of {', '.join(a.text for a in targets)} under {instance.gamma}")
    return result


def tight_proofs(proof_set: Sequence[Proof]) -> List[Proof]:
    """Proofs whose mechanism set strictly contains no other proof's mechanism set."""
    return [p for p in proof_set if not any(q.mechanisms < p.mechanisms for q in proof_set)]


# ---------------------------------------------------------------------------
# Causal chains and inflection points


def mechanism_name(rule: GroundRule) -> str:
    return str(rule.provenance)


@dataclass(frozen=True)
class CausalChain:
    """do-atoms from the start step on, the mechanisms after it, and the final atom."""

    start: int
    do_atoms: Tuple[GroundAtom, ...]
    mechanisms: Tuple[GroundRule, ...]
    target: GroundAtom
    proof: Optional[Proof] = field(default=None, compare=False, repr=False)

    @cached_property
    def elements(self) -> FrozenSet:
        return frozenset(self.do_atoms) | frozenset(self.mechanisms) | {self.target}

    @property
    def initiators(self) -> FrozenSet[GroundAtom]:
        return frozenset(self.do_atoms)

    def __str__(self) -> str:
        parts = [a.text for a in self.do_atoms] + [mechanism_name(m) for m in self.mechanisms] + [self.target.text]
        return ", ".join(parts)


def _by_step(items: Iterable, step: Callable) -> List:
    return sorted(items, key=lambda x: (step(x), str(x) if not isinstance(x, GroundRule) else x.text))


def causal_chains(instance: TheoryInstance, i: int, atom: GroundAtom) -> List[CausalChain]:
    """Chains from step ``i`` to ``atom``, one per tight proof with a do-atom at ``i``.

    Mechanisms are collected from step ``i`` on, so a mechanism fired by the
    initiating action at ``i`` itself is part of the chain.
    """
    found: Dict[FrozenSet, CausalChain] = {}
    for proof in tight_proofs(proofs(instance, [atom])):
        at_start = sorted((a for a in proof.do_atoms if a.step == i), key=literal_sort_key)
        if not at_start:
            continue
        first = at_start[0]
        rest = _by_step((a for a in proof.do_atoms if a.step >= i and a != first), lambda a: a.step)
        mechanisms = _by_step((m for m in proof.mechanisms if m.provenance.step >= i), lambda m: m.provenance.step)
        chain = CausalChain(i, (first, *rest), tuple(mechanisms), atom, proof)
        found.setdefault(chain.elements, chain)
    return sorted(found.values(), key=str)


def more_informative(first: CausalChain, second: CausalChain) -> bool:
    """``first`` starts strictly earlier and contains every element of ``second``."""
    return first.start < second.start and second.elements <= first.elements


def _truncated(instance: TheoryInstance, step: int) -> Optional[TheoryInstance]:
    """The instance without do-atoms after ``step``; None when that theory is inconsistent.

    Raises:
        TruncatedNotDeterministic: if the truncated theory has several answer sets
    """
    if step in instance._truncations:
        return instance._truncations[step]
    concrete = instance.concrete.truncated(step)
    if concrete.dos == instance.concrete.dos:
        result: Optional[TheoryInstance] = instance
    else:
        try:
            result = solve_concrete(instance.theory, concrete, instance.bounds)
        except NoAnswerSet:
            logger.warning(f"scenario truncated after step {step} has no answer set under {instance.gamma}")
            result = None
        except NotDeterministic:
            raise TruncatedNotDeterministic(step, instance.gamma)
    instance._truncations[step] = result
    return result


@dataclass
class ChainSearch:
    """Candidate inflection points of one atom with their chains.

    ``undecided`` holds the steps with a chain whose truncated theory has
    several answer sets; they are not candidates.
    """

    candidates: Dict[int, List[CausalChain]]
    undecided: Tuple[int, ...] = ()


def search_chains(instance: TheoryInstance, atom: GroundAtom) -> ChainSearch:
    if atom in instance._chains:
        return instance._chains[atom]
    steps = sorted({a.step for p in tight_proofs(proofs(instance, [atom])) for a in p.do_atoms})
    candidates = {}
    undecided = []
    for i in steps:
        chains = causal_chains(instance, i, atom)
        if not chains:
            continue
        try:
            truncated = _truncated(instance, i)
        except TruncatedNotDeterministic as e:
            logger.warning(f"{e} under {instance.gamma}; step {i} is no candidate for {atom}")
            undecided.append(i)
            continue
        if truncated is None or atom not in truncated.answer_set:
            logger.debug(f"step {i} fails the truncation test for {atom}")
            continue
        if truncated.program is not instance.program and not causal_chains(truncated, i, atom):
            logger.debug(f"no chain from {i} to {atom} once later actions are removed")
            continue
        candidates[i] = chains
    result = ChainSearch(candidates, tuple(undecided))
    instance._chains[atom] = result
    return result


def _candidate_chains(instance: TheoryInstance, change: Change) -> Dict[int, List[CausalChain]]:
    return search_chains(instance, change.atom).candidates


def candidate_inflection_points(instance: TheoryInstance, change: Change) -> List[int]:
    """Steps with a chain to the change both in the full theory and in the
    theory without do-atoms after that step."""
    return sorted(_candidate_chains(instance, change))


def _inflection(candidates: Dict[int, List[CausalChain]]) -> List[int]:
    others = [chain for chains in candidates.values() for chain in chains]
    points = []
    for i, chains in sorted(candidates.items()):
        if any(not any(more_informative(o, chain) for o in others) for chain in chains):
            points.append(i)
    return points


def inflection_points(instance: TheoryInstance, change: Change) -> List[int]:
    """Candidates with a chain that no chain from another candidate is more informative than."""
    return _inflection(_candidate_chains(instance, change))


# ---------------------------------------------------------------------------
# Causes


@dataclass(frozen=True)
class Cause:
    do_atoms: Tuple[GroundAtom, ...]
    point: int
    chain: CausalChain = field(compare=False)

    def __str__(self) -> str:
        return "{" + ", ".join(a.text for a in self.do_atoms) + "}"


def _causes_from(candidates: Dict[int, List[CausalChain]]) -> List[Cause]:
    found: Dict[FrozenSet[GroundAtom], Cause] = {}
    for point in _inflection(candidates):
        for chain in candidates[point]:
            found.setdefault(chain.initiators, Cause(chain.do_atoms, point, chain))
    return sorted(found.values(), key=str)


def causes_of(instance: TheoryInstance, change: Change) -> List[Cause]:
    """Deliberate causes of one change in a solved concrete theory."""
    return _causes_from(_candidate_chains(instance, change))


def _surface_step(term: Term) -> str:
    return str(term).replace("#", "").replace(" ", "")


def _surface_do(do: Do) -> str:
    sign = "" if do.positive else "neg "
    return f"do({sign}{render_ground(do.action)},{_surface_step(do.step)})"


def symbolic_do(atom: GroundAtom, theory: CausalTheory, gamma: Interpretation) -> str:
    """The scenario do-atom a ground do-atom comes from, in surface form."""
    values = gamma.as_dict()
    for do in theory.scenario.dos:
        if do.positive != (atom.value == TRUE):
            continue
        if normalize_value(substitute(do.action, abstracts=values)) != atom.args[0]:
            continue
        if evaluate(substitute(do.step, abstracts=values)) == atom.step:
            return _surface_do(do)
    return atom.text


@dataclass(frozen=True)
class GammaCauses:
    """Causes of one matching change under one interpretation."""

    gamma: Interpretation
    ordinal: int
    change: Change
    causes: Tuple[Cause, ...]
    candidates: Tuple[int, ...]
    points: Tuple[int, ...]
    symbolic: Tuple[Tuple[str, ...], ...]
    undecided: Tuple[int, ...] = ()


@dataclass(frozen=True)
class Verdict:
    """Symbolic causes shared by every interpretation that has the change."""

    ordinal: int
    causes: Tuple[Tuple[str, ...], ...]
    interpretations: int


@dataclass(frozen=True)
class CauseReport:
    pattern: str
    bounds: Bounds
    results: Tuple[GammaCauses, ...]
    verdicts: Tuple[Verdict, ...]
    checked: int
    skipped: Tuple[Tuple[Interpretation, str], ...] = ()

    @property
    def stable(self) -> bool:
        """Whether every interpretation reported the same symbolic causes."""
        by_ordinal: Dict[int, set] = {}
        for result in self.results:
            by_ordinal.setdefault(result.ordinal, set()).add(result.symbolic)
        return all(len(v) == 1 for v in by_ordinal.values())


def _causes_for_gamma(args: Tuple[CausalTheory, Interpretation, Bounds, str]):
    theory, gamma, bounds, pattern = args
    try:
        instance = instantiate(theory, gamma, bounds)
    except NoAnswerSet:
        return gamma, "inconsistent", []
    matching = [c for c in changes(instance) if matches(c, pattern)]
    if not matching:
        return gamma, "no matching change", []
    results = []
    for ordinal, change in enumerate(matching):
        search = search_chains(instance, change.atom)
        candidates = search.candidates
        found = _causes_from(candidates)
        symbolic = tuple(sorted({tuple(sorted(symbolic_do(a, theory, gamma) for a in c.do_atoms)) for c in found}))
        results.append(
            GammaCauses(
                gamma=gamma,
                ordinal=ordinal,
                change=change,
                causes=tuple(found),
                candidates=tuple(sorted(candidates)),
                points=tuple(_inflection(candidates)),
                symbolic=symbolic,
                undecided=search.undecided,
            )
        )
    return gamma, None, results


ProgressCallback = Callable[[str, int, int], None]


def map_interpretations(
    func: Callable, items: Sequence, workers: int = 1, progress: Optional[ProgressCallback] = None
) -> List:
    """Apply ``func`` per interpretation, on a process pool when ``workers`` > 1; order is kept.

    ``progress`` is called with (message, done, total) after each item.
    """
    total = len(items)

    def collect(outputs: Iterable) -> List:
        results = []
        for done, output in enumerate(outputs, start=1):
            results.append(output)
            if progress:
                progress(f"interpretation {done} of {total}", done, total)
        return results

    if workers <= 1 or total <= 1:
        return collect(map(func, items))
    workers = min(workers, total)
    # neighbouring interpretations share solved truncations
    chunksize = max(1, total // (workers * 4))
    with Pool(workers) as pool:
        return collect(pool.imap(func, items, chunksize))


def causes(
    theory: CausalTheory,
    pattern: str,
    bounds: Bounds,
    workers: int = 1,
    progress: Optional[ProgressCallback] = None,
    require_change: bool = True,
) -> CauseReport:
    """Deliberate causes of the changes matching ``pattern``, for every interpretation.

    A symbolic cause enters the verdict for the k-th matching change when it
    is a cause under every interpretation that has such a change. With
    ``require_change`` off, a pattern without changes gives a report with no
    verdicts instead of an error.

    Raises:
        NoInterpretation: if no interpretation within bounds is consistent
        NotDeterministic: if some interpretation has several answer sets
        PatternMatchesNoChange: if no interpretation has a matching change
    """
    gammas = list(enumerate_interpretations(theory, bounds))
    logger.info(f"analysing {len(gammas)} interpretations within {bounds.describe()}")
    outcomes = map_interpretations(_causes_for_gamma, [(theory, g, bounds, pattern) for g in gammas], workers, progress)

    results: List[GammaCauses] = []
    skipped = []
    consistent = 0
    for gamma, reason, found in outcomes:
        if reason != "inconsistent":
            consistent += 1
        if reason is not None:
            skipped.append((gamma, reason))
            continue
        results.extend(found)
    if not consistent:
        raise NoInterpretation(f"no interpretation within {bounds.describe()}")
    if not results and require_change:
        raise PatternMatchesNoChange(pattern)

    by_ordinal: Dict[int, List[GammaCauses]] = {}
    for result in results:
        by_ordinal.setdefault(result.ordinal, []).append(result)
    verdicts = []
    for ordinal, items in sorted(by_ordinal.items()):
        common = set(items[0].symbolic)
        for item in items[1:]:
            common &= set(item.symbolic)
        verdicts.append(Verdict(ordinal, tuple(sorted(common)), len(items)))
    if skipped:
        logger.info(f"{len(skipped)} interpretations skipped")
    return CauseReport(pattern, bounds, tuple(results), tuple(verdicts), len(gammas) - len(skipped), tuple(skipped))


# ---------------------------------------------------------------------------
# Explanations


@dataclass(frozen=True)
class Explanation:
    gamma: Interpretation
    support: AbductiveSupport
    added: Tuple[GroundAtom, ...]
    change: Optional[Change]
    causes: Tuple[Cause, ...]

    def __str__(self) -> str:
        return ", ".join(a.text for a in self.added)


@dataclass(frozen=True)
class ExplanationReport:
    observation: str
    bounds: Bounds
    explanations: Tuple[Explanation, ...]
    compact: Tuple[str, ...] = ()
    expected: Tuple[Interpretation, ...] = ()


def _last_change(instance: TheoryInstance, observed: GroundAtom) -> Optional[Change]:
    fluent = observed.args[0]
    step = observed.step
    found = [
        c
        for c in changes(instance)
        if c.atom.symbol == fluent.name
        and c.atom.args == fluent.args
        and c.atom.value == observed.value
        and (step is None or c.step is None or c.step <= step)
    ]
    return found[-1] if found else None


def compact_ranges(explanations: Sequence[Explanation]) -> List[str]:
    """Render runs of single-action explanations over consecutive steps as one range."""
    steps: Dict[Tuple[str, str], List[int]] = {}
    for explanation in explanations:
        if len(explanation.added) != 1:
            continue
        atom = explanation.added[0]
        steps.setdefault((str(explanation.gamma), render_ground(atom.args[0])), []).append(atom.step)
    ranges = []
    for (_, action), values in sorted(steps.items()):
        values = sorted(set(values))
        run = [values[0]]
        for value in values[1:] + [None]:
            if value is not None and value == run[-1] + 1:
                run.append(value)
                continue
            if len(run) > 1:
                ranges.append(f"do({action},t), {run[0]} <= t < {run[-1] + 1}")
            if value is not None:
                run = [value]
    return ranges


def explain_observation(theory: CausalTheory, observation: Obs, bounds: Bounds) -> ExplanationReport:
    """Causal explanations of an observation the scenario does not predict.

    For every interpretation under which the scenario is strongly consistent
    but the observation is not, each abductive support becomes a set of
    do-atoms; the explanation is the cause of the last change of the fluent
    to the observed value up to the observed step.

    Raises:
        NotStronglyConsistent: if the scenario alone has no answer set under any interpretation
        NotUnexpected: if the observation is predicted under every interpretation
        AssumptionViolated: if a support does not give exactly one answer set
    """
    extended = theory.with_scenario(theory.scenario.with_facts(observations=[observation]))
    explanations: List[Explanation] = []
    expected: List[Interpretation] = []
    consistent = 0
    for gamma in enumerate_interpretations(extended, bounds):
        base = reduce(theory, gamma, bounds)
        if not is_strongly_consistent(build_program(base), bounds.resource_cap):
            logger.info(f"scenario has no answer set under {gamma}")
            continue
        consistent += 1
        with_obs = reduce(extended, gamma, bounds)
        if len(with_obs.observations) == len(base.observations):
            logger.warning(f"observation {observation} falls outside the horizon under {gamma}")
            continue
        program = build_program(with_obs)
        if answer_sets(program, limit=1, resource_cap=bounds.resource_cap):
            expected.append(gamma)
            continue
        observed = with_obs.observations[-1]
        supports = abductive_supports(program, before_step=observed.step, resource_cap=bounds.resource_cap)
        for support in supports:
            added = tuple(GroundAtom(DO, head.args, head.step, TRUE) for head in support.heads)
            try:
                instance = solve_concrete(extended, with_obs.with_facts(dos=added), bounds)
            except NotDeterministic as exc:
                raise AssumptionViolated(str(support), exc.count or 2)
            except NoAnswerSet:
                raise AssumptionViolated(str(support), 0)
            change = _last_change(instance, observed)
            found = tuple(causes_of(instance, change)) if change is not None else ()
            explanations.append(Explanation(gamma, support, added, change, found))

    if not consistent:
        raise NotStronglyConsistent(f"scenario has no answer set within {bounds.describe()}")
    if not explanations and expected:
        raise NotUnexpected(f"{observation} is already predicted by the scenario")
    return ExplanationReport(str(observation), bounds, tuple(explanations), tuple(compact_ranges(explanations)), tuple(expected))

import random

import pytest

from src.errors import NoInterpretation, ResourceLimitExceeded
from src.grounding import GroundProgram, GroundRule, Provenance, build_program, ground, reduce
from src.model import GroundAtom
from src.parser import parse_observation
from src.solver import (
    abductive_supports,
    answer_sets,
    is_deterministic,
    is_stable,
    is_strongly_consistent,
    models_by_interpretation,
    resource_cap_from_env,
)
from tests.conftest import STORIES, gamma, load, small
from tests.oracle import stable_models, stable_models_by_guessing, well_founded


def atom(name: str) -> GroundAtom:
    return GroundAtom(name)


def program(*rules: GroundRule) -> GroundProgram:
    return GroundProgram(tuple(rules), 0)


def rule(head, pos=(), neg=(), cr=False) -> GroundRule:
    return GroundRule(
        atom(head) if head else None,
        tuple(atom(a) for a in pos),
        tuple(atom(a) for a in neg),
        cr=cr,
    )


def as_sets(models):
    return sorted((frozenset(m.atoms) for m in models), key=lambda m: sorted(a.text for a in m))


def test_even_loop_has_two_answer_sets():
    models = answer_sets(program(rule("a", neg=["b"]), rule("b", neg=["a"])))
    assert as_sets(models) == [frozenset({atom("a")}), frozenset({atom("b")})]


def test_odd_loop_has_none():
    assert answer_sets(program(rule("a", neg=["a"]))) == []


def test_constraint_removes_models():
    models = answer_sets(program(rule("a", neg=["b"]), rule("b", neg=["a"]), rule(None, pos=["a"])))
    assert as_sets(models) == [frozenset({atom("b")})]


def test_positive_loop_is_unfounded():
    models = answer_sets(program(rule("a", pos=["b"]), rule("b", pos=["a"])))
    assert as_sets(models) == [frozenset()]


def test_limit_stops_early():
    loops = program(rule("a", neg=["b"]), rule("b", neg=["a"]), rule("c", neg=["d"]), rule("d", neg=["c"]))
    assert len(answer_sets(loops)) == 4
    assert len(answer_sets(loops, limit=2)) == 2


def test_cr_rules_are_ignored_by_answer_sets():
    models = answer_sets(program(rule("a", cr=True), rule(None, neg=["a"])))
    assert models == []


def random_program(rng: random.Random) -> GroundProgram:
    names = [f"p{i}" for i in range(rng.randint(1, 10))]
    rules = []
    for _ in range(rng.randint(1, 2 * len(names))):
        head = None if rng.random() < 0.1 else rng.choice(names)
        pos = rng.sample(names, rng.randint(0, min(2, len(names))))
        neg = rng.sample(names, rng.randint(0, min(2, len(names))))
        rules.append(rule(head, pos, neg))
    return program(*rules)


@pytest.mark.parametrize("seed", range(200))
def test_random_programs_match_oracle(seed):
    rng = random.Random(seed)
    prog = random_program(rng)
    assert len(prog.atoms) <= 18
    assert as_sets(answer_sets(prog)) == stable_models(prog.rules)


@pytest.mark.parametrize("story", STORIES)
def test_corpus_models_match_the_reduct_oracle(story):
    theory = load(story)
    results = models_by_interpretation(theory, small())
    assert results
    for gamma_, models, prog in results:
        rules = [r for r in prog.rules if not r.cr]
        assert as_sets(models) == stable_models_by_guessing(rules), f"under {gamma_}"
        for model in models:
            assert is_stable(rules, model.atoms)


def test_guessing_oracle_agrees_with_brute_force():
    for seed in range(50):
        prog = random_program(random.Random(seed))
        assert stable_models_by_guessing(prog.rules) == stable_models(prog.rules)


def test_well_founded_bounds_of_an_even_loop():
    true, possible = well_founded(program(rule("a", neg=["b"]), rule("b", neg=["a"]), rule("c", pos=["a"])).rules)
    assert true == frozenset()
    assert possible == {atom("a"), atom("b"), atom("c")}


def test_suzy_first_model_contains_broken_at_one(suzy_first):
    bounds = small(d1=1, d2=2, t1=0, t2=0)
    [(gamma_, models, _)] = models_by_interpretation(suzy_first, bounds)
    assert gamma_ == gamma(d1=1, d2=2, t1=0, t2=0)
    [model] = models
    assert GroundAtom("broken", (), 1) in model
    assert GroundAtom("broken", (), 0) not in model


def test_engineer_model_listing(engineer):
    bounds = small(6, 5, t3=0, t4=1, time2fork=3, **{"time2dest.left": 5, "time2dest.right": 5})
    [(_, [model], _)] = models_by_interpretation(engineer, bounds)
    texts = {a.text for a in model}
    assert "arrivTime(fork)=3" in texts
    assert "arrived(dest)" in texts
    assert {f"switch({i})!=neutral" for i in range(4)} <= texts


@pytest.mark.parametrize("story", STORIES)
def test_corpus_is_deterministic(story):
    verdict = is_deterministic(load(story), small())
    assert verdict
    assert verdict.checked > 0


def test_injected_even_loop_names_its_interpretation(suzy_first):
    loop = [
        GroundRule(atom("left"), (), (atom("right"),), Provenance("injected")),
        GroundRule(atom("right"), (), (atom("left"),), Provenance("injected")),
    ]

    def inject(g):
        return loop if g["t1"] == 2 else []

    verdict = is_deterministic(suzy_first, small(), inject=inject)
    assert not verdict
    assert verdict.offending_gamma == gamma(d1=1, d2=1, t1=2, t2=3)
    assert verdict.answer_set_count == 2


def test_determinism_needs_a_consistent_interpretation(suzy_first):
    contradiction = [GroundRule(None, (), (), Provenance("injected"))]
    with pytest.raises(NoInterpretation):
        is_deterministic(suzy_first, small(), inject=lambda g: contradiction)


def test_resource_cap(suzy_first):
    prog = ground(suzy_first, gamma(d1=1, d2=1, t1=0, t2=1), small())
    with pytest.raises(ResourceLimitExceeded) as err:
        answer_sets(prog, resource_cap=10)
    assert err.value.cap == 10
    assert err.value.count > 10


def test_resource_cap_from_env(monkeypatch):
    monkeypatch.setenv("W_RESOURCE_CAP", "123")
    assert resource_cap_from_env() == 123
    monkeypatch.setenv("W_RESOURCE_CAP", "lots")
    assert resource_cap_from_env(7) == 7
    monkeypatch.delenv("W_RESOURCE_CAP")
    assert resource_cap_from_env(7) == 7


def test_single_abductive_support():
    theory = load("suzy_obs")
    observation = parse_observation("obs(broken,true,2)", theory.signature)
    extended = theory.with_scenario(theory.scenario.with_facts(observations=[observation]))
    concrete = reduce(extended, gamma(), small())
    prog = build_program(concrete)
    assert not answer_sets(prog, limit=1)
    assert is_strongly_consistent(build_program(reduce(theory, gamma(), small())))

    supports = abductive_supports(prog, before_step=2)
    assert [str(s) for s in supports] == ["{a1(0) :+.}"]


def test_consistent_program_needs_no_support():
    supports = abductive_supports(program(rule("a"), rule("b", cr=True)))
    assert len(supports) == 1
    assert len(supports[0]) == 0

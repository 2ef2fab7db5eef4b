import pytest

from src.grounding import (
    AXIOM_SCHEMAS,
    Bounds,
    Interpretation,
    Provenance,
    build_program,
    constant_ranges,
    enumerate_interpretations,
    ground,
    reduce,
    step_constants,
)
from src.model import DO, OCCURS, Const, GroundAtom, Num
from src.parser import parse_observation, parse_theory
from tests.conftest import gamma, load, small


def test_bounds_reject_an_empty_horizon():
    with pytest.raises(ValueError):
        Bounds(horizon=0)
    with pytest.raises(ValueError):
        Bounds(duration_cap=0)


def test_interpretation_text():
    assert str(gamma(t2=0, d1=1)) == "d1=1,t2=0"
    assert str(Interpretation()) == "{}"
    assert gamma(t1=3)["t1"] == 3


def test_ranges_split_steps_from_durations(suzy_first, engineer):
    assert step_constants(suzy_first) == ["t1", "t2"]
    assert constant_ranges(suzy_first, small()) == {"d1": (1, 2), "d2": (1, 2), "t1": (0, 4), "t2": (0, 4)}
    assert constant_ranges(engineer, small(t3=1)) == {
        "t3": (1, 1),
        "t4": (0, 4),
        "time2dest.left": (1, 2),
        "time2dest.right": (1, 2),
        "time2fork": (1, 2),
    }


def test_pinning_an_unknown_constant_fails(suzy_first):
    with pytest.raises(ValueError, match="t9"):
        constant_ranges(suzy_first, small(t9=1))


def test_interpretations_satisfy_the_scenario(suzy_first):
    interpretations = list(enumerate_interpretations(suzy_first, small()))
    assert len(interpretations) == 41
    assert interpretations == sorted(interpretations, key=lambda g: tuple(v for _, v in g.values))
    for g in interpretations:
        assert g["t1"] + g["d1"] < g["t2"] + g["d2"]


def test_engineer_interpretations(engineer):
    interpretations = list(enumerate_interpretations(engineer, small()))
    assert len(interpretations) == 100
    assert all(g["time2dest.left"] == g["time2dest.right"] for g in interpretations)


def test_pinned_interpretation(suzy_first):
    assert list(enumerate_interpretations(suzy_first, small(d1=1, d2=2, t1=0, t2=0))) == [gamma(d1=1, d2=2, t1=0, t2=0)]
    assert list(enumerate_interpretations(suzy_first, small(d1=2, d2=1, t1=3, t2=0))) == []


def test_scenario_without_abstract_constants():
    assert list(enumerate_interpretations(load("suzy_obs"), small())) == [Interpretation()]


def test_reduce_substitutes_and_evaluates(suzy_first):
    concrete = reduce(suzy_first, gamma(d1=1, d2=2, t1=0, t2=5), small())
    assert [d.text for d in concrete.dos] == ["do(a1,0)"]
    assert dict(concrete.dropped)["do-atom outside horizon"] == 1
    assert GroundAtom("duration", (Const("a1"),), None, Num(1)) in concrete.statics
    [instance] = [m for m in concrete.mechanisms if m.name == "m0(a1)" and m.step == 1]
    assert [a.text for a in instance.body] == [
        "a1(0)",
        "member(a1,throw)",
        "agent(a1)=suzy",
        "duration(a1)=1",
        "neg broken(0)",
        "neg ab(m0(a1),1)",
    ]


def test_reduce_needs_a_total_interpretation(suzy_first):
    with pytest.raises(ValueError, match="d2"):
        reduce(suzy_first, gamma(d1=1, t1=0, t2=0), small())


def test_static_terms_ground_through_facts(engineer):
    values = {"t3": 0, "t4": 1, "time2fork": 2, "time2dest.left": 1, "time2dest.right": 1}
    concrete = reduce(engineer, gamma(**values), small())
    m2 = [m for m in concrete.mechanisms if m.name == "m2"]
    assert [m.step for m in m2] == [2, 3, 4]
    first = m2[0]
    assert first.timeless_head
    assert first.head == GroundAtom("arrivTime", (Const("fork"),), None, Num(2))
    assert GroundAtom(OCCURS, (Const("approach"),), 0) in first.body
    assert GroundAtom("time2fork", (), None, Num(2)) in first.body


def test_instances_breaking_causality_are_dropped():
    theory = parse_theory(
        "statics duration(action) : nat.\n"
        "fluents inertial broken.\n"
        "actions a1.\n"
        "mechanism m0 : broken(I) <- a1(I - D), duration(a1) = D.\n"
        "scenario.\n"
        "duration(a1) = 0.\n"
    )
    concrete = reduce(theory, Interpretation(), small())
    assert concrete.mechanisms == ()
    assert dict(concrete.dropped)["principle of causality"] == 5


def test_program_rules(suzy_first):
    prog = ground(suzy_first, gamma(d1=1, d2=2, t1=0, t2=0), small())
    texts = {r.text for r in prog.rules}
    assert "do(a1,0)." in texts
    assert "a1(0) :- do(a1,0)." in texts
    assert "broken(1) :- a1(0), member(a1,throw), agent(a1)=suzy, duration(a1)=1, neg broken(0), neg ab(m0(a1),1)." in texts
    assert "neg ab(m0(a1),1) :- not ab(m0(a1),1)." in texts
    assert "broken(2) :- broken(1), not broken(2)!=true." in texts
    assert "neg a1(3) :- not a1(3)." in texts
    assert "a1(3) :+." in texts
    assert ":- broken(2)!=true, not def(broken(2))." in texts
    assert "broken(2)!=false :- broken(2)." in texts


def test_program_provenance(suzy_first):
    prog = ground(suzy_first, gamma(d1=1, d2=2, t1=0, t2=0), small())
    kinds = {r.provenance.kind for r in prog.rules}
    assert kinds == {"fact", "mechanism", "axiom"}
    named = {r.provenance.ident for r in prog.rules if r.provenance.kind == "axiom"}
    assert named <= set(AXIOM_SCHEMAS)
    assert {"inertia", "inertia-differs", "initial", "do", "refrain", "may-occur", "defeasible"} <= named
    assert str(Provenance("mechanism", "m0(a1)", 1)) == "m0(a1)@1"
    assert str(Provenance("axiom", "inertia", 2)) == "axiom inertia"


def test_dump_orders_rules_by_provenance(suzy_first):
    prog = ground(suzy_first, gamma(d1=1, d2=2, t1=0, t2=0), small())
    lines = prog.dump().splitlines()
    assert len(lines) == len(prog.rules)
    assert lines[0].endswith("% fact")
    comments = [line.rsplit("% ", 1)[1] for line in lines]
    first_axiom = next(i for i, c in enumerate(comments) if c.startswith("axiom"))
    assert all("@" in c for c in comments[comments.index("m0(a1)@1"):first_axiom])
    order = [AXIOM_SCHEMAS.index(c.split()[1]) for c in comments[first_axiom:]]
    assert order == sorted(order)


def test_observations_become_constraints():
    theory = load("suzy_obs")
    obs = parse_observation("obs(broken, true, 3)", theory.signature)
    extended = theory.with_scenario(theory.scenario.with_facts(observations=[obs]))
    prog = build_program(reduce(extended, Interpretation(), small()))
    assert ":- obs(broken,true,3), not broken(3)." in {r.text for r in prog.rules}
    assert not any(a.symbol == DO for r in prog.rules for a in r.pos)

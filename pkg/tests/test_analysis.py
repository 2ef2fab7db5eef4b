import pytest

from src import analysis
from src.analysis import (
    CausalChain,
    causal_chains,
    candidate_inflection_points,
    causes,
    causes_of,
    changes,
    explain_observation,
    inflection_points,
    instantiate,
    matches,
    mechanism_name,
    more_informative,
    proofs,
    search_chains,
    solve_concrete,
    symbolic_do,
    tight_proofs,
)
from src.errors import NoAnswerSet, NotDeterministic, NotUnexpected, PatternMatchesNoChange, TargetNotInModel
from src.grounding import Bounds, Interpretation, enumerate_interpretations
from src.model import DO, Const, GroundAtom
from src.parser import parse_observation
from src.report_formatter import ReportFormatter
from tests.conftest import STORIES, gamma, load, small

ARRIVED = GroundAtom("arrived", (Const("dest"),))
BROKEN = GroundAtom("broken", (), 1)


@pytest.fixture
def first_throw(suzy_first):
    return instantiate(suzy_first, gamma(d1=1, d2=2, t1=0, t2=0), small())


@pytest.fixture
def early_flip(engineer):
    values = {"t3": 0, "t4": 0, "time2fork": 2, "time2dest.left": 1, "time2dest.right": 1}
    return instantiate(engineer, gamma(**values), small())


def change_of(instance, text):
    [change] = [c for c in changes(instance) if str(c) == text]
    return change


def test_changes(first_throw):
    assert [str(c) for c in changes(first_throw)] == ["a1(0)", "a2(0)", "broken(1)"]


def test_matching_changes(first_throw):
    broken = change_of(first_throw, "broken(1)")
    assert matches(broken, "broken")
    assert matches(broken, "broken( 1 )")
    assert not matches(broken, "broken(2)")
    assert matches(change_of(first_throw, "a1(0)"), "a1")
    assert not matches(change_of(first_throw, "a1(0)"), "broken")


def test_timeless_and_inertial_changes(early_flip):
    texts = [str(c) for c in changes(early_flip)]
    assert "switch(1)=right" in texts
    assert "switch(2)=right" not in texts
    assert "arrived(dest)" in texts
    assert texts.index("switch(1)=right") < texts.index("arrived(dest)")


def test_proofs_are_valid_and_minimal(early_flip):
    model = early_flip.answer_set
    axioms = early_flip.concrete.axioms
    found = proofs(early_flip, [ARRIVED])
    assert len(found) == 2
    for proof in found:
        assert proof.is_valid(model, axioms)
        assert proof.is_minimal(model, axioms)
        assert ARRIVED in {e.atom for e in proof.elements}


@pytest.mark.parametrize("story", STORIES)
def test_every_proof_is_minimal_and_tightness_is_strict(story):
    theory = load(story)
    bounds = small()
    proved = 0
    for g in enumerate_interpretations(theory, bounds):
        try:
            instance = instantiate(theory, g, bounds)
        except NoAnswerSet:
            continue
        model = instance.answer_set
        axioms = instance.concrete.axioms
        for change in changes(instance):
            found = proofs(instance, [change.atom])
            for proof in found:
                assert proof.is_valid(model, axioms), f"{change} under {g}"
                assert proof.is_minimal(model, axioms), f"{change} under {g}"
            tight = tight_proofs(found)
            assert bool(tight) == bool(found)
            for p in tight:
                assert not any(q.mechanisms < p.mechanisms for q in found), f"{change} under {g}"
            for p in found:
                if p not in tight:
                    assert any(q.mechanisms < p.mechanisms for q in tight), f"{change} under {g}"
            proved += len(found)
    assert proved > 0


def test_tight_proof_leaves_the_switch_alone(early_flip):
    found = proofs(early_flip, [ARRIVED])
    [tight] = tight_proofs(found)
    assert {mechanism_name(m) for m in tight.mechanisms} == {"m1@0", "m2@2", "m4@2"}
    assert [a.text for a in tight.do_atoms] == ["do(approach,0)"]
    other = next(p for p in found if p is not tight)
    assert "m3(right)@1" in {mechanism_name(m) for m in other.mechanisms}


def test_proofs_are_cached(early_flip):
    assert proofs(early_flip, [ARRIVED]) is proofs(early_flip, [ARRIVED])


def test_interpretations_share_solved_truncations(suzy_first, fresh_solves):
    bounds = small()
    first = instantiate(suzy_first, gamma(d1=1, d2=1, t1=0, t2=2), bounds)
    second = instantiate(suzy_first, gamma(d1=1, d2=1, t1=0, t2=3), bounds)
    assert first.program is not second.program
    early = solve_concrete(suzy_first, first.concrete.truncated(0), bounds)
    late = solve_concrete(suzy_first, second.concrete.truncated(0), bounds)
    assert early.program is late.program
    assert early.gamma == gamma(d1=1, d2=1, t1=0, t2=2)
    assert late.gamma == gamma(d1=1, d2=1, t1=0, t2=3)
    assert proofs(early, [BROKEN]) is proofs(late, [BROKEN])


def test_proof_of_an_absent_atom(first_throw):
    with pytest.raises(TargetNotInModel):
        proofs(first_throw, [GroundAtom("broken", (), 0)])


def test_causal_chain(early_flip):
    [chain] = causal_chains(early_flip, 0, ARRIVED)
    assert str(chain) == "do(approach,0), m1@0, m2@2, m4@2, arrived(dest)"
    assert causal_chains(early_flip, 3, ARRIVED) == []


def test_more_informative_chains():
    target = GroundAtom("broken", (), 3)
    early = GroundAtom(DO, (Const("c"),), 0)
    late = GroundAtom(DO, (Const("a1"),), 2)
    long = CausalChain(0, (early, late), (), target)
    short = CausalChain(2, (late,), (), target)
    assert more_informative(long, short)
    assert not more_informative(short, long)
    assert not more_informative(long, long)


def test_inflection_point_and_cause(early_flip):
    change = change_of(early_flip, "arrived(dest)")
    assert candidate_inflection_points(early_flip, change) == [0]
    assert inflection_points(early_flip, change) == [0]
    [cause] = causes_of(early_flip, change)
    assert str(cause) == "{do(approach,0)}"
    assert cause.point == 0


def test_first_throw_causes(first_throw, suzy_first):
    [cause] = causes_of(first_throw, change_of(first_throw, "broken(1)"))
    assert str(cause) == "{do(a1,0)}"
    assert symbolic_do(cause.do_atoms[0], suzy_first, first_throw.gamma) == "do(a1,t1)"


def test_nondeterministic_truncation_leaves_the_step_undecided(suzy_first, fresh_solves, monkeypatch, caplog):
    solve = analysis.solve_concrete

    def without_later_throw(theory, concrete, bounds):
        if len(concrete.dos) < 2:
            raise NotDeterministic(concrete.gamma, 2)
        return solve(theory, concrete, bounds)

    monkeypatch.setattr(analysis, "solve_concrete", without_later_throw)
    report = causes(suzy_first, "broken", small(d1=1, d2=1, t1=0, t2=2))
    [result] = report.results
    assert str(result.change) == "broken(1)"
    assert result.undecided == (0,)
    assert result.candidates == ()
    assert result.causes == ()
    [verdict] = report.verdicts
    assert verdict.causes == ()
    assert "step 0 is no candidate for broken(1)" in caplog.text
    text = ReportFormatter.format_causes(report, per_interpretation=True)
    assert "  undecided (truncated theory not deterministic): 0\n" in text


def test_aiming_is_not_a_candidate():
    theory = load("suzy_aim")
    instance = instantiate(theory, gamma(d1=1, dc=1, t1=2, t5=0), small())
    change = change_of(instance, "broken(3)")
    [proof] = tight_proofs(proofs(instance, [change.atom]))
    assert [a.text for a in sorted(proof.do_atoms, key=lambda a: a.step)] == ["do(c,0)", "do(a1,2)"]
    assert causal_chains(instance, 0, change.atom)
    assert candidate_inflection_points(instance, change) == [2]
    assert [str(c) for c in causes_of(instance, change)] == ["{do(a1,2)}"]


def test_order_that_was_followed():
    theory = load("suzy_order3")
    instance = instantiate(theory, gamma(d1=1, d2=1, t1=1, t2=3), small())
    change = change_of(instance, "broken(4)")
    assert [str(c) for c in causes_of(instance, change)] == ["{do(b2,0)}"]


def test_abstract_verdict(suzy_first):
    report = causes(suzy_first, "broken", small())
    assert report.checked == 39
    assert len(report.skipped) == 2
    [verdict] = report.verdicts
    assert verdict.causes == (("do(a1,t1)",),)
    assert verdict.interpretations == 39
    assert report.stable


def test_simultaneous_throws_split_the_verdict():
    report = causes(load("suzy_same"), "broken", small())
    [verdict] = report.verdicts
    assert verdict.causes == (("do(a1,t1)",), ("do(a2,t2)",))


def test_verdict_without_a_change():
    theory = load("suzy_order2")
    with pytest.raises(PatternMatchesNoChange):
        causes(theory, "broken", small())
    report = causes(theory, "broken", small(), require_change=False)
    assert report.verdicts == ()
    assert report.checked == 0


def test_workers_give_the_same_report(suzy_first):
    seen = []
    serial = causes(suzy_first, "broken", small(t1=0))
    parallel = causes(suzy_first, "broken", small(t1=0), workers=2, progress=lambda msg, done, total: seen.append(done))
    assert parallel.verdicts == serial.verdicts
    assert [r.gamma for r in parallel.results] == [r.gamma for r in serial.results]
    assert seen == list(range(1, len(seen) + 1))


def test_suzy_first_at_default_bounds(suzy_first):
    report = causes(suzy_first, "broken", Bounds(), workers=4)
    [verdict] = report.verdicts
    assert verdict.causes == (("do(a1,t1)",),)
    assert verdict.interpretations == report.checked
    assert report.stable


def test_engineer_at_default_bounds(engineer):
    report = causes(engineer, "arrived(dest)", Bounds(), workers=4)
    [verdict] = report.verdicts
    assert verdict.causes == (("do(approach,t3)",),)


def test_explaining_an_early_break():
    theory = load("suzy_obs")
    observation = parse_observation("obs(broken, true, 2)", theory.signature)
    report = explain_observation(theory, observation, small())
    [explanation] = report.explanations
    assert str(explanation) == "do(a1,0)"
    assert str(explanation.change) == "broken(2)"
    assert [str(c) for c in explanation.causes] == ["{do(a1,0)}"]
    assert report.compact == ()


def test_explaining_an_unexpected_break():
    theory = load("suzy_obs")
    observation = parse_observation("obs(broken, true, 3)", theory.signature)
    report = explain_observation(theory, observation, small())
    assert [str(e) for e in report.explanations] == ["do(a1,0)", "do(a1,1)"]
    assert [str(e.change) for e in report.explanations] == ["broken(2)", "broken(3)"]
    assert [[str(c) for c in e.causes] for e in report.explanations] == [["{do(a1,0)}"], ["{do(a1,1)}"]]
    assert report.compact == ("do(a1,t), 0 <= t < 2",)
    assert all(e.gamma == Interpretation() for e in report.explanations)


def test_predicted_observation_needs_no_explanation():
    theory = load("suzy_obs")
    observation = parse_observation("obs(broken, false, 3)", theory.signature)
    with pytest.raises(NotUnexpected):
        explain_observation(theory, observation, small())

import pytest

from src.errors import ParseFailed
from src.model import OCCURS, Abstract, Atom, Const, Num, SymbolKind, Var, validate
from src.parser import ParseError, format_theory, parse_files, parse_observation, parse_scenario, parse_theory
from tests.conftest import STORIES, corpus_path, load

BACKGROUND = """
sorts person = {suzy, billy}.
statics agent(action) : person; duration(action) : nat.
fluents inertial broken.
actions a1; a2.
mechanism m0(A) : broken(I) <- occurs(A, I - D), duration(A) = D, neg broken(I - 1).
"""


@pytest.mark.parametrize("story", STORIES)
def test_corpus_parses_and_validates(story):
    theory = load(story)
    assert theory.mechanisms
    assert validate(theory) == []


@pytest.mark.parametrize("story", STORIES)
def test_printing_round_trips(story):
    theory = load(story)
    assert parse_theory(format_theory(theory)) == theory


def test_signature_and_mechanisms(suzy_first):
    sig = suzy_first.signature
    assert sig.kind_of("broken") is SymbolKind.INERTIAL
    assert sig.kind_of("a1") is SymbolKind.ACTION
    assert sig.symbol("duration").value_sort == "nat"
    m0 = suzy_first.mechanism("m0")
    assert m0.label == Const("m0", (Var("A"),))
    assert m0.step == Var("I")
    assert str(m0.guard) == "neg ab(m0(A), I)"


def test_scenario_facts(suzy_first):
    scenario = suzy_first.scenario
    assert scenario.abstract_constants == ("d1", "d2", "t1", "t2")
    assert [str(d) for d in scenario.dos] == ["do(a1, #t1)", "do(a2, #t2)"]
    assert [str(i) for i in scenario.inits] == ["init(neg broken)"]
    assert str(scenario.constraints[-1]) == "#t1 + #d1 < #t2 + #d2"


def test_static_terms_in_mechanisms_become_variables(engineer):
    assert str(engineer.mechanism("m2")) == (
        "mechanism m2 : arrivTime(fork) = I <- arrived(fork), time2fork = S1, approach(I - S1), neg ab(m2, I)."
    )
    m5 = engineer.mechanism("m5")
    assert "time2dest(P) = S1" in [str(b) for b in m5.body]
    assert "I = J + S1" in [str(b) for b in m5.body]


def test_shorthand_constants_are_named_after_their_static(engineer):
    assert engineer.scenario.abstract_constants == ("t3", "t4", "time2dest.left", "time2dest.right", "time2fork")
    assert Atom("time2dest", (Const("left"),), None, "=", Abstract("time2dest.left")) in engineer.scenario.statics


def test_action_atoms_use_occurs():
    theory = parse_theory(BACKGROUND)
    [throw] = [b for b in theory.mechanism("m0").body if isinstance(b, Atom) and b.symbol == OCCURS]
    assert throw.args == (Var("A"),)
    assert str(throw) == "occurs(A, I - D)"


def test_explicit_guard_sets_the_step():
    theory = parse_theory(BACKGROUND + "mechanism m1 : broken(I) <- a2(J), neg broken(J), neg ab(m1, J + 2).\n")
    assert str(theory.mechanism("m1").step) == "J + 2"


def test_guard_must_name_its_own_mechanism():
    with pytest.raises(ParseFailed) as err:
        parse_theory(BACKGROUND + "mechanism m1 : broken(I) <- a2(I - 1), neg ab(m0(a1), I).\n")
    assert "not the mechanism's own label" in err.value.errors[0].message


def test_syntax_errors_are_located():
    with pytest.raises(ParseFailed) as err:
        parse_theory("fluents inertial broken.\nactions a1\nmechanism m0 : broken(I) <- a1(I - 1).\n", "bad.w")
    [error] = err.value.errors
    assert isinstance(error, ParseError)
    assert error.span.file == "bad.w"
    assert error.span.start_line in (2, 3)
    assert str(error).startswith("bad.w:")


def test_every_statement_error_is_reported():
    text = BACKGROUND + (
        "mechanism m1 : broken(I) <- fly(I - 1).\n"
        "mechanism m2 : broken(I) <- agent(a1) = rock.\n"
        "scenario.\n"
        "do(broken, 1).\n"
    )
    with pytest.raises(ParseFailed) as err:
        parse_theory(text, "many.w")
    messages = [e.message for e in err.value.errors]
    assert "unknown symbol fly" in messages
    assert any("rock" in m for m in messages)
    assert "do requires an action; broken is not one" in messages
    assert [e.span.start_line for e in err.value.errors] == sorted(e.span.start_line for e in err.value.errors)


def test_mechanisms_after_the_scenario_are_rejected():
    with pytest.raises(ParseFailed) as err:
        parse_theory(BACKGROUND + "scenario.\nmechanism m1 : broken(I) <- a1(I - 1).\n")
    assert err.value.errors[0].message == "mechanisms must precede 'scenario.'"


def test_abstract_constants_only_in_scenarios():
    with pytest.raises(ParseFailed) as err:
        parse_theory(BACKGROUND + "mechanism m1 : broken(I) <- a1(#t1).\n")
    assert "abstract constants" in err.value.errors[0].message


def test_parse_scenario_against_a_signature(suzy_first):
    scenario = parse_scenario("do(a1, 0). init(neg broken). duration(a1) = 2.", suzy_first.signature)
    assert [str(d) for d in scenario.dos] == ["do(a1, 0)"]
    assert scenario.statics == (Atom("duration", (Const("a1"),), None, "=", Num(2)),)


def test_observations(suzy_first):
    obs = parse_observation("obs(broken, true, 3)", suzy_first.signature)
    assert (obs.symbol, obs.step) == ("broken", Num(3))
    assert str(obs) == "obs(broken, true, 3)"
    with pytest.raises(ParseFailed):
        parse_observation("obs(broken, true)", suzy_first.signature)
    with pytest.raises(ParseFailed):
        parse_observation("do(a1, 0)", suzy_first.signature)


def test_files_are_read_in_order(tmp_path):
    background = tmp_path / "background.w"
    story = tmp_path / "story.w"
    background.write_text(BACKGROUND)
    story.write_text("scenario.\ndo(a1, 0).\nduration(a1) = 1.\n")
    theory = parse_files([background, story])
    assert [str(d) for d in theory.scenario.dos] == ["do(a1, 0)"]
    with pytest.raises(OSError):
        parse_files([tmp_path / "missing.w"])


def test_corpus_path_points_at_files():
    assert corpus_path("suzy_first").is_file()

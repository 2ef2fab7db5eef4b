"""Golden reports for the bundled stories."""

import pytest

from src.main import main
from tests.conftest import EXPECTED, STORIES, corpus_path

EXIT_CODES = {"suzy_order2": 3}


def header(story: str) -> dict:
    fields = {}
    for line in (EXPECTED / f"{story}.golden").read_text().splitlines():
        if line.startswith(" ") or line.endswith(":"):
            break
        key, _, value = line.partition(": ")
        fields[key] = value
    return fields


def run(story: str, capsys) -> tuple:
    fields = header(story)
    target = fields["pattern"] if fields["command"] == "causes" else fields["observation"]
    argv = [
        fields["command"],
        str(corpus_path(story)),
        target,
        "--horizon", fields["horizon"],
        "--duration-cap", fields["duration_cap"],
        "--format", "structured",
    ]
    with pytest.raises(SystemExit) as exit_info:
        main(argv)
    return exit_info.value.code, capsys.readouterr().out


def test_every_story_has_a_golden():
    assert sorted(p.stem for p in EXPECTED.glob("*.golden")) == STORIES


@pytest.mark.parametrize("story", STORIES)
def test_goldens_describe_themselves(story):
    fields = header(story)
    assert fields["wcause-report"] == "1"
    assert fields["command"] in ("causes", "explain")
    assert int(fields["horizon"]) >= 1
    assert int(fields["duration_cap"]) >= 1


@pytest.mark.parametrize("story", STORIES)
def test_golden_report(story, capsys):
    code, out = run(story, capsys)
    assert code == EXIT_CODES.get(story, 0)
    assert out == (EXPECTED / f"{story}.golden").read_text()


def test_reports_are_byte_stable(capsys):
    outputs = {run("engineer_neutral", capsys)[1] for _ in range(3)}
    assert len(outputs) == 1


@pytest.mark.parametrize("story", ["suzy_billy_first", "suzy_same", "suzy_obs", "suzy_obs_early"])
def test_throwing_stories_share_their_background(story):
    def background(name: str) -> bytes:
        text = corpus_path(name).read_bytes()
        return text[: text.index(b"\nscenario.")]

    assert background(story) == background("suzy_first")


def test_engineer_stories_share_their_background():
    def background(name: str) -> bytes:
        text = corpus_path(name).read_bytes()
        return text[text.index(b"\n") : text.index(b"\nscenario.")]

    assert background("engineer_fast_right") == background("engineer")
    assert background("engineer_neutral") == background("engineer")

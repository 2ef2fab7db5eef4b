"""Shared fixtures: corpus access and small bounds."""

from pathlib import Path

import pytest

from src.analysis import clear_solve_cache
from src.grounding import Bounds, Interpretation
from src.parser import parse_file

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
EXPECTED = CORPUS / "expected"

STORIES = sorted(p.stem for p in CORPUS.glob("*.w"))


def corpus_path(story: str) -> Path:
    return CORPUS / f"{story}.w"


def load(story: str):
    return parse_file(corpus_path(story))


def small(horizon: int = 4, duration_cap: int = 2, **pinned) -> Bounds:
    return Bounds(horizon, duration_cap, tuple(sorted(pinned.items())))


def gamma(**values) -> Interpretation:
    return Interpretation.of(values)


@pytest.fixture
def bounds() -> Bounds:
    return small()


@pytest.fixture
def suzy_first():
    return load("suzy_first")


@pytest.fixture
def engineer():
    return load("engineer")


@pytest.fixture
def fresh_solves():
    clear_solve_cache()
    yield
    clear_solve_cache()

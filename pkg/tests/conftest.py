from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def golden_corpus_path():
    return DATA / "golden_corpus.conllu"


@pytest.fixture(scope="session")
def golden_pairs_path():
    return DATA / "golden_pairs.jsonl"


@pytest.fixture(scope="session")
def golden_questions_path():
    return DATA / "golden_questions.conllu"


@pytest.fixture(scope="session")
def golden_corpus(golden_corpus_path):
    from whymine.conllu import parse_conllu
    corpus = parse_conllu(golden_corpus_path.read_text(encoding="utf-8"))
    assert not corpus.errors
    return corpus

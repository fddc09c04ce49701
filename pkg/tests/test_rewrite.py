"""Why-question to statement rewriting and verb inflection."""

import pytest

from whymine.conllu import normalize_labels, parse_conllu
from whymine.rewrite import (IRREGULAR_PAST, RewriteError, inflect, rewrite,
                             to_prompt)

# question index in the golden file -> (statement, rule)
EXPECTED = [
    ("the chicken crossed the road", "do_support"),
    ("the sky is blue", "aux_copy"),
    ("she likes apples", "do_support"),
    ("the road was closed", "aux_copy"),
    ("birds sing", "do_support"),
    ("John left early", "do_support"),
    ("the engine stops", "do_support"),
    ("the crowd went home", "do_support"),
    ("the streets are empty", "aux_copy"),
    ("the doors were locked", "aux_copy"),
    ("the meeting has started", "aux_copy"),
    ("she tried again", "do_support"),
    ("the rain stopped", "do_support"),
    ("the team can win", "aux_copy"),
    ("the museum is closed today", "aux_copy"),
]

EXPECTED_ERRORS = ["not_why_question", "no_subject", "no_aux"]


@pytest.fixture(scope="module")
def questions(golden_questions_path):
    corpus = parse_conllu(golden_questions_path.read_text(encoding="utf-8"))
    assert not corpus.errors
    docs = {d.doc_id: d.sentences for d in corpus}
    good = [normalize_labels(s, "ud2") for s in docs["questions"]]
    bad = [normalize_labels(s, "ud2") for s in docs["malformed"]]
    return good, bad


def test_golden_rewrites(questions):
    good, _ = questions
    assert len(good) == len(EXPECTED) == 15
    for sent, (statement, rule) in zip(good, EXPECTED):
        result = rewrite(sent)
        assert result.text() == statement
        assert result.applied_rule == rule


def test_golden_errors(questions):
    _, bad = questions
    assert len(bad) == len(EXPECTED_ERRORS) == 3
    for sent, reason in zip(bad, EXPECTED_ERRORS):
        with pytest.raises(RewriteError) as err:
            rewrite(sent)
        assert err.value.reason == reason


def test_output_never_contains_why_or_question_mark(questions):
    good, _ = questions
    for sent in good:
        result = rewrite(sent)
        assert all(t.lower() != "why" for t in result.statement)
        assert all("?" not in t for t in result.statement)


def test_subject_precedes_verb_phrase(questions):
    good, _ = questions
    for sent in good:
        result = rewrite(sent)
        n_subj = len(result.subj_span)
        subj_forms = result.statement[:n_subj]
        source_forms = [next(t.form for t in sent.tokens if t.index == i)
                        for i in result.subj_span]
        assert [f.lower() for f in subj_forms] == [f.lower() for f in source_forms]


def test_no_invented_content_words(questions):
    good, _ = questions
    for sent in good:
        result = rewrite(sent)
        source = [t.form.lower() for t in sent.tokens]
        root = sent.root()
        for tok in result.statement:
            low = tok.lower()
            if low in source:
                continue
            # the only new surface form allowed is the re-inflected head verb
            assert result.applied_rule == "do_support"
            assert low in {inflect(root.lemma, target)
                           for target in ("past", "third_singular", "base")}


def test_do_support_fires_exactly_on_do_forms(questions):
    good, _ = questions
    for sent in good:
        result = rewrite(sent)
        root = sent.root()
        first_aux = min(
            (t for t in sent.children(root.index)
             if t.deprel in ("aux", "cop", "auxpass")),
            key=lambda t: t.index, default=None)
        fired = result.applied_rule == "do_support"
        assert fired == (first_aux is not None
                         and first_aux.form.lower() in {"do", "does", "did"})


def test_rewrite_total_over_golden_set(questions):
    good, _ = questions
    assert sum(1 for s in good if rewrite(s)) == 15


def test_to_prompt_appends_because(questions):
    good, _ = questions
    result = rewrite(good[1])
    assert to_prompt(result) == ("the", "sky", "is", "blue", "because")


def test_to_prompt_simple():
    from whymine.rewrite import RewriteResult
    r = RewriteResult(statement=("the", "chicken", "crossed", "the", "road"),
                      subj_span=(3, 4), aux_token=2, vp_span=(5, 6, 7),
                      applied_rule="do_support")
    assert " ".join(to_prompt(r)) == "the chicken crossed the road because"


# -- inflection --------------------------------------------------------------


@pytest.mark.parametrize("lemma,target,expected", [
    ("go", "past", "went"),
    ("like", "third_singular", "likes"),
    ("try", "past", "tried"),
    ("stop", "past", "stopped"),
    ("walk", "past", "walked"),
    ("bake", "past", "baked"),
    ("play", "past", "played"),       # vowel + y keeps the y
    ("visit", "past", "visited"),     # no doubling on longer words
    ("admit", "past", "admitted"),    # stress-final doubling list
    ("do", "third_singular", "does"),
    ("go", "third_singular", "goes"),
    ("have", "third_singular", "has"),
    ("be", "third_singular", "is"),
    ("watch", "third_singular", "watches"),
    ("pass", "third_singular", "passes"),
    ("fix", "third_singular", "fixes"),
    ("fly", "third_singular", "flies"),
    ("say", "third_singular", "says"),
    ("cross", "past", "crossed"),
    ("leave", "past", "left"),
    ("run", "base", "run"),
])
def test_inflect(lemma, target, expected):
    assert inflect(lemma, target) == expected


def test_inflect_case_insensitive():
    assert inflect("Go", "past") == "went"


def test_unknown_words_degrade_to_regular():
    assert inflect("blork", "past") == "blorked"
    assert inflect("blork", "third_singular") == "blorks"


def test_irregular_table_size_and_shape():
    assert len(IRREGULAR_PAST) >= 160
    assert all(v for v in IRREGULAR_PAST.values())
    assert all(k == k.lower() for k in IRREGULAR_PAST)


def test_not_why_question_on_statement():
    text = ("1\tHe\the\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
            "2\tleft\tleave\tVERB\t_\t_\t0\troot\t_\t_\n")
    sent = parse_conllu(text)[0].sentences[0]
    with pytest.raises(RewriteError) as err:
        rewrite(sent)
    assert err.value.reason == "not_why_question"

"""Because-pattern clause splitting and corpus-level extraction."""

import json

import pytest

from whymine.conllu import parse_conllu, normalize_labels
from whymine.extract import (ExtractionConfig, corpus_stats, extract_corpus,
                             extract_pair, pair_to_json, read_pairs, write_pairs)

COUNCILMEN = """1\tThe\tthe\tDET\t_\t_\t3\tdet\t_\t_
2\tcity\tcity\tNOUN\t_\t_\t3\tcompound\t_\t_
3\tcouncilmen\tcouncilman\tNOUN\t_\t_\t4\tnsubj\t_\t_
4\trefused\trefuse\tVERB\t_\t_\t0\troot\t_\t_
5\tthe\tthe\tDET\t_\t_\t6\tdet\t_\t_
6\tdemonstrators\tdemonstrator\tNOUN\t_\t_\t4\tiobj\t_\t_
7\ta\ta\tDET\t_\t_\t8\tdet\t_\t_
8\tpermit\tpermit\tNOUN\t_\t_\t4\tobj\t_\t_
9\tbecause\tbecause\tSCONJ\t_\t_\t11\tmark\t_\t_
10\tthey\tthey\tPRON\t_\t_\t11\tnsubj\t_\t_
11\tfeared\tfear\tVERB\t_\t_\t4\tadvcl\t_\t_
12\tviolence\tviolence\tNOUN\t_\t_\t11\tobj\t_\t_
13\t.\t.\tPUNCT\t_\t_\t4\tpunct\t_\t_
"""

BECAUSE_OF = """1\tHe\the\tPRON\t_\t_\t2\tnsubj\t_\t_
2\tleft\tleave\tVERB\t_\t_\t0\troot\t_\t_
3\tbecause\tbecause\tADP\t_\t_\t6\tcase\t_\t_
4\tof\tof\tADP\t_\t_\t3\tfixed\t_\t_
5\tthe\tthe\tDET\t_\t_\t6\tdet\t_\t_
6\train\train\tNOUN\t_\t_\t2\tobl\t_\t_
7\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_
"""


def _sentence(text, scheme="ud2"):
    corpus = parse_conllu(text)
    assert not corpus.errors
    return normalize_labels(corpus[0].sentences[0], scheme)


def test_trailing_clause_split():
    pair, reason = extract_pair(_sentence(COUNCILMEN))
    assert reason is None
    assert " ".join(pair.s1) == "The city councilmen refused the demonstrators a permit"
    assert " ".join(pair.s2) == "they feared violence"
    assert pair.order == "s1_first"


def test_because_of_rejected():
    pair, reason = extract_pair(_sentence(BECAUSE_OF))
    assert pair is None
    assert reason == "because_of"


def test_fronted_clause_split(golden_corpus):
    sent = normalize_labels(golden_corpus[0].sentences[9], "ud2")
    pair, reason = extract_pair(sent)
    assert reason is None
    assert " ".join(pair.s1) == "the school closed early"
    assert " ".join(pair.s2) == "the snow kept falling"
    assert pair.order == "s2_first"


def test_no_because():
    sent = _sentence("1\tHe\the\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
                     "2\tleft\tleave\tVERB\t_\t_\t0\troot\t_\t_\n")
    assert extract_pair(sent) == (None, "no_because")


def test_multiple_because_skipped():
    # two markers make S1/S2 assignment ambiguous
    text = COUNCILMEN.replace("12\tviolence\tviolence\tNOUN\t_\t_\t11\tobj\t_\t_",
                              "12\tbecause\tbecause\tSCONJ\t_\t_\t11\tobj\t_\t_")
    assert extract_pair(_sentence(text)) == (None, "multiple_because")


def test_short_clause_rejected():
    cfg = ExtractionConfig(min_clause_len=6)
    pair, reason = extract_pair(_sentence(COUNCILMEN), cfg)
    assert pair is None
    assert reason == "incomplete_clause"


def test_max_clause_len_rejects():
    cfg = ExtractionConfig(max_clause_len=4)
    pair, reason = extract_pair(_sentence(COUNCILMEN), cfg)
    assert pair is None
    assert reason == "too_long"


def test_no_verb_clause_rejected():
    text = COUNCILMEN.replace("11\tfeared\tfear\tVERB", "11\tfeared\tfear\tNOUN")
    pair, reason = extract_pair(_sentence(text))
    assert reason == "incomplete_clause"


# -- corpus level -----------------------------------------------------------


def test_golden_corpus_counts(golden_corpus):
    pairs, stats = extract_corpus(golden_corpus)
    assert stats.sentences_seen == 50
    assert stats.because_sentences == 20
    assert stats.pairs_emitted == 18
    assert dict(stats.rejected_by_reason) == {"because_of": 2}
    assert len(pairs) == 18
    assert sum(1 for p in pairs if p.order == "s1_first") == 12
    assert sum(1 for p in pairs if p.order == "s2_first") == 6


def test_context_window_edges(golden_corpus):
    pairs, _ = extract_corpus(golden_corpus)
    by_id = {p.pair_id: p for p in pairs}
    assert len(by_id["doc1#0"].context) == 0      # document start
    assert len(by_id["doc2#1"].context) == 1      # one preceding sentence
    assert len(by_id["doc1#3"].context) == 3
    assert len(by_id["doc4#4"].context) == 4
    assert len(by_id["doc1#9"].context) == 5      # capped at five
    # in-document order, oldest first
    ctx = by_id["doc1#3"].context
    assert ctx[0][0] == "The" and ctx[0][1] == "game"
    assert ctx[2][0] == "Local"


def test_context_is_the_five_immediately_preceding(golden_corpus):
    pairs, _ = extract_corpus(golden_corpus)
    p = next(p for p in pairs if p.pair_id == "doc2#7")
    doc = next(d for d in golden_corpus if d.doc_id == "doc2")
    expected = [tuple(t.form for t in s.tokens) for s in doc.sentences[2:7]]
    assert list(p.context) == expected


def test_emitted_tokens_come_from_source(golden_corpus):
    pairs, _ = extract_corpus(golden_corpus)
    for pair in pairs:
        doc = next(d for d in golden_corpus if d.doc_id == pair.doc_id)
        source = [t.form for t in doc.sentences[pair.sent_index].tokens]
        leftover = list(source)
        for tok in pair.s1 + pair.s2:
            assert tok in leftover
            leftover.remove(tok)
        assert all(t.lower() == "because" or t in {".", ",", "!", "?"}
                   for t in leftover)


def test_no_clause_contains_because(golden_corpus):
    pairs, _ = extract_corpus(golden_corpus)
    for pair in pairs:
        assert all(t.lower() != "because" for t in pair.s1 + pair.s2)


def test_extraction_is_deterministic(golden_corpus):
    a, _ = extract_corpus(golden_corpus)
    b, _ = extract_corpus(golden_corpus)
    assert [pair_to_json(p) for p in a] == [pair_to_json(p) for p in b]


def test_min_clause_len_monotone(golden_corpus):
    emitted = []
    for n in (1, 2, 3, 4, 5, 6, 8):
        _, stats = extract_corpus(golden_corpus, ExtractionConfig(min_clause_len=n))
        emitted.append(stats.pairs_emitted)
    assert emitted == sorted(emitted, reverse=True)


def test_corpus_stats_arithmetic():
    pairs, _ = extract_corpus(parse_conllu("# newdoc id = x\n" + COUNCILMEN))
    report = corpus_stats(pairs)
    assert report["count"] == 1
    assert report["mean_pair_len"] == 8 + 3


def test_corpus_stats_empty():
    report = corpus_stats([])
    assert report == {"count": 0, "mean_pair_len": None, "mean_with_context": None}


def test_golden_mean_length(golden_corpus):
    pairs, _ = extract_corpus(golden_corpus)
    report = corpus_stats(pairs)
    # hand recount: sum over the 18 golden pairs of |s1|+|s2| is 167
    total = sum(len(p.s1) + len(p.s2) for p in pairs)
    assert total == 167
    assert report["mean_pair_len"] == pytest.approx(167 / 18)


def test_jsonl_round_trip(tmp_path, golden_corpus):
    pairs, _ = extract_corpus(golden_corpus)
    path = tmp_path / "pairs.jsonl"
    write_pairs(pairs, path)
    again = read_pairs(path)
    assert again == pairs
    record = json.loads(path.read_text().splitlines()[0])
    assert list(record) == ["id", "doc_id", "sent_index", "s1", "s2",
                            "context", "order"]

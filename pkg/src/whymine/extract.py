"""Split "because" sentences into phenomenon (S1) and explanation (S2) clauses.

The pattern: a token "because" with deprel ``mark`` whose head H heads an
adverbial clause (``advcl``). S2 is the surface-order yield of H minus the
marker; S1 is the yield of H's governor minus the whole S2 subtree. Both
clause orders are handled ("S1 because S2" and "Because S2, S1").
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .conllu import DepSentence, Document, Token, normalize_labels

VERB_TAGS = {"VERB", "AUX"}

# Marker attachments that indicate a prepositional "because of", not a clause.
PREP_LIKE = {"case", "prep", "mwe", "fixed"}

S1_FIRST = "s1_first"
S2_FIRST = "s2_first"

REASON_NO_BECAUSE = "no_because"
REASON_BECAUSE_OF = "because_of"
REASON_NO_ADVCL = "no_advcl"
REASON_INCOMPLETE = "incomplete_clause"
REASON_MULTIPLE = "multiple_because"
REASON_TOO_LONG = "too_long"


@dataclass
class ExtractionConfig:
    min_clause_len: int = 3
    max_clause_len: int = 50
    context_size: int = 5
    label_scheme: str = "ud2"


@dataclass(frozen=True)
class ExplanationPair:
    s1: Tuple[str, ...]
    s2: Tuple[str, ...]
    context: Tuple[Tuple[str, ...], ...]
    doc_id: str
    sent_index: int
    order: str

    @property
    def pair_id(self) -> str:
        return f"{self.doc_id}#{self.sent_index}"


@dataclass
class ExtractionStats:
    sentences_seen: int = 0
    because_sentences: int = 0
    pairs_emitted: int = 0
    rejected_by_reason: Counter = field(default_factory=Counter)

    def as_dict(self):
        return {
            "sentences_seen": self.sentences_seen,
            "because_sentences": self.because_sentences,
            "pairs_emitted": self.pairs_emitted,
            "rejected_by_reason": dict(sorted(self.rejected_by_reason.items())),
        }


def _strip_edge_punct(tokens: List[Token]) -> List[Token]:
    start, end = 0, len(tokens)
    while start < end and tokens[start].upos == "PUNCT":
        start += 1
    while end > start and tokens[end - 1].upos == "PUNCT":
        end -= 1
    return tokens[start:end]


def _clause_reason(tokens: Sequence[Token], cfg: ExtractionConfig) -> Optional[str]:
    if len(tokens) < cfg.min_clause_len:
        return REASON_INCOMPLETE
    if not any(t.upos in VERB_TAGS for t in tokens):
        return REASON_INCOMPLETE
    if len(tokens) > cfg.max_clause_len:
        return REASON_TOO_LONG
    return None


def extract_pair(sent: DepSentence, cfg: Optional[ExtractionConfig] = None):
    """Apply the because-pattern to one label-normalized sentence.

    Returns ``(ExplanationPair, None)`` on a match (context left empty; the
    corpus walker fills it in) or ``(None, reason)`` where reason is one of
    no_because / because_of / no_advcl / incomplete_clause /
    multiple_because / too_long.
    """
    cfg = cfg or ExtractionConfig()
    markers = [t for t in sent.tokens if t.form.lower() == "because"]
    if not markers:
        return None, REASON_NO_BECAUSE
    if len(markers) > 1:
        return None, REASON_MULTIPLE
    marker = markers[0]

    nxt = next((t for t in sent.tokens if t.index == marker.index + 1), None)
    if (nxt is not None and nxt.form.lower() == "of") or marker.deprel in PREP_LIKE:
        return None, REASON_BECAUSE_OF
    if marker.deprel != "mark" or marker.head == 0:
        return None, REASON_NO_ADVCL

    head = next(t for t in sent.tokens if t.index == marker.head)
    if head.deprel != "advcl" or head.head == 0:
        return None, REASON_NO_ADVCL
    governor = next(t for t in sent.tokens if t.index == head.head)

    clause_indices = {t.index for t in sent.subtree(head.index)}
    s2_tokens = _strip_edge_punct(
        [t for t in sent.subtree(head.index) if t.index != marker.index])
    s1_tokens = _strip_edge_punct(
        [t for t in sent.subtree(governor.index) if t.index not in clause_indices])

    for clause in (s1_tokens, s2_tokens):
        reason = _clause_reason(clause, cfg)
        if reason is not None:
            return None, reason

    order = S2_FIRST if marker.index < governor.index else S1_FIRST
    pair = ExplanationPair(
        s1=tuple(t.form for t in s1_tokens),
        s2=tuple(t.form for t in s2_tokens),
        context=(),
        doc_id=sent.doc_id,
        sent_index=sent.sent_index,
        order=order,
    )
    return pair, None


def extract_corpus(docs: Iterable[Document], cfg: Optional[ExtractionConfig] = None):
    """Run the pattern over whole documents, attaching preceding-sentence context.

    Context is the up-to-``cfg.context_size`` sentences immediately before the
    matched sentence within the same document, oldest first. The rejection
    histogram covers only sentences that contain "because"; sentences without
    the marker are counted via ``sentences_seen`` / ``because_sentences``.
    """
    cfg = cfg or ExtractionConfig()
    pairs: List[ExplanationPair] = []
    stats = ExtractionStats()
    for doc in docs:
        for sent in doc.sentences:
            stats.sentences_seen += 1
            normalized = normalize_labels(sent, cfg.label_scheme)
            pair, reason = extract_pair(normalized, cfg)
            if reason == REASON_NO_BECAUSE:
                continue
            stats.because_sentences += 1
            if pair is None:
                stats.rejected_by_reason[reason] += 1
                continue
            lo = max(0, sent.sent_index - cfg.context_size)
            context = tuple(
                tuple(t.form for t in prev.tokens)
                for prev in doc.sentences[lo:sent.sent_index]
            )
            pairs.append(ExplanationPair(
                s1=pair.s1, s2=pair.s2, context=context,
                doc_id=pair.doc_id, sent_index=pair.sent_index, order=pair.order))
            stats.pairs_emitted += 1
    return pairs, stats


def corpus_stats(pairs: Sequence[ExplanationPair]) -> dict:
    """Length report: mean of |S1|+|S2|, with and without context tokens."""
    n = len(pairs)
    if n == 0:
        return {"count": 0, "mean_pair_len": None, "mean_with_context": None}
    pair_lens = [len(p.s1) + len(p.s2) for p in pairs]
    ctx_lens = [sum(len(c) for c in p.context) for p in pairs]
    return {
        "count": n,
        "mean_pair_len": sum(pair_lens) / n,
        "mean_with_context": sum(pl + cl for pl, cl in zip(pair_lens, ctx_lens)) / n,
    }


def pair_to_json(pair: ExplanationPair) -> str:
    record = {
        "id": pair.pair_id,
        "doc_id": pair.doc_id,
        "sent_index": pair.sent_index,
        "s1": " ".join(pair.s1),
        "s2": " ".join(pair.s2),
        "context": [" ".join(c) for c in pair.context],
        "order": pair.order,
    }
    return json.dumps(record, ensure_ascii=False)


def write_pairs(pairs: Sequence[ExplanationPair], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for pair in pairs:
            f.write(pair_to_json(pair) + "\n")


def read_pairs(path) -> List[ExplanationPair]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            pairs.append(ExplanationPair(
                s1=tuple(rec["s1"].split()),
                s2=tuple(rec["s2"].split()),
                context=tuple(tuple(c.split()) for c in rec["context"]),
                doc_id=rec["doc_id"],
                sent_index=rec["sent_index"],
                order=rec["order"],
            ))
    return pairs

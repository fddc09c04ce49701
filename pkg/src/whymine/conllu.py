"""CoNLL-U reading, tree validation, and dependency-label normalization.

The rest of the pipeline consumes pre-parsed CoNLL-U (10 tab-separated
columns, blank line between sentences, ``# newdoc id = <id>`` between
documents). Document order is preserved so later stages can attach the
sentences preceding a match as context.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, List, Optional, Union

NEWDOC_PREFIX = "# newdoc id ="

# Labels whose UD v2 subtype suffix (after ":") is dropped on normalization.
STRIP_SUBTYPE = {"advcl", "obl", "acl", "nmod"}

# UD v2 -> Stanford-typed labels used by the pattern engine.
UD2_MAP = {
    "nsubj:pass": "nsubjpass",
    "aux:pass": "auxpass",
    "csubj:pass": "csubjpass",
}

LABEL_SCHEMES = ("stanford", "ud2")


@dataclass(frozen=True)
class Token:
    """One parsed token. ``head`` is 0 for the sentence root."""

    index: int
    form: str
    lemma: str
    upos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class DepSentence:
    tokens: tuple
    doc_id: str = ""
    sent_index: int = 0

    def __len__(self):
        return len(self.tokens)

    def root(self) -> Token:
        for tok in self.tokens:
            if tok.head == 0:
                return tok
        raise ValueError("sentence has no root")

    def children(self, index: int) -> List[Token]:
        return [t for t in self.tokens if t.head == index]

    def subtree(self, index: int) -> List[Token]:
        """Tokens of the subtree rooted at ``index``, in surface order."""
        keep = {index}
        changed = True
        while changed:
            changed = False
            for tok in self.tokens:
                if tok.head in keep and tok.index not in keep:
                    keep.add(tok.index)
                    changed = True
        return [t for t in self.tokens if t.index in keep]

    def text(self) -> str:
        return " ".join(t.form for t in self.tokens)


@dataclass
class Document:
    doc_id: str
    sentences: List[DepSentence] = field(default_factory=list)


@dataclass(frozen=True)
class ParseError:
    """A dropped sentence: first offending line number and what was wrong."""

    line: int
    reason: str


class ParsedCorpus:
    """Sequence of documents plus the per-sentence errors hit while parsing."""

    def __init__(self, documents: List[Document], errors: List[ParseError]):
        self.documents = documents
        self.errors = errors

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __len__(self):
        return len(self.documents)

    def __getitem__(self, i):
        return self.documents[i]

    def sentences(self) -> Iterator[DepSentence]:
        for doc in self.documents:
            yield from doc.sentences


def validate_tree(tokens: Iterable[Token]) -> Optional[str]:
    """Return a reason string if the tokens do not form a single rooted tree."""
    tokens = list(tokens)
    n = len(tokens)
    if n == 0:
        return "empty sentence"
    for pos, tok in enumerate(tokens, start=1):
        if tok.index != pos:
            return f"non-consecutive token index {tok.index}"
        if not tok.form:
            return "empty form"
        if tok.head < 0 or tok.head > n:
            return f"head {tok.head} out of range"
        if tok.head == tok.index:
            return f"token {tok.index} is its own head"
    roots = [t for t in tokens if t.head == 0]
    if len(roots) != 1:
        return f"{len(roots)} roots"
    # All tokens must be reachable from the root (no cycles detached from it).
    reached = {roots[0].index}
    frontier = [roots[0].index]
    while frontier:
        head = frontier.pop()
        for tok in tokens:
            if tok.head == head and tok.index not in reached:
                reached.add(tok.index)
                frontier.append(tok.index)
    if len(reached) != n:
        return "cycle: tokens unreachable from root"
    return None


def _parse_block(lines, start_line):
    """Parse one sentence block. Returns (tokens, error)."""
    tokens = []
    for offset, line in enumerate(lines):
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            return None, ParseError(start_line + offset, f"expected 10 columns, got {len(cols)}")
        tid = cols[0]
        if "-" in tid or "." in tid:
            # multi-word token range or empty node; not part of the basic tree
            continue
        try:
            index = int(tid)
            head = int(cols[6])
        except ValueError:
            return None, ParseError(start_line + offset, f"non-numeric index or head: {tid!r}/{cols[6]!r}")
        tokens.append(Token(index=index, form=cols[1], lemma=cols[2],
                            upos=cols[3], head=head, deprel=cols[7]))
    if not tokens:
        return None, None
    reason = validate_tree(tokens)
    if reason is not None:
        return None, ParseError(start_line, reason)
    return tuple(tokens), None


def parse_conllu(source: Union[str, io.TextIOBase]) -> ParsedCorpus:
    """Parse CoNLL-U text into documents of validated sentences.

    ``source`` is a string or a text stream. A ``# newdoc id = <id>`` comment
    starts a new document; input without one becomes a single document with
    an empty id. Malformed or non-tree sentences are dropped and recorded in
    ``ParsedCorpus.errors``; parsing continues with the next sentence.
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source.read().splitlines()

    documents: List[Document] = []
    errors: List[ParseError] = []
    current_doc: Optional[Document] = None
    block: List[str] = []
    block_start = 1

    def ensure_doc() -> Document:
        nonlocal current_doc
        if current_doc is None:
            current_doc = Document(doc_id="")
            documents.append(current_doc)
        return current_doc

    def flush_block():
        nonlocal block
        if not block:
            return
        tokens, err = _parse_block(block, block_start)
        block = []
        if err is not None:
            errors.append(err)
            return
        if tokens is None:  # comment-only block
            return
        doc = ensure_doc()
        doc.sentences.append(DepSentence(tokens=tokens, doc_id=doc.doc_id,
                                         sent_index=len(doc.sentences)))

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if line.startswith(NEWDOC_PREFIX):
            flush_block()
            current_doc = Document(doc_id=line[len(NEWDOC_PREFIX):].strip())
            documents.append(current_doc)
            continue
        if line.strip() == "":
            flush_block()
            continue
        if not block:
            block_start = lineno
        block.append(line)
    flush_block()

    return ParsedCorpus(documents, errors)


def normalize_labels(sent: DepSentence, scheme: str) -> DepSentence:
    """Map dependency labels onto the Stanford-typed names the patterns use.

    ``stanford`` input passes through unchanged. For ``ud2``, passive labels
    are collapsed (``nsubj:pass`` -> ``nsubjpass``) and subtype suffixes are
    stripped from advcl/obl/acl/nmod. Unknown labels are left alone.
    """
    if scheme not in LABEL_SCHEMES:
        raise ValueError(f"unknown label scheme {scheme!r}")
    if scheme == "stanford":
        return sent
    new_tokens = []
    for tok in sent.tokens:
        label = UD2_MAP.get(tok.deprel)
        if label is None:
            base = tok.deprel.split(":", 1)[0]
            label = base if base in STRIP_SUBTYPE else tok.deprel
        new_tokens.append(replace(tok, deprel=label) if label != tok.deprel else tok)
    return DepSentence(tokens=tuple(new_tokens), doc_id=sent.doc_id,
                       sent_index=sent.sent_index)


def to_conllu(sent: DepSentence) -> str:
    """Serialize back to 10-column CoNLL-U (unused columns as ``_``)."""
    rows = []
    for t in sent.tokens:
        rows.append("\t".join([str(t.index), t.form, t.lemma, t.upos, "_", "_",
                               str(t.head), t.deprel, "_", "_"]))
    return "\n".join(rows) + "\n"

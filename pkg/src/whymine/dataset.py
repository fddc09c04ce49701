"""Vocabulary, example encoding, splits, and evaluation-prompt adapters.

Examples pair an encoded source with an encoded target (explanation + EOS).
The plain task conditions on the phenomenon clause alone; the contextual
task prepends up to five preceding sentences, each followed by a separator
token, in document order.
"""

from __future__ import annotations

import hashlib
import json
import random
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

from .extract import ExplanationPair

PAD, UNK, BOS, EOS, SEP = 0, 1, 2, 3, 4
RESERVED = ("<PAD>", "<UNK>", "<BOS>", "<EOS>", "<SEP>")

TASK_PLAIN = "L2E"
TASK_CONTEXT = "L2EC"
TASKS = (TASK_PLAIN, TASK_CONTEXT)

PROMPT_KINDS = ("winograd", "copa", "raw")

SPLIT_FRACTIONS = (0.9, 0.05, 0.05)
MIN_SPLIT_SIZE = 10

MARKER = "because"

_PUNCT = set(string.punctuation)


class DatasetError(ValueError):
    pass


class Vocabulary:
    """Token <-> id mapping with fixed reserved ids 0..4.

    Ids are assigned by descending frequency, ties by token order, so the
    same corpus always yields the same table.
    """

    def __init__(self, tokens: Sequence[str], min_freq: int = 1, max_size: int = 50000):
        self.id_to_token: List[str] = list(RESERVED) + list(tokens)
        self.token_to_id = {tok: i for i, tok in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise DatasetError("duplicate tokens in vocabulary")
        self.min_freq = min_freq
        self.max_size = max_size

    def __len__(self):
        return len(self.id_to_token)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.token_to_id.get(tok.lower(), UNK) for tok in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.id_to_token[i] for i in ids]

    def digest(self) -> str:
        payload = json.dumps(self.id_to_token, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def save(self, path) -> None:
        data = {"tokens": self.id_to_token[len(RESERVED):],
                "min_freq": self.min_freq, "max_size": self.max_size}
        Path(path).write_text(json.dumps(data, ensure_ascii=False, indent=0) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data["tokens"], data["min_freq"], data["max_size"])


def _token_streams(items) -> Iterable[List[str]]:
    for item in items:
        if isinstance(item, ExplanationPair):
            yield list(item.s1)
            yield list(item.s2)
            for ctx in item.context:
                yield list(ctx)
            # one marker occurrence per extracted sentence, so prompts
            # ending in "because" stay in-vocabulary
            yield [MARKER]
        elif isinstance(item, str):
            yield item.split()
        else:
            yield list(item)


def build_vocab(pairs, min_freq: int = 1, max_size: int = 50000) -> Vocabulary:
    """Count lowercased tokens and keep those above the frequency cutoff."""
    if min_freq < 1:
        raise DatasetError("min_freq must be >= 1")
    counts: Counter = Counter()
    for tokens in _token_streams(pairs):
        counts.update(tok.lower() for tok in tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [tok for tok, freq in ranked if freq >= min_freq][:max_size]
    return Vocabulary(kept, min_freq=min_freq, max_size=max_size)


@dataclass(frozen=True)
class Example:
    source: Tuple[int, ...]
    target: Tuple[int, ...]


def make_examples(pairs: Sequence[ExplanationPair], vocab: Vocabulary,
                  task: str, max_src_len: int = 200):
    """Encode pairs into Examples. Returns (examples, skipped_count).

    Contextual sources longer than ``max_src_len`` lose their oldest context
    block first; a lone over-long phenomenon clause is trimmed from the left.
    """
    if task not in TASKS:
        raise DatasetError(f"unknown task {task!r}")
    examples: List[Example] = []
    skipped = 0
    for pair in pairs:
        if not pair.s1 or not pair.s2:
            skipped += 1
            continue
        s1_ids = vocab.encode(pair.s1)
        target = tuple(vocab.encode(pair.s2)) + (EOS,)
        if task == TASK_PLAIN:
            source = list(s1_ids)
        else:
            blocks = [vocab.encode(ctx) for ctx in pair.context[-5:]]
            def total(bs):
                return sum(len(b) + 1 for b in bs) + len(s1_ids)
            while blocks and total(blocks) > max_src_len:
                blocks.pop(0)
            source = []
            for block in blocks:
                source.extend(block)
                source.append(SEP)
            source.extend(s1_ids)
        if len(source) > max_src_len:
            source = source[-max_src_len:]
        examples.append(Example(source=tuple(source), target=target))
    return examples, skipped


@dataclass
class DatasetSplit:
    train: List[Example]
    valid: List[Example]
    test: List[Example]
    seed: int
    fractions: Tuple[float, float, float] = SPLIT_FRACTIONS

    def sizes(self):
        return len(self.train), len(self.valid), len(self.test)


def split(examples: Sequence[Example], seed: int) -> DatasetSplit:
    """Seeded shuffle, then contiguous 0.9/0.05/0.05 slices."""
    n = len(examples)
    if n < MIN_SPLIT_SIZE:
        raise DatasetError(f"too_small: need at least {MIN_SPLIT_SIZE} examples, got {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    shuffled = [examples[i] for i in order]
    n_valid = int(n * SPLIT_FRACTIONS[1] + 0.5)
    n_test = int(n * SPLIT_FRACTIONS[2] + 0.5)
    n_train = n - n_valid - n_test
    return DatasetSplit(
        train=shuffled[:n_train],
        valid=shuffled[n_train:n_train + n_valid],
        test=shuffled[n_train + n_valid:],
        seed=seed,
    )


def adapt_prompt(kind: str, text) -> Tuple[str, ...]:
    """Normalize an evaluation sentence into a "... because" prompt.

    Winograd inputs are expected to have their pronouns already substituted
    upstream. Idempotent: a prompt that already ends with the marker is
    returned unchanged (modulo lowercasing).
    """
    if kind not in PROMPT_KINDS:
        raise DatasetError(f"unknown prompt kind {kind!r}")
    tokens = text.split() if isinstance(text, str) else list(text)
    tokens = [tok.lower() for tok in tokens]
    while tokens and all(ch in _PUNCT for ch in tokens[-1]):
        tokens.pop()
    if tokens:
        stripped = tokens[-1].rstrip("".join(_PUNCT))
        if stripped:
            tokens[-1] = stripped
    if not tokens:
        raise DatasetError("empty prompt text")
    if tokens[-1] != MARKER:
        tokens.append(MARKER)
    return tuple(tokens)


# ---------------------------------------------------------------------------
# On-disk layout: vocab.json, {train,valid,test}.jsonl, meta.json


def save_split(ds: DatasetSplit, vocab: Vocabulary, out_dir, task: str,
               extra_meta: Optional[dict] = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab.save(out / "vocab.json")
    for name, exs in (("train", ds.train), ("valid", ds.valid), ("test", ds.test)):
        with open(out / f"{name}.jsonl", "w", encoding="utf-8") as f:
            for ex in exs:
                f.write(json.dumps({"source": list(ex.source),
                                    "target": list(ex.target)}) + "\n")
    meta = {
        "task": task,
        "seed": ds.seed,
        "fractions": list(ds.fractions),
        "min_freq": vocab.min_freq,
        "max_size": vocab.max_size,
        "sizes": {"train": len(ds.train), "valid": len(ds.valid), "test": len(ds.test)},
        "vocab_digest": vocab.digest(),
    }
    if extra_meta:
        meta.update(extra_meta)
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _read_examples(path) -> List[Example]:
    examples = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            examples.append(Example(source=tuple(rec["source"]),
                                    target=tuple(rec["target"])))
    return examples


def load_split(in_dir):
    """Returns (DatasetSplit, Vocabulary, meta dict)."""
    root = Path(in_dir)
    meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
    vocab = Vocabulary.load(root / "vocab.json")
    ds = DatasetSplit(
        train=_read_examples(root / "train.jsonl"),
        valid=_read_examples(root / "valid.jsonl"),
        test=_read_examples(root / "test.jsonl"),
        seed=meta["seed"],
        fractions=tuple(meta["fractions"]),
    )
    return ds, vocab, meta

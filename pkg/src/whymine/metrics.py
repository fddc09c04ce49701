"""Overlap metrics for generated explanations plus training-side metrics.

Pinned variants: corpus-level BLEU-4 with brevity penalty, ROUGE-L F1
averaged per pair, and a METEOR without the synonym stage (exact + stemmed
matching, fragmentation penalty 0.5*(chunks/matches)^3). All scores live in
[0, 1]. Tokens are lowercased and compared as whitespace units.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class EvalPair:
    hypothesis: Tuple[str, ...]
    reference: Tuple[str, ...]


@dataclass(frozen=True)
class MetricReport:
    bleu: float
    rouge_l_f1: float
    meteor: float
    n: int

    def as_dict(self):
        return {"bleu": self.bleu, "rouge_l_f1": self.rouge_l_f1,
                "meteor": self.meteor, "n": self.n}


def _normalize(pairs) -> List[EvalPair]:
    out = []
    for pair in pairs:
        if isinstance(pair, EvalPair):
            hyp, ref = pair.hypothesis, pair.reference
        else:
            hyp, ref = pair
        if isinstance(hyp, str):
            hyp = hyp.split()
        if isinstance(ref, str):
            ref = ref.split()
        out.append(EvalPair(tuple(t.lower() for t in hyp),
                            tuple(t.lower() for t in ref)))
    if not out:
        raise MetricError("need at least one hypothesis/reference pair")
    return out


# ---------------------------------------------------------------------------
# BLEU


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(pairs, max_n: int = 4, smooth: bool = False) -> float:
    """Corpus BLEU with reference-clipped counts and brevity penalty.

    Any zero n-gram precision zeroes the score unless ``smooth`` floors
    precisions at 1e-9.
    """
    pairs = _normalize(pairs)
    clipped = [0] * max_n
    totals = [0] * max_n
    hyp_len = 0
    ref_len = 0
    for pair in pairs:
        hyp_len += len(pair.hypothesis)
        ref_len += len(pair.reference)
        for n in range(1, max_n + 1):
            hyp_counts = _ngrams(pair.hypothesis, n)
            ref_counts = _ngrams(pair.reference, n)
            totals[n - 1] += max(0, len(pair.hypothesis) - n + 1)
            clipped[n - 1] += sum(min(cnt, ref_counts[gram])
                                  for gram, cnt in hyp_counts.items())
    if hyp_len == 0:
        warnings.warn("empty hypothesis corpus; BLEU is 0", stacklevel=2)
        return 0.0
    precisions = []
    for c, t in zip(clipped, totals):
        p = c / t if t > 0 else 0.0
        if p == 0.0:
            if not smooth:
                return 0.0
            p = 1e-9
        precisions.append(p)
    log_mean = sum(math.log(p) for p in precisions) / max_n
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_mean)


# ---------------------------------------------------------------------------
# ROUGE-L


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length by the classic DP table."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        row = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                row.append(prev[j - 1] + 1)
            else:
                row.append(max(prev[j], row[-1]))
        prev = row
    return prev[-1]


def rouge_l(pairs) -> float:
    """Mean per-pair LCS F1."""
    pairs = _normalize(pairs)
    scores = []
    for pair in pairs:
        length = lcs_length(pair.hypothesis, pair.reference)
        if length == 0 or not pair.hypothesis or not pair.reference:
            scores.append(0.0)
            continue
        p = length / len(pair.hypothesis)
        r = length / len(pair.reference)
        scores.append(2 * p * r / (p + r))
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# Porter stemmer (suffix stripping for the METEOR stem stage)


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in "aeiou":
        return False
    if ch == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Count of vowel->consonant transitions, the m of [C](VC)^m[V]."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        vowel = not _is_cons(stem, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return (len(word) >= 2 and word[-1] == word[-2]
            and _is_cons(word, len(word) - 1))


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (_is_cons(word, len(word) - 3)
            and not _is_cons(word, len(word) - 2)
            and _is_cons(word, len(word) - 1)
            and word[-1] not in "wxy")


_STEP2 = [("ational", "ate"), ("tional", "tion"), ("enci", "ence"),
          ("anci", "ance"), ("izer", "ize"), ("abli", "able"), ("alli", "al"),
          ("entli", "ent"), ("eli", "e"), ("ousli", "ous"), ("ization", "ize"),
          ("ation", "ate"), ("ator", "ate"), ("alism", "al"),
          ("iveness", "ive"), ("fulness", "ful"), ("ousness", "ous"),
          ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")]

_STEP3 = [("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
          ("ical", "ic"), ("ful", ""), ("ness", "")]

_STEP4 = ["al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
          "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize"]


def porter_stem(word: str) -> str:
    """Porter's 1980 suffix-stripping algorithm, synonym-free METEOR's stemmer."""
    w = word.lower()
    if len(w) <= 2:
        return w

    # step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif not w.endswith("ss") and w.endswith("s"):
        w = w[:-1]

    # step 1b
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    else:
        fired = False
        if w.endswith("ed") and _has_vowel(w[:-2]):
            w = w[:-2]
            fired = True
        elif w.endswith("ing") and _has_vowel(w[:-3]):
            w = w[:-3]
            fired = True
        if fired:
            if w.endswith(("at", "bl", "iz")):
                w += "e"
            elif _ends_double_cons(w) and w[-1] not in "lsz":
                w = w[:-1]
            elif _measure(w) == 1 and _ends_cvc(w):
                w += "e"

    # step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # step 2
    for suffix, repl in _STEP2:
        if w.endswith(suffix):
            stem = w[:-len(suffix)]
            if _measure(stem) > 0:
                w = stem + repl
            break

    # step 3
    for suffix, repl in _STEP3:
        if w.endswith(suffix):
            stem = w[:-len(suffix)]
            if _measure(stem) > 0:
                w = stem + repl
            break

    # step 4
    for suffix in _STEP4:
        if w.endswith(suffix):
            stem = w[:-len(suffix)]
            if _measure(stem) > 1:
                if suffix == "ion" and (not stem or stem[-1] not in "st"):
                    break
                w = stem
            break

    # step 5a
    if w.endswith("e"):
        m = _measure(w[:-1])
        if m > 1 or (m == 1 and not _ends_cvc(w[:-1])):
            w = w[:-1]

    # step 5b
    if _measure(w) > 1 and _ends_double_cons(w) and w.endswith("l"):
        w = w[:-1]

    return w


# ---------------------------------------------------------------------------
# METEOR (exact + stem stages, no synonyms)


def _match_candidates(hyp, ref):
    hyp_stems = [porter_stem(t) for t in hyp]
    ref_stems = [porter_stem(t) for t in ref]
    cands = []
    for i, h in enumerate(hyp):
        row = [j for j, r in enumerate(ref)
               if h == r or hyp_stems[i] == ref_stems[j]]
        cands.append(row)
    return cands


def _max_matching(cands, n_ref: int):
    """Kuhn's augmenting-path maximum bipartite matching.

    Returns (size, match_ref) where match_ref[j] is the hyp index matched
    to ref position j, or -1.
    """
    match_ref = [-1] * n_ref

    def try_augment(i, seen):
        for j in cands[i]:
            if j in seen:
                continue
            seen.add(j)
            if match_ref[j] == -1 or try_augment(match_ref[j], seen):
                match_ref[j] = i
                return True
        return False

    size = 0
    for i in range(len(cands)):
        if try_augment(i, set()):
            size += 1
    return size, match_ref


def _count_chunks(aligned_pairs) -> int:
    """Chunks of a (hyp_i, ref_j) alignment: maximal runs contiguous in both."""
    pairs = sorted(aligned_pairs)
    chunks = 0
    last = (-2, -2)
    for i, j in pairs:
        if not (i == last[0] + 1 and j == last[1] + 1):
            chunks += 1
        last = (i, j)
    return chunks


def align_meteor(hyp, ref, node_budget: int = 500_000):
    """Maximum one-to-one hyp/ref alignment with the fewest chunks.

    Returns (matches, chunks). Exhaustive branch-and-bound over candidate
    assignments; the node budget is a safety valve for pathological repeated
    sentences and leaves the result a valid maximum alignment either way.
    """
    cands = _match_candidates(hyp, ref)
    target, match_ref = _max_matching(cands, len(ref))
    if target == 0:
        return 0, 0

    # any maximum matching is a feasible bound, so a budget blowout still
    # leaves a valid answer
    seed_chunks = _count_chunks(
        (i, j) for j, i in enumerate(match_ref) if i != -1)
    best = {"chunks": seed_chunks}
    nodes = {"n": 0}
    n_hyp = len(hyp)

    def search(i, used, matched, chunks, last_i, last_j):
        if chunks >= best["chunks"] or nodes["n"] > node_budget:
            return
        if matched + (n_hyp - i) < target:
            return
        if i == n_hyp:
            if matched == target:
                best["chunks"] = chunks
            return
        nodes["n"] += 1
        for j in cands[i]:
            if j in used:
                continue
            extends = (last_i == i - 1 and last_j == j - 1)
            used.add(j)
            search(i + 1, used, matched + 1,
                   chunks if extends else chunks + 1, i, j)
            used.discard(j)
        # leaving hyp[i] unmatched
        search(i + 1, used, matched, chunks, last_i, last_j)

    search(0, set(), 0, 0, -2, -2)
    return target, best["chunks"]


def meteor_sentence(hyp, ref) -> float:
    hyp = [t.lower() for t in hyp]
    ref = [t.lower() for t in ref]
    m, chunks = align_meteor(hyp, ref)
    if m == 0:
        return 0.0
    p = m / len(hyp)
    r = m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1.0 - penalty)


def meteor_lite(pairs) -> float:
    """Mean sentence-level METEOR score over the corpus."""
    pairs = _normalize(pairs)
    return sum(meteor_sentence(p.hypothesis, p.reference) for p in pairs) / len(pairs)


# ---------------------------------------------------------------------------
# Training-side metrics


def per_token_accuracy(distributions, target, pad_id: int = 0) -> float:
    """Fraction of non-pad positions whose argmax hits the gold id."""
    gold = [t for t in target if t != pad_id]
    if not gold:
        raise MetricError("no scorable positions: target is all padding")
    dists = np.asarray(distributions)
    if len(dists) != len(gold):
        raise MetricError(f"got {len(dists)} distributions for {len(gold)} positions")
    preds = np.argmax(dists, axis=-1)
    return float(np.mean(preds == np.asarray(gold)))


def perplexity(total_nll: float, token_count: int) -> float:
    if token_count < 1:
        raise MetricError("token_count must be >= 1")
    return float(math.exp(total_nll / token_count))


def evaluate_corpus(hyps, refs, smooth: bool = False) -> MetricReport:
    """Score line-aligned hypothesis/reference corpora with all three metrics."""
    if len(hyps) != len(refs):
        raise MetricError(f"hypothesis/reference count mismatch: {len(hyps)} vs {len(refs)}")
    pairs = list(zip(hyps, refs))
    return MetricReport(
        bleu=corpus_bleu(pairs, smooth=smooth),
        rouge_l_f1=rouge_l(pairs),
        meteor=meteor_lite(pairs),
        n=len(pairs),
    )

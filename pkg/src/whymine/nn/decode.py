"""Greedy and beam decoding over the models' incremental step interface.

Tie rules are fixed so decode behavior is exactly reproducible: greedy takes
the lowest token id among maxima, beam search breaks score ties in favor of
the lexicographically smaller id sequence. With beam size 1 and no length
normalization the two are token-for-token identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..dataset import EOS

MODE_GREEDY = "greedy"
MODE_BEAM = "beam"


@dataclass(frozen=True)
class DecodeResult:
    candidates: Tuple[Tuple[Tuple[int, ...], float], ...]
    mode: str
    beam_size: int

    def best(self) -> Tuple[Tuple[int, ...], float]:
        return self.candidates[0]


def greedy_decode(model, source: Sequence[int], max_len: int,
                  eos_id: int = EOS) -> DecodeResult:
    """Argmax decoding; stops at EOS or after max_len tokens."""
    state, logp = model.decode_start(source)
    tokens: List[int] = []
    total = 0.0
    for _ in range(max_len):
        tok = int(np.argmax(logp))
        total += float(logp[tok])
        tokens.append(tok)
        if tok == eos_id:
            break
        state, logp = model.decode_step(state, tok)
    return DecodeResult(candidates=((tuple(tokens), total),),
                        mode=MODE_GREEDY, beam_size=1)


def beam_decode(model, source: Sequence[int], beam_size: int, max_len: int,
                length_norm: Optional[float] = None,
                eos_id: int = EOS) -> DecodeResult:
    """Beam search over summed token log-probabilities.

    Finished hypotheses (ending in EOS) retire into a pool; the result ranks
    pool plus still-live beams. With ``length_norm`` alpha, final ranking
    divides scores by len(tokens) ** alpha.
    """
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    state, logp = model.decode_start(source)
    # (tokens, score, state, next-step log-probs)
    live = [((), 0.0, state, logp)]
    pool: List[Tuple[Tuple[int, ...], float]] = []

    for _ in range(max_len):
        if not live:
            break
        expansions = []
        for tokens, score, state, logp in live:
            for tok, lp in enumerate(logp):
                expansions.append((score + float(lp), tokens + (tok,), state))
        expansions.sort(key=lambda e: (-e[0], e[1]))
        next_live = []
        for score, tokens, state in expansions[:beam_size]:
            if tokens[-1] == eos_id:
                pool.append((tokens, score))
            else:
                new_state, new_logp = model.decode_step(state, tokens[-1])
                next_live.append((tokens, score, new_state, new_logp))
        live = next_live

    finished = pool + [(tokens, score) for tokens, score, _, _ in live]

    def rank_key(item):
        tokens, score = item
        if length_norm is not None:
            score = score / (len(tokens) ** length_norm)
        return (-score, tokens)

    def final_score(item):
        tokens, score = item
        if length_norm is not None:
            return score / (len(tokens) ** length_norm)
        return score

    finished.sort(key=rank_key)
    top = tuple((tokens, final_score((tokens, score)))
                for tokens, score in finished[:beam_size])
    return DecodeResult(candidates=top, mode=MODE_BEAM, beam_size=beam_size)

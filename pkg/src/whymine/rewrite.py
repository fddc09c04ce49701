"""Turn parsed "Why ...?" questions into declarative statements.

Starting at the root of the question's dependency tree: the nominal subject
keeps its subtree, the first aux/cop/auxpass either stays in place (aux_copy)
or, when it is do-support ("do"/"does"/"did"), is deleted and its tense and
person are re-applied to the main verb (do_support). The resulting statement
plus a trailing "because" is the generation prompt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .conllu import DepSentence, Token

PAST = "past"
THIRD_SINGULAR = "third_singular"
BASE = "base"

DO_FORMS = {"do", "does", "did"}
AUX_LABELS = ("aux", "cop", "auxpass")
SUBJ_LABELS = ("nsubj", "nsubjpass")

RULE_DO_SUPPORT = "do_support"
RULE_AUX_COPY = "aux_copy"

VOWELS = "aeiou"

# lemma -> simple past for verbs the +ed rules get wrong
IRREGULAR_PAST: Dict[str, str] = {
    "arise": "arose", "awake": "awoke", "be": "was", "bear": "bore",
    "beat": "beat", "become": "became", "befall": "befell", "begin": "began",
    "behold": "beheld", "bend": "bent", "beset": "beset", "bet": "bet",
    "bid": "bid", "bind": "bound", "bite": "bit", "bleed": "bled",
    "blow": "blew", "break": "broke", "breed": "bred", "bring": "brought",
    "broadcast": "broadcast", "build": "built", "burst": "burst",
    "buy": "bought", "cast": "cast", "catch": "caught", "choose": "chose",
    "cling": "clung", "come": "came", "cost": "cost", "creep": "crept",
    "cut": "cut", "deal": "dealt", "dig": "dug", "do": "did", "draw": "drew",
    "drink": "drank", "drive": "drove", "eat": "ate", "fall": "fell",
    "feed": "fed", "feel": "felt", "fight": "fought", "find": "found",
    "flee": "fled", "fling": "flung", "fly": "flew", "forbid": "forbade",
    "forecast": "forecast", "foresee": "foresaw", "forget": "forgot",
    "forgive": "forgave", "forsake": "forsook", "freeze": "froze",
    "get": "got", "give": "gave", "go": "went", "grind": "ground",
    "grow": "grew", "hang": "hung", "have": "had", "hear": "heard",
    "hide": "hid", "hit": "hit", "hold": "held", "hurt": "hurt",
    "keep": "kept", "kneel": "knelt", "know": "knew", "lay": "laid",
    "lead": "led", "leave": "left", "lend": "lent", "let": "let",
    "lie": "lay", "light": "lit", "lose": "lost", "make": "made",
    "mean": "meant", "meet": "met", "mislead": "misled", "misread": "misread",
    "mistake": "mistook", "outdo": "outdid", "outgrow": "outgrew",
    "outrun": "outran", "overcome": "overcame", "overdo": "overdid",
    "overhear": "overheard", "oversee": "oversaw", "oversleep": "overslept",
    "overtake": "overtook", "overthrow": "overthrew", "partake": "partook",
    "pay": "paid", "put": "put", "quit": "quit", "read": "read",
    "rebuild": "rebuilt", "redo": "redid", "remake": "remade",
    "repay": "repaid", "resell": "resold", "rethink": "rethought",
    "rewind": "rewound", "rewrite": "rewrote", "ride": "rode",
    "ring": "rang", "rise": "rose", "run": "ran", "say": "said",
    "see": "saw", "seek": "sought", "sell": "sold", "send": "sent",
    "set": "set", "shake": "shook", "shed": "shed", "shine": "shone",
    "shoot": "shot", "show": "showed", "shrink": "shrank", "shut": "shut",
    "sing": "sang", "sink": "sank", "sit": "sat", "sleep": "slept",
    "slide": "slid", "sling": "slung", "speak": "spoke", "speed": "sped",
    "spend": "spent", "spin": "spun", "spit": "spat", "split": "split",
    "spread": "spread", "spring": "sprang", "stand": "stood",
    "steal": "stole", "stick": "stuck", "sting": "stung", "stink": "stank",
    "strike": "struck", "string": "strung", "strive": "strove",
    "swear": "swore", "sweep": "swept", "swim": "swam", "swing": "swung",
    "take": "took", "teach": "taught", "tear": "tore", "tell": "told",
    "think": "thought", "throw": "threw", "thrust": "thrust",
    "tread": "trod", "undergo": "underwent", "understand": "understood",
    "undertake": "undertook", "undo": "undid", "unwind": "unwound",
    "uphold": "upheld", "upset": "upset", "wake": "woke", "wear": "wore",
    "weave": "wove", "weep": "wept", "win": "won", "wind": "wound",
    "withdraw": "withdrew", "withhold": "withheld", "withstand": "withstood",
    "wring": "wrung", "write": "wrote",
}

IRREGULAR_THIRD: Dict[str, str] = {"be": "is", "have": "has"}

# Regular verbs with stress-final doubling the length heuristic misses.
DOUBLE_FINAL = {
    "admit", "commit", "compel", "control", "equip", "occur", "omit",
    "permit", "prefer", "refer", "regret", "submit", "transfer",
}


@dataclass(frozen=True)
class RewriteResult:
    statement: Tuple[str, ...]
    subj_span: Tuple[int, ...]
    aux_token: Optional[int]
    vp_span: Tuple[int, ...]
    applied_rule: str

    def text(self) -> str:
        return " ".join(self.statement)


class RewriteError(ValueError):
    """Question cannot be rewritten; ``reason`` is a stable enum string."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


NOT_WHY_QUESTION = "not_why_question"
NO_SUBJECT = "no_subject"
NO_AUX = "no_aux"


def _is_vowel(ch: str) -> bool:
    return ch in VOWELS


def _double_final(word: str) -> bool:
    if word in DOUBLE_FINAL:
        return True
    # short CVC words: stop -> stopped; longer words like "visit" stay single
    if len(word) < 3 or len(word) > 4:
        return False
    a, b, c = word[-3], word[-2], word[-1]
    return (not _is_vowel(a)) and _is_vowel(b) and not _is_vowel(c) and c not in "wxy"


def inflect(lemma: str, target: str) -> str:
    """Inflect a verb lemma; irregular table first, then regular rules."""
    word = lemma.lower()
    if target == BASE:
        return word
    if target == PAST:
        if word in IRREGULAR_PAST:
            return IRREGULAR_PAST[word]
        if word.endswith("e"):
            return word + "d"
        if word.endswith("y") and len(word) > 1 and not _is_vowel(word[-2]):
            return word[:-1] + "ied"
        if _double_final(word):
            return word + word[-1] + "ed"
        return word + "ed"
    if target == THIRD_SINGULAR:
        if word in IRREGULAR_THIRD:
            return IRREGULAR_THIRD[word]
        if word.endswith(("s", "x", "z", "ch", "sh", "o")):
            return word + "es"
        if word.endswith("y") and len(word) > 1 and not _is_vowel(word[-2]):
            return word[:-1] + "ies"
        return word + "s"
    raise ValueError(f"unknown inflection target {target!r}")


_DO_TARGET = {"did": PAST, "does": THIRD_SINGULAR, "do": BASE}


def rewrite(q: DepSentence) -> RewriteResult:
    """Rewrite one parsed why-question into a declarative statement.

    Raises RewriteError(not_why_question | no_subject | no_aux).
    """
    if len(q) == 0 or q.tokens[0].form.lower() != "why":
        raise RewriteError(NOT_WHY_QUESTION, "input must start with 'Why'")
    why_index = q.tokens[0].index
    root = q.root()

    children = q.children(root.index)
    subj_head = next(
        (t for t in children if t.deprel in SUBJ_LABELS), None)
    if subj_head is None:
        raise RewriteError(NO_SUBJECT, "root has no nsubj/nsubjpass dependent")
    aux = next((t for t in children if t.deprel in AUX_LABELS), None)
    if aux is None and root.upos != "VERB":
        raise RewriteError(NO_AUX, "no aux/cop/auxpass and root is not a verb")

    subj_tokens = q.subtree(subj_head.index)
    subj_span = tuple(t.index for t in subj_tokens)
    skip = set(subj_span) | {why_index}
    if aux is not None:
        skip.add(aux.index)
    skip.update(t.index for t in children if t.upos == "PUNCT")

    vp_tokens = [t for t in q.subtree(root.index)
                 if t.index not in skip and t.form != "?"]
    vp_span = tuple(t.index for t in vp_tokens)

    do_support = aux is not None and aux.form.lower() in DO_FORMS
    vp_forms = []
    for t in vp_tokens:
        if do_support and t.index == root.index:
            vp_forms.append(inflect(root.lemma, _DO_TARGET[aux.form.lower()]))
        else:
            vp_forms.append(t.form)

    if do_support:
        statement = [t.form for t in subj_tokens] + vp_forms
        rule = RULE_DO_SUPPORT
        aux_index = aux.index
    else:
        statement = [t.form for t in subj_tokens]
        if aux is not None:
            statement.append(aux.form)
        statement += vp_forms
        rule = RULE_AUX_COPY
        aux_index = aux.index if aux is not None else None

    # the statement opens with the subject; drop its capitalization unless
    # it is a proper noun
    if statement and subj_tokens[0].upos != "PROPN":
        lead = statement[0]
        statement[0] = lead[0].lower() + lead[1:] if lead else lead

    return RewriteResult(
        statement=tuple(statement),
        subj_span=subj_span,
        aux_token=aux_index,
        vp_span=vp_span,
        applied_rule=rule,
    )


def to_prompt(result: RewriteResult) -> Tuple[str, ...]:
    """Statement plus the "because" marker, ready for the generator."""
    return result.statement + ("because",)

"""Mine phenomenon/explanation pairs out of a dependency-parsed corpus.

Walks the bundled 50-sentence sample corpus, applies the because-pattern,
and prints every extracted pair with its context window.
"""

from pathlib import Path

from whymine.conllu import parse_conllu
from whymine.extract import ExtractionConfig, corpus_stats, extract_corpus

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden_corpus.conllu"

corpus = parse_conllu(CORPUS.read_text(encoding="utf-8"))
print(f"parsed {len(corpus)} documents, "
      f"{sum(len(d.sentences) for d in corpus)} sentences, "
      f"{len(corpus.errors)} dropped")

pairs, stats = extract_corpus(corpus, ExtractionConfig(min_clause_len=3))

print("\nextraction stats:", stats.as_dict())
print("length report:", corpus_stats(pairs))

print("\nfirst five pairs:")
for pair in pairs[:5]:
    print(f"  [{pair.order:8s}] {' '.join(pair.s1)}")
    print(f"             because {' '.join(pair.s2)}")
    if pair.context:
        print(f"             ({len(pair.context)} context sentences, "
              f"oldest: {' '.join(pair.context[0][:6])} ...)")

# fronted clauses come out with the same S1/S2 roles as trailing ones
fronted = [p for p in pairs if p.order == "s2_first"]
print(f"\n{len(fronted)} fronted 'Because S2, S1' sentences handled, e.g.")
p = fronted[0]
print(f"  S1 = {' '.join(p.s1)}")
print(f"  S2 = {' '.join(p.s2)}")

"""
The synthetic dialogue corpus
=============================

Episodes span hotel, restaurant and taxi turns.  Each episode has one
response style, formal or casual.  Every response carries a marker word
for its style and none for the other, so style can be read off text.
"""

from semctrl.corpus import generate_corpus, split, style_of

corpus = generate_corpus(200, seed=42)
print(f"{len(corpus)} episodes, {len(corpus.vocab)} token types")

ep = corpus.episodes[0]
print(f"\nepisode {ep.episode_id} ({ep.style}):")
for turn in ep.turns:
    user = " ".join(corpus.vocab.decode(turn.user_tokens))
    resp = corpus.vocab.decode(turn.response_tokens)
    print(f"  [{turn.condition:10s}] user: {user}")
    print(f"  {'':12s} sys:  {' '.join(resp)}   -> {style_of(resp)}")

train, dev, test = split(corpus, seed=0)
print(f"\nsplit sizes: {len(train)}/{len(dev)}/{len(test)}")

lengths = [len(t.response_tokens) for e in corpus.episodes for t in e.turns]
print("longest response (with EOS):", max(lengths))

#!/usr/bin/env python3
"""Tour of the data layer: manifests, feature files, and conversation graphs.

Builds the classic three-conversation corpus (sizes 3, 4, 2), saves and
reloads it, then constructs chain and fully-connected graphs and attaches
sentiment-shift attributes.
"""

import tempfile
from pathlib import Path

import numpy as np

from linecon import (
    Conversation,
    Corpus,
    Utterance,
    attach_sentiment_edge_features,
    attach_sentiment_weights,
    build_graph,
    load_corpus,
    normalize_adjacency,
    save_corpus,
    validate_corpus,
)

# --- a small corpus, by hand -------------------------------------------------
# Three conversations with 3, 4, and 2 utterances.  Sentiment codes are
# 0=negative, 1=neutral, 2=positive; emotions index the vocabulary below.

vocab = ("anger", "joy", "neutral")
rows = [
    # conv, utt,  text,                    emotion, sentiment, split
    ("c1", "u1", "What do you want?",        0,       0,       "train"),
    ("c1", "u2", "Nothing from you.",        0,       0,       "train"),
    ("c1", "u3", "Fine.",                    2,       1,       "train"),
    ("c2", "u4", "We got the grant!",        1,       2,       "train"),
    ("c2", "u5", "No way, really?",          1,       2,       "train"),
    ("c2", "u6", "Really. Champagne time.",  1,       2,       "dev"),
    ("c2", "u7", "Pour me one.",             1,       2,       "dev"),
    ("c3", "u8", "The meeting moved.",       2,       1,       "test"),
    ("c3", "u9", "Ugh, again?",              0,       0,       "test"),
]

convs = []
for conv_id in ("c1", "c2", "c3"):
    utts = tuple(
        Utterance(utt_id=u, text=t, emotion=e, sentiment=s, split=sp,
                  speaker=None)
        for c, u, t, e, s, sp in rows if c == conv_id)
    convs.append(Conversation(conv_id=conv_id, utterances=utts))

rng = np.random.default_rng(0)
corpus = Corpus(conversations=tuple(convs), emotion_vocab=vocab,
                features=rng.normal(size=(9, 4)))

report = validate_corpus(corpus)
print(f"validation: {len(report.errors)} errors, {len(report.warnings)} warnings")

# --- file round-trip ----------------------------------------------------------

workdir = Path(tempfile.mkdtemp())
save_corpus(corpus, workdir / "demo.jsonl", workdir / "demo.lcfeat")
reloaded = load_corpus(workdir / "demo.jsonl", workdir / "demo.lcfeat")
print(f"round-trip: {reloaded.n_utterances} utterances, "
      f"feature dim {reloaded.feature_dim}")
print("manifest header:", (workdir / "demo.jsonl").read_text().splitlines()[0])

# --- chain topology -----------------------------------------------------------
# Each utterance links to its predecessor, successor, and itself; nothing
# crosses a conversation boundary.

line = build_graph(reloaded, "line")
print(f"\nline graph: {line.n_nodes} nodes, {line.n_edges} directed edges "
      f"(12 neighbor edges + 9 self-loops)")
print("in-edges of u4 (global node 3):",
      [(int(s), int(d)) for s, d in zip(line.edge_src, line.edge_dst) if d == 3])

full = build_graph(reloaded, "full")
print(f"full graph: {full.n_edges} directed edges "
      f"(sum of t*(t-1)+t per conversation)")

# --- sentiment-shift attributes ----------------------------------------------
# Scalar weights for the GCN path: -1 marks a sentiment change, 1 no change.

weighted = attach_sentiment_weights(line, shift_value=-1.0, noshift_value=1.0)
u8_u9 = [w for s, d, w in zip(weighted.edge_src, weighted.edge_dst,
                              weighted.edge_weights) if (s, d) == (7, 8)]
print(f"\nweight on u8->u9 (neutral -> negative, a shift): {u8_u9[0]:+.0f}")

# Vector features for the GAT path: the two endpoint sentiment codes.

featured = attach_sentiment_edge_features(line)
f_89 = [f for s, d, f in zip(featured.edge_src, featured.edge_dst,
                             featured.edge_features) if (s, d) == (7, 8)]
print(f"edge feature on u8->u9: {f_89[0].tolist()}")

# --- normalized adjacency -----------------------------------------------------
# A_hat[i][j] = w(i,j) / sqrt(d_i * d_j) with degrees summing |w|.

adj = normalize_adjacency(line)
dense = adj.toarray()
print(f"\nA_hat for c1 (degrees 2, 3, 2):\n{np.round(dense[:3, :3], 4)}")
print("first row of a 3-chain: 1/2 and 1/sqrt(6) =",
      round(1 / np.sqrt(6), 4))

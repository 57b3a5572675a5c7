"""Conversation graphs, sentiment-shift edge attributes, and normalization.

Graphs are built one conversation at a time over the corpus's global node
indexing and never cross conversation boundaries.  Every node carries a
self-loop so its own feature takes part in aggregation.  The chain
("line") topology links each utterance to its predecessor and successor;
the fully-connected topology links every ordered pair within a
conversation.

Edges are directed with both directions materialized, stored sorted by
(dst, src).  That in-edge-major order makes the in-neighborhood of every
node a contiguous segment (``in_indptr``), which both the normalized
adjacency and per-node attention softmax rely on for deterministic
segment reductions.

Graph container format (binary, little-endian, magic ``LCGRF01``):

    magic          7 bytes ``LCGRF01``
    version        u8 (=1)
    n_nodes        u32
    n_edges        u64
    n_classes      u16
    feature_dim    u32
    attr_kind      u8 (0=none, 1=edge weights, 2=edge features)
    edge_feat_dim  u16 (0 unless attr_kind=2)
    class names    n_classes x (u16 byte length + UTF-8 bytes)
    edge_src       n_edges x u32
    edge_dst       n_edges x u32
    conv_of        n_nodes x u32
    labels         n_nodes x u16
    sentiments     n_nodes x u8
    train/dev/test n_nodes x u8 each
    edge_weights   n_edges x f64            (attr_kind=1 only)
    edge_features  n_edges*edge_feat_dim x f64, row-major (attr_kind=2 only)
    features       n_nodes*feature_dim x f64, row-major

Round-trips are exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from linecon.corpus import Corpus

GRAPH_MAGIC = b"LCGRF01"
GRAPH_VERSION = 1

TOPOLOGIES = ("line", "full")


class GraphAttributeError(ValueError):
    """Edge weights and edge features are mutually exclusive."""


@dataclass(frozen=True)
class ConvGraph:
    """Directed sparse graph over utterance nodes.

    ``edge_src``/``edge_dst`` are sorted by (dst, src); ``in_indptr[i]`` ..
    ``in_indptr[i+1]`` delimits the in-edges of node ``i``.  At most one of
    ``edge_weights`` / ``edge_features`` is set.
    """

    n_nodes: int
    edge_src: np.ndarray          # (E,) int64
    edge_dst: np.ndarray          # (E,) int64
    in_indptr: np.ndarray         # (n_nodes + 1,) int64
    conv_of: np.ndarray           # (n_nodes,) int64
    labels: np.ndarray            # (n_nodes,) int64
    sentiments: np.ndarray        # (n_nodes,) int64
    train_mask: np.ndarray        # (n_nodes,) bool
    dev_mask: np.ndarray
    test_mask: np.ndarray
    features: np.ndarray          # (n_nodes, n) float64
    class_names: tuple[str, ...]
    edge_weights: np.ndarray | None = None    # (E,) float64
    edge_features: np.ndarray | None = None   # (E, d_e) float64

    @property
    def n_edges(self) -> int:
        return int(self.edge_src.shape[0])

    @property
    def edge_feat_dim(self) -> int:
        return 0 if self.edge_features is None else int(self.edge_features.shape[1])

    def mask(self, split: str) -> np.ndarray:
        try:
            return {"train": self.train_mask, "dev": self.dev_mask,
                    "test": self.test_mask}[split]
        except KeyError:
            raise ValueError(f"unknown split {split!r}")

    def is_self_loop(self) -> np.ndarray:
        return self.edge_src == self.edge_dst


@dataclass(frozen=True)
class NormAdj:
    """Symmetric-normalized adjacency in compressed-row form.

    Entry (i, j) holds w(i,j) / sqrt(d_i * d_j) where the degree d_i sums
    |w| over all edges incident to i, self-loop included.  Column indices
    are sorted within each row.
    """

    n: int
    indptr: np.ndarray   # (n + 1,) int64
    indices: np.ndarray  # (nnz,) int64
    data: np.ndarray     # (nnz,) float64

    def matmul(self, dense: np.ndarray) -> np.ndarray:
        """Compute ``A_hat @ dense`` with a deterministic per-row reduction
        (fixed column-sorted accumulation order)."""
        contrib = self.data[:, None] * dense[self.indices]
        return np.add.reduceat(contrib, self.indptr[:-1], axis=0)

    def toarray(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i, self.indices[lo:hi]] = self.data[lo:hi]
        return out


def build_graph(corpus: Corpus, topology: str) -> ConvGraph:
    """Build a conversation graph over the whole corpus.

    ``line``: per conversation of length t, directed edges (i, i+1) and
    (i+1, i) for consecutive utterances plus t self-loops.  ``full``: all
    ordered pairs within each conversation plus self-loops.
    """
    if topology not in TOPOLOGIES:
        raise ValueError(f"topology must be one of {TOPOLOGIES}, got {topology!r}")

    sizes = [len(c.utterances) for c in corpus.conversations]
    m = sum(sizes)
    conv_of = np.repeat(np.arange(len(sizes), dtype=np.int64), sizes)

    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []
    base = 0
    for t in sizes:
        nodes = np.arange(base, base + t, dtype=np.int64)
        if topology == "line":
            # in-edges of position p: p-1 (if any), p, p+1 (if any) -- already
            # ascending, so the concatenation is (dst, src)-sorted.
            for p in range(t):
                srcs = nodes[max(0, p - 1):min(t, p + 2)]
                src_parts.append(srcs)
                dst_parts.append(np.full(len(srcs), nodes[p], dtype=np.int64))
        else:
            for p in range(t):
                src_parts.append(nodes)
                dst_parts.append(np.full(t, nodes[p], dtype=np.int64))
        base += t

    edge_src = np.concatenate(src_parts) if src_parts else np.zeros(0, dtype=np.int64)
    edge_dst = np.concatenate(dst_parts) if dst_parts else np.zeros(0, dtype=np.int64)
    counts = np.bincount(edge_dst, minlength=m)
    in_indptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=in_indptr[1:])

    splits = corpus.splits()
    split_arr = np.array(splits)
    return ConvGraph(
        n_nodes=m,
        edge_src=edge_src,
        edge_dst=edge_dst,
        in_indptr=in_indptr,
        conv_of=conv_of,
        labels=corpus.labels(),
        sentiments=corpus.sentiments(),
        train_mask=split_arr == "train",
        dev_mask=split_arr == "dev",
        test_mask=split_arr == "test",
        features=corpus.features,
        class_names=corpus.emotion_vocab,
    )


def attach_sentiment_weights(
    graph: ConvGraph,
    shift_value: float,
    noshift_value: float,
    selfloop_value: float = 1.0,
) -> ConvGraph:
    """Return a copy of the graph with scalar sentiment-shift edge weights.

    A non-self edge gets ``shift_value`` when its endpoints' sentiment
    labels differ and ``noshift_value`` when they agree; self-loops get
    ``selfloop_value``.  Node and edge sets are untouched.
    """
    if graph.edge_features is not None:
        raise GraphAttributeError("graph already carries edge features")
    s = graph.sentiments
    shifted = s[graph.edge_src] != s[graph.edge_dst]
    weights = np.where(shifted, float(shift_value), float(noshift_value))
    weights = np.where(graph.is_self_loop(), float(selfloop_value), weights)
    return replace(graph, edge_weights=weights.astype(np.float64))


def attach_sentiment_edge_features(graph: ConvGraph) -> ConvGraph:
    """Return a copy of the graph with 2-dim sentiment edge features:
    edge (src, dst) carries [sentiment(src), sentiment(dst)] as floats."""
    if graph.edge_weights is not None:
        raise GraphAttributeError("graph already carries edge weights")
    feats = np.stack(
        [graph.sentiments[graph.edge_src], graph.sentiments[graph.edge_dst]],
        axis=1,
    ).astype(np.float64)
    return replace(graph, edge_features=feats)


def normalize_adjacency(graph: ConvGraph) -> NormAdj:
    """Symmetric-normalized adjacency A_hat with |w| degrees.

    A_hat[i][j] = w(i,j) / sqrt(d_i * d_j) per edge, with
    d_i = sum_j |w(i,j)| over all edges incident to i including the
    self-loop.  Absent edge weights count as 1.  Degrees use absolute
    values so negative shift weights cannot produce an undefined
    normalization.
    """
    w = graph.edge_weights if graph.edge_weights is not None \
        else np.ones(graph.n_edges, dtype=np.float64)
    deg = np.zeros(graph.n_nodes, dtype=np.float64)
    np.add.at(deg, graph.edge_dst, np.abs(w))
    if np.any(deg == 0.0):
        bad = int(np.flatnonzero(deg == 0.0)[0])
        raise ValueError(f"node {bad} has zero degree; graph is corrupted "
                         "(every node must carry a nonzero-weight self-loop)")
    values = w / np.sqrt(deg[graph.edge_dst] * deg[graph.edge_src])
    return NormAdj(
        n=graph.n_nodes,
        indptr=graph.in_indptr.copy(),
        indices=graph.edge_src.copy(),
        data=values,
    )


# ---------------------------------------------------------------------------
# container format
# ---------------------------------------------------------------------------

def save_graph(path: str | Path, graph: ConvGraph) -> None:
    attr_kind = 0
    if graph.edge_weights is not None:
        attr_kind = 1
    elif graph.edge_features is not None:
        attr_kind = 2
    d_e = graph.edge_feat_dim
    n_classes = len(graph.class_names)
    feature_dim = int(graph.features.shape[1])

    with open(path, "wb") as fh:
        fh.write(GRAPH_MAGIC)
        fh.write(struct.pack("<B", GRAPH_VERSION))
        fh.write(struct.pack("<IQHIBH", graph.n_nodes, graph.n_edges,
                             n_classes, feature_dim, attr_kind, d_e))
        for name in graph.class_names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(graph.edge_src.astype("<u4").tobytes())
        fh.write(graph.edge_dst.astype("<u4").tobytes())
        fh.write(graph.conv_of.astype("<u4").tobytes())
        fh.write(graph.labels.astype("<u2").tobytes())
        fh.write(graph.sentiments.astype("<u1").tobytes())
        fh.write(graph.train_mask.astype("<u1").tobytes())
        fh.write(graph.dev_mask.astype("<u1").tobytes())
        fh.write(graph.test_mask.astype("<u1").tobytes())
        if attr_kind == 1:
            fh.write(graph.edge_weights.astype("<f8").tobytes())
        elif attr_kind == 2:
            fh.write(np.ascontiguousarray(graph.edge_features, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(graph.features, dtype="<f8").tobytes())


def load_graph(path: str | Path) -> ConvGraph:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:7] != GRAPH_MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:7]!r}, expected {GRAPH_MAGIC!r}")
    if blob[7] != GRAPH_VERSION:
        raise ValueError(f"{path}: unsupported graph version {blob[7]}")
    off = 8
    n_nodes, n_edges, n_classes, feature_dim, attr_kind, d_e = \
        struct.unpack_from("<IQHIBH", blob, off)
    off += struct.calcsize("<IQHIBH")

    class_names = []
    for _ in range(n_classes):
        (ln,) = struct.unpack_from("<H", blob, off)
        off += 2
        class_names.append(blob[off:off + ln].decode("utf-8"))
        off += ln

    def take(dtype: str, count: int) -> np.ndarray:
        nonlocal off
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        return arr

    edge_src = take("<u4", n_edges).astype(np.int64)
    edge_dst = take("<u4", n_edges).astype(np.int64)
    conv_of = take("<u4", n_nodes).astype(np.int64)
    labels = take("<u2", n_nodes).astype(np.int64)
    sentiments = take("<u1", n_nodes).astype(np.int64)
    train_mask = take("<u1", n_nodes).astype(bool)
    dev_mask = take("<u1", n_nodes).astype(bool)
    test_mask = take("<u1", n_nodes).astype(bool)
    edge_weights = None
    edge_features = None
    if attr_kind == 1:
        edge_weights = take("<f8", n_edges).copy()
    elif attr_kind == 2:
        edge_features = take("<f8", n_edges * d_e).reshape(n_edges, d_e).copy()
    features = take("<f8", n_nodes * feature_dim).reshape(n_nodes, feature_dim).copy()
    if off != len(blob):
        raise ValueError(f"{path}: {len(blob) - off} trailing bytes")

    counts = np.bincount(edge_dst, minlength=n_nodes)
    in_indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=in_indptr[1:])
    return ConvGraph(
        n_nodes=n_nodes,
        edge_src=edge_src,
        edge_dst=edge_dst,
        in_indptr=in_indptr,
        conv_of=conv_of,
        labels=labels,
        sentiments=sentiments,
        train_mask=train_mask,
        dev_mask=dev_mask,
        test_mask=test_mask,
        features=features,
        class_names=tuple(class_names),
        edge_weights=edge_weights,
        edge_features=edge_features,
    )

"""Shared fixtures and independent oracles.

The oracles here are deliberately written against the math, not against
the library: dense matrices, per-node loops, and -inf masking instead of
compressed rows and segment reductions.  They are the second route of
every dual-route check in the suite.
"""

from __future__ import annotations

import numpy as np
import pytest

from linecon.corpus import Conversation, Corpus, Utterance


# ---------------------------------------------------------------------------
# corpus builders
# ---------------------------------------------------------------------------

def make_corpus(
    conv_sizes: list[int],
    emotions: list[int] | None = None,
    sentiments: list[int] | None = None,
    splits: list[str] | None = None,
    features: np.ndarray | None = None,
    n_classes: int = 3,
    dim: int = 4,
    seed: int = 0,
) -> Corpus:
    """Hand-buildable corpus: one flat list per field, in traversal order."""
    total = sum(conv_sizes)
    rng = np.random.default_rng(seed)
    if emotions is None:
        emotions = rng.integers(0, n_classes, size=total).tolist()
    if sentiments is None:
        sentiments = rng.integers(0, 3, size=total).tolist()
    if splits is None:
        splits = ["train"] * total
    if features is None:
        features = rng.normal(size=(total, dim))
    convs = []
    g = 0
    for ci, size in enumerate(conv_sizes):
        utts = []
        for ui in range(size):
            utts.append(Utterance(
                utt_id=f"c{ci}_u{ui}",
                emotion=int(emotions[g]),
                sentiment=int(sentiments[g]),
                split=splits[g],
                text=f"utterance {g}",
                speaker=f"spk{g % 2}",
            ))
            g += 1
        convs.append(Conversation(conv_id=f"c{ci}", utterances=tuple(utts)))
    return Corpus(
        conversations=tuple(convs),
        emotion_vocab=tuple(f"class{k}" for k in range(n_classes)),
        features=np.asarray(features, dtype=np.float64),
    )


def random_corpus(rng: np.random.Generator, max_nodes: int = 8,
                  n_classes: int = 3, dim: int = 4) -> Corpus:
    """Random conversation partition with random features/labels/sentiments."""
    total = int(rng.integers(1, max_nodes + 1))
    sizes = []
    left = total
    while left > 0:
        s = int(rng.integers(1, left + 1))
        sizes.append(s)
        left -= s
    return make_corpus(
        conv_sizes=sizes,
        emotions=rng.integers(0, n_classes, size=total).tolist(),
        sentiments=rng.integers(0, 3, size=total).tolist(),
        features=rng.normal(size=(total, dim)),
        n_classes=n_classes,
        dim=dim,
    )


# ---------------------------------------------------------------------------
# dense oracles
# ---------------------------------------------------------------------------

def dense_adjacency(graph) -> np.ndarray:
    """Dense weighted adjacency with A[i, j] = w(edge src=j, dst=i)."""
    A = np.zeros((graph.n_nodes, graph.n_nodes))
    w = graph.edge_weights if graph.edge_weights is not None \
        else np.ones(graph.n_edges)
    for e in range(graph.n_edges):
        A[graph.edge_dst[e], graph.edge_src[e]] = w[e]
    return A


def dense_norm_adjacency(graph) -> np.ndarray:
    """D^{-1/2} A D^{-1/2} with explicit matrices and |w| degrees."""
    A = dense_adjacency(graph)
    deg = np.abs(A).sum(axis=1)
    d_inv_sqrt = np.diag(1.0 / np.sqrt(deg))
    return d_inv_sqrt @ A @ d_inv_sqrt


def dense_gcn_forward(graph, X, W0, W1) -> np.ndarray:
    A_hat = dense_norm_adjacency(graph)
    return A_hat @ np.maximum(A_hat @ X @ W0, 0.0) @ W1


def _dense_gat_layer(graph, X, W, a, We, slope) -> tuple[np.ndarray, np.ndarray]:
    """Materialize all pairwise scores with -inf for non-edges, then a full
    row softmax.  Returns (layer output, dense attention matrix)."""
    m = graph.n_nodes
    Z = X @ W
    edge_feat = {}
    if graph.edge_features is not None:
        for e in range(graph.n_edges):
            edge_feat[(graph.edge_src[e], graph.edge_dst[e])] = graph.edge_features[e]
    scores = np.full((m, m), -np.inf)
    for e in range(graph.n_edges):
        j, i = graph.edge_src[e], graph.edge_dst[e]  # message j -> i
        u = Z[i] + Z[j]
        if We is not None:
            u = u + edge_feat[(j, i)] @ We
        scores[i, j] = a @ np.where(u > 0, u, slope * u)
    alpha = np.zeros((m, m))
    for i in range(m):
        row = scores[i]
        mx = row.max()
        ex = np.exp(row - mx)
        ex[~np.isfinite(row)] = 0.0
        alpha[i] = ex / ex.sum()
    return alpha @ Z, alpha


def dense_gat_forward(graph, X, params) -> np.ndarray:
    slope = params.leaky_slope
    O0, _ = _dense_gat_layer(graph, X, params.W0, params.a0, params.We0, slope)
    H = np.maximum(O0, 0.0)
    logits, _ = _dense_gat_layer(graph, H, params.W1, params.a1, params.We1, slope)
    return logits


# ---------------------------------------------------------------------------
# finite differences (independent of linecon.gradcheck)
# ---------------------------------------------------------------------------

def numeric_grads(loss_fn, tensors: dict[str, np.ndarray],
                  h: float = 1e-4) -> dict[str, np.ndarray]:
    """Central differences of a scalar loss w.r.t. each tensor entry.
    Tensors are perturbed in place and restored."""
    out = {}
    for name, tensor in tensors.items():
        flat = tensor.reshape(-1)
        grad = np.zeros(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn()
            flat[i] = orig - h
            down = loss_fn()
            flat[i] = orig
            grad[i] = (up - down) / (2.0 * h)
        out[name] = grad.reshape(tensor.shape)
    return out


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.abs(analytic - numeric)
    scale = np.maximum(1.0, np.abs(numeric))
    return float(np.max(diff / scale)) if diff.size else 0.0


# ---------------------------------------------------------------------------
# scratch metrics (independent of linecon.train)
# ---------------------------------------------------------------------------

def scratch_weighted_f1(y_true, y_pred, n_classes: int) -> float:
    """Support-weighted F1 from per-class counting, no shared code."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    total = len(y_true)
    acc = 0.0
    for c in range(n_classes):
        tp = int(np.sum((y_true == c) & (y_pred == c)))
        fp = int(np.sum((y_true != c) & (y_pred == c)))
        fn = int(np.sum((y_true == c) & (y_pred != c)))
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        acc += (support / total) * f1
    return acc


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)

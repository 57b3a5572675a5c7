"""Finite-difference verification of the analytic gradients.

Builds a small random line graph, takes the masked cross-entropy loss over
all nodes as the scalar objective, and compares every analytic gradient
entry against central finite differences.  The relative error reported per
tensor is

    max_i |g_analytic_i - g_fd_i| / max(1, |g_fd_i|)

which stays meaningful for near-zero gradient entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from linecon.congraph import (
    ConvGraph,
    attach_sentiment_edge_features,
    attach_sentiment_weights,
    build_graph,
    normalize_adjacency,
)
from linecon.corpus import Conversation, Corpus, Utterance
from linecon.nn import (
    ModelConfig,
    Params,
    gatv2_backward,
    gatv2_forward,
    gcn_backward,
    gcn_forward,
    init_params,
    masked_softmax_cross_entropy,
)

EDGE_ATTR_KINDS = ("none", "ss-weight", "ss-feature")


def random_line_graph(n_nodes: int, n_features: int, n_classes: int,
                      seed: int, edge_attr: str = "none") -> ConvGraph:
    """Single-conversation line graph with random features, labels, and
    sentiments; optionally annotated with sentiment-shift attributes."""
    if edge_attr not in EDGE_ATTR_KINDS:
        raise ValueError(f"edge_attr must be one of {EDGE_ATTR_KINDS}")
    rng = np.random.default_rng(seed)
    emotions = rng.integers(0, n_classes, size=n_nodes)
    sentiments = rng.integers(0, 3, size=n_nodes)
    utts = tuple(
        Utterance(utt_id=f"u{i}", emotion=int(emotions[i]),
                  sentiment=int(sentiments[i]), split="train")
        for i in range(n_nodes)
    )
    corpus = Corpus(
        conversations=(Conversation(conv_id="c0", utterances=utts),),
        emotion_vocab=tuple(f"class{k}" for k in range(n_classes)),
        features=rng.normal(size=(n_nodes, n_features)),
    )
    graph = build_graph(corpus, "line")
    if edge_attr == "ss-weight":
        graph = attach_sentiment_weights(graph, shift_value=-1.0, noshift_value=1.0)
    elif edge_attr == "ss-feature":
        graph = attach_sentiment_edge_features(graph)
    return graph


def _loss(graph: ConvGraph, params: Params, kind: str) -> float:
    mask = np.ones(graph.n_nodes, dtype=bool)
    if kind == "gcn":
        logits, _ = gcn_forward(normalize_adjacency(graph), graph.features, params)
    else:
        logits, _, _ = gatv2_forward(graph, graph.features, params)
    loss, _ = masked_softmax_cross_entropy(logits, graph.labels, mask)
    return loss


def _analytic_grads(graph: ConvGraph, params: Params, kind: str) -> dict[str, np.ndarray]:
    mask = np.ones(graph.n_nodes, dtype=bool)
    if kind == "gcn":
        adj = normalize_adjacency(graph)
        logits, tape = gcn_forward(adj, graph.features, params)
        _, dlogits = masked_softmax_cross_entropy(logits, graph.labels, mask)
        return gcn_backward(tape, adj, params, dlogits)
    logits, _, tape = gatv2_forward(graph, graph.features, params)
    _, dlogits = masked_softmax_cross_entropy(logits, graph.labels, mask)
    return gatv2_backward(tape, graph, params, dlogits)


def finite_diff_grads(graph: ConvGraph, params: Params, kind: str,
                      h: float = 1e-4) -> dict[str, np.ndarray]:
    """Central finite differences of the loss w.r.t. every parameter entry."""
    out: dict[str, np.ndarray] = {}
    for name, tensor in params.tensors().items():
        g = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = _loss(graph, params, kind)
            flat[i] = orig - h
            down = _loss(graph, params, kind)
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * h)
        out[name] = g
    return out


@dataclass
class GradCheckResult:
    errors: dict[str, float]  # tensor name -> max relative error
    tolerance: float

    @property
    def ok(self) -> bool:
        return all(e < self.tolerance for e in self.errors.values())


def run_gradcheck(
    kind: str,
    n_nodes: int = 5,
    dims: tuple[int, int, int] = (4, 3, 2),
    seed: int = 0,
    edge_attr: str = "none",
    h: float = 1e-4,
    tolerance: float = 1e-5,
) -> GradCheckResult:
    """Compare analytic and finite-difference gradients on a random graph.

    ``dims`` is (feature dim, hidden dim, class count).
    """
    n_feat, hidden, n_classes = dims
    if kind == "gcn" and edge_attr == "ss-feature":
        raise ValueError("edge features apply to the gat model only")
    graph = random_line_graph(n_nodes, n_feat, n_classes, seed, edge_attr)
    config = ModelConfig(kind=kind, hidden_dim=hidden, n_classes=n_classes,
                         seed=seed, use_edge_attr=edge_attr == "ss-feature")
    params = init_params(config, n=n_feat, edge_feat_dim=2)
    analytic = _analytic_grads(graph, params, kind)
    numeric = finite_diff_grads(graph, params, kind, h=h)
    errors = {}
    for name in analytic:
        diff = np.abs(analytic[name] - numeric[name])
        scale = np.maximum(1.0, np.abs(numeric[name]))
        errors[name] = float(np.max(diff / scale)) if diff.size else 0.0
    return GradCheckResult(errors=errors, tolerance=tolerance)

"""Conversation graphs with self-contained GCN / GATv2 training.

The package turns labeled conversation corpora into per-conversation graphs
(chain or fully-connected, always with self-loops), optionally annotates
edges with sentiment-shift information, and trains two-layer graph neural
networks for utterance-level emotion classification.  All numerics --
normalization, attention, gradients, optimizer -- live in this repository
and are verified against independent oracles in the test suite.
"""

__version__ = "0.1.0"

from linecon.corpus import (
    Conversation,
    Corpus,
    CorpusFormatError,
    Utterance,
    ValidationReport,
    load_corpus,
    read_feature_file,
    save_corpus,
    synth_corpus,
    validate_corpus,
    write_feature_file,
)
from linecon.congraph import (
    ConvGraph,
    NormAdj,
    attach_sentiment_edge_features,
    attach_sentiment_weights,
    build_graph,
    load_graph,
    normalize_adjacency,
    save_graph,
)
from linecon.nn import (
    Checkpoint,
    ForwardTape,
    GatParams,
    GcnParams,
    ModelConfig,
    gatv2_backward,
    gatv2_forward,
    gcn_backward,
    gcn_forward,
    init_params,
    load_checkpoint,
    masked_softmax_cross_entropy,
    save_checkpoint,
)
from linecon.optim import AdamWState, adamw_step, init_adamw
from linecon.train import (
    Metrics,
    TrainConfig,
    TrainHistory,
    compute_metrics,
    evaluate,
    predict,
    train,
)

__all__ = [
    "AdamWState",
    "Checkpoint",
    "ConvGraph",
    "Conversation",
    "Corpus",
    "CorpusFormatError",
    "ForwardTape",
    "GatParams",
    "GcnParams",
    "Metrics",
    "ModelConfig",
    "NormAdj",
    "TrainConfig",
    "TrainHistory",
    "Utterance",
    "ValidationReport",
    "adamw_step",
    "attach_sentiment_edge_features",
    "attach_sentiment_weights",
    "build_graph",
    "compute_metrics",
    "evaluate",
    "gatv2_backward",
    "gatv2_forward",
    "gcn_backward",
    "gcn_forward",
    "init_adamw",
    "init_params",
    "load_checkpoint",
    "load_corpus",
    "load_graph",
    "masked_softmax_cross_entropy",
    "normalize_adjacency",
    "predict",
    "read_feature_file",
    "save_checkpoint",
    "save_corpus",
    "save_graph",
    "synth_corpus",
    "train",
    "validate_corpus",
    "write_feature_file",
]

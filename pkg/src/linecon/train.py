"""Full-batch training loop, model selection on the dev split, evaluation.

The corpus forms one disjoint graph, so training is full-batch: one AdamW
step per epoch over all parameters.  Model selection tracks weighted F1 on
the dev split; ties go to the earliest epoch.  History entry ``e``
describes the parameters after ``e`` optimizer steps (entry 0 is the
initialization), which keeps the loop at one forward and one backward per
epoch: the evaluation forward of epoch ``e`` doubles as the gradient
forward of epoch ``e+1``.

Per-epoch wall-clock is recorded for reporting but excluded from every
determinism contract; losses, dev scores, chosen epoch, and checkpoint
bytes are bitwise reproducible for a fixed seed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from linecon.congraph import ConvGraph, NormAdj, normalize_adjacency
from linecon.nn import (
    Checkpoint,
    ForwardTape,
    GatParams,
    GcnParams,
    ModelConfig,
    Params,
    gatv2_backward,
    gatv2_forward,
    gcn_backward,
    gcn_forward,
    init_params,
    masked_softmax_cross_entropy,
)
from linecon.optim import adamw_step, init_adamw


class TrainingDivergedError(RuntimeError):
    """The training loss became non-finite."""


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig
    max_epochs: int = 300
    patience: int = 30
    lr: float = 1e-3
    weight_decay: float = 1e-4

    def __post_init__(self) -> None:
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if not 0 <= self.patience <= self.max_epochs:
            raise ValueError(f"patience must lie in 0..max_epochs "
                             f"({self.patience} vs {self.max_epochs})")


@dataclass
class Metrics:
    weighted_f1: float
    accuracy: float
    per_class: list[tuple[float, float, float, int]]  # (precision, recall, f1, support)
    confusion: np.ndarray          # (t, t) counts, rows = true class
    confusion_rownorm: np.ndarray  # rows sum to 1 where support > 0

    @property
    def n_evaluated(self) -> int:
        return int(self.confusion.sum())


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    dev_f1: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    best_epoch: int = 0

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "train_loss": self.train_loss,
            "dev_f1": self.dev_f1,
            "best_epoch": self.best_epoch,
        }
        if include_timing:
            out["epoch_seconds"] = self.epoch_seconds
        return out


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def compute_metrics(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> Metrics:
    """Support-weighted F1, per-class precision/recall/F1, confusion counts.

    Zero denominators yield zero precision/recall/F1 for that class; the
    weighted F1 averages per-class F1 with weights support_c / total.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("label/prediction length mismatch")
    if y_true.size == 0:
        raise ValueError("nothing to evaluate")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)

    support = confusion.sum(axis=1)
    predicted = confusion.sum(axis=0)
    diag = np.diag(confusion).astype(np.float64)
    precision = np.divide(diag, predicted, out=np.zeros(n_classes), where=predicted > 0)
    recall = np.divide(diag, support, out=np.zeros(n_classes), where=support > 0)
    pr = precision + recall
    f1 = np.divide(2.0 * precision * recall, pr, out=np.zeros(n_classes), where=pr > 0)

    total = int(support.sum())
    weighted_f1 = float(np.sum((support / total) * f1))
    accuracy = float(diag.sum() / total)
    rownorm = np.divide(
        confusion.astype(np.float64),
        support[:, None].astype(np.float64),
        out=np.zeros((n_classes, n_classes)),
        where=support[:, None] > 0,
    )
    per_class = [
        (float(precision[c]), float(recall[c]), float(f1[c]), int(support[c]))
        for c in range(n_classes)
    ]
    return Metrics(weighted_f1=weighted_f1, accuracy=accuracy, per_class=per_class,
                   confusion=confusion, confusion_rownorm=rownorm)


# ---------------------------------------------------------------------------
# forward/backward dispatch
# ---------------------------------------------------------------------------

def _forward(graph: ConvGraph, adj: NormAdj | None, params: Params,
             X: np.ndarray) -> tuple[np.ndarray, ForwardTape]:
    if isinstance(params, GcnParams):
        return gcn_forward(adj, X, params)
    logits, _, tape = gatv2_forward(graph, X, params)
    return logits, tape


def _backward(graph: ConvGraph, adj: NormAdj | None, params: Params,
              tape: ForwardTape, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    if isinstance(params, GcnParams):
        return gcn_backward(tape, adj, params, dlogits)
    return gatv2_backward(tape, graph, params, dlogits)


def _params_from_tensors(kind: str, tensors: dict[str, np.ndarray],
                         leaky_slope: float) -> Params:
    if kind == "gcn":
        return GcnParams.from_tensors(tensors)
    return GatParams.from_tensors(tensors, leaky_slope=leaky_slope)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def train(graph: ConvGraph, config: TrainConfig) -> tuple[Checkpoint, TrainHistory]:
    """Train a node classifier on the graph's train split.

    Stops early once dev weighted F1 has not improved for ``patience``
    consecutive epochs (skipped when the dev split is empty, in which case
    the final epoch is kept).  The returned checkpoint holds the
    parameters from the best epoch.
    """
    if not graph.train_mask.any():
        raise ValueError("train mask selects no nodes")
    has_dev = bool(graph.dev_mask.any())

    mcfg = config.model
    if mcfg.n_classes != len(graph.class_names):
        raise ValueError(f"model expects {mcfg.n_classes} classes but the graph "
                         f"has {len(graph.class_names)}")
    if mcfg.use_edge_attr and graph.edge_features is None:
        raise ValueError("model wants edge features but the graph has none")
    adj = normalize_adjacency(graph) if mcfg.kind == "gcn" else None
    X = graph.features
    params = init_params(mcfg, n=X.shape[1], edge_feat_dim=max(graph.edge_feat_dim, 2))
    opt = init_adamw(params.tensors(), lr=config.lr, weight_decay=config.weight_decay)

    history = TrainHistory()

    def record(logits: np.ndarray) -> tuple[float, float]:
        loss, _ = masked_softmax_cross_entropy(logits, graph.labels, graph.train_mask)
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite training loss at epoch {len(history.train_loss)}")
        dev = float("nan")
        if has_dev:
            pred = np.argmax(logits[graph.dev_mask], axis=1)
            dev = compute_metrics(graph.labels[graph.dev_mask], pred,
                                  mcfg.n_classes).weighted_f1
        return loss, dev

    t0 = time.perf_counter()
    logits, tape = _forward(graph, adj, params, X)
    loss, dev = record(logits)
    history.train_loss.append(loss)
    history.dev_f1.append(dev)
    history.epoch_seconds.append(time.perf_counter() - t0)
    best_dev = dev
    best_epoch = 0
    best_params = params.copy()
    best_opt = opt
    since_improved = 0

    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        _, dlogits = masked_softmax_cross_entropy(logits, graph.labels, graph.train_mask)
        grads = _backward(graph, adj, params, tape, dlogits)
        new_tensors, opt = adamw_step(params.tensors(), grads, opt)
        params = _params_from_tensors(mcfg.kind, new_tensors, mcfg.leaky_slope)

        logits, tape = _forward(graph, adj, params, X)
        loss, dev = record(logits)
        history.train_loss.append(loss)
        history.dev_f1.append(dev)
        history.epoch_seconds.append(time.perf_counter() - t0)

        if has_dev:
            if dev > best_dev:
                best_dev = dev
                best_epoch = epoch
                best_params = params.copy()
                best_opt = opt
                since_improved = 0
            else:
                since_improved += 1
                if since_improved >= config.patience:
                    break
        else:
            best_epoch = epoch
            best_params = params.copy()
            best_opt = opt

    history.best_epoch = best_epoch
    checkpoint = Checkpoint(config=mcfg, params=best_params, opt_state=best_opt)
    return checkpoint, history


# ---------------------------------------------------------------------------
# evaluation and prediction
# ---------------------------------------------------------------------------

def predict(checkpoint: Checkpoint, graph: ConvGraph) -> np.ndarray:
    """Emotion index per node: argmax over logits, ties to the lowest
    class index."""
    params = checkpoint.params
    X = graph.features
    if X.shape[1] != params.W0.shape[0]:
        raise ValueError(f"graph features have dim {X.shape[1]} but the checkpoint "
                         f"expects {params.W0.shape[0]}")
    adj = normalize_adjacency(graph) if checkpoint.config.kind == "gcn" else None
    logits, _ = _forward(graph, adj, params, X)
    return np.argmax(logits, axis=1)


def evaluate(checkpoint: Checkpoint, graph: ConvGraph, split: str) -> Metrics:
    """Forward pass + argmax readout, metrics over the requested split."""
    mask = graph.mask(split)
    if not mask.any():
        raise ValueError(f"split {split!r} selects no nodes")
    preds = predict(checkpoint, graph)
    return compute_metrics(graph.labels[mask], preds[mask],
                           checkpoint.config.n_classes)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def metrics_to_dict(metrics: Metrics, class_names: tuple[str, ...],
                    split: str) -> dict:
    return {
        "split": split,
        "n_evaluated": metrics.n_evaluated,
        "accuracy": metrics.accuracy,
        "weighted_f1": metrics.weighted_f1,
        "per_class": [
            {
                "label": class_names[c],
                "precision": p,
                "recall": r,
                "f1": f,
                "support": s,
            }
            for c, (p, r, f, s) in enumerate(metrics.per_class)
        ],
        "confusion": metrics.confusion.tolist(),
        "confusion_rownorm": metrics.confusion_rownorm.tolist(),
    }


def write_metrics_report(path: str | Path, metrics: Metrics,
                         class_names: tuple[str, ...], split: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(metrics_to_dict(metrics, class_names, split), fh, indent=2)
        fh.write("\n")


def write_confusion_csv(path: str | Path, metrics: Metrics,
                        class_names: tuple[str, ...]) -> None:
    """t x t comma-separated counts with a header row of class names."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(class_names) + "\n")
        for row in metrics.confusion:
            fh.write(",".join(str(int(x)) for x in row) + "\n")

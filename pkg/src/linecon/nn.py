"""Two-layer GCN and GATv2 node classifiers with exact analytic gradients.

Everything is computed in float64.  Sparse aggregations use deterministic
reductions only: contiguous in-edge segments are summed with
``np.add.reduceat`` and scatters use ``np.add.at`` (sequential, fixed
order), so repeated runs on identical inputs are bitwise identical.

GCN:    logits = A_hat @ ReLU(A_hat @ X @ W0) @ W1
GATv2:  per directed edge (src -> dst), with z = X @ W:
            score = a . LeakyReLU(z[dst] + z[src] [+ f_edge @ We])
        attention is the softmax of scores over each node's in-edges
        (self-loop included), and the node update is the
        attention-weighted sum of the in-neighbors' z rows.  The
        nonlinearity sits inside the inner product with ``a`` so the
        attention ranking can change with the query node.  Layer 1 output
        passes through ReLU; layer 2 produces logits.  Attention is
        recomputed per layer with that layer's parameters.

No biases, no dropout, single attention head.

Checkpoint format (binary, little-endian, magic ``LCMDL01``):

    magic          7 bytes ``LCMDL01``
    version        u8 (=1)
    kind           u8 (0=gcn, 1=gat)
    hidden_dim     u32
    n_classes      u32
    seed           i64
    leaky_slope    f64
    use_edge_attr  u8
    n_tensors      u16
    per tensor:    name length u16, name UTF-8, rows u32, cols u32,
                   rows*cols f64 row-major
    has_optimizer  u8
    if 1:          lr f64, weight_decay f64, beta1 f64, beta2 f64,
                   eps f64, step_count u64, then first/second-moment
                   tensors in the same tensor encoding (named ``m:<p>``
                   and ``v:<p>``)

Round-trips are exact; 1-D parameters (attention vectors) are written as
1 x len matrices and restored to 1-D on load.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from linecon.congraph import ConvGraph, NormAdj

CKPT_MAGIC = b"LCMDL01"
CKPT_VERSION = 1

MODEL_KINDS = ("gcn", "gat")


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    hidden_dim: int = 64
    n_classes: int = 2
    seed: int = 0
    leaky_slope: float = 0.2
    use_edge_attr: bool = False

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.kind == "gcn" and self.use_edge_attr:
            raise ValueError("edge features apply to the gat model only "
                             "(gcn consumes scalar edge weights)")


@dataclass
class GcnParams:
    W0: np.ndarray  # (n, k)
    W1: np.ndarray  # (k, t)

    def tensors(self) -> dict[str, np.ndarray]:
        return {"W0": self.W0, "W1": self.W1}

    def copy(self) -> "GcnParams":
        return GcnParams(self.W0.copy(), self.W1.copy())

    @staticmethod
    def from_tensors(t: dict[str, np.ndarray]) -> "GcnParams":
        return GcnParams(t["W0"], t["W1"])


@dataclass
class GatParams:
    """Per-layer weight matrix W, attention vector a (length = layer output
    dim), and optional edge-feature projection We."""

    W0: np.ndarray                 # (n, k)
    a0: np.ndarray                 # (k,)
    W1: np.ndarray                 # (k, t)
    a1: np.ndarray                 # (t,)
    We0: np.ndarray | None = None  # (d_e, k)
    We1: np.ndarray | None = None  # (d_e, t)
    leaky_slope: float = 0.2

    def tensors(self) -> dict[str, np.ndarray]:
        out = {"W0": self.W0, "a0": self.a0, "W1": self.W1, "a1": self.a1}
        if self.We0 is not None:
            out["We0"] = self.We0
        if self.We1 is not None:
            out["We1"] = self.We1
        return out

    def copy(self) -> "GatParams":
        return GatParams(
            self.W0.copy(), self.a0.copy(), self.W1.copy(), self.a1.copy(),
            None if self.We0 is None else self.We0.copy(),
            None if self.We1 is None else self.We1.copy(),
            self.leaky_slope,
        )

    @staticmethod
    def from_tensors(t: dict[str, np.ndarray], leaky_slope: float = 0.2) -> "GatParams":
        return GatParams(
            W0=t["W0"], a0=np.ravel(t["a0"]), W1=t["W1"], a1=np.ravel(t["a1"]),
            We0=t.get("We0"), We1=t.get("We1"), leaky_slope=leaky_slope,
        )


Params = GcnParams | GatParams


class ForwardTape:
    """Cached activations from a forward pass, consumed by backward."""


@dataclass
class GcnTape(ForwardTape):
    X: np.ndarray    # layer input
    AX: np.ndarray   # A_hat @ X
    P0: np.ndarray   # A_hat @ X @ W0, pre-ReLU
    H: np.ndarray    # ReLU(P0)
    AH: np.ndarray   # A_hat @ H


@dataclass
class GatLayerTape:
    Xin: np.ndarray      # (m, p) layer input
    Z: np.ndarray        # (m, q) Xin @ W
    U: np.ndarray        # (E, q) pre-activation of the score input
    alpha: np.ndarray    # (E,) attention weights


@dataclass
class GatTape(ForwardTape):
    layers: list[GatLayerTape] = field(default_factory=list)
    O0: np.ndarray | None = None  # layer-0 output, pre-ReLU
    H: np.ndarray | None = None   # ReLU(O0)


# ---------------------------------------------------------------------------
# GCN
# ---------------------------------------------------------------------------

def gcn_forward(adj: NormAdj, X: np.ndarray, params: GcnParams) -> tuple[np.ndarray, GcnTape]:
    """logits = A_hat @ ReLU(A_hat @ X @ W0) @ W1"""
    if X.shape[0] != adj.n:
        raise ValueError(f"X has {X.shape[0]} rows but adjacency is {adj.n}x{adj.n}")
    if X.shape[1] != params.W0.shape[0]:
        raise ValueError(f"X has {X.shape[1]} columns but W0 expects {params.W0.shape[0]}")
    if params.W0.shape[1] != params.W1.shape[0]:
        raise ValueError("W0 output dim does not match W1 input dim")
    AX = adj.matmul(X)
    P0 = AX @ params.W0
    H = np.maximum(P0, 0.0)
    AH = adj.matmul(H)
    logits = AH @ params.W1
    return logits, GcnTape(X=X, AX=AX, P0=P0, H=H, AH=AH)


def gcn_backward(tape: GcnTape, adj: NormAdj, params: GcnParams,
                 dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients of the GCN forward pass.

    A_hat is symmetric by construction, so A_hat^T products reuse the same
    compressed rows.
    """
    if dlogits.shape != (adj.n, params.W1.shape[1]):
        raise ValueError(f"dlogits shape {dlogits.shape} does not match logits")
    dW1 = tape.AH.T @ dlogits
    dH = adj.matmul(dlogits @ params.W1.T)
    dP0 = dH * (tape.P0 > 0.0)
    dW0 = tape.AX.T @ dP0
    return {"W0": dW0, "W1": dW1}


# ---------------------------------------------------------------------------
# GATv2
# ---------------------------------------------------------------------------

def _leaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0.0, x, slope * x)


def _gat_layer_forward(
    graph: ConvGraph,
    Xin: np.ndarray,
    W: np.ndarray,
    a: np.ndarray,
    We: np.ndarray | None,
    slope: float,
) -> tuple[np.ndarray, GatLayerTape]:
    src, dst, indptr = graph.edge_src, graph.edge_dst, graph.in_indptr
    Z = Xin @ W
    U = Z[dst] + Z[src]
    if We is not None:
        U = U + graph.edge_features @ We
    scores = _leaky(U, slope) @ a
    # numerically stabilized softmax over each node's in-edge segment
    mx = np.maximum.reduceat(scores, indptr[:-1])
    ex = np.exp(scores - mx[dst])
    denom = np.add.reduceat(ex, indptr[:-1])
    alpha = ex / denom[dst]
    out = np.add.reduceat(alpha[:, None] * Z[src], indptr[:-1], axis=0)
    return out, GatLayerTape(Xin=Xin, Z=Z, U=U, alpha=alpha)


def _gat_layer_backward(
    graph: ConvGraph,
    tape: GatLayerTape,
    W: np.ndarray,
    a: np.ndarray,
    We: np.ndarray | None,
    slope: float,
    dOut: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray]:
    """Returns (dW, da, dWe, dXin)."""
    src, dst, indptr = graph.edge_src, graph.edge_dst, graph.in_indptr
    Z, U, alpha = tape.Z, tape.U, tape.alpha

    dZ = np.zeros_like(Z)
    # message path: out[i] = sum_e alpha_e * Z[src_e]
    dalpha = np.einsum("eq,eq->e", dOut[dst], Z[src])
    np.add.at(dZ, src, alpha[:, None] * dOut[dst])
    # softmax over in-edge segments
    seg = np.add.reduceat(alpha * dalpha, indptr[:-1])
    dscores = alpha * (dalpha - seg[dst])
    # score path: score_e = a . LeakyReLU(U_e)
    S = _leaky(U, slope)
    da = S.T @ dscores
    dU = (dscores[:, None] * a[None, :]) * np.where(U > 0.0, 1.0, slope)
    dWe = None
    if We is not None:
        dWe = graph.edge_features.T @ dU
    np.add.at(dZ, dst, dU)
    np.add.at(dZ, src, dU)
    dW = tape.Xin.T @ dZ
    dXin = dZ @ W.T
    return dW, da, dWe, dXin


def gatv2_forward(
    graph: ConvGraph,
    X: np.ndarray,
    params: GatParams,
) -> tuple[np.ndarray, list[np.ndarray], GatTape]:
    """Two-layer GATv2 forward pass.

    Returns (logits, per-layer attention weights aligned with the graph's
    edge order, tape).
    """
    if X.shape[0] != graph.n_nodes:
        raise ValueError(f"X has {X.shape[0]} rows for a {graph.n_nodes}-node graph")
    if X.shape[1] != params.W0.shape[0]:
        raise ValueError(f"X has {X.shape[1]} columns but W0 expects {params.W0.shape[0]}")
    if (params.We0 is not None) != (graph.edge_features is not None):
        raise ValueError("edge-feature projection and graph edge features must "
                         "be present together")
    slope = params.leaky_slope
    O0, tape0 = _gat_layer_forward(graph, X, params.W0, params.a0, params.We0, slope)
    H = np.maximum(O0, 0.0)
    logits, tape1 = _gat_layer_forward(graph, H, params.W1, params.a1, params.We1, slope)
    tape = GatTape(layers=[tape0, tape1], O0=O0, H=H)
    return logits, [tape0.alpha, tape1.alpha], tape


def gatv2_backward(
    tape: GatTape,
    graph: ConvGraph,
    params: GatParams,
    dlogits: np.ndarray,
) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients through both GATv2 layers, attention
    softmax and LeakyReLU included."""
    slope = params.leaky_slope
    dW1, da1, dWe1, dH = _gat_layer_backward(
        graph, tape.layers[1], params.W1, params.a1, params.We1, slope, dlogits)
    dO0 = dH * (tape.O0 > 0.0)
    dW0, da0, dWe0, _ = _gat_layer_backward(
        graph, tape.layers[0], params.W0, params.a0, params.We0, slope, dO0)
    grads = {"W0": dW0, "a0": da0, "W1": dW1, "a1": da1}
    if params.We0 is not None:
        grads["We0"] = dWe0
        grads["We1"] = dWe1
    return grads


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------

def masked_softmax_cross_entropy(
    logits: np.ndarray,
    labels: np.ndarray,
    mask: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over masked rows and its gradient w.r.t. logits.

    Row-max subtraction stabilizes the softmax.  dlogits is
    (softmax - onehot) / n_masked on masked rows and exactly zero
    elsewhere.
    """
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValueError("mask selects no nodes")
    sub = logits[idx]
    sub = sub - sub.max(axis=1, keepdims=True)
    ex = np.exp(sub)
    denom = ex.sum(axis=1)
    probs = ex / denom[:, None]
    picked = sub[np.arange(idx.size), labels[idx]]
    loss = float(np.mean(np.log(denom) - picked))
    grad_rows = probs
    grad_rows[np.arange(idx.size), labels[idx]] -= 1.0
    dlogits = np.zeros_like(logits)
    dlogits[idx] = grad_rows / idx.size
    return loss, dlogits


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def _glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_params(config: ModelConfig, n: int, edge_feat_dim: int = 2) -> Params:
    """Glorot-uniform weight matrices; attention vectors uniform in
    (-1/sqrt(dim), 1/sqrt(dim)).  Deterministic for a fixed seed."""
    rng = np.random.default_rng(config.seed)
    k, t = config.hidden_dim, config.n_classes
    if config.kind == "gcn":
        return GcnParams(W0=_glorot(rng, n, k), W1=_glorot(rng, k, t))
    W0 = _glorot(rng, n, k)
    a0 = rng.uniform(-1.0 / np.sqrt(k), 1.0 / np.sqrt(k), size=k)
    We0 = _glorot(rng, edge_feat_dim, k) if config.use_edge_attr else None
    W1 = _glorot(rng, k, t)
    a1 = rng.uniform(-1.0 / np.sqrt(t), 1.0 / np.sqrt(t), size=t)
    We1 = _glorot(rng, edge_feat_dim, t) if config.use_edge_attr else None
    return GatParams(W0=W0, a0=a0, W1=W1, a1=a1, We0=We0, We1=We1,
                     leaky_slope=config.leaky_slope)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

@dataclass
class Checkpoint:
    config: ModelConfig
    params: Params
    opt_state: "object | None" = None  # AdamWState, kept loose to avoid a cycle


def _write_tensor(parts: list[bytes], name: str, arr: np.ndarray) -> None:
    mat = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    raw = name.encode("utf-8")
    parts.append(struct.pack("<H", len(raw)))
    parts.append(raw)
    parts.append(struct.pack("<II", mat.shape[0], mat.shape[1]))
    parts.append(np.ascontiguousarray(mat, dtype="<f8").tobytes())


def _read_tensor(blob: bytes, off: int) -> tuple[str, np.ndarray, int]:
    (ln,) = struct.unpack_from("<H", blob, off)
    off += 2
    name = blob[off:off + ln].decode("utf-8")
    off += ln
    rows, cols = struct.unpack_from("<II", blob, off)
    off += 8
    arr = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=off)
    off += rows * cols * 8
    return name, arr.reshape(rows, cols).copy(), off


def save_checkpoint(path: str | Path, checkpoint: Checkpoint) -> None:
    cfg = checkpoint.config
    tensors = checkpoint.params.tensors()
    parts: list[bytes] = [
        CKPT_MAGIC,
        struct.pack("<B", CKPT_VERSION),
        struct.pack("<BIIqdB", MODEL_KINDS.index(cfg.kind), cfg.hidden_dim,
                    cfg.n_classes, cfg.seed, cfg.leaky_slope,
                    int(cfg.use_edge_attr)),
        struct.pack("<H", len(tensors)),
    ]
    for name, arr in tensors.items():
        _write_tensor(parts, name, arr)
    opt = checkpoint.opt_state
    if opt is None:
        parts.append(struct.pack("<B", 0))
    else:
        parts.append(struct.pack("<B", 1))
        parts.append(struct.pack("<dddddQ", opt.lr, opt.weight_decay, opt.beta1,
                                 opt.beta2, opt.eps, opt.step_count))
        parts.append(struct.pack("<H", len(opt.m)))
        for name in opt.m:
            _write_tensor(parts, f"m:{name}", opt.m[name])
            _write_tensor(parts, f"v:{name}", opt.v[name])
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_checkpoint(path: str | Path) -> Checkpoint:
    from linecon.optim import AdamWState

    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:7] != CKPT_MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:7]!r}, expected {CKPT_MAGIC!r}")
    if blob[7] != CKPT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {blob[7]}")
    off = 8
    kind_i, hidden, n_classes, seed, slope, use_ea = struct.unpack_from("<BIIqdB", blob, off)
    off += struct.calcsize("<BIIqdB")
    config = ModelConfig(kind=MODEL_KINDS[kind_i], hidden_dim=hidden,
                         n_classes=n_classes, seed=seed, leaky_slope=slope,
                         use_edge_attr=bool(use_ea))
    (n_tensors,) = struct.unpack_from("<H", blob, off)
    off += 2
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        name, arr, off = _read_tensor(blob, off)
        tensors[name] = arr
    if config.kind == "gcn":
        params: Params = GcnParams.from_tensors(tensors)
    else:
        params = GatParams.from_tensors(tensors, leaky_slope=config.leaky_slope)

    opt_state = None
    (has_opt,) = struct.unpack_from("<B", blob, off)
    off += 1
    if has_opt:
        lr, wd, b1, b2, eps, step = struct.unpack_from("<dddddQ", blob, off)
        off += struct.calcsize("<dddddQ")
        (n_m,) = struct.unpack_from("<H", blob, off)
        off += 2
        m: dict[str, np.ndarray] = {}
        v: dict[str, np.ndarray] = {}
        shapes = {k: np.asarray(t).shape for k, t in params.tensors().items()}
        for _ in range(n_m):
            name_m, arr_m, off = _read_tensor(blob, off)
            name_v, arr_v, off = _read_tensor(blob, off)
            key = name_m.split(":", 1)[1]
            m[key] = arr_m.reshape(shapes[key])
            v[key] = arr_v.reshape(shapes[key])
        opt_state = AdamWState(lr=lr, weight_decay=wd, beta1=b1, beta2=b2,
                               eps=eps, step_count=step, m=m, v=v)
    if off != len(blob):
        raise ValueError(f"{path}: {len(blob) - off} trailing bytes")
    # attention vectors are 1-D
    if config.kind == "gat":
        params.a0 = np.ravel(params.a0)
        params.a1 = np.ravel(params.a1)
    return Checkpoint(config=config, params=params, opt_state=opt_state)

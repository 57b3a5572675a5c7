"""Command-line surface for reproducible runs.

Subcommands: validate, synth, build-graph, train, eval, predict, gradcheck.
Long flag names only.  Every command that writes outputs also writes a run
manifest (``<first output>.run.json``) naming the exact inputs by digest,
the fully resolved configuration, and the seed, so a run can be replayed
bit-for-bit.

Exit codes: 0 success, 1 validation/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import linecon
from linecon.congraph import (
    attach_sentiment_edge_features,
    attach_sentiment_weights,
    build_graph,
    load_graph,
    save_graph,
)
from linecon.corpus import (
    CorpusFormatError,
    load_corpus,
    save_corpus,
    synth_corpus,
    validate_corpus,
)
from linecon.gradcheck import run_gradcheck
from linecon.nn import ModelConfig, load_checkpoint, save_checkpoint
from linecon.train import (
    TrainConfig,
    evaluate,
    predict,
    train,
    write_confusion_csv,
    write_metrics_report,
)

USAGE_ERROR = 2
DATA_ERROR = 1


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def _write_run_manifest(command: str, config: dict, inputs: list[str | Path],
                        outputs: list[str | Path], seed: int | None,
                        started: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "tool_version": linecon.__version__,
        "started_utc": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "wall_clock_s": time.time() - started,
    }
    path = str(outputs[0]) + ".run.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linecon",
        description="Conversation graphs and GCN/GATv2 training for "
                    "utterance-level emotion recognition.",
        epilog="The environment variable LINECON_THREADS caps worker threads "
               "(default: all cores); results are deterministic either way.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a corpus against its invariants")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--report", help="write the validation report to this JSON file")

    p = sub.add_parser("synth", help="write a deterministic synthetic corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--convs", type=int, required=True)
    p.add_argument("--len-min", type=int, default=3)
    p.add_argument("--len-max", type=int, default=8)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--noise", type=float, required=True)
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--out-features", required=True)

    p = sub.add_parser("build-graph", help="build a conversation graph file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--topology", choices=["line", "full"], default="line")
    p.add_argument("--edge-attr", choices=["none", "ss-weight", "ss-feature"],
                   default="none")
    p.add_argument("--shift", type=float, default=-1.0,
                   help="edge weight when sentiment changes (ss-weight)")
    p.add_argument("--noshift", type=float, default=1.0,
                   help="edge weight when sentiment is unchanged (ss-weight)")
    p.add_argument("--selfloop", type=float, default=1.0,
                   help="self-loop edge weight (ss-weight)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a model on a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", choices=["gcn", "gat"], required=True)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--patience", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--leaky-slope", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="write per-epoch loss/dev-F1 to this JSON file")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--split", choices=["train", "dev", "test"], required=True)
    p.add_argument("--report", required=True, help="metrics report (JSON)")
    p.add_argument("--confusion", required=True, help="confusion matrix (CSV)")

    p = sub.add_parser("predict", help="write per-node emotion predictions")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True, help="CSV of node_index,label")

    p = sub.add_parser("gradcheck", help="verify analytic gradients against "
                                         "finite differences")
    p.add_argument("--model", choices=["gcn", "gat"], required=True)
    p.add_argument("--nodes", type=int, default=5)
    p.add_argument("--dims", default="4,3,2",
                   help="feature,hidden,classes (comma separated)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--edge-attr", choices=["none", "ss-weight", "ss-feature"],
                   default="none")
    p.add_argument("--tolerance", type=float, default=1e-5)
    return parser


def _cmd_validate(args: argparse.Namespace) -> int:
    started = time.time()
    try:
        corpus = load_corpus(args.manifest, args.features)
    except (CorpusFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    report = validate_corpus(corpus)
    for loc, msg in report.errors:
        print(f"error: {loc}: {msg}")
    for loc, msg in report.warnings:
        print(f"warning: {loc}: {msg}")
    print(f"{len(report.errors)} errors, {len(report.warnings)} warnings")
    if args.report:
        payload = {
            "errors": [{"location": l, "message": m} for l, m in report.errors],
            "warnings": [{"location": l, "message": m} for l, m in report.warnings],
        }
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        _write_run_manifest("validate", {"manifest": args.manifest,
                                         "features": args.features},
                            [args.manifest, args.features], [args.report],
                            None, started)
        if report.errors:
            print(f"report written to {args.report}")
    return 0 if report.ok else DATA_ERROR


def _cmd_synth(args: argparse.Namespace) -> int:
    started = time.time()
    try:
        corpus = synth_corpus(seed=args.seed, n_convs=args.convs,
                              len_range=(args.len_min, args.len_max),
                              n_classes=args.classes, dim=args.dim,
                              noise=args.noise)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    save_corpus(corpus, args.out_manifest, args.out_features)
    config = {k: getattr(args, k) for k in
              ("seed", "convs", "len_min", "len_max", "classes", "dim", "noise")}
    _write_run_manifest("synth", config, [], [args.out_manifest, args.out_features],
                        args.seed, started)
    print(f"wrote {corpus.n_utterances} utterances in "
          f"{len(corpus.conversations)} conversations")
    return 0


def _cmd_build_graph(args: argparse.Namespace) -> int:
    started = time.time()
    try:
        corpus = load_corpus(args.manifest, args.features)
    except (CorpusFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    report = validate_corpus(corpus)
    if not report.ok:
        for loc, msg in report.errors:
            print(f"error: {loc}: {msg}", file=sys.stderr)
        return DATA_ERROR
    graph = build_graph(corpus, args.topology)
    if args.edge_attr == "ss-weight":
        graph = attach_sentiment_weights(graph, shift_value=args.shift,
                                         noshift_value=args.noshift,
                                         selfloop_value=args.selfloop)
    elif args.edge_attr == "ss-feature":
        graph = attach_sentiment_edge_features(graph)
    save_graph(args.out, graph)
    config = {
        "topology": args.topology,
        "edge_attr": args.edge_attr,
        "shift": args.shift,
        "noshift": args.noshift,
        "selfloop": args.selfloop,
    }
    _write_run_manifest("build-graph", config, [args.manifest, args.features],
                        [args.out], None, started)
    print(f"wrote graph: {graph.n_nodes} nodes, {graph.n_edges} directed edges")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    started = time.time()
    try:
        graph = load_graph(args.graph)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    mcfg = ModelConfig(kind=args.model, hidden_dim=args.hidden,
                       n_classes=len(graph.class_names), seed=args.seed,
                       leaky_slope=args.leaky_slope,
                       use_edge_attr=graph.edge_features is not None)
    tcfg = TrainConfig(model=mcfg, max_epochs=args.epochs, patience=args.patience,
                       lr=args.lr, weight_decay=args.weight_decay)
    try:
        checkpoint, history = train(graph, tcfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    save_checkpoint(args.out, checkpoint)
    outputs: list[str | Path] = [args.out]
    if args.history:
        with open(args.history, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(history.to_dict(include_timing=True), fh, indent=2)
            fh.write("\n")
        outputs.append(args.history)
    config = {
        "model": args.model,
        "hidden": args.hidden,
        "seed": args.seed,
        "epochs": args.epochs,
        "patience": args.patience,
        "lr": args.lr,
        "weight_decay": args.weight_decay,
        "leaky_slope": args.leaky_slope,
        "use_edge_attr": mcfg.use_edge_attr,
        "n_classes": mcfg.n_classes,
    }
    _write_run_manifest("train", config, [args.graph], outputs, args.seed, started)
    best = history.best_epoch
    print(f"best epoch {best}: train loss {history.train_loss[best]:.6f}, "
          f"dev weighted F1 {history.dev_f1[best]:.4f}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    started = time.time()
    try:
        graph = load_graph(args.graph)
        checkpoint = load_checkpoint(args.ckpt)
        metrics = evaluate(checkpoint, graph, args.split)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    write_metrics_report(args.report, metrics, graph.class_names, args.split)
    write_confusion_csv(args.confusion, metrics, graph.class_names)
    _write_run_manifest("eval", {"split": args.split}, [args.ckpt, args.graph],
                        [args.report, args.confusion], None, started)
    print(f"{args.split}: weighted F1 {metrics.weighted_f1:.4f}, "
          f"accuracy {metrics.accuracy:.4f} over {metrics.n_evaluated} nodes")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    started = time.time()
    try:
        graph = load_graph(args.graph)
        checkpoint = load_checkpoint(args.ckpt)
        preds = predict(checkpoint, graph)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("node_index,label\n")
        for i, p in enumerate(preds):
            fh.write(f"{i},{graph.class_names[int(p)]}\n")
    _write_run_manifest("predict", {}, [args.ckpt, args.graph], [args.out],
                        None, started)
    print(f"wrote {len(preds)} predictions")
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    try:
        dims = tuple(int(x) for x in args.dims.split(","))
    except ValueError:
        print(f"error: --dims must be three comma-separated integers, "
              f"got {args.dims!r}", file=sys.stderr)
        return USAGE_ERROR
    if len(dims) != 3 or any(d < 1 for d in dims):
        print(f"error: --dims must be three positive integers, got {args.dims!r}",
              file=sys.stderr)
        return USAGE_ERROR
    if args.model == "gcn" and args.edge_attr == "ss-feature":
        print("error: --edge-attr ss-feature applies to --model gat only",
              file=sys.stderr)
        return USAGE_ERROR
    result = run_gradcheck(kind=args.model, n_nodes=args.nodes, dims=dims,
                           seed=args.seed, edge_attr=args.edge_attr,
                           tolerance=args.tolerance)
    for name, err in sorted(result.errors.items()):
        status = "ok" if err < result.tolerance else "FAIL"
        print(f"{name}: max relative error {err:.3e} [{status}]")
    return 0 if result.ok else DATA_ERROR


_HANDLERS = {
    "validate": _cmd_validate,
    "synth": _cmd_synth,
    "build-graph": _cmd_build_graph,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "gradcheck": _cmd_gradcheck,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    return _HANDLERS[args.command](args)


def console_main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    console_main()

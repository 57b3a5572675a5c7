"""Conversation corpora: loading, validation, synthesis, and file formats.

A corpus is an ordered list of conversations, each an ordered list of
utterances carrying an emotion label (index into a declared vocabulary),
a 3-way sentiment label (0=negative, 1=neutral, 2=positive) and a split
tag.  Node features live in a dense ``m x n`` float64 matrix whose row
``i`` belongs to the ``i``-th utterance in corpus traversal order
(conversations in manifest order, utterances in temporal order).  That
traversal order is the one global node indexing shared by every module
downstream.

File formats
------------
Manifest (text, UTF-8, one JSON record per line):

    line 1   header  ``{"format": "linecon-manifest", "version": 1,
                        "emotion_vocab": ["anger", ...]}``
    line 2+  one conversation each:
             ``{"conv_id": "...", "utterances": [{"utt_id": "...",
                "text": "...", "speaker": "...", "emotion": "<name>",
                "sentiment": 0|1|2, "split": "train"|"dev"|"test"}, ...]}``

``text`` and ``speaker`` are optional.  The emotion vocabulary is declared
in the header, never inferred, so the class count is stable across files.

Feature matrix (binary, little-endian):

    bytes 0..7   magic ``LCFEAT01``
    bytes 8..11  rows, u32
    bytes 12..15 cols, u32
    then         rows*cols IEEE-754 float32, row-major

Feature files store float32; they are widened to float64 on load.
"""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

FEATURE_MAGIC = b"LCFEAT01"
MANIFEST_FORMAT = "linecon-manifest"
MANIFEST_VERSION = 1
SPLITS = ("train", "dev", "test")

SENTIMENT_NEGATIVE = 0
SENTIMENT_NEUTRAL = 1
SENTIMENT_POSITIVE = 2


class CorpusFormatError(ValueError):
    """A manifest or feature file violates its format contract."""


@dataclass(frozen=True)
class Utterance:
    """One speaker turn.  ``speaker`` is stored for fidelity only; no model
    path ever reads it."""

    utt_id: str
    emotion: int
    sentiment: int
    split: str
    text: str | None = None
    speaker: str | None = None


@dataclass(frozen=True)
class Conversation:
    conv_id: str
    utterances: tuple[Utterance, ...]


@dataclass(frozen=True)
class Corpus:
    """Conversations plus the aligned node-feature matrix."""

    conversations: tuple[Conversation, ...]
    emotion_vocab: tuple[str, ...]
    features: np.ndarray  # (m, n) float64, row i = utterance i

    @property
    def n_utterances(self) -> int:
        return sum(len(c.utterances) for c in self.conversations)

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    def iter_utterances(self) -> Iterator[tuple[int, int, Utterance]]:
        """Yield (global_index, conversation_ordinal, utterance) in
        traversal order."""
        g = 0
        for ci, conv in enumerate(self.conversations):
            for utt in conv.utterances:
                yield g, ci, utt
                g += 1

    def labels(self) -> np.ndarray:
        return np.array([u.emotion for _, _, u in self.iter_utterances()], dtype=np.int64)

    def sentiments(self) -> np.ndarray:
        return np.array([u.sentiment for _, _, u in self.iter_utterances()], dtype=np.int64)

    def splits(self) -> list[str]:
        return [u.split for _, _, u in self.iter_utterances()]


@dataclass
class ValidationReport:
    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def add_error(self, location: str, message: str) -> None:
        self.errors.append((location, message))

    def add_warning(self, location: str, message: str) -> None:
        self.warnings.append((location, message))


def worker_count() -> int:
    """Worker-thread cap: LINECON_THREADS if set, else all cores."""
    raw = os.environ.get("LINECON_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"LINECON_THREADS must be an integer, got {raw!r}")
        if n < 1:
            raise ValueError("LINECON_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# feature file
# ---------------------------------------------------------------------------

def write_feature_file(path: str | Path, features: np.ndarray) -> None:
    """Write an LCFEAT01 file.  Values are stored as float32."""
    mat = np.ascontiguousarray(features, dtype=np.float32)
    if mat.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {mat.shape}")
    rows, cols = mat.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(mat.astype("<f4").tobytes())


def read_feature_file(path: str | Path) -> np.ndarray:
    """Read an LCFEAT01 file into a float64 matrix."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != FEATURE_MAGIC:
            raise CorpusFormatError(f"{path}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise CorpusFormatError(f"{path}: truncated header")
        rows, cols = struct.unpack("<II", header)
        payload = fh.read()
    expected = rows * cols * 4
    if len(payload) != expected:
        raise CorpusFormatError(
            f"{path}: feature dim mismatch vs header: expected {expected} payload bytes "
            f"for {rows}x{cols}, found {len(payload)}"
        )
    mat = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    return mat.astype(np.float64)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def _parse_utterance(obj: dict, vocab_index: dict[str, int], where: str) -> Utterance:
    try:
        utt_id = obj["utt_id"]
        emotion_name = obj["emotion"]
        sentiment = obj["sentiment"]
        split = obj["split"]
    except KeyError as exc:
        raise CorpusFormatError(f"{where}: utterance missing field {exc}")
    if emotion_name not in vocab_index:
        raise CorpusFormatError(f"{where}: unknown emotion name {emotion_name!r}")
    if not isinstance(sentiment, int) or isinstance(sentiment, bool):
        raise CorpusFormatError(f"{where}: sentiment must be an integer, got {sentiment!r}")
    if split not in SPLITS:
        raise CorpusFormatError(f"{where}: split must be one of {SPLITS}, got {split!r}")
    return Utterance(
        utt_id=str(utt_id),
        emotion=vocab_index[emotion_name],
        sentiment=sentiment,
        split=split,
        text=obj.get("text"),
        speaker=obj.get("speaker"),
    )


def _parse_conversation(args: tuple[int, str, dict[str, int]]) -> Conversation:
    lineno, line, vocab_index = args
    where = f"manifest line {lineno}"
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{where}: malformed manifest line: {exc}")
    if not isinstance(obj, dict) or "conv_id" not in obj or "utterances" not in obj:
        raise CorpusFormatError(f"{where}: conversation record needs conv_id and utterances")
    utts = obj["utterances"]
    if not isinstance(utts, list) or not utts:
        raise CorpusFormatError(f"{where}: conversation must contain at least one utterance")
    parsed = tuple(_parse_utterance(u, vocab_index, where) for u in utts)
    return Conversation(conv_id=str(obj["conv_id"]), utterances=parsed)


def load_corpus(manifest_path: str | Path, features_path: str | Path) -> Corpus:
    """Load a manifest + feature file pair.

    Conversations may be parsed in parallel (capped by LINECON_THREADS) but
    are always assembled in manifest order.
    """
    with open(manifest_path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CorpusFormatError(f"{manifest_path}: empty manifest")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"manifest line 1: malformed header: {exc}")
    if not isinstance(header, dict) or header.get("format") != MANIFEST_FORMAT:
        raise CorpusFormatError("manifest line 1: header must declare format "
                                f"{MANIFEST_FORMAT!r}")
    if header.get("version") != MANIFEST_VERSION:
        raise CorpusFormatError(f"manifest line 1: unsupported version {header.get('version')!r}")
    vocab = header.get("emotion_vocab")
    if not isinstance(vocab, list) or not vocab or not all(isinstance(v, str) for v in vocab):
        raise CorpusFormatError("manifest line 1: emotion_vocab must be a non-empty "
                                "list of names")
    vocab_index = {name: i for i, name in enumerate(vocab)}

    jobs = [
        (lineno, line, vocab_index)
        for lineno, line in enumerate(lines[1:], start=2)
        if line.strip()
    ]
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            conversations = tuple(pool.map(_parse_conversation, jobs))
    else:
        conversations = tuple(_parse_conversation(j) for j in jobs)

    features = read_feature_file(features_path)
    total = sum(len(c.utterances) for c in conversations)
    if features.shape[0] != total:
        raise CorpusFormatError(
            f"feature-row count mismatch: manifest has {total} utterances, "
            f"feature file has {features.shape[0]} rows"
        )
    return Corpus(conversations=conversations, emotion_vocab=tuple(vocab), features=features)


def save_corpus(corpus: Corpus, manifest_path: str | Path, features_path: str | Path) -> None:
    """Write a corpus back to a manifest + feature file pair.

    Loading the written pair yields a corpus equal field-for-field to a
    previously *loaded* one (feature values are stored as float32).
    """
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        header = {
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "emotion_vocab": list(corpus.emotion_vocab),
        }
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for conv in corpus.conversations:
            utts = []
            for u in conv.utterances:
                rec: dict = {"utt_id": u.utt_id}
                if u.text is not None:
                    rec["text"] = u.text
                if u.speaker is not None:
                    rec["speaker"] = u.speaker
                rec["emotion"] = corpus.emotion_vocab[u.emotion]
                rec["sentiment"] = u.sentiment
                rec["split"] = u.split
                utts.append(rec)
            fh.write(json.dumps({"conv_id": conv.conv_id, "utterances": utts},
                                ensure_ascii=False) + "\n")
    write_feature_file(features_path, corpus.features)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Check every corpus invariant.  Violations become report entries,
    never exceptions, and the corpus is not mutated."""
    report = ValidationReport()
    t = len(corpus.emotion_vocab)

    if len(set(corpus.emotion_vocab)) != t:
        report.add_error("emotion_vocab", "emotion names are not unique")

    seen: dict[str, str] = {}
    total = 0
    conv_ids: dict[str, int] = {}
    for ci, conv in enumerate(corpus.conversations):
        where_conv = f"conversation {conv.conv_id!r}"
        if conv.conv_id in conv_ids:
            report.add_warning(where_conv,
                               f"duplicate conv_id (also conversation #{conv_ids[conv.conv_id]})")
        else:
            conv_ids[conv.conv_id] = ci
        if not conv.utterances:
            report.add_error(where_conv, "empty conversation")
        for u in conv.utterances:
            where = f"{where_conv}/utterance {u.utt_id!r}"
            total += 1
            if u.utt_id in seen:
                report.add_error(where, f"duplicate utt_id (also in {seen[u.utt_id]})")
            else:
                seen[u.utt_id] = where_conv
            if not 0 <= u.emotion < t:
                report.add_error(where, f"emotion index {u.emotion} out of range 0..{t - 1}")
            if u.sentiment not in (0, 1, 2):
                report.add_error(where, f"sentiment out of range: {u.sentiment}")
            if u.split not in SPLITS:
                report.add_error(where, f"invalid split {u.split!r}")

    if corpus.features.ndim != 2:
        report.add_error("features", f"feature matrix must be 2-D, got {corpus.features.ndim}-D")
    elif corpus.features.shape[0] != total:
        report.add_error(
            "features",
            f"feature-row count mismatch: {corpus.features.shape[0]} rows for {total} utterances",
        )
    if corpus.features.ndim == 2 and not np.isfinite(corpus.features).all():
        bad = int(np.sum(~np.isfinite(corpus.features)))
        report.add_warning("features", f"{bad} non-finite feature entries")
    return report


# ---------------------------------------------------------------------------
# synthetic corpora
# ---------------------------------------------------------------------------

def synth_corpus(
    seed: int,
    n_convs: int,
    len_range: tuple[int, int],
    n_classes: int,
    dim: int,
    noise: float,
) -> Corpus:
    """Deterministic synthetic corpus for desk-scale experiments.

    Every utterance of a conversation shares one emotion drawn uniformly
    per conversation, an extreme form of the emotional inertia seen in
    real dialogue.  Labels therefore survive neighborhood averaging on the
    chain topology, which makes the corpus separable by construction at
    zero noise.  Each class k gets the unit mean vector e_k; an
    utterance's feature is its class mean plus iid Gaussian(0, noise^2)
    per coordinate.  Sentiments follow the fixed map
    ``emotion k -> k mod 3`` and splits are assigned 70/10/20 by
    conversation position.
    """
    lo, hi = len_range
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if dim < n_classes:
        raise ValueError(f"dim must be >= n_classes ({dim} < {n_classes})")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    if n_convs < 1:
        raise ValueError("n_convs must be >= 1")
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid len_range {len_range}")

    rng = np.random.default_rng(seed)
    lengths = rng.integers(lo, hi + 1, size=n_convs)
    total = int(lengths.sum())
    conv_emotion = rng.integers(0, n_classes, size=n_convs)
    emotions = np.repeat(conv_emotion, lengths)

    means = np.zeros((n_classes, dim))
    means[np.arange(n_classes), np.arange(n_classes)] = 1.0
    features = means[emotions]
    if noise > 0:
        features = features + rng.normal(0.0, noise, size=(total, dim))
    features = np.ascontiguousarray(features, dtype=np.float64)

    conversations = []
    g = 0
    for ci in range(n_convs):
        r = ci % 10
        split = "train" if r < 7 else ("dev" if r == 7 else "test")
        utts = []
        for ui in range(int(lengths[ci])):
            emo = int(emotions[g])
            utts.append(Utterance(
                utt_id=f"c{ci:05d}_u{ui:03d}",
                emotion=emo,
                sentiment=emo % 3,
                split=split,
                text=None,
                speaker=f"spk{ui % 2}",
            ))
            g += 1
        conversations.append(Conversation(conv_id=f"c{ci:05d}", utterances=tuple(utts)))

    vocab = tuple(f"class{k}" for k in range(n_classes))
    return Corpus(conversations=tuple(conversations), emotion_vocab=vocab, features=features)

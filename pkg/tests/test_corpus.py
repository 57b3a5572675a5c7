"""Corpus loading, validation, synthesis, and file formats."""

import json

import numpy as np
import pytest

from linecon.corpus import (
    CorpusFormatError,
    load_corpus,
    read_feature_file,
    save_corpus,
    synth_corpus,
    validate_corpus,
    write_feature_file,
)

from conftest import make_corpus


def write_pair(tmp_path, corpus, stem="corpus"):
    manifest = tmp_path / f"{stem}.jsonl"
    features = tmp_path / f"{stem}.lcfeat"
    save_corpus(corpus, manifest, features)
    return manifest, features


class TestFeatureFile:
    def test_roundtrip_exact(self, tmp_path, rng):
        mat = rng.normal(size=(5, 3)).astype(np.float32).astype(np.float64)
        path = tmp_path / "f.lcfeat"
        write_feature_file(path, mat)
        back = read_feature_file(path)
        assert back.dtype == np.float64
        np.testing.assert_array_equal(back, mat)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "f.lcfeat"
        write_feature_file(path, np.zeros((2, 3)))
        raw = path.read_bytes()
        assert raw[:8] == b"LCFEAT01"
        assert int.from_bytes(raw[8:12], "little") == 2
        assert int.from_bytes(raw[12:16], "little") == 3
        assert len(raw) == 16 + 2 * 3 * 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "f.lcfeat"
        path.write_bytes(b"NOTMAGIC" + b"\0" * 8)
        with pytest.raises(CorpusFormatError, match="magic"):
            read_feature_file(path)

    def test_payload_vs_header_mismatch(self, tmp_path):
        path = tmp_path / "f.lcfeat"
        write_feature_file(path, np.zeros((4, 2)))
        raw = path.read_bytes()
        path.write_bytes(raw[:-4])  # drop one float
        with pytest.raises(CorpusFormatError, match="dim mismatch"):
            read_feature_file(path)


class TestLoadCorpus:
    def test_minimal_corpus(self, tmp_path):
        corpus = make_corpus([1], dim=2)
        manifest, features = write_pair(tmp_path, corpus)
        loaded = load_corpus(manifest, features)
        assert loaded.n_utterances == 1
        assert loaded.feature_dim == 2

    def test_roundtrip_identical(self, tmp_path):
        corpus = make_corpus([3, 4, 2], splits=["train"] * 5 + ["dev"] * 2 + ["test"] * 2)
        m1, f1 = write_pair(tmp_path, corpus, "a")
        loaded = load_corpus(m1, f1)
        m2, f2 = write_pair(tmp_path, loaded, "b")
        reloaded = load_corpus(m2, f2)
        assert loaded.conversations == reloaded.conversations
        assert loaded.emotion_vocab == reloaded.emotion_vocab
        np.testing.assert_array_equal(loaded.features, reloaded.features)
        assert m1.read_bytes() == m2.read_bytes()
        assert f1.read_bytes() == f2.read_bytes()

    def test_feature_alignment(self, tmp_path):
        corpus = make_corpus([2, 3])
        manifest, features = write_pair(tmp_path, corpus)
        loaded = load_corpus(manifest, features)
        flat = [u for _, _, u in loaded.iter_utterances()]
        assert [u.utt_id for u in flat] == [
            "c0_u0", "c0_u1", "c1_u0", "c1_u1", "c1_u2"]
        # row i corresponds to utterance i
        np.testing.assert_array_equal(
            loaded.features,
            corpus.features.astype(np.float32).astype(np.float64))

    def test_row_count_mismatch(self, tmp_path):
        corpus = make_corpus([5])
        manifest, _ = write_pair(tmp_path, corpus)
        short = tmp_path / "short.lcfeat"
        write_feature_file(short, corpus.features[:4])
        with pytest.raises(CorpusFormatError, match="feature-row count mismatch"):
            load_corpus(manifest, short)

    def test_malformed_line_reports_lineno(self, tmp_path):
        corpus = make_corpus([2, 2])
        manifest, features = write_pair(tmp_path, corpus)
        lines = manifest.read_text().splitlines()
        lines[2] = lines[2][:-5]  # truncate the second conversation record
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusFormatError, match="manifest line 3"):
            load_corpus(manifest, features)

    def test_unknown_emotion_name(self, tmp_path):
        corpus = make_corpus([2], emotions=[0, 1])
        manifest, features = write_pair(tmp_path, corpus)
        text = manifest.read_text().replace('"emotion": "class0"',
                                            '"emotion": "bliss"', 1)
        manifest.write_text(text)
        with pytest.raises(CorpusFormatError, match="unknown emotion name 'bliss'"):
            load_corpus(manifest, features)

    def test_missing_sentiment_is_load_error(self, tmp_path):
        corpus = make_corpus([1])
        manifest, features = write_pair(tmp_path, corpus)
        record = json.loads(manifest.read_text().splitlines()[1])
        del record["utterances"][0]["sentiment"]
        lines = manifest.read_text().splitlines()
        lines[1] = json.dumps(record)
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorpusFormatError, match="sentiment"):
            load_corpus(manifest, features)

    def test_header_declares_vocab(self, tmp_path):
        corpus = make_corpus([1])
        manifest, features = write_pair(tmp_path, corpus)
        header = json.loads(manifest.read_text().splitlines()[0])
        assert header["emotion_vocab"] == ["class0", "class1", "class2"]
        assert header["version"] == 1

    def test_single_thread_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LINECON_THREADS", "1")
        corpus = make_corpus([2, 2, 2])
        manifest, features = write_pair(tmp_path, corpus)
        loaded = load_corpus(manifest, features)
        assert loaded.n_utterances == 6

    def test_meld_shaped_manifest(self, tmp_path):
        """Manifest with the published MELD shape: 1433 conversations,
        13708 utterances, 7 emotions, splits 9989/1109/2610."""
        vocab = ("anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise")
        plan = [  # (n_convs_of_10, n_convs_of_9, split)
            (638, 401, "train"),   # 638*10 + 401*9 = 9989
            (83, 31, "dev"),       # 83*10 + 31*9 = 1109
            (90, 190, "test"),     # 90*10 + 190*9 = 2610
        ]
        sizes, splits_per_conv = [], []
        for tens, nines, split in plan:
            sizes += [10] * tens + [9] * nines
            splits_per_conv += [split] * (tens + nines)
        assert len(sizes) == 1433
        total = sum(sizes)
        assert total == 13708
        rng = np.random.default_rng(0)
        splits = []
        for size, split in zip(sizes, splits_per_conv):
            splits += [split] * size
        corpus = make_corpus(
            conv_sizes=sizes,
            emotions=rng.integers(0, 7, size=total).tolist(),
            splits=splits,
            features=rng.normal(size=(total, 8)).astype(np.float32),
            n_classes=7,
            dim=8,
        )
        corpus = type(corpus)(conversations=corpus.conversations,
                              emotion_vocab=vocab, features=corpus.features)
        manifest, features = write_pair(tmp_path, corpus, "meld_shaped")
        loaded = load_corpus(manifest, features)
        assert loaded.n_utterances == 13708
        assert len(loaded.conversations) == 1433
        assert len(loaded.emotion_vocab) == 7
        counts = {s: 0 for s in ("train", "dev", "test")}
        for _, _, u in loaded.iter_utterances():
            counts[u.split] += 1
        assert counts == {"train": 9989, "dev": 1109, "test": 2610}
        assert validate_corpus(loaded).ok


class TestValidate:
    def test_valid_corpus(self):
        assert validate_corpus(make_corpus([3, 2])).ok

    def test_duplicate_utt_id(self):
        corpus = make_corpus([2])
        bad = corpus.conversations[0].utterances[0]
        dup = type(bad)(utt_id="c0_u1", emotion=bad.emotion, sentiment=bad.sentiment,
                        split=bad.split)
        conv = type(corpus.conversations[0])(
            conv_id="c0", utterances=(dup, corpus.conversations[0].utterances[1]))
        corpus = type(corpus)(conversations=(conv,), emotion_vocab=corpus.emotion_vocab,
                              features=corpus.features)
        report = validate_corpus(corpus)
        assert len(report.errors) == 1
        loc, msg = report.errors[0]
        assert "duplicate utt_id" in msg
        assert "c0_u1" in loc and "c0" in msg  # names both locations

    def test_sentiment_out_of_range(self):
        corpus = make_corpus([1], sentiments=[5])
        report = validate_corpus(corpus)
        assert len(report.errors) == 1
        assert "sentiment out of range" in report.errors[0][1]

    def test_emotion_out_of_range(self):
        corpus = make_corpus([1], emotions=[7], n_classes=3)
        report = validate_corpus(corpus)
        assert any("emotion index" in msg for _, msg in report.errors)

    def test_nonfinite_features_warn(self):
        feats = np.zeros((1, 4))
        feats[0, 0] = np.nan
        corpus = make_corpus([1], features=feats)
        report = validate_corpus(corpus)
        assert report.ok
        assert any("non-finite" in msg for _, msg in report.warnings)


class TestSynth:
    def test_deterministic_bytes(self, tmp_path):
        a = synth_corpus(seed=7, n_convs=20, len_range=(3, 8), n_classes=4,
                         dim=16, noise=0.3)
        b = synth_corpus(seed=7, n_convs=20, len_range=(3, 8), n_classes=4,
                         dim=16, noise=0.3)
        ma, fa = write_pair(tmp_path, a, "a")
        mb, fb = write_pair(tmp_path, b, "b")
        assert ma.read_bytes() == mb.read_bytes()
        assert fa.read_bytes() == fb.read_bytes()

    def test_different_seeds_differ(self):
        a = synth_corpus(seed=1, n_convs=5, len_range=(3, 4), n_classes=3,
                         dim=8, noise=0.1)
        b = synth_corpus(seed=2, n_convs=5, len_range=(3, 4), n_classes=3,
                         dim=8, noise=0.1)
        assert not np.array_equal(a.features, b.features)

    def test_noise_zero_exact_means(self):
        corpus = synth_corpus(seed=3, n_convs=10, len_range=(2, 5), n_classes=4,
                              dim=6, noise=0.0)
        labels = corpus.labels()
        expected = np.zeros((corpus.n_utterances, 6))
        expected[np.arange(corpus.n_utterances), labels] = 1.0
        np.testing.assert_array_equal(corpus.features, expected)

    def test_sentiment_map(self):
        corpus = synth_corpus(seed=3, n_convs=10, len_range=(2, 5), n_classes=5,
                              dim=6, noise=0.0)
        np.testing.assert_array_equal(corpus.sentiments(), corpus.labels() % 3)

    def test_split_proportions(self):
        corpus = synth_corpus(seed=3, n_convs=100, len_range=(2, 5), n_classes=3,
                              dim=4, noise=0.1)
        by_conv = [c.utterances[0].split for c in corpus.conversations]
        assert by_conv.count("train") == 70
        assert by_conv.count("dev") == 10
        assert by_conv.count("test") == 20
        # split constant within a conversation
        for conv in corpus.conversations:
            assert len({u.split for u in conv.utterances}) == 1

    def test_dim_smaller_than_classes_rejected(self):
        with pytest.raises(ValueError, match="dim"):
            synth_corpus(seed=0, n_convs=2, len_range=(1, 2), n_classes=2,
                         dim=1, noise=0.0)

    def test_invalid_ranges_rejected(self):
        with pytest.raises(ValueError):
            synth_corpus(seed=0, n_convs=2, len_range=(3, 2), n_classes=2,
                         dim=4, noise=0.0)
        with pytest.raises(ValueError):
            synth_corpus(seed=0, n_convs=2, len_range=(1, 2), n_classes=1,
                         dim=4, noise=0.0)
        with pytest.raises(ValueError):
            synth_corpus(seed=0, n_convs=2, len_range=(1, 2), n_classes=2,
                         dim=4, noise=-0.5)

    def test_validates_clean(self):
        corpus = synth_corpus(seed=9, n_convs=30, len_range=(1, 6), n_classes=3,
                              dim=5, noise=0.2)
        assert validate_corpus(corpus).ok

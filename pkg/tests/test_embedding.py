import numpy as np
import pytest

from xldetect.embedding import (
    AliasSampler,
    EmbeddingMatrix,
    SkipgramConfig,
    VectorTable,
    load_checkpoint,
    load_vectors,
    negative_table,
    pair_gradients,
    sampled_objective,
    save_checkpoint,
    save_vectors,
    train_skipgram,
    word_vector,
)
from xldetect.errors import FormatError
from xldetect.vocab import SubwordIndex, build_vocab, input_ids


def cluster_corpus(reps=30):
    return [["a", "b"] * 20, ["c", "d"] * 20] * reps


def small_config(**kw):
    defaults = dict(
        dim=16, epochs=3, min_count=1, seed=5, subwords=None, subsample_t=1e-2
    )
    defaults.update(kw)
    return SkipgramConfig(**defaults)


def cos(x, y):
    return float(x @ y / (np.linalg.norm(x) * np.linalg.norm(y)))


class TestNegativeSampler:
    def test_single_word(self):
        vocab = build_vocab([["only", "only"]], min_count=1)
        sampler = negative_table(vocab)
        rng = np.random.default_rng(0)
        assert (sampler.sample(rng, 100) == 0).all()

    def test_count_power_ratio(self):
        # counts 16 and 1 -> 16^0.75 : 1 = 8 : 1
        vocab = build_vocab([["big"] * 16 + ["small"]], min_count=1)
        sampler = negative_table(vocab)
        rng = np.random.default_rng(123)
        draws = sampler.sample(rng, 1_000_000)
        big = (draws == vocab.word_to_id["big"]).sum()
        small = (draws == vocab.word_to_id["small"]).sum()
        ratio = big / small
        assert abs(ratio - 8.0) / 8.0 < 0.05

    def test_uniform_counts_chi_square(self):
        vocab = build_vocab([["w1", "w2", "w3", "w4"] * 10], min_count=1)
        sampler = negative_table(vocab)
        rng = np.random.default_rng(7)
        n = 1_000_000
        draws = sampler.sample(rng, n)
        observed = np.bincount(draws, minlength=4)
        expected = n / 4
        chi2 = float(((observed - expected) ** 2 / expected).sum())
        assert chi2 < 11.345  # chi-square critical value, df=3, alpha=0.01

    def test_deterministic_given_seed(self):
        vocab = build_vocab([["x", "x", "y", "z"]], min_count=1)
        sampler = negative_table(vocab)
        a = sampler.sample(np.random.default_rng(42), 1000)
        b = sampler.sample(np.random.default_rng(42), 1000)
        assert (a == b).all()

    def test_alias_distribution_exact(self):
        # alias construction must preserve probabilities exactly
        w = np.array([3.0, 1.0, 6.0])
        sampler = AliasSampler(w)
        p = np.zeros(3)
        for i in range(3):
            p[i] += sampler.accept[i] / 3
            p[sampler.alias[i]] += (1 - sampler.accept[i]) / 3
        assert np.abs(p - w / w.sum()).max() < 1e-12


class TestTrainSkipgram:
    def test_cluster_structure_learned(self):
        model = train_skipgram(cluster_corpus(), small_config(epochs=5, seed=3))
        a, b, c = (word_vector(w, model) for w in "abc")
        assert cos(a, b) > cos(a, c)

    def test_zero_epochs_is_initialization(self):
        cfg = small_config(epochs=0)
        m1 = train_skipgram(cluster_corpus(), cfg)
        m2 = train_skipgram(cluster_corpus(), cfg)
        assert (m1.input_rows == m2.input_rows).all()
        assert (m1.context_rows == 0).all()
        bound = 1.0 / cfg.dim + 1e-7
        assert np.abs(m1.input_rows).max() <= bound

    def test_objective_improves_after_training(self):
        corpus = cluster_corpus()
        cfg = small_config(epochs=0, seed=11)
        init = train_skipgram(corpus, cfg)
        trained = train_skipgram(corpus, small_config(epochs=2, seed=11))
        # evaluation sample of true co-occurring pairs with noise negatives
        rng = np.random.default_rng(0)
        sampler = negative_table(init.vocab)
        sample = []
        for _ in range(200):
            sent = corpus[rng.integers(0, len(corpus))]
            i = int(rng.integers(0, len(sent) - 1))
            center = init.vocab.word_to_id[sent[i]]
            ctx = init.vocab.word_to_id[sent[i + 1]]
            sample.append((center, ctx, sampler.sample(rng, 5)))
        assert sampled_objective(trained, sample) > sampled_objective(init, sample)

    def test_bit_reproducible_single_worker(self):
        cfg = small_config(epochs=2, seed=9)
        m1 = train_skipgram(cluster_corpus(), cfg)
        m2 = train_skipgram(cluster_corpus(), cfg)
        assert (m1.input_rows == m2.input_rows).all()
        assert (m1.context_rows == m2.context_rows).all()

    def test_multi_worker_runs_and_is_finite(self):
        cfg = small_config(epochs=2, seed=9, workers=2)
        model = train_skipgram(cluster_corpus(), cfg)
        assert np.isfinite(model.input_rows).all()

    def test_empty_vocab_raises(self):
        with pytest.raises(ValueError):
            train_skipgram([["one", "two"]], small_config(min_count=10))

    def test_all_entries_finite_with_subwords(self):
        corpus = [["hello", "world", "hello"], ["subword", "hello", "world"]] * 20
        cfg = small_config(subwords=SubwordIndex(3, 4, 50), epochs=2)
        model = train_skipgram(corpus, cfg)
        assert np.isfinite(model.input_rows).all()

    def test_lr_schedule_nonnegative(self):
        cfg = SkipgramConfig(dim=4, epochs=1, min_count=1, subwords=None)
        total = 100
        for t in range(total + 1):
            assert cfg.initial_lr * max(0.0, 1.0 - t / total) >= 0.0

    def test_subsample_keep_rule(self):
        # words at or below the threshold frequency are never discarded
        t = 1e-4
        freqs = np.array([t / 2, t, t * 4])
        keep = np.where(freqs <= t, 1.0, np.sqrt(t / freqs))
        assert keep[0] == 1.0 and keep[1] == 1.0
        assert keep[2] == pytest.approx(0.5)

    def test_divergence_guards(self):
        from xldetect.embedding import _check_finite, _epoch_guard
        from xldetect.errors import TrainingError

        with pytest.raises(TrainingError, match="epoch 3"):
            _epoch_guard(np.array([[1e9]], dtype=np.float32), epoch=3)
        with pytest.raises(TrainingError):
            _check_finite(np.array([[np.nan]], dtype=np.float32), "input rows")
        _epoch_guard(np.array([[1.0]], dtype=np.float32), epoch=0)  # no raise


class TestPairGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            d = 7
            h = rng.standard_normal(d)
            rows = rng.standard_normal((6, d))
            labels = np.array([1, 1, 0, 0, 0, 0], dtype=np.float64)
            loss, grad_h, grad_rows = pair_gradients(h, rows, labels)
            eps = 1e-5
            for k in range(d):
                dh = np.zeros(d)
                dh[k] = eps
                lp = pair_gradients(h + dh, rows, labels)[0]
                lm = pair_gradients(h - dh, rows, labels)[0]
                fd = (lp - lm) / (2 * eps)
                assert abs(fd - grad_h[k]) <= 1e-4 * max(1.0, abs(grad_h[k]))
            for i in range(rows.shape[0]):
                for k in range(d):
                    dr = np.zeros_like(rows)
                    dr[i, k] = eps
                    lp = pair_gradients(h, rows + dr, labels)[0]
                    lm = pair_gradients(h, rows - dr, labels)[0]
                    fd = (lp - lm) / (2 * eps)
                    assert abs(fd - grad_rows[i, k]) <= 1e-4 * max(1.0, abs(grad_rows[i, k]))


class TestWordVector:
    def test_zero_rows_give_zero_vector(self):
        vocab = build_vocab([["w", "w"]], min_count=1)
        idx = SubwordIndex(3, 3, 5)
        rows = np.zeros((len(vocab) + 5, 4), dtype=np.float32)
        model = EmbeddingMatrix(vocab, idx, rows, np.zeros((1, 4), dtype=np.float32))
        assert (word_vector("w", model) == 0).all()

    def test_oov_is_bucket_mean(self):
        vocab = build_vocab([["w", "w"]], min_count=1)
        idx = SubwordIndex(3, 3, 5)
        rows = np.arange((1 + 5) * 2, dtype=np.float32).reshape(6, 2)
        model = EmbeddingMatrix(vocab, idx, rows, np.zeros((1, 2), dtype=np.float32))
        ids = input_ids("xy", vocab, idx)
        expected = rows[ids].mean(axis=0)
        assert np.allclose(word_vector("xy", model), expected)

    def test_oov_without_subwords_is_zero(self):
        vocab = build_vocab([["w", "w"]], min_count=1)
        rows = np.ones((1, 3), dtype=np.float32)
        model = EmbeddingMatrix(vocab, None, rows, np.zeros((1, 3), dtype=np.float32))
        assert (word_vector("other", model) == 0).all()


class TestVectorIO:
    def make_table(self):
        rng = np.random.default_rng(5)
        vectors = rng.standard_normal((4, 3)).astype(np.float32).astype(np.float64)
        return VectorTable(["alpha", "beta", "gamma", "delta"], vectors)

    def test_round_trip_bitwise(self, tmp_path):
        table = self.make_table()
        path = tmp_path / "vectors.txt"
        save_vectors(table, path)
        loaded = load_vectors(path)
        assert loaded.words == table.words
        assert (loaded.vectors == table.vectors).all()

    def test_save_is_idempotent(self, tmp_path):
        table = self.make_table()
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save_vectors(table, p1)
        save_vectors(load_vectors(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 3\nw1 1 2 3\nw2 1 2 3\nw3 1 2 3\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_vectors(path)

    def test_dimension_check(self, tmp_path):
        table = self.make_table()
        path = tmp_path / "vectors.txt"
        save_vectors(table, path)
        assert load_vectors(path, expect_dim=3).dim == 3
        with pytest.raises(FormatError):
            load_vectors(path, expect_dim=50)

    def test_duplicate_word_rejected(self, tmp_path):
        path = tmp_path / "dup.txt"
        path.write_text("2 2\nw 1 2\nw 3 4\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_vectors(path)

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "nan.txt"
        path.write_text("1 2\nw 1 oops\n", encoding="utf-8")
        with pytest.raises(FormatError):
            load_vectors(path)


class TestCheckpoint:
    def test_round_trip_exact(self, tmp_path):
        corpus = [["hello", "world", "again"], ["world", "again", "hello"]] * 10
        cfg = small_config(subwords=SubwordIndex(3, 4, 30), epochs=1)
        model = train_skipgram(corpus, cfg)
        path = tmp_path / "model.bin"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert loaded.vocab.words == model.vocab.words
        assert (loaded.input_rows == model.input_rows).all()
        assert (loaded.context_rows == model.context_rows).all()
        assert loaded.subwords == model.subwords

    def test_magic_check(self, tmp_path):
        path = tmp_path / "bogus.bin"
        path.write_bytes(b"NOTEMB WHATEVER")
        with pytest.raises(FormatError):
            load_checkpoint(path)

    def test_composed_table_matches_word_vector(self):
        corpus = [["aa", "bb", "cc"], ["bb", "cc", "aa"]] * 10
        model = train_skipgram(corpus, small_config(epochs=1, subwords=SubwordIndex(2, 3, 20)))
        table = model.to_table()
        for word in model.vocab.words:
            assert (table.get(word) == word_vector(word, model).astype(np.float64)).all()

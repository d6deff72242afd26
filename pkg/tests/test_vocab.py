import itertools

import pytest

from xldetect.vocab import (
    SubwordIndex,
    build_vocab,
    fnv1a_32,
    hash_subword,
    input_ids,
    load_vocab,
    save_vocab,
    subwords,
)


class TestBuildVocab:
    def test_threshold(self):
        vocab = build_vocab([["a", "a", "b"]], min_count=2)
        assert vocab.words == ["a"]
        assert vocab.counts.tolist() == [2]
        assert vocab.total_tokens == 3

    def test_ordering_count_then_lex(self):
        vocab = build_vocab([["a", "a", "b"]], min_count=1)
        assert vocab.words == ["a", "b"]
        assert vocab.word_to_id == {"a": 0, "b": 1}

    def test_lexicographic_ties(self):
        vocab = build_vocab([["zz", "aa", "mm"]], min_count=1)
        assert vocab.words == ["aa", "mm", "zz"]

    def test_all_below_threshold(self):
        with pytest.raises(ValueError, match="empty vocabulary"):
            build_vocab([["a", "b"]], min_count=5)

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty corpus"):
            build_vocab([], min_count=1)

    def test_rebuild_is_identical(self):
        corpus = [["x", "y", "x"], ["z", "y", "x"]]
        a = build_vocab(corpus, 1)
        b = build_vocab(corpus, 1)
        assert a.words == b.words and a.word_to_id == b.word_to_id


class TestSubwords:
    def test_where_trigrams(self):
        idx = SubwordIndex(n_min=3, n_max=3, buckets=10)
        assert subwords("where", idx) == ["<wh", "whe", "her", "ere", "re>"]

    def test_single_char_word(self):
        idx = SubwordIndex(3, 6, 10)
        assert subwords("a", idx) == ["<a>"]

    def test_abcd_full_enumeration(self):
        idx = SubwordIndex(3, 6, 10)
        got = subwords("abcd", idx)
        expected = [
            "<ab", "abc", "bcd", "cd>",
            "<abc", "abcd", "bcd>",
            "<abcd", "abcd>",
            "<abcd>",
        ]
        assert got == expected
        assert len(got) == 10

    def test_count_formula_all_lengths(self):
        # sum over n of max(0, L+3-n) for every word length 1..20
        for length in range(1, 21):
            word = "x" * length
            for n_min, n_max in [(3, 6), (1, 2), (2, 7), (4, 4)]:
                idx = SubwordIndex(n_min, n_max, 10)
                expected = sum(max(0, length + 3 - n) for n in range(n_min, n_max + 1))
                assert len(subwords(word, idx)) == expected

    def test_reserved_characters_sanitized(self):
        idx = SubwordIndex(3, 3, 10)
        assert subwords("a<b", idx) == subwords("a_b", idx)

    def test_empty_word_rejected(self):
        with pytest.raises(ValueError):
            subwords("", SubwordIndex(3, 6, 10))

    def test_bad_index_params(self):
        with pytest.raises(ValueError):
            SubwordIndex(4, 3, 10)
        with pytest.raises(ValueError):
            SubwordIndex(0, 3, 10)
        with pytest.raises(ValueError):
            SubwordIndex(3, 6, 0)


class TestHash:
    def test_fnv_offset_basis(self):
        # published FNV-1a constant: hash of the empty string is the offset basis
        assert fnv1a_32(b"") == 2166136261
        assert hash_subword("", 10**9) == 2166136261 % 10**9

    def test_modulo_one(self):
        for g in ("abc", "<ab", "x"):
            assert hash_subword(g, 1) == 0

    def test_deterministic(self):
        assert hash_subword("her", 1000) == hash_subword("her", 1000)

    def test_range(self):
        for g in ("a", "bb", "ccc", "dddd"):
            for b in (1, 2, 7, 1000):
                assert 0 <= hash_subword(g, b) < b


class TestInputIds:
    def setup_method(self):
        self.vocab = build_vocab([["hello", "hello", "world"]], min_count=1)
        self.idx = SubwordIndex(3, 6, 100)

    def test_in_vocab_word(self):
        ids = input_ids("hello", self.vocab, self.idx)
        k = len(subwords("hello", self.idx))
        assert len(ids) == k + 1
        assert ids[0] < len(self.vocab)
        assert all(i >= len(self.vocab) for i in ids[1:])

    def test_oov_word_buckets_only(self):
        ids = input_ids("unseen", self.vocab, self.idx)
        assert ids and all(i >= len(self.vocab) for i in ids)

    def test_no_subwords_oov_empty(self):
        assert input_ids("unseen", self.vocab, None) == []

    def test_all_ids_in_range(self):
        for word in ("hello", "world", "zebra", "a"):
            for i in input_ids(word, self.vocab, self.idx):
                assert 0 <= i < len(self.vocab) + self.idx.buckets

    def test_distinct_words_distinct_word_rows(self):
        a = input_ids("hello", self.vocab, self.idx)[0]
        b = input_ids("world", self.vocab, self.idx)[0]
        assert a != b

    def test_bucket_collision_possible(self):
        # brute-force search two distinct trigrams sharing a bucket at B=7
        idx = SubwordIndex(3, 3, 7)
        seen = {}
        collision = None
        for chars in itertools.product("abcdefgh", repeat=3):
            g = "".join(chars)
            h = hash_subword(g, idx.buckets)
            if h in seen and seen[h] != g:
                collision = (seen[h], g)
                break
            seen[h] = g
        assert collision is not None


class TestVocabDump:
    def test_round_trip(self, tmp_path):
        vocab = build_vocab([["b", "a", "a", "c", "c", "c"]], min_count=1)
        path = tmp_path / "vocab.tsv"
        save_vocab(vocab, path)
        loaded = load_vocab(path)
        assert loaded.words == vocab.words
        assert loaded.counts.tolist() == vocab.counts.tolist()
        assert loaded.min_count == vocab.min_count
        assert loaded.total_tokens == vocab.total_tokens

    def test_header_line(self, tmp_path):
        vocab = build_vocab([["a", "a", "b"]], min_count=1)
        path = tmp_path / "vocab.tsv"
        save_vocab(vocab, path)
        first = path.read_text(encoding="utf-8").splitlines()[0]
        assert first == "VOCAB v1 2 1 3"

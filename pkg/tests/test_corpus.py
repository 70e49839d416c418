import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moralbench.corpus import (
    Corpus,
    corpus_stats,
    load_corpus,
    load_splits,
    make_pair,
    save_corpus,
    save_splits,
    split_corpus,
    split_sentences,
    tokenize,
)
from moralbench.errors import ValidationError


def write_jsonl(path, rows):
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


class TestTokenize:
    def test_latin(self):
        assert tokenize("Unity is strength.") == ["unity", "is", "strength"]

    def test_cjk_per_character(self):
        assert tokenize("四头牛") == ["四", "头", "牛"]

    def test_empty(self):
        assert tokenize("") == []

    def test_mixed_scripts(self):
        assert tokenize("He said 你好 twice!") == ["he", "said", "你", "好", "twice"]

    def test_digits_join_letters(self):
        assert tokenize("route66 ok") == ["route66", "ok"]

    def test_punctuation_dropped(self):
        assert tokenize("well-known (fact)") == ["well", "known", "fact"]

    @given(st.lists(st.text(alphabet="abcdefgh", min_size=1, max_size=6), max_size=10))
    def test_idempotent_on_joined_output(self, tokens):
        once = tokenize(" ".join(tokens))
        assert tokenize(" ".join(once)) == once


class TestSentences:
    def test_split_and_quotes(self):
        text = 'It rained. "Run!" they said. The end'
        assert split_sentences(text) == ['It rained.', '"Run!"', "they said.", "The end"]

    def test_cjk_terminals(self):
        assert split_sentences("你好。再见！") == ["你好。", "再见！"]

    def test_no_terminal(self):
        assert split_sentences("no punctuation here") == ["no punctuation here"]

    def test_decimal_not_split(self):
        assert split_sentences("pi is 3.14 roughly. yes.") == ["pi is 3.14 roughly.", "yes."]

    def test_sentences_cover_text(self, cows_pair):
        joined = "".join(cows_pair.story_sentences)
        assert joined == "".join(cows_pair.story.split())  # separators are whitespace

    def test_sentences_cover_text_generic(self):
        text = "One. Two!? Three."
        parts = split_sentences(text)
        assert "".join(parts).replace(" ", "") == text.replace(" ", "")


class TestLoadCorpus:
    def test_identity_ingestion(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [
                {"id": "a", "story": "A tale. Done.", "moral": "Be good.", "lang": "en"},
                {"id": "b", "story": "Another tale.", "moral": "Be kind.", "lang": "en"},
            ],
        )
        corpus = load_corpus(path)
        assert [p.id for p in corpus.pairs] == ["a", "b"]
        assert corpus.pairs[0].story_tokens == ("a", "tale", "done")

    def test_missing_field_cites_line_and_field(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "a", "story": "A tale."}])
        with pytest.raises(ValidationError, match=r'line 1.*"moral"'):
            load_corpus(path)

    def test_duplicate_id_named(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [
                {"id": "a", "story": "S one.", "moral": "M one."},
                {"id": "b", "story": "S two.", "moral": "M two."},
                {"id": "a", "story": "S three.", "moral": "M three."},
            ],
        )
        with pytest.raises(ValidationError, match=r'duplicate id "a"'):
            load_corpus(path)

    def test_empty_story_rejected_with_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "x", "story": "   ", "moral": "M."}])
        with pytest.raises(ValidationError, match=r'empty story for id "x"'):
            load_corpus(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a"\n', encoding="utf-8")
        with pytest.raises(ValidationError, match="line 1"):
            load_corpus(path)

    def test_pretokenized_fields_trusted(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [
                {
                    "id": "a",
                    "story": "A tale.",
                    "moral": "Be good.",
                    "story_tokens": ["A", "tale", "."],
                    "moral_tokens": ["be", "good"],
                }
            ],
        )
        corpus = load_corpus(path)
        assert corpus.pairs[0].story_tokens == ("A", "tale", ".")

    def test_round_trip(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(
            path,
            [
                {"id": "a", "story": "A tale. Done.", "moral": "Be good."},
                {"id": "b", "story": "四头牛住在一起。", "moral": "团结就是力量。", "lang": "zh"},
            ],
        )
        corpus = load_corpus(path)
        out = tmp_path / "out.jsonl"
        save_corpus(corpus, out)
        again = load_corpus(out)
        assert again == corpus


class TestSplit:
    def make_corpus(self, n):
        return Corpus(
            pairs=[make_pair(f"id{i:03d}", f"Story {i}.", f"Moral {i}.") for i in range(n)]
        )

    def test_exact_811(self):
        corpus = split_corpus(self.make_corpus(10), (8, 1, 1), seed=1)
        sizes = {s: len(corpus.subset(s)) for s in ("train", "val", "test")}
        assert sizes == {"train": 8, "val": 1, "test": 1}

    def test_exact_311(self):
        corpus = split_corpus(self.make_corpus(5), (3, 1, 1), seed=1)
        sizes = {s: len(corpus.subset(s)) for s in ("train", "val", "test")}
        assert sizes == {"train": 3, "val": 1, "test": 1}

    def test_deterministic(self):
        a = split_corpus(self.make_corpus(31), (8, 1, 1), seed=42)
        b = split_corpus(self.make_corpus(31), (8, 1, 1), seed=42)
        assert a.split_of == b.split_of

    def test_independent_of_order(self):
        base = self.make_corpus(12)
        shuffled = Corpus(pairs=list(reversed(base.pairs)))
        a = split_corpus(base, (8, 1, 1), seed=3)
        b = split_corpus(shuffled, (8, 1, 1), seed=3)
        assert a.split_of == b.split_of

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValidationError):
            split_corpus(Corpus(pairs=[]), (8, 1, 1), seed=0)

    @given(n=st.integers(1, 60), seed=st.integers(0, 5))
    @settings(max_examples=40, deadline=None)
    def test_partition_property(self, n, seed):
        corpus = split_corpus(self.make_corpus(n), (8, 1, 1), seed=seed)
        assigned = list(corpus.split_of.values())
        assert len(corpus.split_of) == n
        assert set(corpus.split_of) == set(corpus.ids())
        sizes = [assigned.count(s) for s in ("train", "val", "test")]
        assert sum(sizes) == n

    def test_splits_file_round_trip(self, tmp_path):
        corpus = split_corpus(self.make_corpus(10), (8, 1, 1), seed=5)
        path = tmp_path / "splits.jsonl"
        save_splits(corpus, path)
        assert load_splits(path) == corpus.split_of


class TestStats:
    def test_single_pair(self):
        corpus = Corpus(
            pairs=[make_pair("a", "one two three four five six", "one two three")]
        )
        stats = corpus_stats(corpus)
        assert stats.avg_story_words == 6.0
        assert stats.avg_moral_words == 3.0

    def test_mean_over_two(self):
        corpus = Corpus(
            pairs=[
                make_pair("a", "w x y z", "m"),
                make_pair("b", "u v w x y z", "m"),
            ]
        )
        assert corpus_stats(corpus).avg_story_words == 5.0

    def test_vocab_enumerated_by_hand(self):
        # stories "a b" and "b c" -> distinct story tokens {a, b, c}
        corpus = Corpus(pairs=[make_pair("x", "a b", "m"), make_pair("y", "b c", "m")])
        assert corpus_stats(corpus).story_vocab == 3

    def test_stats_merge_over_splits(self):
        pairs = [
            make_pair(f"id{i}", f"story word{i} filler extra{i % 3}", f"moral {i}")
            for i in range(20)
        ]
        corpus = split_corpus(Corpus(pairs=pairs), (3, 1, 1), seed=9)
        whole = corpus_stats(corpus)
        merged_words = 0.0
        vocab = set()
        for name in ("train", "val", "test"):
            sub = corpus.subset(name)
            if not sub:
                continue
            part = corpus_stats(Corpus(pairs=sub))
            merged_words += part.avg_story_words * part.n_examples
            for pair in sub:
                vocab.update(pair.story_tokens)
        assert merged_words / whole.n_examples == pytest.approx(whole.avg_story_words)
        assert len(vocab) == whole.story_vocab

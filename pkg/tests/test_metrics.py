import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moralbench.errors import ValidationError
from moralbench.metrics import (
    BatchItem,
    GenerationBatch,
    accuracy,
    avg_length,
    bleu_n,
    coverage,
    distinct_n,
    order_score,
    repetition_n,
)
from moralbench.outline import Outline, Phrase


def batch(pairs):
    return GenerationBatch(
        items=tuple(
            BatchItem(id=f"i{k}", hypothesis=tuple(h), reference=tuple(r))
            for k, (h, r) in enumerate(pairs)
        )
    )


def make_outline(phrase_token_lists, positions):
    phrases = tuple(
        Phrase(tokens=tuple(toks), score=1.0, first_pos=pos)
        for toks, pos in zip(phrase_token_lists, positions)
    )
    order = tuple(sorted(range(len(phrases)), key=lambda i: phrases[i].first_pos))
    return Outline(phrases=phrases, source_id="t", ground_truth_order=order)


class TestBleu:
    def test_identity_is_100(self):
        b = batch([("the cat sat".split(), "the cat sat".split())])
        assert bleu_n(b, 1) == 100.0
        assert bleu_n(b, 2) == 100.0

    def test_disjoint_is_tiny(self):
        b = batch([("a b c".split(), "x y z".split())])
        assert bleu_n(b, 1) < 1e-3

    def test_unigram_hand_count(self):
        # matched unigrams: the, cat -> precision 2/3, equal lengths -> BP 1
        b = batch([("the cat sat".split(), "the cat ran".split())])
        assert bleu_n(b, 1) == pytest.approx(200.0 / 3.0, abs=1e-9)

    def test_brevity_penalty(self):
        b = batch([(["the"], "the cat ran".split())])
        import math

        assert bleu_n(b, 1) == pytest.approx(math.exp(1 - 3) * 100.0, abs=1e-9)

    def test_empty_batch_error(self):
        with pytest.raises(ValidationError):
            bleu_n(GenerationBatch(items=()), 1)

    def test_missing_reference_error(self):
        b = GenerationBatch(items=(BatchItem(id="a", hypothesis=("x",)),))
        with pytest.raises(ValidationError):
            bleu_n(b, 1)

    @given(
        st.lists(
            st.lists(st.sampled_from("abcde"), min_size=2, max_size=8),
            min_size=1,
            max_size=5,
        )
    )
    @settings(max_examples=40, deadline=None)
    def test_identity_and_permutation_invariance(self, texts):
        b = batch([(t, t) for t in texts])
        assert bleu_n(b, 2) == pytest.approx(100.0, abs=1e-9)
        reordered = GenerationBatch(items=tuple(reversed(b.items)))
        assert bleu_n(reordered, 2) == pytest.approx(bleu_n(b, 2), abs=1e-9)


class TestDistinct:
    def test_enumerated_bigrams(self):
        # bigrams of "a b a b": (a,b) (b,a) (a,b) -> 2 distinct / 3 total
        assert distinct_n([["a", "b", "a", "b"]], 2) == pytest.approx(200.0 / 3.0)

    def test_all_unique(self):
        assert distinct_n([["a", "b", "c"]], 2) == 100.0

    def test_short_texts_contribute_nothing(self):
        assert distinct_n([["a"], ["a", "b"]], 2) == 100.0

    def test_no_ngrams_error(self):
        with pytest.raises(ValidationError, match="no n-grams"):
            distinct_n([["a"], ["b"]], 2)

    @given(
        st.lists(st.lists(st.sampled_from("ab"), min_size=2, max_size=6), min_size=1, max_size=4)
    )
    @settings(max_examples=40, deadline=None)
    def test_duplicating_a_text_never_increases(self, texts):
        base = distinct_n(texts, 2)
        assert distinct_n(texts + [texts[0]], 2) <= base + 1e-12
        assert 0.0 < base <= 100.0


class TestRepetition:
    def test_half_repeat(self):
        assert repetition_n([["a", "b", "a", "b"], ["a", "b", "c"]], 2) == 50.0

    def test_all_distinct_is_zero(self):
        assert repetition_n([["a", "b", "c"], ["d", "e"]], 2) == 0.0

    def test_single_repeating_fourgram(self):
        text = ["x", "y", "z", "w", "q", "x", "y", "z", "w"]
        assert repetition_n([text], 4) == 100.0

    def test_short_text_counts_as_non_repeating(self):
        assert repetition_n([["a"]], 2) == 0.0

    def test_empty_list_error(self):
        with pytest.raises(ValidationError):
            repetition_n([], 2)


class TestCoverage:
    def test_verbatim_is_100(self):
        outline = make_outline([["perfect", "opportunity"], ["good", "friends"]], [0, 5])
        story = "perfect opportunity for all good friends".split()
        assert coverage(story, outline) == 100.0

    def test_half_recall(self):
        outline = make_outline([["perfect", "opportunity"]], [0])
        story = "an opportunity appeared".split()
        assert coverage(story, outline) == 50.0

    def test_zero_overlap(self):
        outline = make_outline([["perfect", "opportunity"]], [0])
        assert coverage(["x", "y"], outline) == 0.0

    def test_empty_outline_error(self):
        outline = Outline(phrases=(), source_id="t", ground_truth_order=())
        with pytest.raises(ValidationError):
            coverage(["x"], outline)


class TestOrder:
    def test_truth_order_is_100(self):
        outline = make_outline([["a", "b"], ["c", "d"], ["e", "f"]], [0, 2, 4])
        story = "a b c d e f".split()
        assert order_score(story, outline) == 100.0

    def test_one_swapped_pair(self):
        # located positions: A@0, C@2, B@4 -> one inversion among 3 pairs
        outline = make_outline([["a", "b"], ["c", "d"], ["e", "f"]], [0, 2, 4])
        story = "a b e f c d".split()
        assert order_score(story, outline) == pytest.approx(200.0 / 3.0)

    def test_fully_reversed_is_zero(self):
        outline = make_outline([["a", "b"], ["c", "d"], ["e", "f"]], [0, 2, 4])
        story = "e f c d a b".split()
        assert order_score(story, outline) == 0.0

    def test_unlocated_phrases_excluded(self):
        outline = make_outline([["a"], ["zz"], ["b"]], [0, 1, 2])
        story = ["b", "a"]
        # only a and b located, reversed -> 0
        assert order_score(story, outline) == 0.0

    def test_fewer_than_two_located_flagged_zero(self):
        outline = make_outline([["q"], ["zz"]], [0, 1])
        assert order_score(["q"], outline) == 0.0

    def test_needs_two_phrases(self):
        outline = make_outline([["a"]], [0])
        with pytest.raises(ValidationError):
            order_score(["a"], outline)

    def test_depends_only_on_positions(self):
        # relabeling phrases leaves the score unchanged
        story = "a b x c d x e f".split()
        o1 = make_outline([["a", "b"], ["c", "d"], ["e", "f"]], [0, 3, 6])
        o2 = make_outline([["e", "f"], ["a", "b"], ["c", "d"]], [6, 0, 3])
        assert order_score(story, o1) == order_score(story, o2)


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy({"a": 1, "b": 0}, {"a": 1, "b": 0}) == 100.0

    def test_missing_counts_wrong(self):
        assert accuracy({"a": 1}, {"a": 1, "b": 0}) == 50.0

    def test_unknown_prediction_id_error(self):
        with pytest.raises(ValidationError):
            accuracy({"zz": 0}, {"a": 1})

    def test_empty_gold_error(self):
        with pytest.raises(ValidationError):
            accuracy({}, {})


class TestAvgLength:
    def test_mean(self):
        assert avg_length([["a"] * 3, ["b"] * 5]) == 4.0

    def test_singleton(self):
        assert avg_length([["x"] * 7]) == 7.0

    def test_all_empty(self):
        assert avg_length([[], []]) == 0.0

    def test_empty_list_error(self):
        with pytest.raises(ValidationError):
            avg_length([])

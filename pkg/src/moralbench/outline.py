"""RAKE keyword extraction and story-outline construction.

An outline is a capped set of stopword-delimited phrases scored by the
degree/frequency word metric, with substring phrases filtered out and
first-occurrence positions recorded for downstream ordering metrics.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus import StoryMoralPair
from .errors import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_MAX_PHRASES = 8
DEFAULT_MAX_WORDS = 8


@dataclass(frozen=True)
class Phrase:
    tokens: tuple[str, ...]
    score: float
    first_pos: int | None = None


@dataclass(frozen=True)
class Outline:
    """Phrases in selection order (descending score) plus the permutation
    of phrase indices sorted by first occurrence in the source story."""

    phrases: tuple[Phrase, ...]
    source_id: str
    ground_truth_order: tuple[int, ...]

    def phrase_texts(self) -> list[str]:
        return [" ".join(p.tokens) for p in self.phrases]

    def __len__(self) -> int:
        return len(self.phrases)


def _candidate_runs(
    tokens: list[str] | tuple[str, ...],
    stopwords: frozenset[str] | set[str],
    max_phrase_len: int,
) -> list[tuple[int, tuple[str, ...]]]:
    """Maximal non-stopword runs, split greedily to max_phrase_len."""
    runs: list[tuple[int, tuple[str, ...]]] = []
    start = None
    for i, tok in enumerate(list(tokens) + [None]):  # sentinel flush
        if tok is not None and tok not in stopwords:
            if start is None:
                start = i
            continue
        if start is not None:
            for chunk_start in range(start, i, max_phrase_len):
                chunk = tuple(tokens[chunk_start : min(chunk_start + max_phrase_len, i)])
                runs.append((chunk_start, chunk))
            start = None
    return runs


def rake_extract(
    tokens: list[str] | tuple[str, ...],
    stopwords: frozenset[str] | set[str],
    max_phrase_len: int = DEFAULT_MAX_WORDS,
) -> list[Phrase]:
    """Extract candidate phrases scored by the degree/frequency word metric.

    degree(w) sums the lengths of all candidate instances containing w,
    frequency(w) counts occurrences of w across candidates, and a phrase
    scores the sum of its word scores. Output is deduplicated by token
    sequence (first occurrence kept) and sorted by descending score, ties
    broken by earlier first position.
    """
    if max_phrase_len < 1:
        raise ValidationError("max_phrase_len must be >= 1")
    candidates = _candidate_runs(tokens, stopwords, max_phrase_len)
    if not candidates:
        return []

    degree: dict[str, float] = {}
    freq: dict[str, int] = {}
    for _, chunk in candidates:
        length = len(chunk)
        for word in chunk:
            degree[word] = degree.get(word, 0.0) + length
            freq[word] = freq.get(word, 0) + 1
    word_score = {w: degree[w] / freq[w] for w in degree}

    seen: dict[tuple[str, ...], Phrase] = {}
    for pos, chunk in candidates:
        if chunk not in seen:
            seen[chunk] = Phrase(
                tokens=chunk,
                score=sum(word_score[w] for w in chunk),
                first_pos=pos,
            )
    phrases = sorted(seen.values(), key=lambda p: (-p.score, p.first_pos))
    return phrases


def _is_contiguous_subseq(needle: tuple[str, ...], haystack: tuple[str, ...]) -> bool:
    n, m = len(needle), len(haystack)
    if n > m:
        return False
    return any(haystack[i : i + n] == needle for i in range(m - n + 1))


def build_outline(
    pair: StoryMoralPair,
    max_phrases: int = DEFAULT_MAX_PHRASES,
    max_words: int = DEFAULT_MAX_WORDS,
    stopwords: frozenset[str] | set[str] = frozenset(),
) -> Outline:
    """Build the outline of a story: RAKE phrases, substring-filtered and capped.

    When two phrases overlap as contiguous subsequences the longer one is
    kept. Stories yielding no candidates produce an empty outline.
    """
    if max_phrases < 1 or max_words < 1:
        raise ValidationError("max_phrases and max_words must be >= 1")
    extracted = rake_extract(pair.story_tokens, stopwords, max_words)

    kept: list[Phrase] = []
    for phrase in sorted(extracted, key=lambda p: (-len(p.tokens), -p.score, p.first_pos)):
        if not any(_is_contiguous_subseq(phrase.tokens, other.tokens) for other in kept):
            kept.append(phrase)

    selected = sorted(kept, key=lambda p: (-p.score, p.first_pos))[:max_phrases]
    if not selected:
        logger.warning("story %s produced an empty outline", pair.id)
    order = tuple(
        sorted(range(len(selected)), key=lambda i: (selected[i].first_pos, i))
    )
    return Outline(phrases=tuple(selected), source_id=pair.id, ground_truth_order=order)


def first_sentence(pair: StoryMoralPair) -> str:
    """The first sentence of the story."""
    if not pair.story_sentences:
        raise ValidationError(f'story "{pair.id}" has no sentences')
    return pair.story_sentences[0]

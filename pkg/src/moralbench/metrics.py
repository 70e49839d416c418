"""Automatic evaluation metrics for the understanding and generation tasks.

All metrics are reported on a 0..100 scale except avg_length.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import ValidationError
from .outline import Outline

_BLEU_EPS = 1e-9

TokenSeq = list[str] | tuple[str, ...]


@dataclass(frozen=True)
class BatchItem:
    id: str
    hypothesis: tuple[str, ...]
    reference: tuple[str, ...] | None = None
    outline: Outline | None = None


@dataclass(frozen=True)
class GenerationBatch:
    items: tuple[BatchItem, ...]

    def __post_init__(self):
        ids = [item.id for item in self.items]
        if len(set(ids)) != len(ids):
            raise ValidationError("batch ids must be unique")


@dataclass
class MetricReport:
    values: dict[str, float]
    settings: dict = field(default_factory=dict)
    n_items: int = 0

    def to_dict(self) -> dict:
        return {
            "values": {k: float(v) for k, v in self.values.items()},
            "settings": self.settings,
            "n_items": self.n_items,
        }


def _ngrams(tokens: TokenSeq, n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu_n(batch: GenerationBatch, n: int) -> float:
    """Corpus-level BLEU-n with epsilon smoothing on zero counts, x100."""
    if not batch.items:
        raise ValidationError("empty hypothesis set")
    if n < 1:
        raise ValidationError("n must be >= 1")
    for item in batch.items:
        if item.reference is None:
            raise ValidationError(f'item "{item.id}" has no reference')
    hyp_len = sum(len(item.hypothesis) for item in batch.items)
    ref_len = sum(len(item.reference) for item in batch.items)
    log_precision_sum = 0.0
    for order in range(1, n + 1):
        matched = 0
        total = 0
        for item in batch.items:
            hyp_counts = Counter(_ngrams(item.hypothesis, order))
            ref_counts = Counter(_ngrams(item.reference, order))
            matched += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
            total += sum(hyp_counts.values())
        precision = matched / total if total and matched else _BLEU_EPS
        log_precision_sum += math.log(precision)
    if hyp_len == 0:
        return 0.0
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(log_precision_sum / n) * 100.0


def distinct_n(texts: list[TokenSeq], n: int) -> float:
    """Distinct n-grams over all n-grams, pooled corpus-wide, x100."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    seen: set[tuple[str, ...]] = set()
    total = 0
    for text in texts:
        grams = _ngrams(text, n)
        seen.update(grams)
        total += len(grams)
    if total == 0:
        raise ValidationError("no n-grams")
    return len(seen) / total * 100.0


def repetition_n(texts: list[TokenSeq], n: int) -> float:
    """Share of texts repeating at least one of their own n-grams, x100."""
    if not texts:
        raise ValidationError("empty text list")
    if n < 1:
        raise ValidationError("n must be >= 1")
    repeating = 0
    for text in texts:
        counts = Counter(_ngrams(text, n))
        if counts and max(counts.values()) >= 2:
            repeating += 1
    return repeating / len(texts) * 100.0


def _lcs_length(a: TokenSeq, b: TokenSeq) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b, 1):
            if token_a == token_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def coverage(story: TokenSeq, outline: Outline) -> float:
    """Mean LCS recall of outline phrases against the story, x100."""
    if not outline.phrases:
        raise ValidationError("empty outline")
    story = list(story)
    total = 0.0
    for phrase in outline.phrases:
        total += _lcs_length(phrase.tokens, story) / len(phrase.tokens)
    return total / len(outline.phrases) * 100.0


def _locate_phrase(phrase: tuple[str, ...], story: list[str]) -> tuple[int, int]:
    """Best (lcs, offset) over windows of the phrase's length; earliest tie wins."""
    length = len(phrase)
    best_lcs = 0
    best_offset = 0
    for offset in range(max(1, len(story) - length + 1)):
        window = story[offset : offset + length]
        lcs = _lcs_length(phrase, window)
        if lcs > best_lcs:
            best_lcs = lcs
            best_offset = offset
            if lcs == length:
                break
    return best_lcs, best_offset


def order_score(story: TokenSeq, outline: Outline) -> float:
    """Non-inverted fraction of located phrase pairs vs. ground-truth order, x100.

    Phrases with zero LCS against the story are excluded from pairing; with
    fewer than two located phrases the score is 0.
    """
    if len(outline.phrases) < 2:
        raise ValidationError("order_score needs an outline with at least 2 phrases")
    if len(outline.ground_truth_order) != len(outline.phrases):
        raise ValidationError("outline has no valid ground-truth order")
    story = list(story)
    rank = {phrase_idx: r for r, phrase_idx in enumerate(outline.ground_truth_order)}
    located: list[tuple[int, int]] = []  # (rank, offset)
    for idx, phrase in enumerate(outline.phrases):
        lcs, offset = _locate_phrase(phrase.tokens, story)
        if lcs > 0:
            located.append((rank[idx], offset))
    if len(located) < 2:
        return 0.0
    inversions = 0
    pairs = 0
    for i in range(len(located)):
        for j in range(i + 1, len(located)):
            (rank_a, pos_a), (rank_b, pos_b) = located[i], located[j]
            pairs += 1
            if (rank_a - rank_b) * (pos_a - pos_b) < 0:
                inversions += 1
    return (1.0 - inversions / pairs) * 100.0


def accuracy(predictions: dict[str, int], gold: dict[str, int]) -> float:
    """Percentage of gold ids predicted correctly; missing predictions count wrong."""
    if not gold:
        raise ValidationError("empty gold labels")
    unknown = sorted(set(predictions) - set(gold))
    if unknown:
        raise ValidationError(f"predictions for unknown ids: {', '.join(unknown)}")
    correct = sum(1 for id_, label in gold.items() if predictions.get(id_) == label)
    return correct / len(gold) * 100.0


def avg_length(texts: list[TokenSeq]) -> float:
    """Mean token count."""
    if not texts:
        raise ValidationError("empty text list")
    return sum(len(t) for t in texts) / len(texts)

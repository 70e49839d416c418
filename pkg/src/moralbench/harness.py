"""Non-neural candidate scorers and end-to-end evaluation runners.

The candidate scorer embeds the story (optionally extended with retrieved
concepts) and every candidate independently, takes dot products, and
normalizes them with a softmax.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .corpus import tokenize
from .errors import ValidationError
from .metrics import (
    BatchItem,
    GenerationBatch,
    MetricReport,
    accuracy,
    avg_length,
    bleu_n,
    coverage,
    distinct_n,
    order_score,
    repetition_n,
)
from .retrieval import (
    EmbeddingProvider,
    RetrievalResources,
    StoryIndex,
    extract_concepts,
    retrieve,
)
from .taskgen import Mo2StRecord, MoCptRecord, MoPrefRecord, St2MoRecord

CONCEPT_SEPARATOR = "<concepts>"

GENERATION_TASK_NGRAMS = {"st2mo": 2, "mo2st": 4}


@dataclass
class CandidateScorer:
    """Dot-product scorer over candidate embeddings, softmax-normalized."""

    provider: EmbeddingProvider
    use_retrieval: bool = False
    m: int = 10
    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValidationError("temperature must be > 0")
        if self.use_retrieval and self.m < 1:
            raise ValidationError("m must be >= 1 when retrieval is enabled")


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    weights = np.exp(shifted)
    return weights / weights.sum()


def _retrieved_concepts(
    scorer: CandidateScorer,
    story_tokens: list[str] | tuple[str, ...],
    index: StoryIndex,
    resources: RetrievalResources,
    story_id: str | None,
) -> tuple[str, ...]:
    query = scorer.provider.embed(story_tokens)
    exclude = story_id if story_id is not None and story_id in index.ids else None
    hits = retrieve(index, query, m=scorer.m, exclude_id=exclude)
    morals = []
    for hit_id, _ in hits:
        tokens = resources.morals_by_id.get(hit_id)
        if tokens is None:
            raise ValidationError(f'no moral known for retrieved id "{hit_id}"')
        morals.append((hit_id, tokens))
    concepts = extract_concepts(
        morals, resources.pos_lexicon, resources.lemmatizer, resources.stopwords
    )
    return concepts.concepts


def score_candidates(
    scorer: CandidateScorer,
    story_tokens: list[str] | tuple[str, ...],
    candidates: list[list[str]] | list[tuple[str, ...]],
    index: StoryIndex | None = None,
    resources: RetrievalResources | None = None,
    story_id: str | None = None,
) -> np.ndarray:
    """Probability distribution over the candidates given the story."""
    if len(candidates) < 2:
        raise ValidationError("need at least 2 candidates")
    if scorer.use_retrieval:
        if index is None or resources is None:
            raise ValidationError("retrieval scoring needs an index and resources")
        concepts = _retrieved_concepts(scorer, story_tokens, index, resources, story_id)
        story_input = list(story_tokens) + [CONCEPT_SEPARATOR] + list(concepts)
    else:
        story_input = list(story_tokens)
    story_vec = scorer.provider.embed(story_input)
    scores = np.array(
        [float(story_vec @ scorer.provider.embed(candidate)) for candidate in candidates]
    )
    return _softmax(scores / scorer.temperature)


def random_chooser(n_candidates: int, seed: int | str) -> int:
    """Uniform seeded choice of a candidate index."""
    if n_candidates < 1:
        raise ValidationError("n_candidates must be >= 1")
    return random.Random(seed).randrange(n_candidates)


class RandomBaseline:
    """Uniform random candidate choice from a single seeded stream."""

    def __init__(self, seed: int):
        self._rng = random.Random(seed)

    def choose_index(self, n_candidates: int) -> int:
        if n_candidates < 1:
            raise ValidationError("n_candidates must be >= 1")
        return self._rng.randrange(n_candidates)


def evaluate_understanding(
    dataset: list[MoCptRecord] | list[MoPrefRecord],
    chooser,
    index: StoryIndex | None = None,
    resources: RetrievalResources | None = None,
) -> MetricReport:
    """Accuracy of a chooser over a choice dataset, with per-record decisions.

    The chooser is a CandidateScorer, a RandomBaseline, or any callable
    mapping a record to a candidate index.
    """
    if not dataset:
        raise ValidationError("empty dataset")
    predictions: dict[str, int] = {}
    gold: dict[str, int] = {}
    decisions = []
    for record in dataset:
        if isinstance(chooser, CandidateScorer):
            probs = score_candidates(
                chooser,
                tokenize(record.story),
                [tokenize(c) for c in record.candidates],
                index=index,
                resources=resources,
                story_id=record.id,
            )
            prediction = int(np.argmax(probs))
        elif isinstance(chooser, RandomBaseline):
            prediction = chooser.choose_index(len(record.candidates))
        elif callable(chooser):
            prediction = int(chooser(record))
        else:
            raise ValidationError(f"unsupported chooser type {type(chooser).__name__}")
        predictions[record.id] = prediction
        gold[record.id] = record.label
        decisions.append({"id": record.id, "prediction": prediction, "label": record.label})
    report = MetricReport(
        values={"accuracy": accuracy(predictions, gold)},
        settings={"n_candidates": len(dataset[0].candidates)},
        n_items=len(dataset),
    )
    report.settings["decisions"] = decisions
    return report


def _hypothesis_map(hypotheses: list[dict]) -> dict[str, list[str]]:
    mapping: dict[str, list[str]] = {}
    for i, row in enumerate(hypotheses, 1):
        if "id" not in row or "text" not in row:
            raise ValidationError(f'hypothesis {i}: missing "id" or "text"')
        if row["id"] in mapping:
            raise ValidationError(f'duplicate hypothesis id "{row["id"]}"')
        mapping[row["id"]] = tokenize(row["text"])
    return mapping


def evaluate_generation(
    task: str,
    hypotheses: list[dict],
    dataset: list[St2MoRecord] | list[Mo2StRecord],
    repetition_order: int | None = None,
    distinct_order: int | None = None,
) -> MetricReport:
    """Metric bundle for a generation task.

    st2mo reports BLEU-1/2, Repetition-2, Distinct-2, and Len; mo2st adds
    Coverage and Order and uses 4-grams for repetition/diversity.
    Hypotheses are {"id", "text"} rows and must cover the dataset ids.
    """
    if task not in GENERATION_TASK_NGRAMS:
        raise ValidationError(f'unknown generation task "{task}"')
    if not dataset:
        raise ValidationError("empty dataset")
    order_n = GENERATION_TASK_NGRAMS[task]
    rep_n = repetition_order if repetition_order is not None else order_n
    dist_n = distinct_order if distinct_order is not None else order_n

    hyp_map = _hypothesis_map(hypotheses)
    missing = [record.id for record in dataset if record.id not in hyp_map]
    if missing:
        raise ValidationError(f"missing hypotheses for ids: {', '.join(sorted(missing))}")

    items = []
    for record in dataset:
        reference = record.moral if task == "st2mo" else record.target_story
        items.append(
            BatchItem(
                id=record.id,
                hypothesis=tuple(hyp_map[record.id]),
                reference=tuple(tokenize(reference)),
                outline=record.outline if task == "mo2st" else None,
            )
        )
    batch = GenerationBatch(items=tuple(items))
    texts = [list(item.hypothesis) for item in items]

    values = {
        "bleu_1": bleu_n(batch, 1),
        "bleu_2": bleu_n(batch, 2),
        f"repetition_{rep_n}": repetition_n(texts, rep_n),
        f"distinct_{dist_n}": distinct_n(texts, dist_n),
        "length": avg_length(texts),
    }
    settings: dict = {"task": task, "repetition_n": rep_n, "distinct_n": dist_n}
    if task == "mo2st":
        coverages = []
        orders = []
        skipped = 0
        for item in items:
            if item.outline is None or len(item.outline.phrases) == 0:
                skipped += 1
                continue
            coverages.append(coverage(item.hypothesis, item.outline))
            if len(item.outline.phrases) >= 2:
                orders.append(order_score(item.hypothesis, item.outline))
        if not coverages:
            raise ValidationError("no items with a non-empty outline")
        values["coverage"] = sum(coverages) / len(coverages)
        values["order"] = sum(orders) / len(orders) if orders else 0.0
        settings["items_without_outline"] = skipped
        settings["items_scored_for_order"] = len(orders)
    return MetricReport(values=values, settings=settings, n_items=len(dataset))

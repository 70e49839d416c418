"""Construction of the four task datasets and the faithfulness-classifier data.

All builders are deterministic given (split, resources, seed); per-record
randomness is drawn from an RNG stream keyed by (seed, record id) so
records are reproducible independently of processing order.
"""

from __future__ import annotations

import json
import logging
import random
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .corpus import StoryMoralPair, _is_cjk, _lower
from .errors import UnassignableDocumentError, ValidationError
from .outline import Outline, Phrase, build_outline, first_sentence
from .topics import TopicModel, assign_topic

logger = logging.getLogger(__name__)

DEFAULT_N_NEGATIVES = 4

TASK_NAMES = ("mocpt", "mopref", "st2mo", "mo2st", "faith")


@dataclass(frozen=True)
class MoCptRecord:
    id: str
    story: str
    candidates: tuple[str, ...]
    label: int
    neg_topic_ids: tuple[int, ...] | None = None


@dataclass(frozen=True)
class MoPrefRecord:
    id: str
    story: str
    candidates: tuple[str, str]
    label: int
    flipped_token_pos: int | None = None
    antonym_used: tuple[str, str] | None = None


@dataclass(frozen=True)
class St2MoRecord:
    id: str
    story: str
    moral: str


@dataclass(frozen=True)
class Mo2StRecord:
    id: str
    moral: str
    first_sentence: str
    outline: Outline
    target_story: str


@dataclass(frozen=True)
class FaithPairRecord:
    id: str
    story: str
    moral: str
    label: str  # "matched" | "mismatched"
    corruption: str  # "none" | "story_replaced" | "moral_replaced"
    story_source_id: str | None = None
    moral_source_id: str | None = None


def _record_rng(seed: int, record_id: str) -> random.Random:
    return random.Random(f"{seed}:{record_id}")


def build_mocpt(
    split: list[StoryMoralPair],
    negatives_pool: list[StoryMoralPair],
    model: TopicModel,
    n_neg: int = DEFAULT_N_NEGATIVES,
    seed: int = 0,
) -> list[MoCptRecord]:
    """One record per pair: the gold moral plus n_neg topic-disjoint negatives.

    Examples whose moral cannot be assigned a topic, or with fewer than
    n_neg eligible negatives, are skipped with a logged reason.
    """
    if n_neg < 1:
        raise ValidationError("n_neg must be >= 1")
    topic_of: dict[str, int | None] = {}
    for pair in negatives_pool + split:
        if pair.id in topic_of:
            continue
        try:
            topic_of[pair.id] = assign_topic(model, pair.moral_tokens)
        except UnassignableDocumentError:
            topic_of[pair.id] = None

    by_topic: dict[int, list[StoryMoralPair]] = {}
    for pair in negatives_pool:
        topic = topic_of[pair.id]
        if topic is not None:
            by_topic.setdefault(topic, []).append(pair)

    records: list[MoCptRecord] = []
    for pair in split:
        gold_topic = topic_of[pair.id]
        if gold_topic is None:
            logger.warning("skipping %s: gold moral is unassignable", pair.id)
            continue
        eligible = [
            candidate
            for topic, members in sorted(by_topic.items())
            if topic != gold_topic
            for candidate in members
            if candidate.id != pair.id
        ]
        if len(eligible) < n_neg:
            logger.warning(
                "skipping %s: insufficient topic-disjoint negatives (%d < %d)",
                pair.id,
                len(eligible),
                n_neg,
            )
            continue
        rng = _record_rng(seed, pair.id)
        negatives = rng.sample(eligible, n_neg)
        candidates = [pair.moral] + [neg.moral for neg in negatives]
        slots = list(range(len(candidates)))
        rng.shuffle(slots)
        shuffled = [candidates[i] for i in slots]
        records.append(
            MoCptRecord(
                id=pair.id,
                story=pair.story,
                candidates=tuple(shuffled),
                label=slots.index(0),
                neg_topic_ids=tuple(topic_of[neg.id] for neg in negatives),
            )
        )
    return records


def _tokenize_with_spans(text: str) -> list[tuple[str, int, int]]:
    """Tokens with their (start, end) character spans in the NFC text."""
    text = unicodedata.normalize("NFC", text)
    spans: list[tuple[str, int, int]] = []
    run_start = None
    for i, ch in enumerate(text):
        if _is_cjk(ch):
            if run_start is not None:
                spans.append((text[run_start:i], run_start, i))
                run_start = None
            spans.append((ch, i, i + 1))
        elif ch.isalnum():
            if run_start is None:
                run_start = i
        elif run_start is not None:
            spans.append((text[run_start:i], run_start, i))
            run_start = None
    if run_start is not None:
        spans.append((text[run_start:], run_start, len(text)))
    return [("".join(_lower(c) for c in surface), s, e) for surface, s, e in spans]


def _match_case(surface: str, replacement: str) -> str:
    if surface.isupper() and len(surface) > 1:
        return replacement.upper()
    if surface[:1].isupper():
        return replacement[:1].upper() + replacement[1:]
    return replacement


def build_mopref(
    split: list[StoryMoralPair],
    antonyms: dict[str, tuple[str, ...]],
    seed: int = 0,
) -> list[MoPrefRecord]:
    """One record per pair whose moral has a token with a lexicon antonym.

    The negative candidate is the moral with one token (picked uniformly
    among eligible positions) spliced to its antonym in the surface text;
    examples with no eligible token are dropped.
    """
    if not antonyms:
        raise ValidationError("empty antonym lexicon")
    records: list[MoPrefRecord] = []
    for pair in split:
        moral = unicodedata.normalize("NFC", pair.moral)
        spans = _tokenize_with_spans(moral)
        eligible = [i for i, (token, _, _) in enumerate(spans) if token in antonyms]
        if not eligible:
            logger.info("dropping %s: no token has an antonym", pair.id)
            continue
        rng = _record_rng(seed, pair.id)
        position = rng.choice(eligible)
        token, start, end = spans[position]
        alternatives = antonyms[token]
        antonym = alternatives[0] if len(alternatives) == 1 else rng.choice(alternatives)
        negative = moral[:start] + _match_case(moral[start:end], antonym) + moral[end:]
        candidates = [moral, negative]
        slots = [0, 1]
        rng.shuffle(slots)
        records.append(
            MoPrefRecord(
                id=pair.id,
                story=pair.story,
                candidates=(candidates[slots[0]], candidates[slots[1]]),
                label=slots.index(0),
                flipped_token_pos=position,
                antonym_used=(token, antonym),
            )
        )
    return records


def build_st2mo(split: list[StoryMoralPair]) -> list[St2MoRecord]:
    """Identity projection: story in, moral out, order preserved."""
    return [St2MoRecord(id=pair.id, story=pair.story, moral=pair.moral) for pair in split]


def build_mo2st(
    split: list[StoryMoralPair],
    stopwords: frozenset[str] | set[str],
    max_phrases: int = 8,
    max_words: int = 8,
) -> list[Mo2StRecord]:
    """Moral plus first sentence plus outline, target story retained."""
    records = []
    for pair in split:
        outline = build_outline(
            pair, max_phrases=max_phrases, max_words=max_words, stopwords=stopwords
        )
        records.append(
            Mo2StRecord(
                id=pair.id,
                moral=pair.moral,
                first_sentence=first_sentence(pair),
                outline=outline,
                target_story=pair.story,
            )
        )
    return records


def build_faithfulness_data(
    split: list[StoryMoralPair],
    neg_ratio: float = 1.0,
    seed: int = 0,
) -> list[FaithPairRecord]:
    """Gold pairs as matched records plus floor(neg_ratio * N) mismatched ones.

    Each mismatched record replaces either the story or the moral
    (seeded coin flip) with one drawn from a different example.
    """
    if neg_ratio < 0:
        raise ValidationError("neg_ratio must be >= 0")
    n = len(split)
    if n == 0:
        raise ValidationError("empty split")
    n_neg = int(neg_ratio * n)
    if n_neg > 0 and n < 2:
        raise ValidationError("cannot build mismatched pairs from a single example")
    records = [
        FaithPairRecord(
            id=pair.id,
            story=pair.story,
            moral=pair.moral,
            label="matched",
            corruption="none",
            story_source_id=pair.id,
            moral_source_id=pair.id,
        )
        for pair in split
    ]
    for j in range(n_neg):
        base = split[j % n]
        rng = _record_rng(seed, f"faith:{j}:{base.id}")
        donor_idx = rng.randrange(n)
        while split[donor_idx].id == base.id:
            donor_idx = rng.randrange(n)
        donor = split[donor_idx]
        replace_story = rng.random() < 0.5
        records.append(
            FaithPairRecord(
                id=f"{base.id}#mm{j}",
                story=donor.story if replace_story else base.story,
                moral=base.moral if replace_story else donor.moral,
                label="mismatched",
                corruption="story_replaced" if replace_story else "moral_replaced",
                story_source_id=donor.id if replace_story else base.id,
                moral_source_id=base.id if replace_story else donor.id,
            )
        )
    return records


# --- JSONL serialization -------------------------------------------------

def _record_to_json(record) -> dict:
    if isinstance(record, MoCptRecord) or isinstance(record, MoPrefRecord):
        return {
            "id": record.id,
            "story": record.story,
            "candidates": list(record.candidates),
            "label": record.label,
        }
    if isinstance(record, St2MoRecord):
        return {"id": record.id, "story": record.story, "moral": record.moral}
    if isinstance(record, Mo2StRecord):
        return {
            "id": record.id,
            "moral": record.moral,
            "first_sentence": record.first_sentence,
            "outline": record.outline.phrase_texts(),
            "outline_positions": [p.first_pos for p in record.outline.phrases],
            "target_story": record.target_story,
        }
    if isinstance(record, FaithPairRecord):
        return {
            "id": record.id,
            "story": record.story,
            "moral": record.moral,
            "label": record.label,
        }
    raise ValidationError(f"unknown record type {type(record).__name__}")


def save_records(records: list, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(_record_to_json(record), ensure_ascii=False) + "\n")


def _load_jsonl(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"dataset file not found: {path}")
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as err:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({err.msg})") from err
    return rows


def _require(row: dict, keys: tuple[str, ...], where: str) -> None:
    for key in keys:
        if key not in row:
            raise ValidationError(f'{where}: missing field "{key}"')


def load_choice_records(path: str | Path, task: str) -> list[MoCptRecord] | list[MoPrefRecord]:
    if task not in ("mocpt", "mopref"):
        raise ValidationError(f'not a choice task: "{task}"')
    expected = 5 if task == "mocpt" else 2
    cls = MoCptRecord if task == "mocpt" else MoPrefRecord
    records = []
    for i, row in enumerate(_load_jsonl(path), 1):
        _require(row, ("id", "story", "candidates", "label"), f"record {i}")
        candidates = row["candidates"]
        if len(candidates) != expected:
            raise ValidationError(
                f"record {i}: expected {expected} candidates, got {len(candidates)}"
            )
        if not 0 <= row["label"] < expected:
            raise ValidationError(f"record {i}: label out of range")
        records.append(
            cls(
                id=row["id"],
                story=row["story"],
                candidates=tuple(candidates),
                label=int(row["label"]),
            )
        )
    return records


def load_st2mo_records(path: str | Path) -> list[St2MoRecord]:
    records = []
    for i, row in enumerate(_load_jsonl(path), 1):
        _require(row, ("id", "story", "moral"), f"record {i}")
        records.append(St2MoRecord(id=row["id"], story=row["story"], moral=row["moral"]))
    return records


def load_mo2st_records(path: str | Path) -> list[Mo2StRecord]:
    records = []
    for i, row in enumerate(_load_jsonl(path), 1):
        _require(
            row,
            ("id", "moral", "first_sentence", "outline", "outline_positions", "target_story"),
            f"record {i}",
        )
        if len(row["outline"]) != len(row["outline_positions"]):
            raise ValidationError(f"record {i}: outline/positions length mismatch")
        phrases = tuple(
            Phrase(tokens=tuple(text.split()), score=0.0, first_pos=pos)
            for text, pos in zip(row["outline"], row["outline_positions"])
        )
        order = tuple(sorted(range(len(phrases)), key=lambda j: (phrases[j].first_pos, j)))
        records.append(
            Mo2StRecord(
                id=row["id"],
                moral=row["moral"],
                first_sentence=row["first_sentence"],
                outline=Outline(phrases=phrases, source_id=row["id"], ground_truth_order=order),
                target_story=row["target_story"],
            )
        )
    return records


def load_faith_records(path: str | Path) -> list[FaithPairRecord]:
    records = []
    for i, row in enumerate(_load_jsonl(path), 1):
        _require(row, ("id", "story", "moral", "label"), f"record {i}")
        if row["label"] not in ("matched", "mismatched"):
            raise ValidationError(f'record {i}: label must be "matched" or "mismatched"')
        records.append(
            FaithPairRecord(
                id=row["id"],
                story=row["story"],
                moral=row["moral"],
                label=row["label"],
                corruption="none" if row["label"] == "matched" else "unknown",
            )
        )
    return records

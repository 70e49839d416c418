"""Deterministic synthetic story-moral corpora for desk-scale runs.

Stories are built from per-group word banks that are mutually disjoint, so
corpora have clean topic structure: morals reuse several content words of
their story, every story carries a unique marker token, and each group has
a virtue word with a lexicon antonym.
"""

from __future__ import annotations

import random

from .corpus import Corpus, make_pair
from .errors import ValidationError
from .taskgen import MoCptRecord, MoPrefRecord

VIRTUES = ("strength", "honesty", "patience", "caution")

WORD_BANKS = (
    (
        "unity", "friends", "clan", "herd", "village", "bond", "trust",
        "gather", "protect", "goal", "loyal", "ally", "harmony", "cooperate",
        "defend", "flock", "join", "circle", "neighbor", "shepherd", "meadow",
        "cattle", "bridge", "rope",
    ),
    (
        "truth", "honest", "liar", "deceit", "trick", "cheat", "promise",
        "oath", "confess", "sincere", "fraud", "disguise", "swear", "witness",
        "pledge", "merchant", "coin", "scale", "market", "judge", "mask",
        "rumor", "ledger", "vow",
    ),
    (
        "wait", "calm", "steady", "seed", "harvest", "grow", "season",
        "ripen", "endure", "persist", "effort", "labor", "toil", "reward",
        "crop", "field", "plant", "root", "bloom", "practice", "diligent",
        "orchard", "farmer", "rain",
    ),
    (
        "danger", "risk", "safety", "warn", "cliff", "storm", "shelter",
        "prepare", "plan", "guard", "lock", "wolf", "trap", "path", "torch",
        "map", "signal", "scout", "lantern", "watchtower", "river",
        "crossing", "fence", "beware",
    ),
)

_ZIPF_CACHE: dict[int, list[float]] = {}


def _zipf_weights(n: int) -> list[float]:
    if n not in _ZIPF_CACHE:
        _ZIPF_CACHE[n] = [1.0 / (rank + 1) for rank in range(n)]
    return _ZIPF_CACHE[n]


def _sample_distinct(rng: random.Random, bank: tuple[str, ...], count: int) -> list[str]:
    weights = _zipf_weights(len(bank))
    chosen: list[str] = []
    seen: set[str] = set()
    while len(chosen) < count:
        word = rng.choices(bank, weights=weights, k=1)[0]
        if word not in seen:
            seen.add(word)
            chosen.append(word)
    return chosen


def _story_text(words: list[str], virtue: str, marker: str) -> str:
    w = words
    return (
        f"Long ago a {w[0]} stayed near the old {w[1]}. "
        f"The {w[2]} and the {w[3]} kept close to the {w[4]}. "
        f"One day the {w[5]} tried to {w[6]} the {w[2]}. "
        f"Their {w[7]} gave them {virtue} when the {w[8]} returned. "
        f"At last the {w[0]} learned that {w[9]} and {w[2]} matter most. "
        f"People still tell of {marker} at dusk."
    )


def _moral_text(rng: random.Random, words: list[str], virtue: str, content_only: bool) -> str:
    m1, m2, m3 = rng.sample(words[:10], 3)
    if content_only:
        return f"{m1} {m2} {virtue} {m3}."
    return f"Remember that {m1} and {m2} bring {virtue}."


def generate_corpus(
    n_pairs: int,
    n_groups: int = 4,
    seed: int = 0,
    content_morals: bool = False,
) -> Corpus:
    """Generate a balanced synthetic corpus with n_groups disjoint topics.

    content_morals=True emits morals made only of bank words (no glue),
    which keeps the moral vocabularies of different groups fully disjoint.
    """
    if n_pairs < 1:
        raise ValidationError("n_pairs must be >= 1")
    if not 1 <= n_groups <= len(WORD_BANKS):
        raise ValidationError(f"n_groups must lie in 1..{len(WORD_BANKS)}")
    pairs = []
    for i in range(n_pairs):
        group = i % n_groups
        rng = random.Random(f"synth:{seed}:{i}")
        words = _sample_distinct(rng, WORD_BANKS[group], 10)
        virtue = VIRTUES[group]
        marker = f"tale{i}"
        pairs.append(
            make_pair(
                id=f"syn{i:05d}",
                story=_story_text(words, virtue, marker),
                moral=_moral_text(rng, words, virtue, content_morals),
                lang="en",
            )
        )
    return Corpus(pairs=pairs)


def group_of(pair_id: str, n_groups: int = 4) -> int:
    """Topic group a generated pair belongs to."""
    return int(pair_id.removeprefix("syn")) % n_groups


def synthesize_mocpt_records(
    n: int, seed: int = 0, n_candidates: int = 5, n_groups: int = 4
) -> list[MoCptRecord]:
    """Directly construct shape-valid choice records with 5 candidates.

    Negatives are morals generated from the other groups, so they are
    vocabulary-disjoint distractors. Used for random-baseline anchors
    where the full topic-model pipeline is unnecessary.
    """
    if n < 1 or n_candidates < 2:
        raise ValidationError("need n >= 1 and n_candidates >= 2")
    records = []
    for i in range(n):
        group = i % n_groups
        rng = random.Random(f"mocpt:{seed}:{i}")
        words = _sample_distinct(rng, WORD_BANKS[group], 10)
        story = _story_text(words, VIRTUES[group], f"tale{i}")
        gold = _moral_text(rng, words, VIRTUES[group], content_only=False)
        candidates = [gold]
        for j in range(n_candidates - 1):
            other = (group + 1 + (j % (n_groups - 1))) % n_groups
            other_words = _sample_distinct(rng, WORD_BANKS[other], 10)
            candidates.append(_moral_text(rng, other_words, VIRTUES[other], content_only=False))
        slots = list(range(n_candidates))
        rng.shuffle(slots)
        records.append(
            MoCptRecord(
                id=f"synrec{i:05d}",
                story=story,
                candidates=tuple(candidates[s] for s in slots),
                label=slots.index(0),
            )
        )
    return records


_VIRTUE_ANTONYMS = {
    "strength": "weakness",
    "honesty": "dishonesty",
    "patience": "impatience",
    "caution": "recklessness",
}


def synthesize_mopref_records(n: int, seed: int = 0, n_groups: int = 4) -> list[MoPrefRecord]:
    """Directly construct two-candidate records with flipped virtue words."""
    if n < 1:
        raise ValidationError("need n >= 1")
    records = []
    for i in range(n):
        group = i % n_groups
        rng = random.Random(f"mopref:{seed}:{i}")
        words = _sample_distinct(rng, WORD_BANKS[group], 10)
        virtue = VIRTUES[group]
        story = _story_text(words, virtue, f"tale{i}")
        gold = _moral_text(rng, words, virtue, content_only=False)
        negative = gold.replace(virtue, _VIRTUE_ANTONYMS[virtue])
        candidates = [gold, negative]
        slots = [0, 1]
        rng.shuffle(slots)
        records.append(
            MoPrefRecord(
                id=f"synrec{i:05d}",
                story=story,
                candidates=(candidates[slots[0]], candidates[slots[1]]),
                label=slots.index(0),
            )
        )
    return records

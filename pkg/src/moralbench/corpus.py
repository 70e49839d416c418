"""Story-moral corpus ingestion, tokenization, splitting, and statistics.

A corpus is a list of story-moral pairs read from JSONL, one record per
line: {"id", "story", "moral", "lang", optional "story_tokens",
"moral_tokens", "story_sentences"}. Supplied token arrays are trusted
verbatim so externally tokenized data round-trips bit-exactly; otherwise
the built-in tokenizer is applied.
"""

from __future__ import annotations

import json
import random
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

SPLIT_NAMES = ("train", "val", "test")

# Han ideograph ranges; each such character becomes its own token.
_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2FA1F),
)

_SENT_TERMINALS = frozenset(".!?。！？")
_SENT_TRAILERS = frozenset("\"'’”」』》)]…")


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def _lower(ch: str) -> str:
    # Lowercasing is applied to Latin script only; lexicons are
    # lowercase-keyed and other scripts are left untouched.
    code = ord(ch)
    if code < 0x0080 or 0x00C0 <= code <= 0x024F:
        return ch.lower()
    return ch


def tokenize(text: str, lang: str = "") -> list[str]:
    """Split text into lowercased word tokens.

    Contiguous runs of letters/digits form one token, every Han character
    is its own token, punctuation is dropped. The lang tag is accepted for
    interface symmetry but the rules are script-driven, so it does not
    change the output.
    """
    text = unicodedata.normalize("NFC", text)
    tokens: list[str] = []
    run: list[str] = []
    for ch in text:
        if _is_cjk(ch):
            if run:
                tokens.append("".join(run))
                run = []
            tokens.append(ch)
        elif ch.isalnum():
            run.append(_lower(ch))
        elif run:
            tokens.append("".join(run))
            run = []
    if run:
        tokens.append("".join(run))
    return tokens


def split_sentences(text: str) -> list[str]:
    """Split text on terminal punctuation followed by whitespace or end.

    Closing quotes and brackets attach to the preceding sentence.
    """
    text = unicodedata.normalize("NFC", text)
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in _SENT_TERMINALS:
            j = i + 1
            while j < n and text[j] in _SENT_TERMINALS:
                j += 1
            while j < n and text[j] in _SENT_TRAILERS:
                j += 1
            if j >= n or text[j].isspace():
                segment = text[start:j].strip()
                if segment:
                    sentences.append(segment)
                start = j
                i = j
                continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


@dataclass(frozen=True)
class StoryMoralPair:
    """One labeled example: a story, its moral, and their tokenizations."""

    id: str
    story: str
    moral: str
    lang: str = "en"
    story_tokens: tuple[str, ...] = ()
    moral_tokens: tuple[str, ...] = ()
    story_sentences: tuple[str, ...] = ()


def make_pair(
    id: str,
    story: str,
    moral: str,
    lang: str = "en",
    story_tokens: list[str] | None = None,
    moral_tokens: list[str] | None = None,
    story_sentences: list[str] | None = None,
) -> StoryMoralPair:
    """Normalize, validate, and tokenize one example.

    Supplied token/sentence arrays take precedence over the built-in
    tokenizer so external tokenizations are preserved bit-exactly.
    """
    if not isinstance(id, str) or not id:
        raise ValidationError("id must be a non-empty string")
    story = unicodedata.normalize("NFC", story).strip()
    moral = unicodedata.normalize("NFC", moral).strip()
    if not story:
        raise ValidationError(f'empty story for id "{id}"')
    if not moral:
        raise ValidationError(f'empty moral for id "{id}"')
    return StoryMoralPair(
        id=id,
        story=story,
        moral=moral,
        lang=lang,
        story_tokens=tuple(story_tokens) if story_tokens is not None else tuple(tokenize(story)),
        moral_tokens=tuple(moral_tokens) if moral_tokens is not None else tuple(tokenize(moral)),
        story_sentences=(
            tuple(story_sentences) if story_sentences is not None else tuple(split_sentences(story))
        ),
    )


@dataclass
class Corpus:
    """An ordered collection of pairs plus an optional split assignment."""

    pairs: list[StoryMoralPair]
    split_of: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for pair in self.pairs:
            if pair.id in seen:
                raise ValidationError(f'duplicate id "{pair.id}"')
            seen.add(pair.id)
        for id_, name in self.split_of.items():
            if id_ not in seen:
                raise ValidationError(f'split assignment for unknown id "{id_}"')
            if name not in SPLIT_NAMES:
                raise ValidationError(f'unknown split "{name}" for id "{id_}"')

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def ids(self) -> list[str]:
        return [pair.id for pair in self.pairs]

    def by_id(self, id_: str) -> StoryMoralPair:
        for pair in self.pairs:
            if pair.id == id_:
                return pair
        raise ValidationError(f'unknown id "{id_}"')

    def subset(self, split: str) -> list[StoryMoralPair]:
        if split not in SPLIT_NAMES:
            raise ValidationError(f'unknown split "{split}"')
        return [pair for pair in self.pairs if self.split_of.get(pair.id) == split]


@dataclass(frozen=True)
class CorpusStats:
    n_examples: int
    avg_story_words: float
    avg_moral_words: float
    avg_story_sents: float
    avg_moral_sents: float
    story_vocab: int
    moral_vocab: int


_STRING_FIELDS = ("id", "story", "moral")
_TOKEN_FIELDS = ("story_tokens", "moral_tokens", "story_sentences")


def _parse_record(record: dict, default_lang: str) -> StoryMoralPair:
    for name in _STRING_FIELDS:
        if name not in record:
            raise ValidationError(f'missing field "{name}"')
        if not isinstance(record[name], str):
            raise ValidationError(f'field "{name}" must be a string')
    lang = record.get("lang", default_lang)
    if not isinstance(lang, str):
        raise ValidationError('field "lang" must be a string')
    extra = {}
    for name in _TOKEN_FIELDS:
        if name in record:
            value = record[name]
            if not isinstance(value, list) or not all(isinstance(t, str) for t in value):
                raise ValidationError(f'field "{name}" must be a list of strings')
            extra[name] = value
    return make_pair(record["id"], record["story"], record["moral"], lang, **extra)


def load_corpus(path: str | Path, default_lang: str = "en") -> Corpus:
    """Read a JSONL corpus, validating and tokenizing every record.

    Errors cite the offending line number and field; duplicate ids and
    empty stories/morals are rejected by id.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"corpus file not found: {path}")
    pairs: list[StoryMoralPair] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise ValidationError(f"line {lineno}: invalid JSON ({err.msg})") from err
            if not isinstance(record, dict):
                raise ValidationError(f"line {lineno}: record must be a JSON object")
            try:
                pair = _parse_record(record, default_lang)
            except ValidationError as err:
                raise ValidationError(f"line {lineno}: {err}") from err
            if pair.id in seen:
                raise ValidationError(f'line {lineno}: duplicate id "{pair.id}"')
            seen.add(pair.id)
            pairs.append(pair)
    return Corpus(pairs=pairs)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL, including tokenizations for exact round-trips."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for pair in corpus.pairs:
            record = {
                "id": pair.id,
                "story": pair.story,
                "moral": pair.moral,
                "lang": pair.lang,
                "story_tokens": list(pair.story_tokens),
                "moral_tokens": list(pair.moral_tokens),
                "story_sentences": list(pair.story_sentences),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def save_splits(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for pair in corpus.pairs:
            if pair.id in corpus.split_of:
                fh.write(
                    json.dumps({"id": pair.id, "split": corpus.split_of[pair.id]}) + "\n"
                )


def load_splits(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"split file not found: {path}")
    split_of: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as err:
                raise ValidationError(f"line {lineno}: invalid JSON ({err.msg})") from err
            if "id" not in record or "split" not in record:
                raise ValidationError(f'line {lineno}: missing field "id" or "split"')
            if record["split"] not in SPLIT_NAMES:
                raise ValidationError(f'line {lineno}: unknown split "{record["split"]}"')
            if record["id"] in split_of:
                raise ValidationError(f'line {lineno}: duplicate id "{record["id"]}"')
            split_of[record["id"]] = record["split"]
    return split_of


def _largest_remainder(n: int, ratios: tuple[int, int, int]) -> list[int]:
    total = sum(ratios)
    quotas = [n * r / total for r in ratios]
    sizes = [int(q) for q in quotas]
    leftover = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def split_corpus(corpus: Corpus, ratios: tuple[int, int, int], seed: int) -> Corpus:
    """Assign every id to train/val/test with largest-remainder rounding.

    Ids are sorted lexicographically before the seeded shuffle, so the
    assignment does not depend on input file order.
    """
    if len(corpus) == 0:
        raise ValidationError("cannot split an empty corpus")
    if len(ratios) != len(SPLIT_NAMES):
        raise ValidationError("ratios must have exactly three parts")
    if any((not isinstance(r, int)) or r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ValidationError("ratios must be non-negative integers with a positive sum")
    order = sorted(corpus.ids())
    random.Random(seed).shuffle(order)
    sizes = _largest_remainder(len(order), tuple(ratios))
    split_of: dict[str, str] = {}
    cursor = 0
    for name, size in zip(SPLIT_NAMES, sizes):
        for id_ in order[cursor : cursor + size]:
            split_of[id_] = name
        cursor += size
    return Corpus(pairs=corpus.pairs, split_of=split_of)


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Average word/sentence counts and vocabulary sizes over the corpus."""
    if len(corpus) == 0:
        raise ValidationError("cannot compute statistics of an empty corpus")
    n = len(corpus)
    story_vocab: set[str] = set()
    moral_vocab: set[str] = set()
    story_words = moral_words = story_sents = moral_sents = 0
    for pair in corpus.pairs:
        story_words += len(pair.story_tokens)
        moral_words += len(pair.moral_tokens)
        story_sents += len(pair.story_sentences)
        moral_sents += len(split_sentences(pair.moral))
        story_vocab.update(pair.story_tokens)
        moral_vocab.update(pair.moral_tokens)
    return CorpusStats(
        n_examples=n,
        avg_story_words=story_words / n,
        avg_moral_words=moral_words / n,
        avg_story_sents=story_sents / n,
        avg_moral_sents=moral_sents / n,
        story_vocab=len(story_vocab),
        moral_vocab=len(moral_vocab),
    )

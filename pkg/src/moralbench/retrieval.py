"""Dense retrieval augmentation over a story index.

Queries and indexed items are unit vectors; ranking is by exact dot
product (brute force). The built-in embedding provider is an idf-weighted
signed-hash bag-of-words, a deterministic stand-in for a frozen neural
encoder; externally computed vectors can be supplied from a JSONL file
keyed by example id.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, StoryMoralPair
from .errors import ResourceError, ValidationError
from .outline import Outline
from .resources import Lemmatizer, OPEN_CLASS_TAGS, PosLexicon

logger = logging.getLogger(__name__)

DEFAULT_DIM = 1024
DEFAULT_TOP_M = 10
NORM_TOL = 1e-6

FIELDS = ("story", "moral")


class HashedBowEmbedding:
    """idf-weighted hashed bag-of-words embedding, L2-normalized.

    The idf table must be fitted (on the training split) before embedding.
    """

    mode = "builtin"

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ValidationError("embedding dim must be >= 1")
        self.dim = dim
        self.name = f"hashed-bow-{dim}"
        self._idf: dict[str, float] = {}
        self._default_idf: float | None = None
        self._buckets: dict[str, tuple[int, float]] = {}

    @property
    def fitted(self) -> bool:
        return self._default_idf is not None

    def fit(self, docs: list[list[str]] | list[tuple[str, ...]]) -> "HashedBowEmbedding":
        if not docs:
            raise ValidationError("cannot fit idf on an empty document list")
        df: dict[str, int] = {}
        for doc in docs:
            for token in set(doc):
                df[token] = df.get(token, 0) + 1
        n = len(docs)
        self._idf = {t: math.log((1 + n) / (1 + c)) + 1.0 for t, c in df.items()}
        self._default_idf = math.log(1 + n) + 1.0
        return self

    @classmethod
    def fit_on_pairs(cls, pairs: list[StoryMoralPair], dim: int = DEFAULT_DIM) -> "HashedBowEmbedding":
        """Fit idf over the stories and morals of a corpus subset."""
        docs: list[tuple[str, ...]] = []
        for pair in pairs:
            docs.append(pair.story_tokens)
            docs.append(pair.moral_tokens)
        return cls(dim).fit(docs)

    def bucket(self, token: str) -> tuple[int, float]:
        """Hash bucket index and sign of a token (stable across runs)."""
        cached = self._buckets.get(token)
        if cached is None:
            digest = hashlib.md5(token.encode("utf-8")).digest()
            index = int.from_bytes(digest[:8], "big") % self.dim
            sign = 1.0 if digest[8] & 1 else -1.0
            cached = (index, sign)
            self._buckets[token] = cached
        return cached

    def embed(self, tokens: list[str] | tuple[str, ...]) -> np.ndarray:
        if not self.fitted:
            raise ValidationError("embedding provider not fitted; call fit() first")
        if not tokens:
            raise ValidationError("cannot embed an empty token list (zero vector)")
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            index, sign = self.bucket(token)
            vec[index] += sign * self._idf.get(token, self._default_idf)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise ValidationError("embedding collapsed to a zero vector")
        return vec / norm

    def embed_id(self, example_id: str) -> np.ndarray:
        raise ValidationError("builtin provider embeds token lists, not ids")


class ExternalVectorStore:
    """Embeddings loaded from a JSONL file of {"id", "vec"} records."""

    mode = "external-file"

    def __init__(self, path: str | Path):
        path = Path(path)
        if not path.exists():
            raise ResourceError(f"vector file not found: {path}")
        self.name = f"external:{path.name}"
        self._vectors: dict[str, np.ndarray] = {}
        dim: int | None = None
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as err:
                    raise ResourceError(f"{path}:{lineno}: invalid JSON ({err.msg})") from err
                if "id" not in record or "vec" not in record:
                    raise ResourceError(f'{path}:{lineno}: missing "id" or "vec"')
                vec = np.asarray(record["vec"], dtype=np.float64)
                if vec.ndim != 1 or vec.size == 0:
                    raise ResourceError(f"{path}:{lineno}: vec must be a flat number list")
                if dim is None:
                    dim = int(vec.size)
                elif vec.size != dim:
                    raise ResourceError(f"{path}:{lineno}: inconsistent vector size")
                norm = float(np.linalg.norm(vec))
                if norm == 0.0:
                    raise ResourceError(f'{path}:{lineno}: zero vector for id "{record["id"]}"')
                self._vectors[record["id"]] = vec / norm
        if dim is None:
            raise ResourceError(f"vector file {path} is empty")
        self.dim = dim

    def embed(self, tokens: list[str] | tuple[str, ...]) -> np.ndarray:
        raise ValidationError("external vectors are keyed by example id, not token lists")

    def embed_id(self, example_id: str) -> np.ndarray:
        vec = self._vectors.get(example_id)
        if vec is None:
            raise ValidationError(f'no external vector for id "{example_id}"')
        return vec


EmbeddingProvider = HashedBowEmbedding | ExternalVectorStore


@dataclass(frozen=True)
class StoryIndex:
    """Immutable set of unit vectors keyed by example id."""

    ids: tuple[str, ...]
    vectors: np.ndarray
    provider_name: str

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("index ids must be unique")
        self.vectors.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def vector_of(self, example_id: str) -> np.ndarray:
        try:
            return self.vectors[self.ids.index(example_id)]
        except ValueError:
            raise ValidationError(f'id "{example_id}" is not indexed') from None


def _vector_for(provider: EmbeddingProvider, pair: StoryMoralPair, field_name: str) -> np.ndarray:
    if provider.mode == "external-file":
        return provider.embed_id(pair.id)
    tokens = pair.story_tokens if field_name == "story" else pair.moral_tokens
    return provider.embed(tokens)


def build_index(
    pairs: list[StoryMoralPair],
    provider: EmbeddingProvider,
    field_name: str = "story",
) -> StoryIndex:
    """Embed one field of every pair into an immutable index."""
    if field_name not in FIELDS:
        raise ValidationError(f'field must be one of {FIELDS}, got "{field_name}"')
    ids = []
    rows = []
    for pair in pairs:
        try:
            rows.append(_vector_for(provider, pair, field_name))
        except ValidationError as err:
            raise ValidationError(f'index build failed for id "{pair.id}": {err}') from err
        ids.append(pair.id)
    matrix = np.vstack(rows) if rows else np.zeros((0, provider.dim), dtype=np.float64)
    return StoryIndex(ids=tuple(ids), vectors=matrix, provider_name=provider.name)


def retrieve(
    index: StoryIndex,
    query: np.ndarray,
    m: int = DEFAULT_TOP_M,
    exclude_id: str | None = None,
) -> list[tuple[str, float]]:
    """Top-m ids by dot product, descending; ties break by ascending id."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (index.dim,):
        raise ValidationError(f"query dim {query.shape} does not match index dim {index.dim}")
    scores = index.vectors @ query
    candidates = [
        (id_, float(score))
        for id_, score in zip(index.ids, scores)
        if id_ != exclude_id
    ]
    candidates.sort(key=lambda pair: (-pair[1], pair[0]))
    if m > len(candidates):
        logger.warning(
            "requested top-%d but only %d items available after exclusion", m, len(candidates)
        )
    return candidates[:m]


@dataclass(frozen=True)
class ConceptList:
    """Deduplicated lemma concepts in first-retrieval order, with sources."""

    concepts: tuple[str, ...]
    sources: dict[str, tuple[str, ...]]


def extract_concepts(
    retrieved_morals: list[tuple[str, list[str] | tuple[str, ...]]],
    pos_lexicon: PosLexicon,
    lemmatizer: Lemmatizer,
    stopwords: frozenset[str] | set[str] = frozenset(),
) -> ConceptList:
    """Content-word lemmas of retrieved morals.

    Tokens tagged N/V/ADJ/ADV are kept; unknown tokens default to the open
    class unless they appear in the stopword list.
    """
    concepts: list[str] = []
    seen: set[str] = set()
    sources: dict[str, list[str]] = {}
    for moral_id, tokens in retrieved_morals:
        for token in tokens:
            tag = pos_lexicon.get(token)
            if tag is None:
                if token in stopwords:
                    continue
            elif tag not in OPEN_CLASS_TAGS:
                continue
            lemma = lemmatizer.lemmatize(token)
            if lemma not in seen:
                seen.add(lemma)
                concepts.append(lemma)
                sources[lemma] = [moral_id]
            elif moral_id not in sources[lemma]:
                sources[lemma].append(moral_id)
    return ConceptList(
        concepts=tuple(concepts),
        sources={c: tuple(ids) for c, ids in sources.items()},
    )


@dataclass(frozen=True)
class RetrievalResources:
    """Frozen lookup tables needed to turn retrieved neighbors into guidance."""

    morals_by_id: dict[str, tuple[str, ...]]
    pos_lexicon: PosLexicon
    lemmatizer: Lemmatizer
    stopwords: frozenset[str]

    @classmethod
    def from_pairs(
        cls,
        pairs: list[StoryMoralPair],
        pos_lexicon: PosLexicon,
        lemmatizer: Lemmatizer,
        stopwords: frozenset[str],
    ) -> "RetrievalResources":
        return cls(
            morals_by_id={pair.id: pair.moral_tokens for pair in pairs},
            pos_lexicon=pos_lexicon,
            lemmatizer=lemmatizer,
            stopwords=stopwords,
        )


def augment_story(
    story: StoryMoralPair,
    index: StoryIndex,
    provider: EmbeddingProvider,
    m: int = DEFAULT_TOP_M,
    resources: RetrievalResources | None = None,
) -> tuple[tuple[str, ...], ConceptList]:
    """Retrieve the story's neighbors and extract concepts from their morals.

    The story itself is excluded from retrieval when it is indexed.
    """
    if resources is None:
        raise ValidationError("augment_story requires retrieval resources")
    if provider.mode == "external-file":
        query = provider.embed_id(story.id)
    else:
        query = provider.embed(story.story_tokens)
    exclude = story.id if story.id in index.ids else None
    hits = retrieve(index, query, m=m, exclude_id=exclude)
    morals: list[tuple[str, tuple[str, ...]]] = []
    for hit_id, _ in hits:
        tokens = resources.morals_by_id.get(hit_id)
        if tokens is None:
            raise ValidationError(f'no moral known for retrieved id "{hit_id}"')
        morals.append((hit_id, tokens))
    concepts = extract_concepts(
        morals, resources.pos_lexicon, resources.lemmatizer, resources.stopwords
    )
    return story.story_tokens, concepts


def retrieve_outlines(
    moral: list[str] | tuple[str, ...],
    moral_index: StoryIndex,
    outlines: dict[str, Outline],
    provider: EmbeddingProvider,
    m: int = DEFAULT_TOP_M,
    exclude_id: str | None = None,
) -> list[Outline]:
    """Outlines of the top-m moral neighbors, in ranking order."""
    query = provider.embed(moral)
    hits = retrieve(moral_index, query, m=m, exclude_id=exclude_id)
    result = []
    for hit_id, _ in hits:
        outline = outlines.get(hit_id)
        if outline is None:
            raise ValidationError(f'no outline for retrieved id "{hit_id}"')
        result.append(outline)
    return result


def save_index(index: StoryIndex, path: str | Path) -> None:
    payload = {
        "ids": list(index.ids),
        "dim": index.dim,
        "vectors": index.vectors.tolist(),
        "provider_name": index.provider_name,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_index(path: str | Path) -> StoryIndex:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"index file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"invalid index file {path}: {err.msg}") from err
    for key in ("ids", "dim", "vectors"):
        if key not in payload:
            raise ValidationError(f'index file {path} is missing "{key}"')
    vectors = np.array(payload["vectors"], dtype=np.float64)
    if vectors.ndim != 2 and len(payload["ids"]) == 0:
        vectors = vectors.reshape(0, payload["dim"])
    if vectors.shape[0] != len(payload["ids"]) or (
        vectors.size and vectors.shape[1] != payload["dim"]
    ):
        raise ValidationError(f"index file {path} has inconsistent shapes")
    return StoryIndex(
        ids=tuple(payload["ids"]),
        vectors=vectors,
        provider_name=payload.get("provider_name", "unknown"),
    )

"""LDA topic modeling of morals with specificity-driven topic-count selection.

Estimation is collapsed Gibbs sampling; the returned topic-word matrix is
the smoothed empirical count matrix, row-normalized. Topic indices in the
public API are numbered from 1.

The specificity of topic b is the fraction of its word-distribution mass
carried by its top-k words. The topic count is selected as the smallest B
whose fitted model has every topic's specificity above a threshold h.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import UnassignableDocumentError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_ETA = 0.01
DEFAULT_ITERS = 500
DEFAULT_TOP_K = 20
DEFAULT_THRESHOLD = 0.5

_FOLD_SWEEPS = 50
_FOLD_BURN = 10


@dataclass
class TopicModel:
    """A fitted topic model.

    beta is the B x V row-stochastic topic-word matrix, doc_topics the
    D x B matrix of per-document topic probabilities (None for models
    loaded from disk, which do not carry training posteriors).
    """

    B: int
    vocab: list[str]
    beta: np.ndarray
    alpha: float
    doc_topics: np.ndarray | None
    seed: int
    _vocab_index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.B < 1 or len(self.vocab) < 1:
            raise ValidationError("topic model needs B >= 1 and a non-empty vocabulary")
        if self.beta.shape != (self.B, len(self.vocab)):
            raise ValidationError("beta shape does not match (B, V)")
        self._vocab_index = {tok: i for i, tok in enumerate(self.vocab)}

    @property
    def V(self) -> int:
        return len(self.vocab)

    def vocab_index(self) -> dict[str, int]:
        return self._vocab_index


@dataclass(frozen=True)
class SpecificityReport:
    scores: tuple[float, ...]
    k: int
    h: float
    passes: tuple[bool, ...]

    def min_score(self) -> float:
        return min(self.scores)

    def all_pass(self) -> bool:
        return all(self.passes)


@dataclass(frozen=True)
class LdaParams:
    alpha: float | None = None  # None -> 50/B
    eta: float = DEFAULT_ETA
    iters: int = DEFAULT_ITERS


@dataclass(frozen=True)
class TopicCountSelection:
    B: int
    model: TopicModel
    converged: bool
    min_scores: dict[int, float]


def fit_lda(
    docs: list[list[str]] | list[tuple[str, ...]],
    B: int,
    alpha: float | None = None,
    eta: float = DEFAULT_ETA,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
) -> TopicModel:
    """Fit a topic model by collapsed Gibbs sampling, deterministic per seed.

    The vocabulary is the sorted set of tokens; alpha defaults to 50/B.
    """
    if B < 1:
        raise ValidationError("B must be >= 1")
    if iters < 1:
        raise ValidationError("iters must be >= 1")
    docs = [list(d) for d in docs]
    if not docs:
        raise ValidationError("cannot fit a topic model on an empty document list")
    vocab = sorted({tok for doc in docs for tok in doc})
    if not vocab:
        raise ValidationError("all documents are empty")
    if alpha is None:
        alpha = 50.0 / B
    index = {tok: i for i, tok in enumerate(vocab)}
    V = len(vocab)
    doc_ids = [[index[tok] for tok in doc] for doc in docs]

    rng = random.Random(seed)
    n_dk = [[0] * B for _ in docs]
    n_vk = [[0] * B for _ in range(V)]
    n_k = [0] * B
    assignments: list[list[int]] = []
    for d, ids in enumerate(doc_ids):
        local = n_dk[d]
        zs = []
        for v in ids:
            k = rng.randrange(B)
            zs.append(k)
            local[k] += 1
            n_vk[v][k] += 1
            n_k[k] += 1
        assignments.append(zs)

    v_eta = V * eta
    cumulative = [0.0] * B
    for _ in range(iters):
        for d, ids in enumerate(doc_ids):
            local = n_dk[d]
            zs = assignments[d]
            for i, v in enumerate(ids):
                k = zs[i]
                counts_v = n_vk[v]
                local[k] -= 1
                counts_v[k] -= 1
                n_k[k] -= 1
                total = 0.0
                for kk in range(B):
                    total += (local[kk] + alpha) * (counts_v[kk] + eta) / (n_k[kk] + v_eta)
                    cumulative[kk] = total
                target = rng.random() * total
                k = 0
                while cumulative[k] < target:
                    k += 1
                zs[i] = k
                local[k] += 1
                counts_v[k] += 1
                n_k[k] += 1

    word_counts = np.array(n_vk, dtype=np.float64).T  # B x V
    beta = (word_counts + eta) / (word_counts.sum(axis=1, keepdims=True) + v_eta)
    doc_counts = np.array(n_dk, dtype=np.float64)
    doc_topics = (doc_counts + alpha) / (doc_counts.sum(axis=1, keepdims=True) + B * alpha)
    return TopicModel(B=B, vocab=vocab, beta=beta, alpha=alpha, doc_topics=doc_topics, seed=seed)


def _top_indices(row: np.ndarray, k: int) -> np.ndarray:
    # Descending weight, ties broken by ascending vocabulary index.
    order = np.lexsort((np.arange(len(row)), -row))
    return order[:k]


def specificity(model: TopicModel, b: int, k: int) -> float:
    """Share of topic b's word mass carried by its top-k words (b is 1-based)."""
    if not 1 <= b <= model.B:
        raise ValidationError(f"topic index {b} out of range 1..{model.B}")
    if not 1 <= k <= model.V:
        raise ValidationError(f"k={k} out of range 1..{model.V}")
    row = model.beta[b - 1]
    top = _top_indices(row, k)
    return float(row[top].sum() / row.sum())


def specificity_report(model: TopicModel, k: int, h: float) -> SpecificityReport:
    k = min(k, model.V)
    scores = tuple(specificity(model, b, k) for b in range(1, model.B + 1))
    return SpecificityReport(
        scores=scores, k=k, h=h, passes=tuple(s >= h for s in scores)
    )


def top_words(model: TopicModel, b: int, k: int) -> list[str]:
    """The k highest-weight words of topic b, descending (b is 1-based)."""
    if not 1 <= b <= model.B:
        raise ValidationError(f"topic index {b} out of range 1..{model.B}")
    if not 1 <= k <= model.V:
        raise ValidationError(f"k={k} out of range 1..{model.V}")
    return [model.vocab[i] for i in _top_indices(model.beta[b - 1], k)]


def select_topic_count(
    docs: list[list[str]] | list[tuple[str, ...]],
    B_min: int = 2,
    B_max: int = 10,
    k: int = DEFAULT_TOP_K,
    h: float = DEFAULT_THRESHOLD,
    lda_params: LdaParams | None = None,
    seed: int = 0,
) -> TopicCountSelection:
    """Scan B ascending and return the first model whose topics all pass.

    If no B in range passes, the B with the greatest minimum specificity is
    returned with converged=False.
    """
    if B_min > B_max or B_min < 1:
        raise ValidationError("need 1 <= B_min <= B_max")
    if not 0.0 <= h <= 1.0:
        raise ValidationError("threshold h must lie in [0, 1]")
    params = lda_params or LdaParams()
    best: tuple[float, int, TopicModel] | None = None
    min_scores: dict[int, float] = {}
    for B in range(B_min, B_max + 1):
        model = fit_lda(docs, B, params.alpha, params.eta, params.iters, seed)
        report = specificity_report(model, k, h)
        min_scores[B] = report.min_score()
        if report.all_pass():
            return TopicCountSelection(B=B, model=model, converged=True, min_scores=min_scores)
        if best is None or report.min_score() > best[0]:
            best = (report.min_score(), B, model)
    assert best is not None
    logger.warning(
        "no topic count in %d..%d reached specificity %.3f; best was B=%d (min %.3f)",
        B_min,
        B_max,
        h,
        best[1],
        best[0],
    )
    return TopicCountSelection(B=best[1], model=best[2], converged=False, min_scores=min_scores)


def assign_topic(model: TopicModel, doc: list[str] | tuple[str, ...]) -> int:
    """Most probable topic for a held-out document (1-based).

    The document is folded in by Gibbs sampling with the topic-word matrix
    held fixed; out-of-vocabulary tokens are ignored and ties break toward
    the lowest topic index. Deterministic for a given model.
    """
    index = model.vocab_index()
    ids = [index[tok] for tok in doc if tok in index]
    if not ids:
        raise UnassignableDocumentError("unassignable: document has no in-vocabulary tokens")
    B = model.B
    alpha = model.alpha
    columns = {v: [float(model.beta[kk, v]) for kk in range(B)] for v in set(ids)}

    rng = random.Random(f"assign:{model.seed}")
    counts = [0] * B
    zs = []
    for v in ids:
        k = rng.randrange(B)
        zs.append(k)
        counts[k] += 1
    accumulated = [0] * B
    cumulative = [0.0] * B
    for sweep in range(_FOLD_SWEEPS):
        for i, v in enumerate(ids):
            k = zs[i]
            counts[k] -= 1
            col = columns[v]
            total = 0.0
            for kk in range(B):
                total += (counts[kk] + alpha) * col[kk]
                cumulative[kk] = total
            target = rng.random() * total
            k = 0
            while cumulative[k] < target:
                k += 1
            zs[i] = k
            counts[k] += 1
        if sweep >= _FOLD_BURN:
            for kk in range(B):
                accumulated[kk] += counts[kk]
    best = max(range(B), key=lambda kk: (accumulated[kk], -kk))
    return best + 1


def save_topic_model(model: TopicModel, path: str | Path) -> None:
    payload = {
        "B": model.B,
        "vocab": model.vocab,
        "beta": model.beta.tolist(),
        "alpha": model.alpha,
        "seed": model.seed,
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_topic_model(path: str | Path) -> TopicModel:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"invalid model file {path}: {err.msg}") from err
    for key in ("B", "vocab", "beta", "alpha", "seed"):
        if key not in payload:
            raise ValidationError(f'model file {path} is missing "{key}"')
    return TopicModel(
        B=payload["B"],
        vocab=list(payload["vocab"]),
        beta=np.array(payload["beta"], dtype=np.float64),
        alpha=float(payload["alpha"]),
        doc_topics=None,
        seed=int(payload["seed"]),
    )

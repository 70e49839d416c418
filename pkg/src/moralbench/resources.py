"""Lexical resource files: stopwords, antonym pairs, POS tags, lemma rules.

All resources are plain UTF-8 data files so behavior stays auditable and
swappable. Lines starting with '#' are comments.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path

from .errors import ResourceError

OPEN_CLASS_TAGS = frozenset({"N", "V", "ADJ", "ADV"})
ALL_TAGS = OPEN_CLASS_TAGS | {"CLOSED"}

_VOWELS = "aeiou"


def _read_lines(path: Path):
    if not path.exists():
        raise ResourceError(f"resource file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ResourceError(f"cannot read resource file {path}: {err}") from err
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Load a stopword file: one lowercase token per line."""
    return frozenset(line for _, line in _read_lines(Path(path)))


def load_antonyms(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Load a TSV antonym lexicon and apply the symmetric closure.

    Values are sorted so downstream seeded sampling is reproducible.
    """
    path = Path(path)
    raw: dict[str, set[str]] = {}
    for lineno, line in _read_lines(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ResourceError(f"{path}:{lineno}: expected 'word<TAB>antonym'")
        a, b = parts[0], parts[1]
        raw.setdefault(a, set()).add(b)
        raw.setdefault(b, set()).add(a)
    return {word: tuple(sorted(ants)) for word, ants in raw.items()}


class PosLexicon:
    """Word -> coarse tag map with tags {N, V, ADJ, ADV, CLOSED}."""

    def __init__(self, mapping: dict[str, str]):
        for word, tag in mapping.items():
            if tag not in ALL_TAGS:
                raise ResourceError(f'unknown POS tag "{tag}" for word "{word}"')
        self._mapping = dict(mapping)

    @classmethod
    def load(cls, path: str | Path) -> "PosLexicon":
        path = Path(path)
        mapping: dict[str, str] = {}
        for lineno, line in _read_lines(path):
            parts = line.split("\t")
            if len(parts) != 2:
                raise ResourceError(f"{path}:{lineno}: expected 'word<TAB>tag'")
            word, tag = parts
            if tag not in ALL_TAGS:
                raise ResourceError(f'{path}:{lineno}: unknown POS tag "{tag}"')
            mapping[word] = tag
        return cls(mapping)

    def get(self, token: str) -> str | None:
        return self._mapping.get(token)

    def __len__(self) -> int:
        return len(self._mapping)


class Lemmatizer:
    """Suffix-rule lemmatizer with an exception table for irregulars.

    Rules cover plural -s/-es/-ies, -ing, and -ed with consonant
    undoubling; everything else is either listed in the exception file or
    returned unchanged.
    """

    def __init__(self, exceptions: dict[str, str] | None = None):
        self.exceptions = dict(exceptions or {})

    @classmethod
    def load(cls, path: str | Path) -> "Lemmatizer":
        path = Path(path)
        exceptions: dict[str, str] = {}
        for lineno, line in _read_lines(path):
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ResourceError(f"{path}:{lineno}: expected 'form<TAB>lemma'")
            exceptions[parts[0]] = parts[1]
        return cls(exceptions)

    def lemmatize(self, token: str) -> str:
        hit = self.exceptions.get(token)
        if hit is not None:
            return hit
        return self._strip_suffix(token)

    @staticmethod
    def _undouble(stem: str) -> str:
        if (
            len(stem) >= 3
            and stem[-1] == stem[-2]
            and stem[-1] not in _VOWELS
            and stem[-1] not in "lszf"
        ):
            return stem[:-1]
        return stem

    @classmethod
    def _strip_suffix(cls, t: str) -> str:
        n = len(t)
        if n > 4 and t.endswith("ies"):
            return t[:-3] + "y"
        if n > 5 and t.endswith("sses"):
            return t[:-2]
        if n > 5 and (t.endswith("ches") or t.endswith("shes")):
            return t[:-2]
        if n > 4 and t.endswith("es") and t[-3] in "xzo":
            return t[:-2]
        if (
            n > 3
            and t.endswith("s")
            and not t.endswith("ss")
            and not t.endswith("us")
            and not t.endswith("is")
        ):
            return t[:-1]
        if n > 5 and t.endswith("ing"):
            return cls._undouble(t[:-3])
        if n > 4 and t.endswith("ed"):
            return cls._undouble(t[:-2])
        return t


@dataclass(frozen=True)
class ResourceSet:
    """The resource bundle consumed by task construction and retrieval."""

    stopwords: frozenset[str]
    antonyms: dict[str, tuple[str, ...]]
    pos_lexicon: PosLexicon
    lemmatizer: Lemmatizer


_FILES = {
    "stopwords": "stopwords_{lang}.txt",
    "antonyms": "antonyms.tsv",
    "pos_lexicon": "pos_lexicon.tsv",
    "lemma_exceptions": "lemma_exceptions.tsv",
}


def default_resource_path(filename: str) -> Path:
    """Path of a packaged default resource file."""
    root = importlib_resources.files("moralbench") / "data" / filename
    with importlib_resources.as_file(root) as path:
        if not path.exists():
            raise ResourceError(f"no packaged resource named {filename}")
        return path


def _resolve(directory: Path | None, filename: str) -> Path:
    if directory is not None:
        candidate = directory / filename
        if candidate.exists():
            return candidate
    return default_resource_path(filename)


def load_resources(directory: str | Path | None = None, lang: str = "en") -> ResourceSet:
    """Load all resources, preferring files in `directory` over packaged defaults."""
    directory = Path(directory) if directory is not None else None
    if directory is not None and not directory.is_dir():
        raise ResourceError(f"resource directory not found: {directory}")
    stopwords = load_stopwords(_resolve(directory, _FILES["stopwords"].format(lang=lang)))
    antonyms = load_antonyms(_resolve(directory, _FILES["antonyms"]))
    pos_lexicon = PosLexicon.load(_resolve(directory, _FILES["pos_lexicon"]))
    lemmatizer = Lemmatizer.load(_resolve(directory, _FILES["lemma_exceptions"]))
    return ResourceSet(
        stopwords=stopwords,
        antonyms=antonyms,
        pos_lexicon=pos_lexicon,
        lemmatizer=lemmatizer,
    )

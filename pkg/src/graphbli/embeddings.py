"""Embedding files, bilingual dictionaries, preprocessing and word graphs.

File order of a fastText ``.vec`` file is treated as frequency order, so
"frequency rank" of a word is simply its row index.
"""

import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParseError, ValidationError, VocabularyError

log = logging.getLogger(__name__)

CACHE_MAGIC = b"GBLIEMB\x00"
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<8sIQQBB")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


@dataclass(eq=False)
class EmbeddingSpace:
    """Words in frequency order with one vector per word."""

    words: list
    vectors: np.ndarray
    preprocessed: bool = False
    degenerate: np.ndarray | None = None  # rows that could not be normalised
    skipped: int = 0
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.words = list(self.words)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise ValidationError(f"{len(self.words)} words but vectors of shape {self.vectors.shape}")
        self._index = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise ValidationError("duplicate words in embedding space")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self._index

    @property
    def dim(self):
        return self.vectors.shape[1]

    def index(self, word):
        try:
            return self._index[word]
        except KeyError:
            raise VocabularyError(word) from None

    def indices(self, words):
        return np.array([self.index(w) for w in words], dtype=np.int64)

    def rows(self, words):
        return self.vectors[self.indices(words)]


@dataclass(frozen=True)
class Lexicon:
    """Ordered (source, target) word pairs."""

    pairs: tuple
    one_to_one: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        if self.one_to_one:
            src = [a for a, _ in self.pairs]
            tgt = [b for _, b in self.pairs]
            if len(set(src)) != len(src) or len(set(tgt)) != len(tgt):
                raise ValidationError("lexicon flagged one-to-one has repeated words")

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def sources(self):
        return [a for a, _ in self.pairs]

    @property
    def targets(self):
        return [b for _, b in self.pairs]

    def reversed(self):
        return Lexicon([(b, a) for a, b in self.pairs], self.one_to_one)


def load_vec(path, limit=None):
    """Read a fastText text file.

    Parameters
    ----------
    path : str or path-like
    limit : int, optional
        Read at most this many words (file order).

    Rows with the wrong number of floats, unparsable floats or a repeated
    word are skipped; their count is logged and stored in ``skipped``.
    """
    if limit is not None and limit < 0:
        raise DomainError("limit must be nonnegative")
    with open(path, encoding="utf-8", errors="surrogateescape") as fh:
        header = fh.readline().split()
        try:
            count, dim = int(header[0]), int(header[1])
            if len(header) != 2 or count < 0 or dim < 1:
                raise ValueError
        except (ValueError, IndexError):
            raise ParseError(f"{path}: bad header {' '.join(header)!r}, "
                             "expected '<count> <dim>'") from None
        cap = count if limit is None else min(count, limit)
        words, rows, seen = [], [], set()
        skipped = 0
        for line in fh:
            if len(words) >= cap:
                break
            parts = line.rstrip("\r\n").rstrip(" ").split(" ")
            if len(parts) != dim + 1 or parts[0] in seen:
                skipped += 1
                continue
            try:
                vec = np.array(parts[1:], dtype=np.float32)
            except ValueError:
                skipped += 1
                continue
            seen.add(parts[0])
            words.append(parts[0])
            rows.append(vec)
    if skipped:
        log.warning("%s: skipped %d malformed or duplicate rows", path, skipped)
    vectors = np.stack(rows) if rows else np.zeros((0, dim), dtype=np.float32)
    return EmbeddingSpace(words, vectors, skipped=skipped)


def write_vec(space, path):
    """Write ``space`` in fastText text format (shortest round-trip floats)."""
    with open(path, "w", encoding="utf-8", errors="surrogateescape") as fh:
        fh.write(f"{len(space)} {space.dim}\n")
        for word, row in zip(space.words, space.vectors):
            fh.write(word + " " + " ".join(str(v) for v in row) + "\n")


def _normalise(m):
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    bad = norms[:, 0] <= 1e-12
    out = np.divide(m, norms, out=np.zeros_like(m), where=~bad[:, None])
    return out, bad


def preprocess(space):
    """Unit-normalise, mean-centre and unit-normalise again.

    Rows that end with (near) zero norm are set to zero and listed in
    ``degenerate``; a single-row space always ends up this way.
    """
    if space.preprocessed:
        raise DomainError("space is already preprocessed")
    x = np.asarray(space.vectors, dtype=np.float64)
    x, bad1 = _normalise(x)
    x = x - x.mean(axis=0) if len(x) else x
    x, bad2 = _normalise(x)
    degenerate = np.flatnonzero(bad1 | bad2)
    if degenerate.size:
        log.warning("%d rows have zero norm and were zeroed", degenerate.size)
    return EmbeddingSpace(space.words, x, preprocessed=True, degenerate=degenerate,
                          skipped=space.skipped)


def load_dictionary(path):
    """Read ``source<whitespace>target`` lines; malformed lines are skipped."""
    pairs, skipped = [], 0
    with open(path, encoding="utf-8", errors="surrogateescape") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                skipped += 1
                continue
            pairs.append((parts[0], parts[1]))
    if skipped:
        log.warning("%s: skipped %d malformed dictionary lines", path, skipped)
    return Lexicon(pairs)


def filter_one_to_one(lex):
    """Greedy filter in file order: keep a pair only if neither word was kept before."""
    used_src, used_tgt, kept = set(), set(), []
    for a, b in lex:
        if a in used_src or b in used_tgt:
            continue
        used_src.add(a)
        used_tgt.add(b)
        kept.append((a, b))
    return Lexicon(kept, one_to_one=True)


def restrict_to_vocab(lex, src_space, tgt_space=None):
    """Drop pairs whose source (or target, when ``tgt_space`` is given) is unknown."""
    kept = [(a, b) for a, b in lex
            if a in src_space and (tgt_space is None or b in tgt_space)]
    dropped = len(lex) - len(kept)
    if dropped:
        log.warning("dropped %d out-of-vocabulary dictionary pairs", dropped)
    return Lexicon(kept, lex.one_to_one)


def split_seeds(lex, s, space, tgt_space=None):
    """Split ``lex`` into the ``s`` most frequent source words and the rest.

    Pairs are sorted by the source word's row in ``space`` (stable, so
    repeated sources keep file order). Out-of-vocabulary pairs are dropped
    first.
    """
    lex = restrict_to_vocab(lex, space, tgt_space)
    if not 0 <= s <= len(lex):
        raise DomainError(f"cannot take {s} seeds from {len(lex)} pairs")
    ranked = sorted(lex.pairs, key=lambda p: space.index(p[0]))
    return Lexicon(ranked[:s], lex.one_to_one), Lexicon(ranked[s:], lex.one_to_one)


def build_graph(space, words):
    """Cosine-similarity graph ``X X^T`` over ``words`` (in the given order)."""
    if not space.preprocessed:
        raise DomainError("build_graph expects a preprocessed space")
    x = np.asarray(space.rows(words), dtype=np.float64)
    return x @ x.T


def save_cache(space, path):
    """Binary dump: header, little-endian rows, then length-prefixed UTF-8 words."""
    vec = space.vectors
    flag = 0 if vec.dtype == np.float32 else 1
    data = np.ascontiguousarray(vec, dtype=_DTYPES[flag])
    with open(path, "wb") as fh:
        fh.write(_CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, len(space), vec.shape[1],
                                    flag, int(space.preprocessed)))
        fh.write(data.tobytes())
        for w in space.words:
            b = w.encode("utf-8", "surrogateescape")
            fh.write(struct.pack("<I", len(b)) + b)


def load_cache(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _CACHE_HEADER.size:
        raise ParseError(f"{path}: truncated cache header")
    magic, version, n, d, flag, prep = _CACHE_HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC or version != CACHE_VERSION or flag not in _DTYPES:
        raise ParseError(f"{path}: not a version {CACHE_VERSION} embedding cache")
    dtype = _DTYPES[flag]
    pos = _CACHE_HEADER.size
    end = pos + n * d * dtype.itemsize
    if len(raw) < end:
        raise ParseError(f"{path}: truncated vector block")
    vectors = np.frombuffer(raw, dtype=dtype, count=n * d, offset=pos).reshape(n, d)
    vectors = vectors.astype(dtype.newbyteorder("="))
    words = []
    pos = end
    try:
        for _ in range(n):
            (ln,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            if pos + ln > len(raw):
                raise struct.error
            words.append(raw[pos:pos + ln].decode("utf-8", "surrogateescape"))
            pos += ln
    except struct.error:
        raise ParseError(f"{path}: truncated word table") from None
    return EmbeddingSpace(words, vectors, preprocessed=bool(prep))

"""Dataset ingestion, text segmentation, and a planted-signal corpus generator.

File formats:

* documents: JSON Lines, one object per document with fields
  ``id`` (string), ``label`` (1|2|3), ``text`` (string), optional
  ``split`` ("train"|"test", default "train") and optional ``paragraphs``
  (paragraph -> sentence -> token lists) overriding segmentation.
* trees: one record per line, ``<id> <TAB> <serialized tree>`` (see
  :mod:`rstcoh.rst_data` for the tree grammar).
* word vectors: plain text, ``token v1 ... vD`` per line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rst_data
from .errors import (ConfigError, DuplicateIdError, EmptyDocumentError,
                     FormatError, IngestError, ParseError)

Paragraphs = list[list[list[str]]]

LABELS = (1, 2, 3)  # 1 = incoherent, 2 = neutral, 3 = coherent


@dataclass
class Document:
    id: str
    label: int
    text: str
    paragraphs: Paragraphs
    tree: rst_data.RstTree


@dataclass
class WordVectors:
    dimension: int
    vectors: dict[str, np.ndarray]

    def lookup(self, token: str) -> np.ndarray:
        """Vector for ``token``; out-of-vocabulary tokens map to zero."""
        vec = self.vectors.get(token)
        if vec is None:
            return np.zeros(self.dimension)
        return vec


@dataclass
class Exclusion:
    doc_id: str
    reason: str


@dataclass
class CorpusSplit:
    train: list[Document]
    test: list[Document]
    exclusion_log: list[Exclusion] = field(default_factory=list)


# --- segmentation -----------------------------------------------------------

_PARA_RE = re.compile(r"\n\s*\n")
_SENT_RE = re.compile(r"(?<=[.?!])\s+(?=[A-Z])")
_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def segment(text: str) -> Paragraphs:
    """Split text into paragraph -> sentence -> token structure.

    Paragraphs split on blank lines; sentences split after [.?!] followed by
    whitespace and an uppercase letter (or at end of text); tokens are
    lowercased with punctuation acting as a separator.
    """
    paragraphs: Paragraphs = []
    for block in _PARA_RE.split(text):
        sentences = []
        for sent in _SENT_RE.split(block):
            tokens = tokenize(sent)
            if tokens:
                sentences.append(tokens)
        if sentences:
            paragraphs.append(sentences)
    if not paragraphs:
        raise EmptyDocumentError("text contains no tokens")
    return paragraphs


def join_paragraphs(paragraphs: Paragraphs) -> str:
    """Canonical inverse of :func:`segment` for alphabetic-initial sentences."""
    blocks = []
    for para in paragraphs:
        sentences = [" ".join(tokens).capitalize() + "." for tokens in para]
        blocks.append(" ".join(sentences))
    return "\n\n".join(blocks)


# --- ingestion ----------------------------------------------------------------


def _parse_document_record(obj: dict, line_no: int) -> tuple[str, int, str, Paragraphs | None, str]:
    if not isinstance(obj, dict):
        raise IngestError("record is not a JSON object", line_no)
    for key in ("id", "label", "text"):
        if key not in obj:
            raise IngestError(f"missing field {key!r}", line_no)
    doc_id = obj["id"]
    if not isinstance(doc_id, str) or not doc_id:
        raise IngestError("id must be a non-empty string", line_no)
    label = obj["label"]
    if label not in LABELS:
        raise IngestError(f"label must be one of {LABELS}, got {label!r}", line_no)
    text = obj["text"]
    if not isinstance(text, str):
        raise IngestError("text must be a string", line_no)
    split = obj.get("split", "train")
    if split not in ("train", "test"):
        raise IngestError(f"split must be 'train' or 'test', got {split!r}", line_no)
    paragraphs = obj.get("paragraphs")
    if paragraphs is not None:
        ok = (isinstance(paragraphs, list) and paragraphs
              and all(isinstance(p, list) and p and
                      all(isinstance(s, list) and s and
                          all(isinstance(t, str) for t in s) for s in p)
                      for p in paragraphs))
        if not ok:
            raise IngestError("paragraphs must be a non-empty nested token list",
                              line_no)
    return doc_id, label, text, paragraphs, split


def _load_trees_file(path) -> dict[str, tuple[rst_data.RstTree | None, str]]:
    """Map id -> (tree, "") on success or (None, reason) on parse failure."""
    trees: dict[str, tuple[rst_data.RstTree | None, str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise IngestError("expected '<id><TAB><tree>'", line_no)
            doc_id, rest = line.split("\t", 1)
            doc_id = doc_id.strip()
            if not doc_id:
                raise IngestError("empty tree id", line_no)
            if doc_id in trees:
                raise DuplicateIdError(f"duplicate tree id {doc_id!r} at line {line_no}")
            try:
                trees[doc_id] = (rst_data.parse_tree(rest), "")
            except ParseError as exc:
                trees[doc_id] = (None, f"tree parse error: {exc}")
    return trees


def load_corpus(docs_path, trees_path) -> CorpusSplit:
    """Join a documents file with a trees file by id.

    Documents whose tree is missing, unparseable, failing validation, or
    whose EDUs carry no tokens are dropped and logged, never silently.
    """
    trees = _load_trees_file(trees_path)
    train: list[Document] = []
    test: list[Document] = []
    excluded: list[Exclusion] = []
    seen: set[str] = set()
    with open(docs_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"bad JSON: {exc.msg}", line_no) from exc
            doc_id, label, text, paragraphs, split = _parse_document_record(obj, line_no)
            if doc_id in seen:
                raise DuplicateIdError(f"duplicate document id {doc_id!r} at line {line_no}")
            seen.add(doc_id)
            if paragraphs is None:
                try:
                    paragraphs = segment(text)
                except EmptyDocumentError as exc:
                    raise IngestError(str(exc), line_no) from exc
            entry = trees.get(doc_id)
            if entry is None:
                excluded.append(Exclusion(doc_id, "missing tree"))
                continue
            tree, reason = entry
            if tree is None:
                excluded.append(Exclusion(doc_id, reason))
                continue
            violations = rst_data.validate_tree(tree)
            if violations:
                codes = ",".join(sorted({v.code for v in violations}))
                excluded.append(Exclusion(doc_id, f"invalid tree: {codes}"))
                continue
            if any(not tokenize(t) for t in rst_data.leaf_texts(tree)):
                excluded.append(Exclusion(doc_id, "EDU with no tokens"))
                continue
            doc = Document(doc_id, label, text, paragraphs, tree)
            (train if split == "train" else test).append(doc)
    return CorpusSplit(train, test, excluded)


def load_word_vectors(path, vocab: set[str] | None = None) -> WordVectors:
    """Read "token v1 ... vD" lines, keeping only tokens in ``vocab`` if given."""
    dimension: int | None = None
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                raise FormatError(f"line {line_no}: expected 'token v1 ... vD'")
            token, values = parts[0], parts[1:]
            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise FormatError(
                    f"line {line_no}: {len(values)} values, expected {dimension}")
            if vocab is not None and token not in vocab:
                continue
            try:
                vectors[token] = np.asarray([float(v) for v in values])
            except ValueError as exc:
                raise FormatError(f"line {line_no}: non-numeric value") from exc
    if dimension is None:
        raise FormatError("empty word-vector file")
    return WordVectors(dimension, vectors)


def corpus_token_vocab(split: CorpusSplit) -> set[str]:
    """All tokens appearing in documents or tree leaves of a split."""
    vocab: set[str] = set()
    for doc in list(split.train) + list(split.test):
        for para in doc.paragraphs:
            for sent in para:
                vocab.update(sent)
        for text in rst_data.leaf_texts(doc.tree):
            vocab.update(tokenize(text))
    return vocab


# --- synthetic corpus ---------------------------------------------------------

DEFAULT_RELATIONS = (
    "Attribution", "Background", "Cause", "Comparison", "Condition",
    "Contrast", "Elaboration", "Enablement", "Evaluation", "Explanation",
    "Joint", "Same-Unit", "Summary", "Temporal", "Topic-Change",
)

# 15 relations x {N, S} plus one single-nuclearity label = 31 combined labels.
DEFAULT_LABELS = tuple(sorted(
    [f"{rel}_{nuc}" for rel in DEFAULT_RELATIONS for nuc in ("N", "S")]
    + ["TextualOrganization_N"]
))

DEFAULT_TOKEN_POOL = (
    "alder", "basil", "cedar", "dahlia", "elm", "fennel", "ginkgo", "hazel",
    "iris", "juniper", "kale", "laurel", "maple", "nettle", "oak", "poplar",
    "quince", "rowan", "sage", "thyme", "umber", "violet", "willow", "yarrow",
    "zinnia", "aspen", "birch", "clover", "fern", "heather",
)


@dataclass
class GeneratorConfig:
    """Planted-signal corpus: relation labels (and optionally tokens) are
    drawn from class-conditional distributions.

    Coherent documents (class 3) draw each child label from
    ``coherent_labels`` with probability ``signal_strength`` and uniformly
    otherwise; neutral documents (class 2) do the same with
    ``neutral_labels``; incoherent documents (class 1) always draw
    uniformly. ``token_signal`` applies the same scheme to EDU tokens.
    """

    n_train: int = 300
    n_test: int = 150
    labels: tuple[str, ...] = DEFAULT_LABELS
    coherent_labels: tuple[str, ...] | None = None
    neutral_labels: tuple[str, ...] | None = None
    signal_strength: float = 0.9
    class_probs: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    edu_range: tuple[int, int] = (4, 16)
    tokens_per_edu: tuple[int, int] = (3, 7)
    max_paragraphs: int = 3
    token_pool: tuple[str, ...] = DEFAULT_TOKEN_POOL
    coherent_tokens: tuple[str, ...] | None = None
    neutral_tokens: tuple[str, ...] | None = None
    token_signal: float = 0.0
    wv_dim: int = 16

    def validate(self) -> None:
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ConfigError(
                f"signal_strength must be in [0, 1], got {self.signal_strength}")
        if not 0.0 <= self.token_signal <= 1.0:
            raise ConfigError(
                f"token_signal must be in [0, 1], got {self.token_signal}")
        if self.n_train < 0 or self.n_test < 0:
            raise ConfigError("corpus sizes must be non-negative")
        if len(self.class_probs) != 3 or abs(sum(self.class_probs) - 1.0) > 1e-9 \
                or any(p < 0 for p in self.class_probs):
            raise ConfigError(f"class_probs must be a distribution over 3 classes")
        if len(self.labels) < 3:
            raise ConfigError("need at least 3 combined labels")
        if self.edu_range[0] < 2 or self.edu_range[1] < self.edu_range[0]:
            raise ConfigError(f"bad edu_range {self.edu_range}")
        if self.tokens_per_edu[0] < 1 or self.tokens_per_edu[1] < self.tokens_per_edu[0]:
            raise ConfigError(f"bad tokens_per_edu {self.tokens_per_edu}")
        for name, subset in (("coherent_labels", self.feature_subset(3)),
                             ("neutral_labels", self.feature_subset(2))):
            if not set(subset) <= set(self.labels):
                raise ConfigError(f"{name} not a subset of labels")

    def feature_subset(self, klass: int) -> tuple[str, ...]:
        third = max(1, len(self.labels) // 3)
        if klass == 3:
            return self.coherent_labels or self.labels[:third]
        if klass == 2:
            return self.neutral_labels or self.labels[third:2 * third]
        return self.labels

    def token_subset(self, klass: int) -> tuple[str, ...]:
        third = max(1, len(self.token_pool) // 3)
        if klass == 3:
            return self.coherent_tokens or self.token_pool[:third]
        if klass == 2:
            return self.neutral_tokens or self.token_pool[third:2 * third]
        return self.token_pool


def class_label_distribution(cfg: GeneratorConfig, klass: int) -> dict[str, float]:
    """Exact per-label probabilities the generator samples from for ``klass``."""
    n = len(cfg.labels)
    probs = {lab: (1.0 - cfg.signal_strength) / n for lab in cfg.labels}
    if klass in (2, 3):
        subset = cfg.feature_subset(klass)
        for lab in subset:
            probs[lab] += cfg.signal_strength / len(subset)
    else:
        probs = {lab: 1.0 / n for lab in cfg.labels}
    return probs


def _draw(rng: np.random.Generator, items: Sequence[str]) -> str:
    return items[int(rng.integers(0, len(items)))]


def _sample_label(rng: np.random.Generator, cfg: GeneratorConfig, klass: int) -> rst_data.NodeLabel:
    if klass in (2, 3) and rng.random() < cfg.signal_strength:
        combined = _draw(rng, cfg.feature_subset(klass))
    else:
        combined = _draw(rng, cfg.labels)
    relation, nuc = combined.rsplit("_", 1)
    return rst_data.NodeLabel(relation, rst_data.Nuclearity(nuc))


def _sample_token(rng: np.random.Generator, cfg: GeneratorConfig, klass: int) -> str:
    if klass in (2, 3) and cfg.token_signal > 0 and rng.random() < cfg.token_signal:
        return _draw(rng, cfg.token_subset(klass))
    return _draw(rng, cfg.token_pool)


def _random_shape(rng: np.random.Generator, n: int) -> object:
    """Random binary tree shape over leaves 0..n-1; leaves are ints."""
    if n == 1:
        return 0
    # recursive splits over index ranges, materialized as nested pairs
    def build(lo: int, hi: int):
        if hi - lo == 1:
            return lo
        cut = int(rng.integers(lo + 1, hi))
        return (build(lo, cut), build(cut, hi))

    return build(0, n)


def _attach(shape, sentences: list[str], rng: np.random.Generator,
            cfg: GeneratorConfig, klass: int) -> rst_data.RstTree:
    if isinstance(shape, int):
        return rst_data.Leaf(sentences[shape])
    left = _attach(shape[0], sentences, rng, cfg, klass)
    right = _attach(shape[1], sentences, rng, cfg, klass)
    return rst_data.Internal(left, right,
                             _sample_label(rng, cfg, klass),
                             _sample_label(rng, cfg, klass))


def _synth_document(rng: np.random.Generator, cfg: GeneratorConfig,
                    doc_id: str) -> Document:
    klass = int(rng.choice(LABELS, p=np.asarray(cfg.class_probs)))
    n_edus = int(rng.integers(cfg.edu_range[0], cfg.edu_range[1] + 1))
    lo, hi = cfg.tokens_per_edu
    edu_tokens = [[_sample_token(rng, cfg, klass)
                   for _ in range(int(rng.integers(lo, hi + 1)))]
                  for _ in range(n_edus)]
    sentences = [" ".join(toks).capitalize() + "." for toks in edu_tokens]
    shape = _random_shape(rng, n_edus)
    tree = _attach(shape, sentences, rng, cfg, klass)
    n_paras = int(rng.integers(1, min(cfg.max_paragraphs, n_edus) + 1))
    if n_paras > 1:
        cuts = sorted(rng.choice(np.arange(1, n_edus), size=n_paras - 1,
                                 replace=False).tolist())
    else:
        cuts = []
    bounds = [0] + cuts + [n_edus]
    paragraphs = [edu_tokens[a:b] for a, b in zip(bounds, bounds[1:])]
    text = join_paragraphs(paragraphs)
    return Document(doc_id, klass, text, paragraphs, tree)


def synthesize_corpus(cfg: GeneratorConfig, seed: int) -> CorpusSplit:
    """Deterministic planted-signal corpus; byte-identical for equal seeds."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    train = [_synth_document(rng, cfg, f"synth-train-{i:04d}")
             for i in range(cfg.n_train)]
    test = [_synth_document(rng, cfg, f"synth-test-{i:04d}")
            for i in range(cfg.n_test)]
    return CorpusSplit(train, test, [])


def synthesize_word_vectors(cfg: GeneratorConfig, seed: int) -> WordVectors:
    rng = np.random.default_rng(seed)
    vectors = {tok: rng.uniform(-0.5, 0.5, size=cfg.wv_dim)
               for tok in sorted(set(cfg.token_pool))}
    return WordVectors(cfg.wv_dim, vectors)


# --- file writers (deterministic bytes) ---------------------------------------


def write_documents(path, split: CorpusSplit) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, docs in (("train", split.train), ("test", split.test)):
            for doc in docs:
                record = {"id": doc.id, "label": doc.label, "text": doc.text,
                          "split": name}
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_trees(path, split: CorpusSplit) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in list(split.train) + list(split.test):
            fh.write(f"{doc.id}\t{rst_data.serialize_tree(doc.tree)}\n")


def write_word_vectors(path, wv: WordVectors) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for token in sorted(wv.vectors):
            values = " ".join(repr(v) for v in wv.vectors[token].tolist())
            fh.write(f"{token} {values}\n")

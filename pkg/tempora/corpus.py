from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union
import hashlib
import logging
import math
import os
import re

import numpy as np
from scipy.sparse import csr_matrix

from .dictserializable import read_json, write_json
from .errors import CorpusFormatError, SliceTooSmallError, UnknownTermError
from .parallel import ordered_map

logger = logging.getLogger(__name__)

COUNT_PATTERN = re.compile(r'^[0-9]+$')

# multi-word terms (bigrams) are written with this joiner in .bow files
PHRASE_JOINER = '_'


class Vocabulary(object):
    """
    Ordered, duplicate-free list of terms shared by every time slice.  Term
    ids are dense and 0-based.
    """

    def __init__(self, terms: Sequence[str]):
        super().__init__()
        self._terms = tuple(terms)
        self._index: Dict[str, int] = {}
        for i, term in enumerate(self._terms):
            if term in self._index:
                raise ValueError(f'Duplicate term {term!r} in vocabulary')
            self._index[term] = i

    @property
    def terms(self) -> Tuple[str, ...]:
        return self._terms

    @property
    def K(self) -> int:
        return len(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[str]:
        return iter(self._terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def __eq__(self, other: 'Vocabulary') -> bool:
        return isinstance(other, Vocabulary) and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    def index(self, term: str) -> int:
        try:
            return self._index[term]
        except KeyError:
            raise UnknownTermError(term)

    def lookup(self, term_id: int) -> str:
        return self._terms[term_id]

    def resolve(self, term: str) -> str:
        """
        Exact match first, then the phrase-joined spelling of a
        whitespace-separated phrase
        """
        if term in self._index:
            return term
        joined = PHRASE_JOINER.join(term.split())
        if joined in self._index:
            return joined
        raise UnknownTermError(term)

    def digest(self) -> str:
        return hashlib.sha256('\n'.join(self._terms).encode('utf-8')).hexdigest()

    @staticmethod
    def read(path: str) -> 'Vocabulary':
        with open(path, 'r', encoding='utf-8') as f:
            terms = [line.rstrip('\r\n') for line in f]
        if terms and terms[-1] == '':
            terms = terms[:-1]
        return Vocabulary(terms)

    def write(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            for term in self._terms:
                f.write(f'{term}\n')


@dataclass(frozen=True, eq=False)
class Document:
    """
    Sparse word counts of a single document; ids are sorted and unique
    """
    ids: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        ids = np.array(self.ids, dtype=np.int64).reshape(-1)
        counts = np.array(self.counts, dtype=np.int64).reshape(-1)

        if ids.shape != counts.shape:
            raise ValueError('ids and counts must have the same length')
        if len(ids) == 0:
            raise ValueError('Documents must contain at least one word')
        if np.any(ids < 0):
            raise ValueError('Term ids must be non-negative')
        if np.any(np.diff(ids) <= 0):
            raise ValueError('Term ids must be strictly increasing')
        if np.any(counts < 1):
            raise ValueError('Counts must be positive')

        ids.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, 'ids', ids)
        object.__setattr__(self, 'counts', counts)

    @property
    def length(self) -> int:
        return int(self.counts.sum())

    @staticmethod
    def from_counts(counts: Mapping[int, int]) -> 'Document':
        ids = sorted(counts)
        return Document(ids=ids, counts=[counts[i] for i in ids])

    @staticmethod
    def from_dense(vector: np.ndarray) -> 'Document':
        vector = np.asarray(vector)
        ids = np.flatnonzero(vector)
        return Document(ids=ids, counts=np.rint(vector[ids]).astype(np.int64))

    def dense(self, K: int) -> np.ndarray:
        if self.ids[-1] >= K:
            raise ValueError(f'Document references term id {self.ids[-1]} but K is {K}')
        v = np.zeros(K, dtype=np.float64)
        v[self.ids] = self.counts
        return v

    def as_dict(self) -> Dict[int, int]:
        return {int(i): int(c) for i, c in zip(self.ids, self.counts)}

    def __eq__(self, other: 'Document') -> bool:
        return isinstance(other, Document) \
            and np.array_equal(self.ids, other.ids) \
            and np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash((self.ids.tobytes(), self.counts.tobytes()))

    def __repr__(self) -> str:
        return f'Document({self.as_dict()})'


def count_matrix(documents: Sequence[Document], K: int) -> csr_matrix:
    """
    Document-term counts, one row per document
    """
    for d in documents:
        if d.ids[-1] >= K:
            raise ValueError(f'Document references term id {d.ids[-1]} but K is {K}')

    indptr = np.zeros(len(documents) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(d.ids) for d in documents])
    if documents:
        indices = np.concatenate([d.ids for d in documents])
        data = np.concatenate([d.counts for d in documents]).astype(np.float64)
    else:
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0, dtype=np.float64)
    return csr_matrix((data, indices, indptr), shape=(len(documents), K))


@dataclass(frozen=True)
class TimeSlice:
    label: str
    documents: Tuple[Document, ...]

    def __post_init__(self):
        object.__setattr__(self, 'documents', tuple(self.documents))

    @property
    def N(self) -> int:
        return len(self.documents)

    @property
    def token_count(self) -> int:
        return sum(d.length for d in self.documents)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([d.length for d in self.documents], dtype=np.float64)

    def matrix(self, K: int) -> csr_matrix:
        return count_matrix(self.documents, K)

    def count_sum(self, K: int) -> np.ndarray:
        return np.asarray(self.matrix(K).sum(axis=0)).reshape(K)

    def subset(self, indices: Sequence[int]) -> 'TimeSlice':
        return TimeSlice(label=self.label, documents=[self.documents[i] for i in indices])


@dataclass(frozen=True)
class TemporalCorpus:
    vocabulary: Vocabulary
    slices: Tuple[TimeSlice, ...]

    def __post_init__(self):
        object.__setattr__(self, 'slices', tuple(self.slices))

        labels = [s.label for s in self.slices]
        if len(set(labels)) != len(labels):
            raise ValueError(f'Slice labels must be distinct but were {labels}')

        K = self.vocabulary.K
        for s in self.slices:
            for d in s.documents:
                if d.ids[-1] >= K:
                    raise ValueError(
                        f'Slice {s.label!r} references term id {d.ids[-1]} '
                        f'outside a vocabulary of {K} terms')

    @property
    def T(self) -> int:
        return len(self.slices)

    @property
    def K(self) -> int:
        return self.vocabulary.K

    @property
    def labels(self) -> List[str]:
        return [s.label for s in self.slices]

    @property
    def document_count(self) -> int:
        return sum(s.N for s in self.slices)

    @property
    def token_count(self) -> int:
        return sum(s.token_count for s in self.slices)

    def digest(self) -> str:
        return self.vocabulary.digest()

    def term_frequencies(self) -> np.ndarray:
        total = np.zeros(self.K, dtype=np.float64)
        for s in self.slices:
            total += s.count_sum(self.K)
        return total

    def term_frequency(self, term: str) -> int:
        return int(self.term_frequencies()[self.vocabulary.index(term)])

    def with_slices(self, slices: Sequence[TimeSlice]) -> 'TemporalCorpus':
        return TemporalCorpus(vocabulary=self.vocabulary, slices=slices)


def parse_document_line(line: str, path: str, line_number: int) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for pair in line.split():
        term, sep, count = pair.rpartition(':')
        if not sep or not term:
            raise CorpusFormatError(path, line_number, f'expected term:count but found {pair!r}')
        if not COUNT_PATTERN.match(count) or int(count) < 1:
            raise CorpusFormatError(
                path, line_number, f'count for {term!r} must be a positive integer but was {count!r}')
        counts[term] = counts.get(term, 0) + int(count)

    if not counts:
        raise CorpusFormatError(path, line_number, 'empty documents are not permitted')
    return counts


def parse_slice_file(path: str) -> List[Tuple[int, Dict[str, int]]]:
    """
    Parse a .bow slice file into (line number, term counts) pairs
    """
    documents = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            if line.startswith('#'):
                continue
            documents.append((line_number, parse_document_line(line, path, line_number)))
    return documents


def read_manifest(path: str) -> dict:
    return read_json(path, schema='manifest')


def ingest(
        manifest_path: str,
        vocabulary: Optional[Union[Vocabulary, str]] = None,
        threads: Optional[int] = None) -> TemporalCorpus:

    manifest = read_manifest(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))

    def resolve(p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(base, p)

    if vocabulary is None and 'vocabulary' in manifest:
        vocabulary = resolve(manifest['vocabulary'])
    if isinstance(vocabulary, str):
        vocabulary = Vocabulary.read(vocabulary)

    entries = manifest['slices']
    paths = [resolve(e['file']) for e in entries]
    parsed = ordered_map(parse_slice_file, paths, threads)

    if vocabulary is None:
        terms = set()
        for documents in parsed:
            for _, counts in documents:
                terms.update(counts)
        vocabulary = Vocabulary(sorted(terms))

    slices = []
    for entry, path, documents in zip(entries, paths, parsed):
        converted = []
        for line_number, counts in documents:
            ids = {}
            for term, count in counts.items():
                if term not in vocabulary:
                    raise UnknownTermError(term, path, line_number)
                ids[vocabulary.index(term)] = count
            converted.append(Document.from_counts(ids))

        if not converted:
            logger.warning(f'Slice {entry["label"]!r} ({path}) has no documents')
        slices.append(TimeSlice(label=entry['label'], documents=converted))

    corpus = TemporalCorpus(vocabulary=vocabulary, slices=slices)
    logger.info(
        f'Ingested {corpus.T} slices, {corpus.document_count} documents, '
        f'{corpus.token_count} tokens over {corpus.K} terms')
    return corpus


def slice_filename(index: int, label: str) -> str:
    safe = re.sub(r'[^A-Za-z0-9._-]+', '-', label)
    return f'{index:03d}-{safe}.bow'


def write_corpus(corpus: TemporalCorpus, directory: str) -> str:
    """
    Serialize a corpus to a manifest, one .bow file per slice and a
    vocabulary file, returning the manifest path
    """
    os.makedirs(directory, exist_ok=True)
    corpus.vocabulary.write(os.path.join(directory, 'vocabulary.txt'))

    entries = []
    for i, s in enumerate(corpus.slices):
        filename = slice_filename(i, s.label)
        with open(os.path.join(directory, filename), 'w', encoding='utf-8') as f:
            for d in s.documents:
                pairs = [f'{corpus.vocabulary.lookup(t)}:{c}' for t, c in zip(d.ids, d.counts)]
                f.write(' '.join(pairs) + '\n')
        entries.append(dict(label=s.label, file=filename))

    manifest = dict(slices=entries, vocabulary='vocabulary.txt')
    path = os.path.join(directory, 'manifest.json')
    write_json(manifest, path, indent=2)
    return path


def split_held_out(
        corpus: TemporalCorpus,
        per_slice: int,
        seed: int) -> Tuple[TemporalCorpus, TemporalCorpus]:

    if per_slice < 0:
        raise ValueError(f'per_slice must be non-negative but was {per_slice}')

    for s in corpus.slices:
        if per_slice > s.N:
            raise SliceTooSmallError(s.label, s.N, per_slice)

    rng = np.random.default_rng(seed)
    train, held = [], []
    for s in corpus.slices:
        chosen = np.sort(rng.choice(s.N, size=per_slice, replace=False))
        keep = np.setdiff1d(np.arange(s.N), chosen)
        train.append(s.subset(keep))
        held.append(s.subset(chosen))

    return corpus.with_slices(train), corpus.with_slices(held)


def split_fraction(
        corpus: TemporalCorpus,
        train_fraction: float,
        seed: int) -> Tuple[TemporalCorpus, TemporalCorpus]:

    if not 0 < train_fraction < 1:
        raise ValueError(f'train_fraction must lie strictly between 0 and 1 but was {train_fraction}')

    rng = np.random.default_rng(seed)
    train, test = [], []
    for s in corpus.slices:
        # rounded before the floor so that e.g. 5 * (1 - 0.8) counts as 1
        n_test = math.floor(round(s.N * (1 - train_fraction), 9))
        order = rng.permutation(s.N)
        chosen = np.sort(order[:n_test])
        keep = np.sort(order[n_test:])
        train.append(s.subset(keep))
        test.append(s.subset(chosen))

    return corpus.with_slices(train), corpus.with_slices(test)

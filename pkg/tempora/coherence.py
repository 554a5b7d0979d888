"""
Topic coherence against a local reference corpus.  Word co-occurrence is
counted in sliding windows with gensim's occurrence accumulator; each topic
word is described by its NPMI with every word of the topic, and a topic's
coherence is the mean cosine between those context vectors.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union
import logging

import numpy as np
from gensim.corpora import Dictionary
from gensim.topic_coherence import direct_confirmation_measure, segmentation
from gensim.topic_coherence.text_analysis import WordOccurrenceAccumulator

from .corpus import PHRASE_JOINER
from .dictserializable import DictSerializable, read_json, write_json
from .metrics import TopicSet
from .schema import validate

logger = logging.getLogger(__name__)

COOCCURRENCE_FORMAT_VERSION = 1

DEFAULT_WINDOW = 5


def pair_key(x: str, y: str) -> Tuple[str, str]:
    return (x, y) if x <= y else (y, x)


@dataclass
class CooccurrenceTable(DictSerializable):
    """
    Window counts keyed by term.  Indexing by a term or a pair of terms
    gives the same counts gensim's accumulators expose, so the table can be
    handed straight to gensim's confirmation measures.
    """
    window: int
    total_windows: int = 0
    counts: Dict[str, int] = field(default_factory=dict)
    joint: Dict[Tuple[str, str], int] = field(default_factory=dict)

    @property
    def num_docs(self) -> int:
        return self.total_windows

    def count(self, x: str) -> int:
        return self.counts.get(x, 0)

    def joint_count(self, x: str, y: str) -> int:
        if x == y:
            return self.count(x)
        return self.joint.get(pair_key(x, y), 0)

    def __getitem__(self, key: Union[str, Tuple[str, str]]) -> int:
        if isinstance(key, tuple):
            return self.joint_count(*key)
        return self.count(key)

    def __contains__(self, term: str) -> bool:
        return self.count(term) > 0

    def to_dict(self) -> dict:
        return dict(
            format_version=COOCCURRENCE_FORMAT_VERSION,
            window=self.window,
            total_windows=self.total_windows,
            counts=dict(sorted(self.counts.items())),
            joint=[[x, y, n] for (x, y), n in sorted(self.joint.items())])

    @staticmethod
    def from_dict(data: dict) -> 'CooccurrenceTable':
        validate(data, 'cooccurrence')
        return CooccurrenceTable(
            window=data['window'],
            total_windows=data['total_windows'],
            counts=dict(data['counts']),
            joint={pair_key(x, y): n for x, y, n in data['joint']})

    @staticmethod
    def from_accumulator(
            accumulator: WordOccurrenceAccumulator,
            terms: Sequence[str],
            window: int) -> 'CooccurrenceTable':

        table = CooccurrenceTable(window=window, total_windows=int(accumulator.num_docs))
        present = [t for t in sorted(terms) if accumulator.get_occurrences(t) > 0]
        table.counts = {t: int(accumulator.get_occurrences(t)) for t in present}
        for i, x in enumerate(present):
            for y in present[i + 1:]:
                n = int(accumulator.get_co_occurrences(x, y))
                if n:
                    table.joint[(x, y)] = n
        return table

    def save(self, path: str) -> None:
        write_json(self, path)

    @staticmethod
    def load(path: str) -> 'CooccurrenceTable':
        return CooccurrenceTable.from_dict(read_json(path))


def merge_phrases(tokens: Sequence[str], phrases: Set[str]) -> List[str]:
    """
    Join adjacent tokens that spell a multi-word term, left to right
    """
    merged, i = [], 0
    while i < len(tokens):
        if i + 1 < len(tokens):
            joined = PHRASE_JOINER.join(tokens[i: i + 2])
            if joined in phrases:
                merged.append(joined)
                i += 2
                continue
        merged.append(tokens[i])
        i += 1
    return merged


class ReferenceText(object):
    """
    Re-iterable token stream over a plain-text file, one passage per line
    """

    def __init__(self, path: str, phrases: Optional[Set[str]] = None):
        super().__init__()
        self.path = path
        self.phrases = phrases or set()

    def __iter__(self) -> Iterator[List[str]]:
        with open(self.path, 'r', encoding='utf-8') as f:
            for line in f:
                tokens = line.split()
                yield merge_phrases(tokens, self.phrases) if self.phrases else tokens


def build_cooccurrence(
        path: str,
        window: int = DEFAULT_WINDOW,
        vocabulary: Optional[Iterable[str]] = None) -> CooccurrenceTable:
    """
    Sliding-window co-occurrence over a plain-text reference corpus, one
    passage per line.  A line no longer than the window is a single window.
    Multi-word vocabulary terms are joined before windowing, and lines
    holding no counted term contribute no windows.
    """
    if window < 1:
        raise ValueError(f'window must be at least 1 but was {window}')

    keep = set(vocabulary) if vocabulary is not None else None
    phrases = {t for t in keep if PHRASE_JOINER in t} if keep is not None else set()
    texts = ReferenceText(path, phrases)
    dictionary = Dictionary(texts)

    if keep is None:
        terms = list(dictionary.token2id)
    else:
        terms = [t for t in dictionary.token2id if t in keep]

    if not terms:
        logger.warning(f'No counted term occurs in {path}')
        return CooccurrenceTable(window=window)

    relevant = {dictionary.token2id[t] for t in terms}
    accumulator = WordOccurrenceAccumulator(relevant, dictionary).accumulate(texts, window)
    table = CooccurrenceTable.from_accumulator(accumulator, terms, window)

    logger.info(
        f'Counted {table.total_windows} windows over {len(table.counts)} terms from {path}')
    return table


def npmi(x: str, y: str, table: CooccurrenceTable) -> float:
    joint = table.joint_count(x, y)
    if table.total_windows == 0 or joint == 0:
        return -1.0
    if joint == table.total_windows:
        return 1.0
    value = direct_confirmation_measure.log_ratio_measure([[(x, y)]], table, normalize=True)[0]
    return float(np.clip(value, -1.0, 1.0))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0:
        return 0.0
    return float(a @ b / norm)


def context_vectors(topic: Sequence[str], table: CooccurrenceTable) -> Dict[str, np.ndarray]:
    vectors = {}
    for x in topic:
        if x not in table:
            logger.warning(f'Topic word {x!r} does not occur in the reference corpus')
            vectors[x] = np.zeros(len(topic))
            continue
        vectors[x] = np.array([npmi(x, y, table) for y in topic])
    return vectors


def coherence(topic: Sequence[str], table: CooccurrenceTable) -> float:
    if len(topic) < 2:
        raise ValueError('Coherence needs a topic of at least two words')
    vectors = context_vectors(topic, table)
    # every ordered pair of distinct topic words; cosine is symmetric
    segments = segmentation.s_one_one([list(topic)])[0]
    return float(np.mean([cosine(vectors[x], vectors[y]) for x, y in segments]))


@dataclass
class CoherenceSummary:
    label: str
    mean: float
    median: float
    topics: List[float]


def coherence_summary(topics: TopicSet, table: CooccurrenceTable) -> List[CoherenceSummary]:
    summaries = []
    for label, slice_topics in zip(topics.labels, topics.topics):
        scores = [coherence(topic, table) for topic in slice_topics]
        summaries.append(CoherenceSummary(
            label=label,
            mean=float(np.mean(scores)),
            median=float(np.median(scores)),
            topics=scores))
    return summaries


@dataclass
class RankedTopic:
    label: str
    topic: int
    score: float
    terms: List[str]


def ranked_coherence(topics: TopicSet, table: CooccurrenceTable) -> List[RankedTopic]:
    """
    Every topic of every slice, most coherent first
    """
    ranked = [
        RankedTopic(label=s.label, topic=j, score=score, terms=list(topics.topics[t][j]))
        for t, s in enumerate(coherence_summary(topics, table))
        for j, score in enumerate(s.topics)]
    return sorted(ranked, key=lambda r: (-r.score, r.label, r.topic))

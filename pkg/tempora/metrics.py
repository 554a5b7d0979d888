"""
Evaluation of a trained model over time: held-out perplexity, time-stamp
prediction, topics read out by activating one hidden unit, topic
popularity and drift, keyword trends and their spans.
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set, Tuple, Union
import logging
import math

import numpy as np

from .corpus import Document, TemporalCorpus, Vocabulary
from .errors import UnknownTermError
from .oracle import PartitionFunction, estimate_log_z, exact_log_z
from .parallel import ordered_map, spawn_generators
from .rnnrsm import RnnRsmParams, UnrolledState, forward
from .rsm import BiasOverride, RsmParams, free_energies, stack_documents, visible_distribution

logger = logging.getLogger(__name__)

# largest hidden width evaluated exactly when z_mode is "auto"
AUTO_EXACT_HIDDEN = 20

DEFAULT_TOP_N = 20

Z_MODES = ('auto', 'exact', 'ais')


def resolve_z_mode(z_mode: str, F: int) -> str:
    if z_mode not in Z_MODES:
        raise ValueError(f'{z_mode} is not a valid z_mode; choose one of {Z_MODES}')
    if z_mode == 'auto':
        return 'exact' if F <= AUTO_EXACT_HIDDEN else 'ais'
    return z_mode


def partition_function(
        params: RsmParams,
        bias: Optional[BiasOverride],
        z_mode: str = 'exact',
        rng: Optional[np.random.Generator] = None,
        ais_chains: int = 100,
        ais_temperatures: int = 1000) -> PartitionFunction:

    mode = resolve_z_mode(z_mode, params.F)
    if mode == 'exact':
        return PartitionFunction(params, bias, exact_log_z)

    rng = rng if rng is not None else np.random.default_rng(0)

    def estimator(p: RsmParams, b: Optional[BiasOverride], D: int) -> float:
        return estimate_log_z(p, b, D, ais_chains, ais_temperatures, rng).log_z

    return PartitionFunction(params, bias, estimator)


def document_log_probs(
        params: RsmParams,
        docs: Sequence[Document],
        partition: PartitionFunction) -> np.ndarray:
    """
    Sequence-level log P of each document, log Z looked up per length
    """
    V, lengths = stack_documents(params, docs)
    energies = free_energies(params, V, lengths, partition.bias)
    log_z = np.array([partition.log_z(int(D)) for D in lengths])
    return -energies - log_z


def perplexity_from_log_probs(
        log_probs: np.ndarray,
        lengths: np.ndarray,
        document_average: bool = False) -> float:
    """
    exp(-sum log P / sum D), or with document_average the additional 1/N
    factor applied to the exponent
    """
    exponent = -np.sum(log_probs) / np.sum(lengths)
    if document_average:
        exponent /= len(log_probs)
    return float(np.exp(exponent))


def perplexity(
        params: RnnRsmParams,
        docs: Sequence[Document],
        t: int,
        state: UnrolledState,
        z_mode: str = 'exact',
        document_average: bool = False,
        partition: Optional[PartitionFunction] = None,
        rng: Optional[np.random.Generator] = None) -> float:

    if len(docs) == 0:
        raise ValueError('Perplexity needs at least one document')
    if not 0 <= t < state.T:
        raise ValueError(f'Slice index {t} is outside [0, {state.T})')

    partition = partition or partition_function(params.rsm, state.bias_overrides[t], z_mode, rng)
    log_probs = document_log_probs(params.rsm, docs, partition)
    lengths = np.array([d.length for d in docs], dtype=np.float64)
    return perplexity_from_log_probs(log_probs, lengths, document_average)


@dataclass
class SumPerplexity:
    labels: List[str]
    values: List[float]

    @property
    def total(self) -> float:
        return float(math.fsum(self.values))


def sum_perplexity(
        params: RnnRsmParams,
        held: TemporalCorpus,
        context: Optional[TemporalCorpus] = None,
        z_mode: str = 'auto',
        activation: str = 'tanh',
        scale_visible_sum: bool = False,
        document_average: bool = False,
        seed: int = 0,
        threads: Optional[int] = 1) -> SumPerplexity:
    """
    Per-slice perplexity of held-out documents and their sum.  Slice biases
    come from the recurrent state driven by the context corpus, the
    training documents, or the held-out documents themselves if absent.
    """
    context = context if context is not None else held
    if context.T != held.T:
        raise ValueError(f'Context has {context.T} slices but held-out data has {held.T}')

    state = forward(params, context, activation, scale_visible_sum)
    streams = spawn_generators(np.random.default_rng(seed), held.T)
    populated = [t for t, s in enumerate(held.slices) if s.N]

    def evaluate(t: int) -> float:
        return perplexity(
            params, held.slices[t].documents, t, state, z_mode, document_average, rng=streams[t])

    values = ordered_map(evaluate, populated, threads)
    return SumPerplexity(labels=[held.slices[t].label for t in populated], values=values)


def predict_timestamp(
        params: RnnRsmParams,
        doc: Document,
        partitions: Sequence[PartitionFunction]) -> int:
    """
    Slice under whose biases the document has the lowest perplexity;
    ties go to the earliest slice
    """
    scores = []
    for partition in partitions:
        log_prob = document_log_probs(params.rsm, [doc], partition)[0]
        scores.append(-log_prob / doc.length)
    return int(np.argmin(scores))


@dataclass
class TimestampPrediction:
    true_slice: int
    predicted_slice: int


def timestamp_predictions(
        params: RnnRsmParams,
        held: TemporalCorpus,
        context: Optional[TemporalCorpus] = None,
        z_mode: str = 'auto',
        activation: str = 'tanh',
        scale_visible_sum: bool = False,
        seed: int = 0,
        threads: Optional[int] = 1) -> List[TimestampPrediction]:

    context = context if context is not None else held
    state = forward(params, context, activation, scale_visible_sum)
    streams = spawn_generators(np.random.default_rng(seed), state.T)
    partitions = [
        partition_function(params.rsm, bias, z_mode, stream)
        for bias, stream in zip(state.bias_overrides, streams)]

    items = [(t, doc) for t, s in enumerate(held.slices) for doc in s.documents]

    def predict(item: Tuple[int, Document]) -> TimestampPrediction:
        t, doc = item
        return TimestampPrediction(true_slice=t, predicted_slice=predict_timestamp(params, doc, partitions))

    # AIS partition caches fill lazily and are not shared across threads
    if resolve_z_mode(z_mode, params.F) != 'exact':
        threads = 1
    return ordered_map(predict, items, threads)


def label_year(label: Union[str, int]) -> int:
    try:
        return int(label)
    except (TypeError, ValueError):
        raise ValueError(f'Slice label {label!r} is not a year')


def mean_absolute_error_years(
        predictions: Sequence[Union[str, int]],
        truths: Sequence[Union[str, int]]) -> float:

    if len(predictions) != len(truths):
        raise ValueError(
            f'{len(predictions)} predictions were given for {len(truths)} documents')
    if not predictions:
        raise ValueError('No predictions to score')
    errors = [abs(label_year(p) - label_year(t)) for p, t in zip(predictions, truths)]
    return float(np.mean(errors))


@dataclass
class TopicSet:
    """
    For every slice, F topics each given as its top terms in rank order
    """
    labels: List[str]
    topics: List[List[List[str]]]

    def __post_init__(self):
        if len(self.labels) != len(self.topics):
            raise ValueError('A TopicSet needs one topic list per slice label')

    @property
    def T(self) -> int:
        return len(self.labels)

    def slice_terms(self, t: int) -> Set[str]:
        return {term for topic in self.topics[t] for term in topic}

    def unique_terms(self) -> Set[str]:
        return {term for t in range(self.T) for term in self.slice_terms(t)}


def one_hot(F: int, j: int) -> np.ndarray:
    h = np.zeros(F)
    h[j] = 1
    return h


def topic_distributions(params: RnnRsmParams, bias: BiasOverride) -> np.ndarray:
    """
    Row j is the visible distribution with only hidden unit j switched on
    """
    return np.stack([
        visible_distribution(params.rsm, one_hot(params.F, j), bias) for j in range(params.F)])


def ranked_terms(p: np.ndarray, vocabulary: Vocabulary, top_n: int) -> List[str]:
    lexical = np.argsort(np.argsort(np.array(vocabulary.terms, dtype=object)))
    order = np.lexsort((lexical, -p))
    return [vocabulary.lookup(int(k)) for k in order[:top_n]]


def clamp_top_n(top_n: int, K: int) -> int:
    if top_n < 1:
        raise ValueError(f'top_n must be at least 1 but was {top_n}')
    if top_n > K:
        logger.warning(f'top_n={top_n} exceeds the vocabulary size; using {K}')
        return K
    return top_n


def extract_topics(
        params: RnnRsmParams,
        state: UnrolledState,
        vocabulary: Vocabulary,
        t: int,
        top_n: int = DEFAULT_TOP_N) -> List[List[str]]:

    top_n = clamp_top_n(top_n, vocabulary.K)
    distributions = topic_distributions(params, state.bias_overrides[t])
    return [ranked_terms(p, vocabulary, top_n) for p in distributions]


def extract_topic_set(
        params: RnnRsmParams,
        corpus: TemporalCorpus,
        top_n: int = DEFAULT_TOP_N,
        activation: str = 'tanh',
        scale_visible_sum: bool = False) -> TopicSet:

    top_n = clamp_top_n(top_n, corpus.K)
    state = forward(params, corpus, activation, scale_visible_sum)
    return TopicSet(
        labels=corpus.labels,
        topics=[extract_topics(params, state, corpus.vocabulary, t, top_n) for t in range(corpus.T)])


def set_cosine(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))


def topic_popularity(topics: TopicSet, key_terms: Iterable[str]) -> List[float]:
    key_terms = set(key_terms)
    return [
        max((set_cosine(topic, key_terms) for topic in topics.topics[t]), default=0.0)
        for t in range(topics.T)]


def best_topic(topics: TopicSet, t: int, key_terms: Set[str]) -> List[str]:
    scores = [set_cosine(topic, key_terms) for topic in topics.topics[t]]
    return topics.topics[t][int(np.argmax(scores))]


def adjacent_similarity(topics: TopicSet, key_terms: Iterable[str]) -> List[float]:
    """
    Cosine between the topics best matching the key terms in consecutive
    slices
    """
    key_terms = set(key_terms)
    best = [best_topic(topics, t, key_terms) for t in range(topics.T)]
    return [set_cosine(best[t - 1], best[t]) for t in range(1, topics.T)]


def topic_term_drift(q_t: Iterable[str], q_t2: Iterable[str]) -> float:
    return 1.0 - set_cosine(q_t, q_t2)


@dataclass
class TopicDrift:
    topic: int
    drift: float
    first_terms: List[str]
    last_terms: List[str]


def topic_drifts(topics: TopicSet, first: int, last: int) -> List[TopicDrift]:
    """
    Drift of each hidden unit's topic between two slices, largest first
    """
    for t in (first, last):
        if not 0 <= t < topics.T:
            raise ValueError(f'Slice {t} is outside [0, {topics.T})')

    drifts = [
        TopicDrift(
            topic=j,
            drift=topic_term_drift(a, b),
            first_terms=list(a),
            last_terms=list(b))
        for j, (a, b) in enumerate(zip(topics.topics[first], topics.topics[last]))]
    return sorted(drifts, key=lambda d: (-d.drift, d.topic))


@dataclass
class FocusChange:
    first: str
    second: str
    similarity: float


def focus_change(topics: TopicSet, anchors: Sequence[int]) -> List[FocusChange]:
    """
    Set cosine between the topic terms of every ordered pair of anchor
    slices
    """
    for t in anchors:
        if not 0 <= t < topics.T:
            raise ValueError(f'Anchor slice {t} is outside [0, {topics.T})')

    changes = []
    for i, a in enumerate(anchors):
        for b in anchors[i + 1:]:
            changes.append(FocusChange(
                first=topics.labels[a],
                second=topics.labels[b],
                similarity=set_cosine(topics.slice_terms(a), topics.slice_terms(b))))
    return changes


def longest_run(bits: Sequence[int]) -> int:
    best = current = 0
    for bit in bits:
        current = current + 1 if bit else 0
        best = max(best, current)
    return best


@dataclass
class TrendSequence:
    keyword: str
    bits: List[int]
    count: int

    @property
    def span(self) -> int:
        return longest_run(self.bits)

    @property
    def span_dict(self) -> Optional[float]:
        if self.count == 0:
            return None
        return self.span / self.count


def keyword_trend(
        topics: TopicSet,
        keyword: str,
        corpus: Optional[TemporalCorpus] = None) -> TrendSequence:

    count = 0
    if corpus is not None:
        try:
            keyword = corpus.vocabulary.resolve(keyword)
            count = corpus.term_frequency(keyword)
        except UnknownTermError:
            logger.warning(f'Keyword {keyword!r} is not in the vocabulary')

    bits = [int(keyword in topics.slice_terms(t)) for t in range(topics.T)]
    return TrendSequence(keyword=keyword, bits=bits, count=count)


def avg_span(topics: TopicSet, corpus: TemporalCorpus) -> float:
    """
    Mean of span / corpus count over every unique topic term; terms that
    never occur in the corpus add nothing to the sum
    """
    terms = sorted(topics.unique_terms())
    if not terms:
        raise ValueError('empty topic set')

    total = 0.0
    for term in terms:
        trend = keyword_trend(topics, term, corpus)
        if trend.span_dict is not None:
            total += trend.span_dict
    return total / len(terms)

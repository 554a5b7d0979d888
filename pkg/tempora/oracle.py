"""
Exact computations on small instances.  The partition function of a
document length D factorises over word positions, so it is a sum over the
2^F hidden configurations only:

    Z(D) = sum_h exp(D b_h.h) * (sum_k exp(b_v[k] + (W h)[k]))^D

The sample space is word sequences, not count vectors; count-vector
probabilities differ by the multinomial coefficient.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.special import expit, logsumexp, softmax

from .corpus import Document, TemporalCorpus
from .errors import EnumerationLimitError, NumericalError
from .rnnrsm import RnnRsmParams, forward, sequence_gradient
from .rsm import (
    BiasOverride, RsmGradient, RsmParams, DocumentLike, document_vector,
    effective_biases, free_energy, hidden_input, softplus, stack_documents)

logger = logging.getLogger(__name__)

MAX_EXACT_HIDDEN = 24

# upper bound on floats materialised per chunk of hidden configurations
CHUNK_BUDGET = 1 << 22

MAX_BRUTE_FORCE_TERMS = 10 ** 7

MIN_EPSILON = 1e-7
MAX_EPSILON = 1e-3


def check_enumerable(F: int) -> None:
    if F > MAX_EXACT_HIDDEN:
        raise EnumerationLimitError(
            f'Exact enumeration over 2^{F} hidden states refused; the limit is F <= {MAX_EXACT_HIDDEN}')


def check_length(D: int) -> int:
    if D < 1:
        raise ValueError(f'Document length must be at least 1 but was {D}')
    return int(D)


def hidden_configurations(F: int, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """
    Rows are the binary hidden states with integer codes in [start, stop)
    """
    stop = 2 ** F if stop is None else stop
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(F, dtype=np.int64)) & 1).astype(np.float64)


def hidden_chunks(params: RsmParams) -> Iterator[np.ndarray]:
    check_enumerable(params.F)
    total = 2 ** params.F
    size = max(1, min(total, CHUNK_BUDGET // max(params.K, 1)))
    for start in range(0, total, size):
        yield hidden_configurations(params.F, start, min(start + size, total))


def log_hidden_weights(
        H: np.ndarray,
        params: RsmParams,
        b_v: np.ndarray,
        b_h: np.ndarray,
        D: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unnormalised log weight of each hidden row after summing out the D word
    positions, with the per-position word distribution of each row
    """
    logits = b_v + H @ params.W_vh.T
    log_s = logsumexp(logits, axis=1)
    weights = D * (H @ b_h) + D * log_s
    return weights, np.exp(logits - log_s[:, None])


def exact_log_z(
        params: RsmParams,
        bias: Optional[BiasOverride] = None,
        D: int = 1) -> float:

    D = check_length(D)
    b_v, b_h = effective_biases(params, bias)
    parts = [
        logsumexp(log_hidden_weights(H, params, b_v, b_h, D)[0])
        for H in hidden_chunks(params)]
    return float(logsumexp(parts))


@dataclass
class ModelExpectation:
    log_z: float
    word: np.ndarray
    hidden: np.ndarray
    joint: np.ndarray


def exact_model_expectations(
        params: RsmParams,
        bias: Optional[BiasOverride] = None,
        D: int = 1) -> ModelExpectation:
    """
    Per-position expected word distribution, expected hidden activity and
    the expectation of their outer product under the model for length D
    """
    D = check_length(D)
    b_v, b_h = effective_biases(params, bias)
    log_z = exact_log_z(params, bias, D)

    word = np.zeros(params.K)
    hidden = np.zeros(params.F)
    joint = np.zeros((params.K, params.F))
    for H in hidden_chunks(params):
        weights, P = log_hidden_weights(H, params, b_v, b_h, D)
        w = np.exp(weights - log_z)
        word += w @ P
        hidden += w @ H
        joint += P.T @ (w[:, None] * H)

    return ModelExpectation(log_z=log_z, word=word, hidden=hidden, joint=joint)


class PartitionFunction(object):
    """
    log Z per document length for one parameter set and bias override,
    computed on first use
    """

    def __init__(
            self,
            params: RsmParams,
            bias: Optional[BiasOverride] = None,
            estimator: Optional[Callable[[RsmParams, Optional[BiasOverride], int], float]] = None):

        super().__init__()
        self.params = params
        self.bias = bias
        self.estimator = estimator or exact_log_z
        self._cache: Dict[int, float] = {}

    def log_z(self, D: int) -> float:
        D = check_length(D)
        try:
            return self._cache[D]
        except KeyError:
            value = self.estimator(self.params, self.bias, D)
            self._cache[D] = value
            return value

    @property
    def lengths(self) -> List[int]:
        return sorted(self._cache)


def exact_log_prob(
        params: RsmParams,
        doc: DocumentLike,
        bias: Optional[BiasOverride] = None,
        partition: Optional[PartitionFunction] = None) -> float:

    _, length = document_vector(params, doc)
    partition = partition or PartitionFunction(params, bias)
    return -free_energy(params, doc, bias) - partition.log_z(int(round(length)))


def exact_nll(
        params: RsmParams,
        docs: Sequence[DocumentLike],
        bias: Optional[BiasOverride] = None) -> float:

    partition = PartitionFunction(params, bias)
    return -sum(exact_log_prob(params, d, bias, partition) for d in docs)


def exact_rsm_gradient(
        params: RsmParams,
        docs: Sequence[DocumentLike],
        bias: Optional[BiasOverride] = None) -> RsmGradient:
    """
    Gradient of sum_n -ln P(V_n) with exact model expectations, one per
    distinct document length
    """
    if len(docs) == 0:
        raise ValueError('The exact gradient needs at least one document')

    _, b_h = effective_biases(params, bias)
    positives, lengths = stack_documents(params, docs)
    positive_hidden = expit(hidden_input(params, positives, lengths, b_h))

    grad = RsmGradient(
        dW_vh=-(positives.T @ positive_hidden),
        db_v_t=-positives.sum(axis=0),
        db_h_t=-(lengths[:, None] * positive_hidden).sum(axis=0))

    distinct, counts = np.unique(lengths.astype(np.int64), return_counts=True)
    for D, n in zip(distinct, counts):
        e = exact_model_expectations(params, bias, int(D))
        grad.dW_vh += n * D * e.joint
        grad.db_v_t += n * D * e.word
        grad.db_h_t += n * D * e.hidden

    return grad


def exact_slice_gradient(
        params: RsmParams,
        docs: Sequence[Document],
        bias: BiasOverride,
        rng: Optional[np.random.Generator] = None) -> RsmGradient:
    """
    Slice-gradient strategy for sequence_gradient using exact expectations
    in place of contrastive-divergence negatives
    """
    return exact_rsm_gradient(params, docs, bias)


def exact_sequence_cost(
        params: RnnRsmParams,
        corpus: TemporalCorpus,
        activation: str = 'tanh',
        scale_visible_sum: bool = False) -> float:

    state = forward(params, corpus, activation, scale_visible_sum)
    return sum(
        exact_nll(params.rsm, s.documents, state.bias_overrides[t])
        for t, s in enumerate(corpus.slices) if s.N)


def check_brute_force(K: int, F: int, D: int) -> None:
    terms = (K ** D) * (2 ** F)
    if terms > MAX_BRUTE_FORCE_TERMS:
        raise EnumerationLimitError(
            f'Brute-force enumeration of {K}^{D} sequences and 2^{F} hidden states refused')


def sequence_counts(K: int, D: int) -> Iterator[np.ndarray]:
    """
    Count vector of every one of the K^D word sequences of length D
    """
    for sequence in product(range(K), repeat=D):
        yield np.bincount(sequence, minlength=K).astype(np.float64)


def log_unnormalised(
        params: RsmParams,
        v: np.ndarray,
        bias: Optional[BiasOverride] = None) -> float:
    """
    log sum_h exp(-E(V, h)), summing the energy directly over hidden states
    """
    b_v, b_h = effective_biases(params, bias)
    H = hidden_configurations(params.F)
    D = v.sum()
    negative_energy = v @ b_v + D * (H @ b_h) + H @ (params.W_vh.T @ v)
    return float(logsumexp(negative_energy))


def brute_force_log_z(
        params: RsmParams,
        bias: Optional[BiasOverride] = None,
        D: int = 1) -> float:

    D = check_length(D)
    check_brute_force(params.K, params.F, D)
    return float(logsumexp([
        log_unnormalised(params, v, bias) for v in sequence_counts(params.K, D)]))


def brute_force_log_prob(
        params: RsmParams,
        doc: DocumentLike,
        bias: Optional[BiasOverride] = None) -> float:

    v, length = document_vector(params, doc)
    return log_unnormalised(params, v, bias) - brute_force_log_z(params, bias, int(round(length)))


@dataclass
class AisEstimate:
    log_z: float
    standard_error: float
    n_chains: int
    n_temperatures: int


def ais_log_unnormalised(
        params: RsmParams,
        V: np.ndarray,
        D: int,
        b_v: np.ndarray,
        b_h: np.ndarray,
        beta: float) -> np.ndarray:
    return V @ b_v + softplus(beta * (D * b_h + V @ params.W_vh)).sum(axis=1)


def estimate_log_z(
        params: RsmParams,
        bias: Optional[BiasOverride] = None,
        D: int = 1,
        n_chains: int = 100,
        n_temperatures: int = 1000,
        rng: Optional[np.random.Generator] = None) -> AisEstimate:
    """
    Annealed importance sampling estimate of log Z(D).  The base model keeps
    only the visible biases, so its partition function is
    2^F * (sum_k exp b_v[k])^D; intermediate models scale the interaction
    and hidden-bias terms by beta.
    """
    D = check_length(D)
    if n_chains < 2:
        raise ValueError(f'AIS needs at least two chains but was given {n_chains}')
    if n_temperatures < 2:
        raise ValueError(f'AIS needs at least two temperatures but was given {n_temperatures}')

    rng = rng if rng is not None else np.random.default_rng()
    b_v, b_h = effective_biases(params, bias)
    W = params.W_vh

    base_log_z = params.F * math.log(2) + D * float(logsumexp(b_v))
    V = rng.multinomial(D, softmax(b_v), size=n_chains).astype(np.float64)

    betas = np.linspace(0, 1, n_temperatures)
    log_w = np.zeros(n_chains)
    for previous, beta in zip(betas[:-1], betas[1:]):
        log_w += ais_log_unnormalised(params, V, D, b_v, b_h, beta) \
            - ais_log_unnormalised(params, V, D, b_v, b_h, previous)

        p_h = expit(beta * (D * b_h + V @ W))
        H = (rng.random(p_h.shape) < p_h).astype(np.float64)
        P = softmax(b_v + beta * (H @ W.T), axis=1)
        V = rng.multinomial(D, P / P.sum(axis=1, keepdims=True)).astype(np.float64)

    log_mean = float(logsumexp(log_w) - math.log(n_chains))
    w = np.exp(log_w - log_w.max())
    standard_error = float(np.std(w, ddof=1) / (np.mean(w) * math.sqrt(n_chains)))

    logger.debug(f'AIS log Z({D}) = {base_log_z + log_mean:.6f} +/- {standard_error:.6f}')
    return AisEstimate(
        log_z=base_log_z + log_mean,
        standard_error=standard_error,
        n_chains=n_chains,
        n_temperatures=n_temperatures)


@dataclass
class FiniteDifferenceReport:
    max_relative_deviation: float
    worst_index: int
    numeric: np.ndarray
    analytic: np.ndarray
    indices: np.ndarray


def relative_deviation(analytic: np.ndarray, numeric: np.ndarray, floor: float) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def finite_difference_check(
        cost: Callable[[np.ndarray], float],
        x: np.ndarray,
        gradient: np.ndarray,
        epsilon: float = 1e-6,
        indices: Optional[Sequence[int]] = None,
        floor: float = 1e-6) -> FiniteDifferenceReport:
    """
    Compare an analytic gradient with central differences of cost at x,
    coordinate by coordinate
    """
    if not MIN_EPSILON <= epsilon <= MAX_EPSILON:
        raise ValueError(
            f'epsilon must lie in [{MIN_EPSILON}, {MAX_EPSILON}] but was {epsilon}')

    x = np.array(x, dtype=np.float64)
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.shape != x.shape:
        raise ValueError(f'Gradient shape {gradient.shape} does not match {x.shape}')

    indices = np.arange(len(x)) if indices is None else np.asarray(indices, dtype=np.int64)

    def evaluate(point: np.ndarray) -> float:
        value = float(cost(point))
        if not math.isfinite(value):
            raise NumericalError(f'Cost was {value} during a finite-difference check')
        return value

    numeric = np.zeros(len(indices))
    for n, i in enumerate(indices):
        original = x[i]
        x[i] = original + epsilon
        plus = evaluate(x)
        x[i] = original - epsilon
        minus = evaluate(x)
        x[i] = original
        numeric[n] = (plus - minus) / (2 * epsilon)

    analytic = gradient[indices]
    deviations = relative_deviation(analytic, numeric, floor)
    worst = int(np.argmax(deviations)) if len(deviations) else 0
    return FiniteDifferenceReport(
        max_relative_deviation=float(deviations[worst]) if len(deviations) else 0.0,
        worst_index=int(indices[worst]) if len(indices) else -1,
        numeric=numeric,
        analytic=analytic,
        indices=indices)


def epsilon_sweep(
        cost: Callable[[np.ndarray], float],
        x: np.ndarray,
        gradient: np.ndarray,
        epsilons: Sequence[float] = (1e-6, 1e-5, 1e-4, 1e-3),
        growth: float = 10.0) -> Tuple[List[float], bool]:
    """
    Deviation at each epsilon, and whether the largest epsilon is too large,
    i.e. its deviation exceeds the smallest epsilon's by the growth factor
    """
    deviations = [
        finite_difference_check(cost, x, gradient, eps).max_relative_deviation
        for eps in sorted(epsilons)]
    too_large = deviations[-1] > growth * max(deviations[0], np.finfo(np.float64).eps)
    if too_large:
        logger.warning(f'Finite-difference deviation grows with epsilon: {deviations}')
    return deviations, too_large


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


@dataclass
class BatteryReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


SequenceGradientFunction = Callable[[RnnRsmParams], np.ndarray]


def sample_indices(n: int, max_coordinates: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    if n <= max_coordinates:
        return None
    return np.sort(rng.choice(n, size=max_coordinates, replace=False))


def run_battery(
        params: RnnRsmParams,
        corpus: TemporalCorpus,
        fd_epsilon: float = 1e-5,
        tolerance: float = 1e-4,
        activation: str = 'tanh',
        scale_visible_sum: bool = False,
        gradient: Optional[SequenceGradientFunction] = None,
        max_coordinates: int = 200,
        floor: float = 1e-3,
        rng: Optional[np.random.Generator] = None) -> BatteryReport:
    """
    Normalisation, factorisation and gradient checks on a small model.
    ``gradient`` replaces the analytic sequence gradient under test.
    """
    check_enumerable(params.F)
    if max_coordinates < 1:
        raise ValueError(f'max_coordinates must be at least 1 but was {max_coordinates}')
    rng = rng if rng is not None else np.random.default_rng(0)
    report = BatteryReport()
    state = forward(params, corpus, activation, scale_visible_sum)
    populated = [t for t, s in enumerate(corpus.slices) if s.N]
    if not populated:
        raise ValueError('The verification battery needs at least one document')

    t = populated[0]
    bias = state.bias_overrides[t]
    D = 2

    try:
        check_brute_force(params.K, params.F, D)
        partition = PartitionFunction(params.rsm, bias)
        total = math.fsum(
            math.exp(log_unnormalised(params.rsm, v, bias) - partition.log_z(D))
            for v in sequence_counts(params.K, D))
        report.checks.append(CheckResult('normalisation', abs(total - 1), 1e-9))

        exact = exact_log_z(params.rsm, bias, D)
        brute = brute_force_log_z(params.rsm, bias, D)
        report.checks.append(CheckResult(
            'factorisation', abs(exact - brute) / max(abs(brute), 1.0), 1e-10))
    except EnumerationLimitError:
        logger.warning('Vocabulary too large for brute-force enumeration; skipping identity checks')

    docs = corpus.slices[t].documents
    # the slice biases become the static biases being differentiated
    static = RsmParams(W_vh=params.rsm.W_vh, b_v=bias.b_v_t, b_h=bias.b_h_t)
    rsm_x = np.concatenate([a.ravel() for a in static.arrays().values()])

    def rsm_cost(x: np.ndarray) -> float:
        K, F = params.K, params.F
        candidate = RsmParams(
            W_vh=x[:K * F].reshape(K, F), b_v=x[K * F: K * F + K], b_h=x[K * F + K:])
        return exact_nll(candidate, docs)

    g = exact_rsm_gradient(static, docs)
    rsm_gradient = np.concatenate([g.dW_vh.ravel(), g.db_v_t, g.db_h_t])
    rsm_report = finite_difference_check(
        rsm_cost, rsm_x, rsm_gradient, fd_epsilon,
        sample_indices(len(rsm_x), max_coordinates, rng), floor)
    report.checks.append(CheckResult('rsm_gradient', rsm_report.max_relative_deviation, tolerance))

    if gradient is None:
        def gradient(p: RnnRsmParams) -> np.ndarray:
            return sequence_gradient(
                p, corpus,
                slice_gradient=exact_slice_gradient,
                activation=activation,
                scale_visible_sum=scale_visible_sum).flatten()

    def sequence_cost(x: np.ndarray) -> float:
        return exact_sequence_cost(params.unflatten(x), corpus, activation, scale_visible_sum)

    x = params.flatten()
    sequence_report = finite_difference_check(
        sequence_cost, x, gradient(params), fd_epsilon,
        sample_indices(len(x), max_coordinates, rng), floor)
    report.checks.append(
        CheckResult('sequence_gradient', sequence_report.max_relative_deviation, tolerance))

    for check in report.checks:
        level = logging.INFO if check.passed else logging.ERROR
        logger.log(level, f'{check.name}: {check.value:.3e} (tolerance {check.tolerance:.0e})')

    return report

"""
The static Replicated Softmax Model: a family of RBMs over word counts in
which every word position of a document is a softmax unit sharing one set of
weights with the binary hidden (topic) units.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy.special import expit, softmax

from .corpus import Document, count_matrix
from .dictserializable import DictSerializable
from .parallel import ordered_map, spawn_generators

logger = logging.getLogger(__name__)

DocumentLike = Union[Document, np.ndarray]


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def as_vector(data, name: str, size: Optional[int] = None) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f'{name} must be a vector but had shape {arr.shape}')
    if size is not None and arr.shape[0] != size:
        raise ValueError(f'{name} must have length {size} but had length {arr.shape[0]}')
    return arr


def as_matrix(data, name: str, shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f'{name} must be a matrix but had shape {arr.shape}')
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f'{name} must have shape {tuple(shape)} but had shape {arr.shape}')
    return arr


@dataclass(eq=False)
class RsmParams(DictSerializable):
    W_vh: np.ndarray
    b_v: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        self.W_vh = as_matrix(self.W_vh, 'W_vh')
        K, F = self.W_vh.shape
        self.b_v = as_vector(self.b_v, 'b_v', K)
        self.b_h = as_vector(self.b_h, 'b_h', F)

    @property
    def K(self) -> int:
        return self.W_vh.shape[0]

    @property
    def F(self) -> int:
        return self.W_vh.shape[1]

    def arrays(self) -> dict:
        return dict(W_vh=self.W_vh, b_v=self.b_v, b_h=self.b_h)

    def non_finite(self) -> Optional[str]:
        for name, arr in self.arrays().items():
            if not np.all(np.isfinite(arr)):
                return name
        return None

    def copy(self) -> 'RsmParams':
        return RsmParams(W_vh=self.W_vh.copy(), b_v=self.b_v.copy(), b_h=self.b_h.copy())

    def __eq__(self, other: 'RsmParams') -> bool:
        return isinstance(other, RsmParams) and all(
            np.array_equal(a, b) for a, b in zip(self.arrays().values(), other.arrays().values()))

    @staticmethod
    def zeros(K: int, F: int) -> 'RsmParams':
        return RsmParams(W_vh=np.zeros((K, F)), b_v=np.zeros(K), b_h=np.zeros(F))

    @staticmethod
    def random(K: int, F: int, rng: np.random.Generator, scale: float = 0.01) -> 'RsmParams':
        return RsmParams(W_vh=rng.normal(0, scale, (K, F)), b_v=np.zeros(K), b_h=np.zeros(F))

    def to_dict(self) -> dict:
        return {name: arr.tolist() for name, arr in self.arrays().items()}

    @staticmethod
    def from_dict(data: dict) -> 'RsmParams':
        return RsmParams(W_vh=data['W_vh'], b_v=data['b_v'], b_h=data['b_h'])


@dataclass(frozen=True, eq=False)
class BiasOverride:
    """
    Per-slice visible and hidden biases that replace the base biases
    """
    b_v_t: np.ndarray
    b_h_t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'b_v_t', as_vector(self.b_v_t, 'b_v_t'))
        object.__setattr__(self, 'b_h_t', as_vector(self.b_h_t, 'b_h_t'))

    def __eq__(self, other: 'BiasOverride') -> bool:
        return isinstance(other, BiasOverride) \
            and np.array_equal(self.b_v_t, other.b_v_t) \
            and np.array_equal(self.b_h_t, other.b_h_t)


def hidden_state(bits) -> np.ndarray:
    h = np.array(bits, dtype=np.float64)
    if h.ndim != 1 or not np.all((h == 0) | (h == 1)):
        raise ValueError('A hidden state must be a binary vector')
    return h


@dataclass(eq=False)
class RsmGradient:
    """
    Gradient of the negative log-likelihood cost with respect to the shared
    weights and the (possibly overridden) biases of one document collection
    """
    dW_vh: np.ndarray
    db_v_t: np.ndarray
    db_h_t: np.ndarray
    reconstruction_error: float = 0.0

    @staticmethod
    def zeros(K: int, F: int) -> 'RsmGradient':
        return RsmGradient(dW_vh=np.zeros((K, F)), db_v_t=np.zeros(K), db_h_t=np.zeros(F))

    def __add__(self, other: 'RsmGradient') -> 'RsmGradient':
        return RsmGradient(
            dW_vh=self.dW_vh + other.dW_vh,
            db_v_t=self.db_v_t + other.db_v_t,
            db_h_t=self.db_h_t + other.db_h_t,
            reconstruction_error=self.reconstruction_error + other.reconstruction_error)

    def scaled(self, factor: float) -> 'RsmGradient':
        return RsmGradient(
            dW_vh=self.dW_vh * factor,
            db_v_t=self.db_v_t * factor,
            db_h_t=self.db_h_t * factor,
            reconstruction_error=self.reconstruction_error)


def effective_biases(
        params: RsmParams,
        bias: Optional[BiasOverride]) -> Tuple[np.ndarray, np.ndarray]:

    if bias is None:
        return params.b_v, params.b_h

    if bias.b_v_t.shape != params.b_v.shape or bias.b_h_t.shape != params.b_h.shape:
        raise ValueError(
            f'Bias override shapes {bias.b_v_t.shape}, {bias.b_h_t.shape} do not match '
            f'K={params.K}, F={params.F}')
    return bias.b_v_t, bias.b_h_t


def document_vector(params: RsmParams, doc: DocumentLike) -> Tuple[np.ndarray, float]:
    if isinstance(doc, Document):
        return doc.dense(params.K), float(doc.length)

    v = as_vector(doc, 'document', params.K)
    return v, float(v.sum())


def hidden_input(
        params: RsmParams,
        v: np.ndarray,
        length: Union[float, np.ndarray],
        b_h: np.ndarray) -> np.ndarray:
    """
    D_n b_h + W^T v for one count vector (K,) or a stack of them (N, K)
    """
    length = np.asarray(length, dtype=np.float64)
    if v.ndim == 2:
        length = length.reshape(-1, 1)
    return length * b_h + v @ params.W_vh


def visible_logits(params: RsmParams, h: np.ndarray, b_v: np.ndarray) -> np.ndarray:
    return b_v + h @ params.W_vh.T


def hidden_activation(
        params: RsmParams,
        doc: DocumentLike,
        bias: Optional[BiasOverride] = None) -> np.ndarray:

    _, b_h = effective_biases(params, bias)
    v, length = document_vector(params, doc)
    return expit(hidden_input(params, v, length, b_h))


def visible_distribution(
        params: RsmParams,
        h: np.ndarray,
        bias: Optional[BiasOverride] = None) -> np.ndarray:

    b_v, _ = effective_biases(params, bias)
    h = hidden_state(as_vector(h, 'h', params.F))
    return softmax(visible_logits(params, h, b_v))


def sample_hidden(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(p.shape) < p).astype(np.float64)


def sample_visible(p: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    return rng.multinomial(length, p / p.sum()).astype(np.float64)


def sample_document(
        params: RsmParams,
        h: np.ndarray,
        D: int,
        bias: Optional[BiasOverride] = None,
        rng: Optional[np.random.Generator] = None) -> Document:

    if D < 1:
        raise ValueError(f'Document length must be at least 1 but was {D}')
    rng = rng if rng is not None else np.random.default_rng()
    p = visible_distribution(params, h, bias)
    return Document.from_dense(sample_visible(p, int(D), rng))


def free_energy(
        params: RsmParams,
        doc: DocumentLike,
        bias: Optional[BiasOverride] = None) -> float:

    b_v, b_h = effective_biases(params, bias)
    v, length = document_vector(params, doc)
    if length <= 0:
        raise ValueError('Free energy is undefined for an empty document')
    return float(-(v @ b_v) - softplus(hidden_input(params, v, length, b_h)).sum())


def free_energies(
        params: RsmParams,
        V: np.ndarray,
        lengths: np.ndarray,
        bias: Optional[BiasOverride] = None) -> np.ndarray:

    b_v, b_h = effective_biases(params, bias)
    return -(V @ b_v) - softplus(hidden_input(params, V, lengths, b_h)).sum(axis=1)


def gibbs_chain(
        params: RsmParams,
        v: np.ndarray,
        length: int,
        b_v: np.ndarray,
        b_h: np.ndarray,
        k_steps: int,
        rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run k alternating steps started at the data, resampling all D_n words
    as one multinomial draw per step.  Returns the negative counts and a
    hidden sample drawn from them.
    """
    for _ in range(k_steps):
        h = sample_hidden(expit(hidden_input(params, v, length, b_h)), rng)
        v = sample_visible(softmax(visible_logits(params, h, b_v)), length, rng)

    h = sample_hidden(expit(hidden_input(params, v, length, b_h)), rng)
    return v, h


def draw_negatives(
        params: RsmParams,
        positives: np.ndarray,
        lengths: np.ndarray,
        bias: Optional[BiasOverride],
        k_steps: int,
        rng: np.random.Generator,
        threads: Optional[int] = 1) -> Tuple[np.ndarray, np.ndarray]:

    b_v, b_h = effective_biases(params, bias)
    streams = spawn_generators(rng, len(positives))

    def chain(i: int) -> Tuple[np.ndarray, np.ndarray]:
        return gibbs_chain(
            params, positives[i], int(lengths[i]), b_v, b_h, k_steps, streams[i])

    results = ordered_map(chain, range(len(positives)), threads)
    negatives = np.stack([r[0] for r in results])
    hidden = np.stack([r[1] for r in results])
    return negatives, hidden


def contrastive_statistics(
        params: RsmParams,
        positives: np.ndarray,
        negatives: np.ndarray,
        lengths: np.ndarray,
        bias: Optional[BiasOverride] = None,
        negative_hidden: Optional[np.ndarray] = None) -> RsmGradient:
    """
    Summed free-energy gradient difference between negative and positive
    count vectors.  Hidden statistics are conditional probabilities unless
    sampled negative hidden states are supplied.
    """
    _, b_h = effective_biases(params, bias)
    lengths = np.asarray(lengths, dtype=np.float64)

    positive_hidden = expit(hidden_input(params, positives, lengths, b_h))
    if negative_hidden is None:
        negative_hidden = expit(hidden_input(params, negatives, lengths, b_h))

    total = lengths.sum()
    return RsmGradient(
        dW_vh=negatives.T @ negative_hidden - positives.T @ positive_hidden,
        db_v_t=(negatives - positives).sum(axis=0),
        db_h_t=(lengths[:, None] * (negative_hidden - positive_hidden)).sum(axis=0),
        reconstruction_error=float(np.abs(negatives - positives).sum() / (2 * total)) if total else 0.0)


def stack_documents(params: RsmParams, docs: Sequence[DocumentLike]) -> Tuple[np.ndarray, np.ndarray]:
    if docs and all(isinstance(d, Document) for d in docs):
        V = count_matrix(docs, params.K)
        return V.toarray(), np.asarray(V.sum(axis=1), dtype=np.float64).reshape(-1)

    vectors: List[np.ndarray] = []
    lengths: List[float] = []
    for doc in docs:
        v, length = document_vector(params, doc)
        vectors.append(v)
        lengths.append(length)
    return np.stack(vectors), np.array(lengths)


def cd_gradient(
        params: RsmParams,
        docs: Sequence[DocumentLike],
        bias: Optional[BiasOverride] = None,
        k_steps: int = 1,
        rng: Optional[np.random.Generator] = None,
        mean_field_final: bool = True,
        threads: Optional[int] = 1) -> RsmGradient:

    if k_steps < 1:
        raise ValueError(f'k_steps must be at least 1 but was {k_steps}')
    if len(docs) == 0:
        raise ValueError('Contrastive divergence needs at least one document')

    rng = rng if rng is not None else np.random.default_rng()
    positives, lengths = stack_documents(params, docs)
    negatives, hidden = draw_negatives(params, positives, lengths, bias, k_steps, rng, threads)

    return contrastive_statistics(
        params,
        positives,
        negatives,
        lengths,
        bias,
        negative_hidden=None if mean_field_final else hidden)

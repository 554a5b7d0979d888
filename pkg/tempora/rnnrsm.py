from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence
import logging

import numpy as np
from scipy.special import expit

from .corpus import Document, TemporalCorpus
from .dictserializable import DictSerializable
from .parallel import spawn_generators
from .rsm import BiasOverride, RsmGradient, RsmParams, as_matrix, as_vector, cd_gradient

logger = logging.getLogger(__name__)

RNN_PARAMETER_NAMES = ('W_uv', 'W_uh', 'W_vu', 'W_uu', 'b_u', 'u0')
PARAMETER_NAMES = ('W_vh', 'b_v', 'b_h') + RNN_PARAMETER_NAMES


@dataclass(eq=False)
class RnnRsmParams(DictSerializable):
    rsm: RsmParams
    W_uv: np.ndarray
    W_uh: np.ndarray
    W_vu: np.ndarray
    W_uu: np.ndarray
    b_u: np.ndarray
    u0: np.ndarray

    def __post_init__(self):
        K, F = self.rsm.K, self.rsm.F
        self.W_uu = as_matrix(self.W_uu, 'W_uu')
        U = self.W_uu.shape[0]
        self.W_uu = as_matrix(self.W_uu, 'W_uu', (U, U))
        self.W_uv = as_matrix(self.W_uv, 'W_uv', (K, U))
        self.W_uh = as_matrix(self.W_uh, 'W_uh', (F, U))
        self.W_vu = as_matrix(self.W_vu, 'W_vu', (U, K))
        self.b_u = as_vector(self.b_u, 'b_u', U)
        self.u0 = as_vector(self.u0, 'u0', U)

    @property
    def K(self) -> int:
        return self.rsm.K

    @property
    def F(self) -> int:
        return self.rsm.F

    @property
    def U(self) -> int:
        return self.W_uu.shape[0]

    def arrays(self) -> Dict[str, np.ndarray]:
        arrays = self.rsm.arrays()
        arrays.update({name: getattr(self, name) for name in RNN_PARAMETER_NAMES})
        return arrays

    def non_finite(self) -> Optional[str]:
        for name, arr in self.arrays().items():
            if not np.all(np.isfinite(arr)):
                return name
        return None

    def replace(self, **arrays: np.ndarray) -> 'RnnRsmParams':
        current = {name: arr.copy() for name, arr in self.arrays().items()}
        unknown = set(arrays) - set(current)
        if unknown:
            raise KeyError(f'Unknown parameters {sorted(unknown)}')
        current.update(arrays)
        return RnnRsmParams.from_arrays(current)

    def copy(self) -> 'RnnRsmParams':
        return self.replace()

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.arrays()[name].ravel() for name in PARAMETER_NAMES])

    def unflatten(self, vector: np.ndarray) -> 'RnnRsmParams':
        vector = np.asarray(vector, dtype=np.float64)
        arrays, offset = {}, 0
        for name, arr in self.arrays().items():
            arrays[name] = vector[offset: offset + arr.size].reshape(arr.shape).copy()
            offset += arr.size
        if offset != len(vector):
            raise ValueError(f'Expected {offset} values but received {len(vector)}')
        return RnnRsmParams.from_arrays(arrays)

    def __eq__(self, other: 'RnnRsmParams') -> bool:
        return isinstance(other, RnnRsmParams) and all(
            np.array_equal(a, b) for a, b in zip(self.arrays().values(), other.arrays().values()))

    @staticmethod
    def from_arrays(arrays: Dict[str, np.ndarray]) -> 'RnnRsmParams':
        return RnnRsmParams(
            rsm=RsmParams(W_vh=arrays['W_vh'], b_v=arrays['b_v'], b_h=arrays['b_h']),
            **{name: arrays[name] for name in RNN_PARAMETER_NAMES})

    @staticmethod
    def from_rsm(
            rsm: RsmParams,
            U: int,
            rng: np.random.Generator,
            scale: float = 0.01) -> 'RnnRsmParams':
        K, F = rsm.K, rsm.F
        return RnnRsmParams(
            rsm=rsm,
            W_uv=rng.normal(0, scale, (K, U)),
            W_uh=rng.normal(0, scale, (F, U)),
            W_vu=rng.normal(0, scale, (U, K)),
            W_uu=rng.normal(0, scale, (U, U)),
            b_u=np.zeros(U),
            u0=np.zeros(U))

    @staticmethod
    def initialise(
            K: int,
            F: int,
            U: int,
            rng: np.random.Generator,
            scale: float = 0.01) -> 'RnnRsmParams':
        return RnnRsmParams.from_rsm(RsmParams.random(K, F, rng, scale), U, rng, scale)

    @staticmethod
    def zeros(K: int, F: int, U: int) -> 'RnnRsmParams':
        return RnnRsmParams(
            rsm=RsmParams.zeros(K, F),
            W_uv=np.zeros((K, U)),
            W_uh=np.zeros((F, U)),
            W_vu=np.zeros((U, K)),
            W_uu=np.zeros((U, U)),
            b_u=np.zeros(U),
            u0=np.zeros(U))

    def to_dict(self) -> dict:
        return {name: arr.tolist() for name, arr in self.arrays().items()}

    @staticmethod
    def from_dict(data: dict) -> 'RnnRsmParams':
        return RnnRsmParams.from_arrays({name: data[name] for name in PARAMETER_NAMES})


@dataclass
class UnrolledState:
    u: List[np.ndarray]
    bias_overrides: List[BiasOverride]
    slice_count_sums: List[np.ndarray]

    @property
    def T(self) -> int:
        return len(self.bias_overrides)


@dataclass(eq=False)
class RnnRsmGradient:
    W_vh: np.ndarray
    b_v: np.ndarray
    b_h: np.ndarray
    W_uv: np.ndarray
    W_uh: np.ndarray
    W_vu: np.ndarray
    W_uu: np.ndarray
    b_u: np.ndarray
    u0: np.ndarray
    b_v_t: List[np.ndarray] = field(default_factory=list)
    b_h_t: List[np.ndarray] = field(default_factory=list)
    reconstruction_error: float = 0.0

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    def flatten(self) -> np.ndarray:
        return np.concatenate([getattr(self, name).ravel() for name in PARAMETER_NAMES])

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(arr ** 2) for arr in self.arrays().values())))

    def scaled(self, factor: float) -> 'RnnRsmGradient':
        return RnnRsmGradient(
            **{name: arr * factor for name, arr in self.arrays().items()},
            b_v_t=[g * factor for g in self.b_v_t],
            b_h_t=[g * factor for g in self.b_h_t],
            reconstruction_error=self.reconstruction_error)


def tanh_backward(u_next: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    return upstream * (1 - u_next ** 2)


def logistic_backward(u_next: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    return upstream * u_next * (1 - u_next)


ACTIVATIONS = {
    'tanh': (np.tanh, tanh_backward),
    'logistic': (expit, logistic_backward),
}


def get_activation(name: str):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f'{name} is not an allowed recurrent activation')


def recurrent_inputs(corpus: TemporalCorpus, scale_visible_sum: bool = False) -> List[np.ndarray]:
    inputs = []
    for s in corpus.slices:
        total = s.count_sum(corpus.K)
        if scale_visible_sum and s.N:
            total = total / s.N
        inputs.append(total)
    return inputs


def slice_bias(params: RnnRsmParams, u_prev: np.ndarray) -> BiasOverride:
    return BiasOverride(
        b_v_t=params.rsm.b_v + params.W_uv @ u_prev,
        b_h_t=params.rsm.b_h + params.W_uh @ u_prev)


def forward(
        params: RnnRsmParams,
        corpus: TemporalCorpus,
        activation: str = 'tanh',
        scale_visible_sum: bool = False) -> UnrolledState:

    if corpus.K != params.K:
        raise ValueError(f'Corpus has K={corpus.K} but the model has K={params.K}')

    squash, _ = get_activation(activation)
    sums = recurrent_inputs(corpus, scale_visible_sum)

    u = [params.u0.copy()]
    overrides = []
    for total in sums:
        overrides.append(slice_bias(params, u[-1]))
        u.append(squash(params.b_u + params.W_uu @ u[-1] + params.W_vu @ total))

    return UnrolledState(u=u, bias_overrides=overrides, slice_count_sums=sums)


SliceGradient = Callable[
    [RsmParams, Sequence[Document], BiasOverride, np.random.Generator], RsmGradient]


def cd_slice_gradient(
        k_steps: int,
        mean_field_final: bool = True,
        threads: Optional[int] = 1,
        batch_size: Optional[int] = None) -> SliceGradient:
    """
    Contrastive-divergence slice gradient.  With a batch size, each slice
    contributes a random subset of its documents, rescaled to the slice size.
    """
    def gradient(
            rsm: RsmParams,
            docs: Sequence[Document],
            bias: BiasOverride,
            rng: np.random.Generator) -> RsmGradient:

        if batch_size is not None and batch_size < len(docs):
            chosen = np.sort(rng.choice(len(docs), size=batch_size, replace=False))
            batch = [docs[i] for i in chosen]
            g = cd_gradient(rsm, batch, bias, k_steps, rng, mean_field_final, threads)
            return g.scaled(len(docs) / batch_size)

        return cd_gradient(rsm, docs, bias, k_steps, rng, mean_field_final, threads)

    return gradient


def sequence_gradient(
        params: RnnRsmParams,
        corpus: TemporalCorpus,
        k_steps: int = 1,
        rng: Optional[np.random.Generator] = None,
        slice_gradient: Optional[SliceGradient] = None,
        activation: str = 'tanh',
        scale_visible_sum: bool = False,
        state: Optional[UnrolledState] = None) -> RnnRsmGradient:

    if k_steps < 1:
        raise ValueError(f'k_steps must be at least 1 but was {k_steps}')

    rng = rng if rng is not None else np.random.default_rng()
    slice_gradient = slice_gradient or cd_slice_gradient(k_steps)
    state = state or forward(params, corpus, activation, scale_visible_sum)
    _, backward = get_activation(activation)

    T, K, F, U = corpus.T, params.K, params.F, params.U
    streams = spawn_generators(rng, T)

    slice_gradients: List[RsmGradient] = []
    for t, s in enumerate(corpus.slices):
        if s.N == 0:
            slice_gradients.append(RsmGradient.zeros(K, F))
            continue
        slice_gradients.append(
            slice_gradient(params.rsm, s.documents, state.bias_overrides[t], streams[t]))

    g_v = [g.db_v_t for g in slice_gradients]
    g_h = [g.db_h_t for g in slice_gradients]

    # du[t] is dC/du^(t); u^(T) feeds nothing
    du = [np.zeros(U) for _ in range(T + 1)]
    pre = [np.zeros(U) for _ in range(T + 1)]
    for t in range(T - 1, -1, -1):
        pre[t + 1] = backward(state.u[t + 1], du[t + 1])
        du[t] = params.W_uu.T @ pre[t + 1] + params.W_uh.T @ g_h[t] + params.W_uv.T @ g_v[t]

    grad = RnnRsmGradient(
        W_vh=np.zeros((K, F)),
        b_v=np.zeros(K),
        b_h=np.zeros(F),
        W_uv=np.zeros((K, U)),
        W_uh=np.zeros((F, U)),
        W_vu=np.zeros((U, K)),
        W_uu=np.zeros((U, U)),
        b_u=np.zeros(U),
        u0=du[0].copy(),
        b_v_t=g_v,
        b_h_t=g_h)

    for t in range(T):
        u_prev = state.u[t]
        grad.W_vh += slice_gradients[t].dW_vh
        grad.b_v += g_v[t]
        grad.b_h += g_h[t]
        grad.W_uv += np.outer(g_v[t], u_prev)
        grad.W_uh += np.outer(g_h[t], u_prev)
        grad.W_vu += np.outer(pre[t + 1], state.slice_count_sums[t])
        grad.W_uu += np.outer(pre[t + 1], u_prev)
        grad.b_u += pre[t + 1]

    populated = [g.reconstruction_error for g, s in zip(slice_gradients, corpus.slices) if s.N]
    grad.reconstruction_error = float(np.mean(populated)) if populated else 0.0
    return grad

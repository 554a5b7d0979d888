from dataclasses import asdict, dataclass, replace
from typing import Dict, List, Optional
import logging
import math
import os

import numpy as np

from .corpus import TemporalCorpus, TimeSlice
from .dictserializable import DictSerializable, read_json, write_json
from .errors import NumericalError, VocabularyMismatchError
from .metrics import sum_perplexity
from .parallel import spawn_generators
from .rnnrsm import RnnRsmGradient, RnnRsmParams, cd_slice_gradient, sequence_gradient
from .rsm import RsmParams, cd_gradient
from .schema import validate

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class TrainConfig(DictSerializable):
    epochs: int = 1000
    cd_k: int = 15
    learning_rate: float = 0.001
    hidden: int = 30
    recurrent: int = 30
    seed: int = 0
    early_stop_patience: int = 25
    eval_every: int = 10
    momentum: float = 0.0
    weight_decay: float = 0.0
    clip_norm: Optional[float] = 100.0
    mean_field_final: bool = True
    activation: str = 'tanh'
    scale_visible_sum: bool = False
    warm_start: bool = True
    warm_start_epochs: Optional[int] = None
    batch_size: Optional[int] = None
    z_mode: str = 'auto'
    threads: Optional[int] = None

    def __post_init__(self):
        validate(self.to_dict(), 'trainconfig')

    def replace(self, **changes) -> 'TrainConfig':
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> 'TrainConfig':
        validate(data, 'trainconfig')
        return TrainConfig(**data)


@dataclass
class EpochRecord:
    epoch: int
    reconstruction_error: float
    gradient_norm: float
    held_out_perplexity: Optional[float] = None


@dataclass(eq=False)
class Checkpoint(DictSerializable):
    params: RnnRsmParams
    epoch: int
    config: TrainConfig
    vocab_hash: str
    rng_state: dict
    held_out_perplexity: Optional[float] = None
    velocity: Optional[Dict[str, np.ndarray]] = None

    def rng(self) -> np.random.Generator:
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng_state
        return rng

    def to_dict(self) -> dict:
        velocity = None
        if self.velocity is not None:
            velocity = {name: arr.tolist() for name, arr in self.velocity.items()}
        return dict(
            format_version=CHECKPOINT_FORMAT_VERSION,
            config=self.config.to_dict(),
            vocab_hash=self.vocab_hash,
            epoch=self.epoch,
            rng_state=self.rng_state,
            held_out_perplexity=self.held_out_perplexity,
            params=self.params.to_dict(),
            velocity=velocity)

    @staticmethod
    def from_dict(data: dict) -> 'Checkpoint':
        validate(data, 'checkpoint')
        if 'params' not in data:
            raise ValueError('Checkpoint has neither inline parameters nor a resolved sidecar')
        velocity = data.get('velocity')
        if velocity is not None:
            velocity = {name: np.array(arr, dtype=np.float64) for name, arr in velocity.items()}
        return Checkpoint(
            params=RnnRsmParams.from_dict(data['params']),
            epoch=data['epoch'],
            config=TrainConfig.from_dict(data['config']),
            vocab_hash=data['vocab_hash'],
            rng_state=data['rng_state'],
            held_out_perplexity=data.get('held_out_perplexity'),
            velocity=velocity)


def sidecar_path(path: str) -> str:
    root, _ = os.path.splitext(path)
    return f'{root}.npz'


def save_checkpoint(checkpoint: Checkpoint, path: str, sidecar: bool = False) -> None:
    data = checkpoint.to_dict()

    if sidecar:
        arrays = {name: arr.astype('<f8') for name, arr in checkpoint.params.arrays().items()}
        binary = sidecar_path(path)
        with open(binary, 'wb') as f:
            np.savez(f, **arrays)
        del data['params']
        data['params_sidecar'] = os.path.basename(binary)

    write_json(data, path)


def load_checkpoint(path: str) -> Checkpoint:
    data = read_json(path, schema='checkpoint')

    if 'params_sidecar' in data:
        binary = os.path.join(os.path.dirname(os.path.abspath(path)), data['params_sidecar'])
        with np.load(binary) as arrays:
            data['params'] = {name: arrays[name] for name in arrays.files}

    return Checkpoint.from_dict(data)


def check_vocabulary(checkpoint: Checkpoint, corpus: TemporalCorpus) -> None:
    digest = corpus.digest()
    if digest != checkpoint.vocab_hash:
        raise VocabularyMismatchError(checkpoint.vocab_hash, digest)


def clip_gradients(
        grads: Dict[str, np.ndarray],
        clip_norm: Optional[float]) -> Dict[str, np.ndarray]:

    if clip_norm is None:
        return grads
    norm = math.sqrt(sum(float(np.sum(g ** 2)) for g in grads.values()))
    if norm <= clip_norm or norm == 0:
        return grads
    logger.debug(f'Clipping gradient norm {norm:.4g} to {clip_norm}')
    factor = clip_norm / norm
    return {name: g * factor for name, g in grads.items()}


def sgd_update(
        arrays: Dict[str, np.ndarray],
        grads: Dict[str, np.ndarray],
        config: TrainConfig,
        velocity: Optional[Dict[str, np.ndarray]] = None):
    """
    One plain SGD step, theta <- theta - lr * g, with optional weight decay
    and heavy-ball momentum
    """
    grads = clip_gradients(grads, config.clip_norm)
    updated = {}
    next_velocity = {} if config.momentum > 0 else None

    for name, value in arrays.items():
        g = grads[name]
        if config.weight_decay > 0:
            g = g + config.weight_decay * value
        if next_velocity is not None:
            previous = velocity[name] if velocity is not None else np.zeros_like(value)
            g = config.momentum * previous + g
            next_velocity[name] = g
        updated[name] = value - config.learning_rate * g

    return updated, next_velocity


def check_finite(arrays: Dict[str, np.ndarray], epoch: int) -> None:
    for name, arr in arrays.items():
        if not np.all(np.isfinite(arr)):
            raise NumericalError(
                f'Parameter {name} became non-finite at epoch {epoch}', parameter=name, epoch=epoch)


def train_static_rsm(
        time_slice: TimeSlice,
        K: int,
        config: TrainConfig,
        rng: Optional[np.random.Generator] = None,
        epochs: Optional[int] = None) -> RsmParams:
    """
    Standalone contrastive-divergence training of one RSM on one slice
    """
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    epochs = config.epochs if epochs is None else epochs

    params = RsmParams.random(K, config.hidden, rng)
    if time_slice.N == 0:
        raise ValueError(f'Slice {time_slice.label!r} has no documents to train on')

    documents = time_slice.documents
    velocity = None
    for epoch in range(1, epochs + 1):
        batch = documents
        scale = 1.0
        if config.batch_size is not None and config.batch_size < len(documents):
            chosen = np.sort(rng.choice(len(documents), size=config.batch_size, replace=False))
            batch = [documents[i] for i in chosen]
            scale = len(documents) / config.batch_size

        g = cd_gradient(
            params, batch, None, config.cd_k, rng, config.mean_field_final, config.threads)
        grads = dict(W_vh=g.dW_vh * scale, b_v=g.db_v_t * scale, b_h=g.db_h_t * scale)

        arrays, velocity = sgd_update(params.arrays(), grads, config, velocity)
        check_finite(arrays, epoch)
        params = RsmParams(**arrays)

        if epoch % config.eval_every == 0 or epoch == epochs:
            logger.debug(
                f'RSM {time_slice.label!r} epoch {epoch}: '
                f'reconstruction error {g.reconstruction_error:.4f}')

    return params


def train_static_sequence(
        corpus: TemporalCorpus,
        config: TrainConfig) -> List[Optional[RsmParams]]:
    """
    One independently trained RSM per slice; empty slices yield None
    """
    streams = spawn_generators(np.random.default_rng(config.seed), corpus.T)
    models = []
    for s, stream in zip(corpus.slices, streams):
        if s.N == 0:
            logger.warning(f'Slice {s.label!r} is empty; no static model trained')
            models.append(None)
            continue
        models.append(train_static_rsm(s, corpus.K, config, stream))
    return models


def warm_start(
        corpus: TemporalCorpus,
        config: TrainConfig,
        rng: np.random.Generator) -> RnnRsmParams:

    if corpus.T == 0:
        raise ValueError('Cannot initialise a model from a corpus with no slices')

    final = corpus.slices[-1]
    if final.N == 0:
        logger.warning(f'Final slice {final.label!r} is empty; falling back to random initialisation')
        return RnnRsmParams.initialise(corpus.K, config.hidden, config.recurrent, rng)

    rsm = train_static_rsm(final, corpus.K, config, rng, config.warm_start_epochs)
    logger.info(f'Initialised shared RSM parameters from slice {final.label!r}')
    return RnnRsmParams.from_rsm(rsm, config.recurrent, rng)


def initial_params(
        corpus: TemporalCorpus,
        config: TrainConfig,
        rng: np.random.Generator) -> RnnRsmParams:

    if config.warm_start:
        return warm_start(corpus, config, rng)
    return RnnRsmParams.initialise(corpus.K, config.hidden, config.recurrent, rng)


class Trainer(object):
    """
    Owns one training run: parameters, random stream, momentum and epoch
    """

    def __init__(
            self,
            corpus: TemporalCorpus,
            config: TrainConfig,
            held: Optional[TemporalCorpus] = None,
            params: Optional[RnnRsmParams] = None,
            rng: Optional[np.random.Generator] = None,
            epoch: int = 0,
            velocity: Optional[Dict[str, np.ndarray]] = None):

        super().__init__()

        if held is not None and held.vocabulary != corpus.vocabulary:
            raise VocabularyMismatchError(corpus.digest(), held.digest())

        self.corpus = corpus
        self.config = config
        self.held = held
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.params = params if params is not None else initial_params(corpus, config, self.rng)
        self.epoch = epoch
        self.velocity = velocity
        self.history: List[EpochRecord] = []
        self.slice_gradient = cd_slice_gradient(
            config.cd_k, config.mean_field_final, config.threads, config.batch_size)

    @staticmethod
    def from_checkpoint(
            checkpoint: Checkpoint,
            corpus: TemporalCorpus,
            held: Optional[TemporalCorpus] = None,
            config: Optional[TrainConfig] = None) -> 'Trainer':

        check_vocabulary(checkpoint, corpus)
        velocity = None
        if checkpoint.velocity is not None:
            velocity = {name: arr.copy() for name, arr in checkpoint.velocity.items()}
        return Trainer(
            corpus,
            config or checkpoint.config,
            held=held,
            params=checkpoint.params.copy(),
            rng=checkpoint.rng(),
            epoch=checkpoint.epoch,
            velocity=velocity)

    def gradient(self) -> RnnRsmGradient:
        return sequence_gradient(
            self.params,
            self.corpus,
            self.config.cd_k,
            self.rng,
            slice_gradient=self.slice_gradient,
            activation=self.config.activation,
            scale_visible_sum=self.config.scale_visible_sum)

    def step(self) -> EpochRecord:
        grad = self.gradient()
        epoch = self.epoch + 1

        arrays, self.velocity = sgd_update(
            self.params.arrays(), grad.arrays(), self.config, self.velocity)
        check_finite(arrays, epoch)

        self.params = RnnRsmParams.from_arrays(arrays)
        self.epoch = epoch
        record = EpochRecord(
            epoch=epoch,
            reconstruction_error=grad.reconstruction_error,
            gradient_norm=grad.norm())
        self.history.append(record)
        return record

    def evaluate(self) -> Optional[float]:
        if self.held is None or self.held.document_count == 0:
            return None
        result = sum_perplexity(
            self.params,
            self.held,
            context=self.corpus,
            z_mode=self.config.z_mode,
            activation=self.config.activation,
            scale_visible_sum=self.config.scale_visible_sum,
            seed=self.config.seed,
            threads=self.config.threads)
        return result.total

    def checkpoint(self, held_out_perplexity: Optional[float] = None) -> Checkpoint:
        velocity = None
        if self.velocity is not None:
            velocity = {name: arr.copy() for name, arr in self.velocity.items()}
        return Checkpoint(
            params=self.params.copy(),
            epoch=self.epoch,
            # the thread count never changes results, so it is not persisted
            config=self.config.replace(threads=None),
            vocab_hash=self.corpus.digest(),
            rng_state=self.rng.bit_generator.state,
            held_out_perplexity=held_out_perplexity,
            velocity=velocity)

    def run(self) -> Checkpoint:
        """
        Train until the configured epoch count or until held-out
        sum-perplexity fails to improve for the configured number of
        evaluations, returning the best checkpoint seen
        """
        config = self.config
        best: Optional[Checkpoint] = None
        stale = 0

        if self.held is not None:
            initial = self.evaluate()
            if initial is not None:
                best = self.checkpoint(initial)
                logger.info(f'Epoch {self.epoch}: held-out SumPPL {initial:.4f}')

        while self.epoch < config.epochs:
            record = self.step()
            logger.info(
                f'Epoch {record.epoch}: reconstruction error {record.reconstruction_error:.4f}, '
                f'gradient norm {record.gradient_norm:.4g}')

            due = record.epoch % config.eval_every == 0 or record.epoch == config.epochs
            if best is None or not due:
                continue

            record.held_out_perplexity = self.evaluate()
            logger.info(f'Epoch {record.epoch}: held-out SumPPL {record.held_out_perplexity:.4f}')
            if record.held_out_perplexity < best.held_out_perplexity:
                best = self.checkpoint(record.held_out_perplexity)
                stale = 0
            else:
                stale += 1
                if stale >= config.early_stop_patience:
                    logger.info(
                        f'Stopping early at epoch {record.epoch}; best epoch was {best.epoch}')
                    break

        return best if best is not None else self.checkpoint()


def train(
        corpus: TemporalCorpus,
        config: TrainConfig,
        held: Optional[TemporalCorpus] = None) -> Checkpoint:
    return Trainer(corpus, config, held).run()

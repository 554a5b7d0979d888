from typing import Tuple

import numpy as np

from .corpus import Document, TemporalCorpus, TimeSlice, Vocabulary
from .rnnrsm import RnnRsmParams


def region_corpus(
        T: int = 3,
        terms_per_slice: int = 10,
        docs_per_slice: int = 30,
        min_length: int = 5,
        max_length: int = 15,
        first_year: int = 2000,
        seed: int = 0) -> TemporalCorpus:
    """
    Slice t draws its words uniformly from its own block of terms, so the
    vocabulary regions of different slices are disjoint
    """
    if min_length < 1 or max_length < min_length:
        raise ValueError(f'Invalid document length range [{min_length}, {max_length}]')

    rng = np.random.default_rng(seed)
    vocabulary = Vocabulary([
        f'w{t:02d}_{k:02d}' for t in range(T) for k in range(terms_per_slice)])

    slices = []
    for t in range(T):
        documents = []
        for _ in range(docs_per_slice):
            length = int(rng.integers(min_length, max_length + 1))
            counts = np.zeros(vocabulary.K)
            block = rng.multinomial(length, np.full(terms_per_slice, 1 / terms_per_slice))
            counts[t * terms_per_slice:(t + 1) * terms_per_slice] = block
            documents.append(Document.from_dense(counts))
        slices.append(TimeSlice(label=str(first_year + t), documents=documents))

    return TemporalCorpus(vocabulary=vocabulary, slices=slices)


def tiny_instance(
        T: int = 3,
        K: int = 3,
        F: int = 2,
        U: int = 2,
        docs_per_slice: int = 2,
        max_length: int = 3,
        scale: float = 0.5,
        seed: int = 0) -> Tuple[RnnRsmParams, TemporalCorpus]:
    """
    A random model and corpus small enough for exact enumeration
    """
    rng = np.random.default_rng(seed)
    vocabulary = Vocabulary([f'w{k}' for k in range(K)])

    slices = []
    for t in range(T):
        documents = []
        for _ in range(docs_per_slice):
            length = int(rng.integers(1, max_length + 1))
            documents.append(Document.from_dense(rng.multinomial(length, np.full(K, 1 / K))))
        slices.append(TimeSlice(label=str(t + 1), documents=documents))

    params = RnnRsmParams.initialise(K, F, U, rng, scale)
    params = params.replace(
        b_v=rng.normal(0, scale, K),
        b_h=rng.normal(0, scale, F),
        b_u=rng.normal(0, scale, U),
        u0=rng.uniform(-scale, scale, U))
    return params, TemporalCorpus(vocabulary=vocabulary, slices=slices)

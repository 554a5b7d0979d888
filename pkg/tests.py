from unittest import TestCase
import csv
import json
import math
import os
import tempfile

import numpy as np

from tempora import __version__
from tempora.cli import EXIT_CHECK_FAILED, EXIT_INPUT_ERROR, EXIT_OK, build_parser, get_evaluation, main, train_config
from tempora.coherence import CooccurrenceTable, build_cooccurrence, coherence, coherence_summary, merge_phrases, \
    npmi, ranked_coherence
from tempora.corpus import Document, TemporalCorpus, TimeSlice, Vocabulary, count_matrix, ingest, split_fraction, \
    split_held_out, write_corpus
from tempora.errors import CorpusFormatError, EnumerationLimitError, NumericalError, SliceTooSmallError, \
    UnknownTermError, VocabularyMismatchError
from tempora.metrics import TopicSet, TrendSequence, adjacent_similarity, avg_span, extract_topic_set, \
    extract_topics, focus_change, keyword_trend, longest_run, mean_absolute_error_years, partition_function, \
    perplexity, resolve_z_mode, set_cosine, sum_perplexity, timestamp_predictions, topic_distributions, \
    topic_drifts, topic_popularity, topic_term_drift
from tempora.oracle import brute_force_log_prob, brute_force_log_z, epsilon_sweep, estimate_log_z, \
    exact_log_prob, exact_log_z, exact_nll, exact_rsm_gradient, exact_sequence_cost, exact_slice_gradient, \
    finite_difference_check, log_unnormalised, run_battery, sample_indices, sequence_counts
from tempora.parallel import ordered_map, resolve_threads, spawn_generators
from tempora.rnnrsm import RnnRsmParams, forward, get_activation, sequence_gradient, slice_bias, tanh_backward
from tempora.rsm import BiasOverride, RsmParams, cd_gradient, contrastive_statistics, \
    free_energies, free_energy, hidden_activation, hidden_input, hidden_state, \
    sample_document, stack_documents, visible_distribution
from tempora.synthetic import region_corpus, tiny_instance
from tempora.trainer import Checkpoint, TrainConfig, Trainer, check_finite, check_vocabulary, load_checkpoint, \
    save_checkpoint, train, train_static_rsm, train_static_sequence, warm_start

# the long statistical and end-to-end checks run at full size only on request
FULL = os.environ.get('TEMPORA_FULL_ACCEPTANCE') == '1'

CD_CHAINS = 10 ** 4 if FULL else 2000
SYNTHETIC_SEEDS = 20 if FULL else 2
TINY_TRAINING_RUNS = 20 if FULL else 5
SPAN_PROPERTY_CASES = 10 ** 4 if FULL else 10 ** 3


def random_rsm(K: int, F: int, rng: np.random.Generator, scale: float = 0.5) -> RsmParams:
    return RsmParams(
        W_vh=rng.normal(0, scale, (K, F)),
        b_v=rng.normal(0, scale, K),
        b_h=rng.normal(0, scale, F))


def random_documents(K: int, n: int, max_length: int, rng: np.random.Generator):
    return [
        Document.from_dense(rng.multinomial(int(rng.integers(1, max_length + 1)), np.full(K, 1 / K)))
        for _ in range(n)]


def write_text(directory: str, name: str, text: str) -> str:
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    return path


def write_manifest(directory: str, slices, name: str = 'corpus.json', vocabulary: str = None) -> str:
    entries = []
    for label, text in slices:
        filename = f'{os.path.splitext(name)[0]}-{label}.bow'
        write_text(directory, filename, text)
        entries.append(dict(label=label, file=filename))
    manifest = dict(slices=entries)
    if vocabulary is not None:
        manifest['vocabulary'] = vocabulary
    return write_text(directory, name, json.dumps(manifest))


def read_csv(path: str):
    with open(path, 'r', newline='', encoding='utf-8') as f:
        return list(csv.reader(f))


def disjoint_model() -> RnnRsmParams:
    """
    Two slices whose visible biases favour terms {0, 1} and {2, 3}
    respectively
    """
    return RnnRsmParams(
        rsm=RsmParams.zeros(4, 1),
        W_uv=[[3.0], [3.0], [-3.0], [-3.0]],
        W_uh=[[0.0]],
        W_vu=np.zeros((1, 4)),
        W_uu=[[0.0]],
        b_u=[-20.0],
        u0=[1.0])


def disjoint_corpus() -> TemporalCorpus:
    return TemporalCorpus(
        vocabulary=Vocabulary(['a', 'b', 'c', 'd']),
        slices=[
            TimeSlice('2000', [Document.from_counts({0: 2, 1: 1}), Document.from_counts({1: 3})]),
            TimeSlice('2001', [Document.from_counts({2: 1, 3: 2}), Document.from_counts({2: 2})])])


class CorpusTests(TestCase):

    def test_ingest_sums_repeated_terms(self):
        with tempfile.TemporaryDirectory() as d:
            corpus = ingest(write_manifest(d, [('2000', 'a:1 a:1 b:1\n')]))
        self.assertEqual(corpus.vocabulary.terms, ('a', 'b'))
        doc = corpus.slices[0].documents[0]
        self.assertEqual(doc.as_dict(), {0: 2, 1: 1})
        self.assertEqual(doc.length, 3)

    def test_ingest_builds_sorted_union_vocabulary(self):
        with tempfile.TemporaryDirectory() as d:
            corpus = ingest(write_manifest(d, [('1', 'zeta:1 beta:2\n'), ('2', 'alpha:1\n')]))
        self.assertEqual(corpus.vocabulary.terms, ('alpha', 'beta', 'zeta'))
        self.assertEqual(corpus.T, 2)
        self.assertEqual(corpus.labels, ['1', '2'])

    def test_ingest_skips_comment_lines(self):
        with tempfile.TemporaryDirectory() as d:
            corpus = ingest(write_manifest(d, [('1', '# header\na:1\n# another\nb:2\n')]))
        self.assertEqual(corpus.slices[0].N, 2)

    def test_empty_slice_file_is_kept_with_a_warning(self):
        with tempfile.TemporaryDirectory() as d:
            path = write_manifest(d, [('1', 'a:1\n'), ('2', '')])
            with self.assertLogs('tempora.corpus', level='WARNING'):
                corpus = ingest(path)
        self.assertEqual(corpus.slices[1].N, 0)

    def test_manifest_that_is_not_json_is_rejected(self):
        with tempfile.TemporaryDirectory() as d:
            path = write_text(d, 'corpus.json', '{"slices": [')
            self.assertRaises(ValueError, lambda: ingest(path))

    def test_manifest_violating_schema_is_rejected(self):
        with tempfile.TemporaryDirectory() as d:
            path = write_text(d, 'corpus.json', '{"slices": "1996.bow"}')
            self.assertRaises(ValueError, lambda: ingest(path))

    def test_malformed_line_reports_file_and_line(self):
        with tempfile.TemporaryDirectory() as d:
            path = write_manifest(d, [('1', 'a:1\na:x\n')])
            with self.assertRaises(CorpusFormatError) as context:
                ingest(path)
        self.assertEqual(context.exception.line, 2)
        self.assertTrue(context.exception.path.endswith('.bow'))

    def test_zero_count_is_rejected(self):
        with tempfile.TemporaryDirectory() as d:
            path = write_manifest(d, [('1', 'a:0\n')])
            self.assertRaises(CorpusFormatError, lambda: ingest(path))

    def test_blank_document_line_is_rejected(self):
        with tempfile.TemporaryDirectory() as d:
            path = write_manifest(d, [('1', 'a:1\n\nb:1\n')])
            self.assertRaises(CorpusFormatError, lambda: ingest(path))

    def test_unknown_term_names_the_token(self):
        with tempfile.TemporaryDirectory() as d:
            path = write_manifest(d, [('1', 'a:1 b:1\n')])
            with self.assertRaises(UnknownTermError) as context:
                ingest(path, vocabulary=Vocabulary(['a']))
        self.assertEqual(context.exception.term, 'b')

    def test_supplied_vocabulary_fixes_term_ids(self):
        with tempfile.TemporaryDirectory() as d:
            write_text(d, 'vocab.txt', 'b\na\nc\n')
            corpus = ingest(write_manifest(d, [('1', 'a:1 b:2\n')], vocabulary='vocab.txt'))
        self.assertEqual(corpus.K, 3)
        self.assertEqual(corpus.slices[0].documents[0].as_dict(), {0: 2, 1: 1})

    def test_round_trip_through_write_corpus(self):
        original = region_corpus(T=3, terms_per_slice=4, docs_per_slice=5, seed=3)
        with tempfile.TemporaryDirectory() as d:
            reread = ingest(write_corpus(original, d))
        self.assertEqual(reread.vocabulary, original.vocabulary)
        self.assertEqual(reread.labels, original.labels)
        for a, b in zip(original.slices, reread.slices):
            self.assertEqual(list(a.documents), list(b.documents))

    def test_token_count_is_conserved(self):
        with tempfile.TemporaryDirectory() as d:
            corpus = ingest(write_manifest(d, [('1', 'a:3 b:1\nc:2\n'), ('2', 'a:4\n')]))
        self.assertEqual(corpus.token_count, 10)
        self.assertEqual(corpus.term_frequency('a'), 7)

    def test_split_held_out_takes_ten_per_slice(self):
        corpus = region_corpus(T=19, terms_per_slice=2, docs_per_slice=12, min_length=1, max_length=3)
        train, held = split_held_out(corpus, 10, seed=0)
        self.assertEqual(held.document_count, 190)
        self.assertEqual(train.document_count, 19 * 2)

    def test_split_held_out_zero_is_identity(self):
        corpus = region_corpus(T=3, terms_per_slice=2, docs_per_slice=4)
        train, held = split_held_out(corpus, 0, seed=0)
        self.assertEqual(held.document_count, 0)
        for a, b in zip(corpus.slices, train.slices):
            self.assertEqual(list(a.documents), list(b.documents))

    def test_split_held_out_is_deterministic_under_seed(self):
        corpus = region_corpus(T=3, terms_per_slice=4, docs_per_slice=10)
        _, first = split_held_out(corpus, 3, seed=7)
        _, second = split_held_out(corpus, 3, seed=7)
        for a, b in zip(first.slices, second.slices):
            self.assertEqual(list(a.documents), list(b.documents))

    def test_split_held_out_partitions_each_slice(self):
        corpus = region_corpus(T=2, terms_per_slice=5, docs_per_slice=8, seed=1)
        train, held = split_held_out(corpus, 3, seed=2)
        for whole, a, b in zip(corpus.slices, train.slices, held.slices):
            self.assertEqual(a.N + b.N, whole.N)
            self.assertEqual(
                sorted(map(repr, a.documents + b.documents)), sorted(map(repr, whole.documents)))

    def test_split_held_out_names_the_short_slice(self):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['a']),
            slices=[TimeSlice('big', [Document.from_counts({0: 1})] * 5), TimeSlice('small', [Document.from_counts({0: 1})])])
        with self.assertRaises(SliceTooSmallError) as context:
            split_held_out(corpus, 2, seed=0)
        self.assertEqual(context.exception.label, 'small')

    def test_split_fraction_halves_two_document_slice(self):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['a', 'b']),
            slices=[TimeSlice('1', [Document.from_counts({0: 1}), Document.from_counts({1: 1})])])
        train, test = split_fraction(corpus, 0.5, seed=0)
        self.assertEqual(train.slices[0].N, 1)
        self.assertEqual(test.slices[0].N, 1)

    def test_split_fraction_rounds_test_size_down(self):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['a']),
            slices=[
                TimeSlice('1', [Document.from_counts({0: 1})]),
                TimeSlice('2', [Document.from_counts({0: i + 1}) for i in range(5)]),
                TimeSlice('3', [Document.from_counts({0: i + 1}) for i in range(14)])])
        train, test = split_fraction(corpus, 0.8, seed=0)
        self.assertEqual([s.N for s in test.slices], [0, 1, 2])
        self.assertEqual([s.N for s in train.slices], [1, 4, 12])

    def test_split_fraction_rejects_out_of_range_fraction(self):
        corpus = region_corpus(T=1, terms_per_slice=2, docs_per_slice=2)
        self.assertRaises(ValueError, lambda: split_fraction(corpus, 1.0, seed=0))
        self.assertRaises(ValueError, lambda: split_fraction(corpus, 0, seed=0))

    def test_vocabulary_rejects_duplicates(self):
        self.assertRaises(ValueError, lambda: Vocabulary(['a', 'b', 'a']))

    def test_vocabulary_resolves_phrases(self):
        vocabulary = Vocabulary(['machine_translation', 'parsing'])
        self.assertEqual(vocabulary.resolve('machine translation'), 'machine_translation')
        self.assertEqual(vocabulary.lookup(vocabulary.index('parsing')), 'parsing')
        self.assertRaises(UnknownTermError, lambda: vocabulary.resolve('tagging'))

    def test_document_rejects_non_positive_counts(self):
        self.assertRaises(ValueError, lambda: Document(ids=[0, 1], counts=[1, 0]))
        self.assertRaises(ValueError, lambda: Document(ids=[], counts=[]))

    def test_slice_matrix_matches_dense_documents(self):
        corpus = region_corpus(T=1, terms_per_slice=6, docs_per_slice=4)
        s = corpus.slices[0]
        np.testing.assert_array_equal(s.matrix(corpus.K).toarray(), np.stack([d.dense(corpus.K) for d in s.documents]))
        np.testing.assert_array_equal(s.count_sum(corpus.K), s.matrix(corpus.K).toarray().sum(axis=0))

    def test_count_matrix_rejects_out_of_range_ids(self):
        docs = [Document.from_counts({0: 1}), Document.from_counts({1: 2, 4: 1})]
        self.assertRaises(ValueError, lambda: count_matrix(docs, 4))
        np.testing.assert_array_equal(count_matrix(docs, 5).toarray(), [[1, 0, 0, 0, 0], [0, 2, 0, 0, 1]])
        self.assertEqual(count_matrix([], 3).shape, (0, 3))


class ParallelTests(TestCase):

    def test_ordered_map_preserves_input_order(self):
        self.assertEqual(ordered_map(lambda x: x * x, range(20), threads=4), [x * x for x in range(20)])

    def test_resolve_threads_reads_environment(self):
        previous = os.environ.get('TEMPORA_THREADS')
        os.environ['TEMPORA_THREADS'] = '3'
        try:
            self.assertEqual(resolve_threads(None), 3)
            self.assertEqual(resolve_threads(2), 2)
        finally:
            if previous is None:
                del os.environ['TEMPORA_THREADS']
            else:
                os.environ['TEMPORA_THREADS'] = previous

    def test_resolve_threads_rejects_zero(self):
        self.assertRaises(ValueError, lambda: resolve_threads(0))

    def test_spawned_generators_are_reproducible(self):
        a = [g.random() for g in spawn_generators(np.random.default_rng(4), 3)]
        b = [g.random() for g in spawn_generators(np.random.default_rng(4), 3)]
        self.assertEqual(a, b)
        self.assertEqual(len(set(a)), 3)


class RsmTests(TestCase):

    def test_zero_params_give_half_hidden_activation(self):
        params = RsmParams.zeros(4, 3)
        p = hidden_activation(params, Document.from_counts({1: 2, 3: 1}))
        np.testing.assert_array_equal(p, np.full(3, 0.5))

    def test_hidden_activation_for_log_three_weight(self):
        params = RsmParams.zeros(3, 2)
        params.W_vh[0, 1] = math.log(3)
        p = hidden_activation(params, Document.from_counts({0: 1}))
        self.assertAlmostEqual(p[1], 0.75, places=12)
        self.assertAlmostEqual(p[0], 0.5, places=12)

    def test_hidden_override_saturates(self):
        params = random_rsm(3, 2, np.random.default_rng(0))
        bias = BiasOverride(b_v_t=np.zeros(3), b_h_t=np.full(2, -1e9))
        p = hidden_activation(params, Document.from_counts({0: 1, 2: 1}), bias)
        self.assertTrue(np.all(p < 1e-12))

    def test_hidden_activation_rejects_wrong_dimension(self):
        params = RsmParams.zeros(3, 2)
        self.assertRaises(ValueError, lambda: hidden_activation(params, np.ones(4)))

    def test_zero_params_give_uniform_visible_distribution(self):
        p = visible_distribution(RsmParams.zeros(5, 2), np.zeros(2))
        np.testing.assert_allclose(p, np.full(5, 0.2), rtol=1e-15)

    def test_visible_distribution_for_log_two_bias(self):
        params = RsmParams(W_vh=np.zeros((2, 1)), b_v=[math.log(2), 0], b_h=[0])
        np.testing.assert_allclose(visible_distribution(params, [0]), [2 / 3, 1 / 3], rtol=1e-12)

    def test_visible_distribution_is_shift_invariant(self):
        rng = np.random.default_rng(1)
        params = random_rsm(6, 3, rng)
        shifted = RsmParams(W_vh=params.W_vh, b_v=params.b_v + 17.5, b_h=params.b_h)
        h = hidden_state([1, 0, 1])
        np.testing.assert_allclose(visible_distribution(params, h), visible_distribution(shifted, h), rtol=1e-12)

    def test_visible_distribution_sums_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            params = random_rsm(int(rng.integers(2, 30)), 4, rng, scale=3.0)
            h = (rng.random(4) < 0.5).astype(float)
            self.assertAlmostEqual(visible_distribution(params, h).sum(), 1.0, delta=1e-12)

    def test_hidden_state_must_be_binary(self):
        self.assertRaises(ValueError, lambda: hidden_state([0, 0.5]))

    def test_visible_distribution_rejects_non_binary_hidden_state(self):
        params = RsmParams.zeros(3, 2)
        self.assertRaises(ValueError, lambda: visible_distribution(params, [0.5, 0]))
        self.assertRaises(
            ValueError, lambda: sample_document(params, [0.5, 0], 4, rng=np.random.default_rng(0)))

    def test_sample_document_from_point_mass(self):
        params = RsmParams(W_vh=np.zeros((3, 1)), b_v=[1e9, 0, 0], b_h=[0])
        doc = sample_document(params, [0], 7, rng=np.random.default_rng(0))
        self.assertEqual(doc.as_dict(), {0: 7})

    def test_sample_document_uniform_counts_are_binomial(self):
        D = 10 ** 5
        doc = sample_document(RsmParams.zeros(2, 1), [0], D, rng=np.random.default_rng(5))
        sigma = math.sqrt(D * 0.25)
        for count in doc.dense(2):
            self.assertLess(abs(count - D / 2), 5 * sigma)

    def test_sample_document_is_deterministic_under_seed(self):
        params = random_rsm(8, 3, np.random.default_rng(3))
        a = sample_document(params, [1, 0, 1], 20, rng=np.random.default_rng(9))
        b = sample_document(params, [1, 0, 1], 20, rng=np.random.default_rng(9))
        self.assertEqual(a, b)

    def test_sample_document_rejects_zero_length(self):
        self.assertRaises(ValueError, lambda: sample_document(RsmParams.zeros(2, 1), [0], 0))

    def test_zero_params_free_energy(self):
        F = 4
        energy = free_energy(RsmParams.zeros(3, F), Document.from_counts({0: 2, 2: 5}))
        self.assertAlmostEqual(energy, -F * math.log(2), places=12)

    def test_free_energy_scales_hidden_bias_by_length(self):
        c, F, D = 0.3, 3, 6
        params = RsmParams(W_vh=np.zeros((2, F)), b_v=np.zeros(2), b_h=np.full(F, c))
        energy = free_energy(params, Document.from_counts({0: 4, 1: 2}))
        self.assertAlmostEqual(energy, -F * math.log(1 + math.exp(D * c)), places=12)

    def test_free_energy_is_overflow_safe(self):
        params = RsmParams(W_vh=np.full((2, 2), 500.0), b_v=np.zeros(2), b_h=np.zeros(2))
        energy = free_energy(params, Document.from_counts({0: 3}))
        self.assertTrue(math.isfinite(energy))
        self.assertAlmostEqual(energy, -3000.0, places=6)

    def test_doubling_length_doubles_hidden_bias_term(self):
        params = RsmParams(W_vh=np.zeros((3, 2)), b_v=np.zeros(3), b_h=[0.4, -0.7])
        v = np.array([1.0, 2.0, 0.0])
        single = hidden_input(params, v, 3, params.b_h)
        double = hidden_input(params, 2 * v, 6, params.b_h)
        np.testing.assert_allclose(double, 2 * single, rtol=1e-15)

    def test_free_energies_match_single_document_free_energy(self):
        rng = np.random.default_rng(4)
        params = random_rsm(5, 3, rng)
        docs = random_documents(5, 6, 4, rng)
        V, lengths = stack_documents(params, docs)
        np.testing.assert_allclose(
            free_energies(params, V, lengths), [free_energy(params, d) for d in docs], rtol=1e-12)

    def test_negatives_equal_to_data_give_zero_gradient(self):
        rng = np.random.default_rng(5)
        params = random_rsm(4, 3, rng)
        V, lengths = stack_documents(params, random_documents(4, 5, 3, rng))
        g = contrastive_statistics(params, V, V.copy(), lengths)
        np.testing.assert_array_equal(g.dW_vh, np.zeros((4, 3)))
        np.testing.assert_array_equal(g.db_v_t, np.zeros(4))
        np.testing.assert_array_equal(g.db_h_t, np.zeros(3))
        self.assertEqual(g.reconstruction_error, 0.0)

    def test_single_document_visible_gradient_is_bounded_by_length(self):
        rng = np.random.default_rng(6)
        params = random_rsm(5, 2, rng)
        doc = Document.from_counts({1: 3, 4: 2})
        for _ in range(10):
            g = cd_gradient(params, [doc], k_steps=3, rng=rng)
            self.assertTrue(np.all(np.abs(g.db_v_t) <= doc.length))

    def test_cd_gradient_rejects_zero_steps(self):
        params = RsmParams.zeros(2, 1)
        self.assertRaises(ValueError, lambda: cd_gradient(params, [Document.from_counts({0: 1})], k_steps=0))

    def test_cd_gradient_is_independent_of_thread_count(self):
        rng = np.random.default_rng(7)
        params = random_rsm(6, 3, rng)
        docs = random_documents(6, 9, 5, rng)
        a = cd_gradient(params, docs, k_steps=2, rng=np.random.default_rng(1), threads=1)
        b = cd_gradient(params, docs, k_steps=2, rng=np.random.default_rng(1), threads=4)
        np.testing.assert_array_equal(a.dW_vh, b.dW_vh)
        np.testing.assert_array_equal(a.db_v_t, b.db_v_t)

    def test_cd_gradient_mean_agrees_with_exact_gradient(self):
        rng = np.random.default_rng(11)
        params = random_rsm(3, 2, rng)
        doc = Document.from_counts({0: 1, 2: 1})
        exact = exact_rsm_gradient(params, [doc])

        n = CD_CHAINS
        samples = np.zeros((n, 3 + 2 + 6))
        for i, stream in enumerate(spawn_generators(rng, n)):
            g = cd_gradient(params, [doc], k_steps=15, rng=stream)
            samples[i] = np.concatenate([g.db_v_t, g.db_h_t, g.dW_vh.ravel()])
        expected = np.concatenate([exact.db_v_t, exact.db_h_t, exact.dW_vh.ravel()])

        mean = samples.mean(axis=0)
        standard_error = samples.std(axis=0, ddof=1) / math.sqrt(n)
        within = np.abs(mean - expected) <= 3 * standard_error + 1e-12
        self.assertGreaterEqual(int(within.sum()), int(0.95 * len(within)))

    def test_params_round_trip_through_dict(self):
        params = random_rsm(4, 2, np.random.default_rng(8))
        self.assertEqual(RsmParams.from_dict(json.loads(json.dumps(params.to_dict()))), params)


class RnnRsmTests(TestCase):

    def test_zero_recurrent_weights_collapse_the_recurrence(self):
        corpus = region_corpus(T=3, terms_per_slice=2, docs_per_slice=3)
        params = RnnRsmParams.zeros(corpus.K, 2, 3).replace(
            b_u=np.array([0.1, -0.2, 0.3]), b_v=np.arange(corpus.K) / 10.0)
        state = forward(params, corpus)
        for u in state.u[1:]:
            np.testing.assert_array_equal(u, np.tanh(params.b_u))
        for bias in state.bias_overrides:
            np.testing.assert_array_equal(bias.b_v_t, params.rsm.b_v)
            np.testing.assert_array_equal(bias.b_h_t, params.rsm.b_h)

    def test_forward_matches_hand_unrolled_slice(self):
        params = RnnRsmParams(
            rsm=RsmParams(W_vh=np.zeros((2, 1)), b_v=[0.2, -0.1], b_h=[0.3]),
            W_uv=np.eye(2),
            W_uh=[[0.5, -0.5]],
            W_vu=[[0.1, 0.2], [0.3, -0.1]],
            W_uu=0.5 * np.eye(2),
            b_u=[0.1, 0.0],
            u0=[0.5, -0.5])
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['x', 'y']),
            slices=[TimeSlice('1', [Document.from_counts({0: 2, 1: 1})])])

        state = forward(params, corpus)

        np.testing.assert_allclose(state.u[1], np.tanh([0.75, 0.25]), rtol=1e-14)
        np.testing.assert_allclose(state.bias_overrides[0].b_v_t, [0.7, -0.6], rtol=1e-14)
        np.testing.assert_allclose(state.bias_overrides[0].b_h_t, [0.8], rtol=1e-14)

    def test_bias_overrides_are_recomputable(self):
        params, corpus = tiny_instance(seed=4)
        state = forward(params, corpus)
        self.assertEqual(state.T, corpus.T)
        for t in range(corpus.T):
            self.assertEqual(slice_bias(params, state.u[t]), state.bias_overrides[t])

    def test_forward_is_deterministic(self):
        params, corpus = tiny_instance(seed=5)
        a, b = forward(params, corpus), forward(params, corpus)
        for x, y in zip(a.u, b.u):
            np.testing.assert_array_equal(x, y)

    def test_forward_rejects_vocabulary_mismatch(self):
        params, _ = tiny_instance(K=3)
        corpus = region_corpus(T=2, terms_per_slice=2, docs_per_slice=2)
        self.assertRaises(ValueError, lambda: forward(params, corpus))

    def test_tanh_backward_at_zero_and_saturation(self):
        upstream = np.array([0.3, -1.2])
        np.testing.assert_array_equal(tanh_backward(np.zeros(2), upstream), upstream)
        self.assertTrue(np.all(np.abs(tanh_backward(np.array([1 - 1e-12, -1 + 1e-12]), upstream)) < 1e-11))

    def test_tanh_backward_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0, 1, 50)
        epsilon = 1e-6
        numeric = (np.tanh(x + epsilon) - np.tanh(x - epsilon)) / (2 * epsilon)
        analytic = tanh_backward(np.tanh(x), np.ones_like(x))
        np.testing.assert_allclose(analytic, numeric, rtol=1e-7)

    def test_unknown_activation_is_rejected(self):
        self.assertRaises(ValueError, lambda: get_activation('relu'))

    def check_sequence_gradient(self, activation: str, seeds):
        for seed in seeds:
            params, corpus = tiny_instance(T=3, K=3, F=2, U=2, seed=seed)

            gradient = sequence_gradient(
                params, corpus, slice_gradient=exact_slice_gradient, activation=activation).flatten()
            report = finite_difference_check(
                lambda x: exact_sequence_cost(params.unflatten(x), corpus, activation),
                params.flatten(),
                gradient,
                epsilon=1e-5,
                floor=1e-3)
            self.assertLess(report.max_relative_deviation, 1e-4)

    def test_sequence_gradient_matches_finite_differences(self):
        self.check_sequence_gradient('tanh', range(3))

    def test_logistic_sequence_gradient_matches_finite_differences(self):
        self.check_sequence_gradient('logistic', range(2))

    def test_single_slice_reduces_to_static_gradient(self):
        params, corpus = tiny_instance(T=1, K=3, F=2, U=2, docs_per_slice=3, seed=6)
        grad = sequence_gradient(params, corpus, slice_gradient=exact_slice_gradient)
        static = exact_rsm_gradient(params.rsm, corpus.slices[0].documents, slice_bias(params, params.u0))

        np.testing.assert_allclose(grad.W_vh, static.dW_vh, rtol=1e-12)
        np.testing.assert_allclose(grad.b_v, static.db_v_t, rtol=1e-12)
        np.testing.assert_allclose(grad.b_h, static.db_h_t, rtol=1e-12)
        np.testing.assert_allclose(grad.W_uv, np.outer(static.db_v_t, params.u0), rtol=1e-12)
        np.testing.assert_allclose(
            grad.u0, params.W_uh.T @ static.db_h_t + params.W_uv.T @ static.db_v_t, rtol=1e-12)
        for name in ('W_vu', 'W_uu', 'b_u'):
            np.testing.assert_array_equal(getattr(grad, name), np.zeros_like(getattr(grad, name)))

    def test_zero_recurrent_weights_make_slices_independent(self):
        params, corpus = tiny_instance(T=3, K=3, F=2, U=2, seed=7)
        zeros = {name: np.zeros_like(getattr(params, name)) for name in ('W_uu', 'W_uh', 'W_uv', 'W_vu')}
        params = params.replace(**zeros)
        permuted = corpus.with_slices([corpus.slices[i] for i in (2, 0, 1)])

        a = sequence_gradient(params, corpus, slice_gradient=exact_slice_gradient)
        b = sequence_gradient(params, permuted, slice_gradient=exact_slice_gradient)

        for i, j in enumerate((2, 0, 1)):
            np.testing.assert_allclose(b.b_v_t[i], a.b_v_t[j], rtol=1e-12)
            np.testing.assert_allclose(b.b_h_t[i], a.b_h_t[j], rtol=1e-12)

    def test_no_signal_gives_zero_gradient(self):
        params, corpus = tiny_instance(seed=8)
        params = params.replace(**{
            name: np.zeros_like(getattr(params, name)) for name in ('W_uu', 'W_uh', 'W_uv', 'W_vu')})

        def data_as_negatives(rsm, docs, bias, rng):
            V, lengths = stack_documents(rsm, docs)
            return contrastive_statistics(rsm, V, V.copy(), lengths, bias)

        grad = sequence_gradient(params, corpus, slice_gradient=data_as_negatives)
        self.assertEqual(grad.norm(), 0.0)

    def test_empty_slice_contributes_no_gradient(self):
        params, corpus = tiny_instance(T=2, seed=9)
        corpus = corpus.with_slices([corpus.slices[0], TimeSlice('empty', [])])
        grad = sequence_gradient(params, corpus, slice_gradient=exact_slice_gradient)
        np.testing.assert_array_equal(grad.b_v_t[1], np.zeros(params.K))

    def test_flatten_round_trip(self):
        params, _ = tiny_instance(seed=10)
        self.assertEqual(params.unflatten(params.flatten()), params)
        self.assertRaises(ValueError, lambda: params.unflatten(params.flatten()[:-1]))

    def test_params_round_trip_through_dict(self):
        params, _ = tiny_instance(seed=11)
        self.assertEqual(RnnRsmParams.from_dict(json.loads(json.dumps(params.to_dict()))), params)

    def test_replace_rejects_unknown_parameter(self):
        params, _ = tiny_instance()
        self.assertRaises(KeyError, lambda: params.replace(W_xx=np.zeros(2)))

    def test_shape_mismatch_is_rejected(self):
        self.assertRaises(ValueError, lambda: RnnRsmParams(
            rsm=RsmParams.zeros(3, 2),
            W_uv=np.zeros((3, 2)),
            W_uh=np.zeros((2, 2)),
            W_vu=np.zeros((2, 4)),
            W_uu=np.zeros((2, 2)),
            b_u=np.zeros(2),
            u0=np.zeros(2)))


class OracleTests(TestCase):

    def test_zero_params_log_z(self):
        K, F, D = 4, 3, 5
        self.assertAlmostEqual(
            exact_log_z(RsmParams.zeros(K, F), D=D), F * math.log(2) + D * math.log(K), places=12)

    def test_hand_computed_partition_function(self):
        params = RsmParams(W_vh=[[math.log(2)], [0.0]], b_v=[0, 0], b_h=[0])
        self.assertAlmostEqual(exact_log_z(params, D=1), math.log(5), places=14)

    def test_sequence_probabilities_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            K, F, D = int(rng.integers(2, 5)), int(rng.integers(1, 4)), int(rng.integers(1, 4))
            params = random_rsm(K, F, rng, scale=1.0)
            log_z = exact_log_z(params, D=D)
            total = math.fsum(
                math.exp(log_unnormalised(params, v) - log_z) for v in sequence_counts(K, D))
            self.assertAlmostEqual(total, 1.0, delta=1e-9)

            brute = brute_force_log_z(params, D=D)
            self.assertLessEqual(abs(log_z - brute) / max(abs(brute), 1.0), 1e-10)

    def test_free_energy_agrees_with_direct_energy_sum(self):
        rng = np.random.default_rng(1)
        params = random_rsm(4, 3, rng)
        for doc in random_documents(4, 5, 4, rng):
            v = doc.dense(4)
            self.assertAlmostEqual(-free_energy(params, doc), log_unnormalised(params, v), places=10)

    def test_exact_probability_matches_brute_force(self):
        rng = np.random.default_rng(2)
        params = random_rsm(3, 2, rng)
        bias = BiasOverride(b_v_t=rng.normal(0, 1, 3), b_h_t=rng.normal(0, 1, 2))
        doc = Document.from_counts({0: 1, 2: 2})
        self.assertAlmostEqual(exact_log_prob(params, doc, bias), brute_force_log_prob(params, doc, bias), places=10)

    def test_zero_params_document_probability(self):
        doc = Document.from_counts({0: 2, 3: 1})
        self.assertAlmostEqual(exact_log_prob(RsmParams.zeros(5, 2), doc), -3 * math.log(5), places=12)

    def test_exact_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            K, F = int(rng.integers(2, 5)), int(rng.integers(1, 4))
            params = random_rsm(K, F, rng)
            docs = random_documents(K, 3, 3, rng)

            def cost(x: np.ndarray) -> float:
                candidate = RsmParams(W_vh=x[:K * F].reshape(K, F), b_v=x[K * F:K * F + K], b_h=x[K * F + K:])
                return exact_nll(candidate, docs)

            g = exact_rsm_gradient(params, docs)
            x = np.concatenate([params.W_vh.ravel(), params.b_v, params.b_h])
            gradient = np.concatenate([g.dW_vh.ravel(), g.db_v_t, g.db_h_t])
            report = finite_difference_check(cost, x, gradient, epsilon=1e-5, floor=1e-2)
            self.assertLessEqual(report.max_relative_deviation, 1e-6)

    def test_symmetric_instance_is_a_critical_point(self):
        params = RsmParams.zeros(2, 1)
        g = exact_rsm_gradient(params, [Document.from_counts({0: 1}), Document.from_counts({1: 1})])
        np.testing.assert_allclose(g.db_v_t, np.zeros(2), atol=1e-14)
        np.testing.assert_allclose(g.db_h_t, np.zeros(1), atol=1e-14)
        np.testing.assert_allclose(g.dW_vh, np.zeros((2, 1)), atol=1e-14)

    def test_enumeration_limit_is_enforced(self):
        self.assertRaises(EnumerationLimitError, lambda: exact_log_z(RsmParams.zeros(2, 25)))

    def test_brute_force_limit_is_enforced(self):
        self.assertRaises(EnumerationLimitError, lambda: brute_force_log_z(RsmParams.zeros(100, 2), D=5))

    def test_ais_is_exact_for_the_base_model(self):
        params = RsmParams(W_vh=np.zeros((4, 3)), b_v=[0.1, -0.4, 0.0, 0.7], b_h=np.zeros(3))
        estimate = estimate_log_z(params, D=3, n_chains=10, n_temperatures=20, rng=np.random.default_rng(0))
        self.assertAlmostEqual(estimate.log_z, exact_log_z(params, D=3), places=10)

    def test_ais_agrees_with_exact_log_z(self):
        rng = np.random.default_rng(4)
        params = random_rsm(5, 4, rng)
        bias = BiasOverride(b_v_t=rng.normal(0, 0.5, 5), b_h_t=rng.normal(0, 0.5, 4))
        estimate = estimate_log_z(params, bias, D=3, n_chains=100, n_temperatures=1000, rng=rng)
        self.assertLess(abs(estimate.log_z - exact_log_z(params, bias, D=3)), 0.05)
        self.assertGreaterEqual(estimate.standard_error, 0.0)

    def test_importance_sampling_agrees_with_exact_partition_function(self):
        rng = np.random.default_rng(5)
        K, F, D, n = 3, 2, 2, 20000
        params = random_rsm(K, F, rng)
        V = rng.multinomial(D, np.full(K, 1 / K), size=n).astype(float)
        weights = np.exp(-free_energies(params, V, np.full(n, float(D)))) * K ** D
        standard_error = weights.std(ddof=1) / math.sqrt(n)
        self.assertLess(abs(weights.mean() - math.exp(exact_log_z(params, D=D))), 4 * standard_error)

    def test_finite_difference_check_on_quadratic(self):
        rng = np.random.default_rng(6)
        A = rng.normal(0, 1, (5, 5))
        A = A @ A.T
        b = rng.normal(0, 1, 5)
        x = rng.normal(0, 1, 5)
        report = finite_difference_check(lambda y: 0.5 * y @ A @ y + b @ y, x, A @ x + b, epsilon=1e-3)
        self.assertLess(report.max_relative_deviation, 1e-9)

    def test_finite_difference_check_restores_the_point(self):
        x = np.array([1.0, 2.0])
        finite_difference_check(lambda y: float(np.sum(y ** 2)), x, 2 * x)
        np.testing.assert_array_equal(x, [1.0, 2.0])

    def test_finite_difference_epsilon_range(self):
        x = np.zeros(2)
        self.assertRaises(ValueError, lambda: finite_difference_check(lambda y: 0.0, x, x, epsilon=1e-2))
        self.assertRaises(ValueError, lambda: finite_difference_check(lambda y: 0.0, x, x, epsilon=1e-9))

    def test_finite_difference_check_aborts_on_non_finite_cost(self):
        x = np.zeros(2)
        self.assertRaises(NumericalError, lambda: finite_difference_check(lambda y: float('nan'), x, x))

    def test_epsilon_sweep_flags_a_too_large_epsilon(self):
        x = np.ones(2)

        def cost(y):
            return float(np.sum(np.exp(3 * y)))

        deviations, too_large = epsilon_sweep(cost, x, 3 * np.exp(3 * x), epsilons=(1e-6, 1e-3))
        self.assertEqual(len(deviations), 2)
        self.assertTrue(too_large)

    def test_battery_passes_on_a_fresh_tiny_model(self):
        params, corpus = tiny_instance(seed=0)
        report = run_battery(params, corpus)
        self.assertTrue(report.passed, [(c.name, c.value) for c in report.checks])
        self.assertEqual(
            [c.name for c in report.checks],
            ['normalisation', 'factorisation', 'rsm_gradient', 'sequence_gradient'])

    def test_battery_fails_on_a_sign_flipped_gradient(self):
        params, corpus = tiny_instance(seed=0)

        def flipped(p):
            return -sequence_gradient(p, corpus, slice_gradient=exact_slice_gradient).flatten()

        report = run_battery(params, corpus, gradient=flipped)
        self.assertFalse(report.passed)
        failed = [c.name for c in report.checks if not c.passed]
        self.assertEqual(failed, ['sequence_gradient'])

    def test_battery_passes_when_base_biases_differ_from_slice_biases(self):
        params, corpus = tiny_instance(seed=1)
        params = params.replace(b_v=params.rsm.b_v + 1.5, b_h=params.rsm.b_h - 0.75)
        report = run_battery(params, corpus)
        self.assertTrue(report.passed, [(c.name, c.value) for c in report.checks])

    def test_battery_on_sampled_coordinates(self):
        params, corpus = tiny_instance(seed=2)
        report = run_battery(params, corpus, max_coordinates=3)
        self.assertTrue(report.passed, [(c.name, c.value) for c in report.checks])

    def test_battery_needs_a_coordinate(self):
        params, corpus = tiny_instance(seed=0)
        self.assertRaises(ValueError, lambda: run_battery(params, corpus, max_coordinates=0))

    def test_sample_indices(self):
        rng = np.random.default_rng(0)
        self.assertIsNone(sample_indices(5, 5, rng))
        indices = sample_indices(50, 7, rng)
        self.assertEqual(len(indices), 7)
        self.assertEqual(len(set(indices.tolist())), 7)
        self.assertTrue(np.all(np.diff(indices) > 0))
        self.assertTrue(np.all((indices >= 0) & (indices < 50)))


class MetricsTests(TestCase):

    def test_uniform_model_perplexity_is_vocabulary_size(self):
        K = 7
        rng = np.random.default_rng(0)
        params = RnnRsmParams.zeros(K, 3, 2)
        corpus = TemporalCorpus(
            vocabulary=Vocabulary([f'w{k}' for k in range(K)]),
            slices=[TimeSlice('1', random_documents(K, 10, 9, rng)), TimeSlice('2', random_documents(K, 4, 3, rng))])
        state = forward(params, corpus)
        value = perplexity(params, corpus.slices[0].documents, 0, state)
        self.assertAlmostEqual(value / K, 1.0, delta=1e-12)

        result = sum_perplexity(params, corpus, z_mode='exact')
        self.assertAlmostEqual(result.total / (2 * K), 1.0, delta=1e-12)
        self.assertEqual(result.labels, ['1', '2'])

    def test_perplexity_is_invariant_to_document_order(self):
        params, corpus = tiny_instance(seed=1, docs_per_slice=5)
        state = forward(params, corpus)
        docs = list(corpus.slices[1].documents)
        a = perplexity(params, docs, 1, state)
        b = perplexity(params, docs[::-1], 1, state)
        self.assertAlmostEqual(a, b, places=12)

    def test_single_document_perplexity_matches_brute_force(self):
        params, corpus = tiny_instance(seed=2)
        state = forward(params, corpus)
        doc = corpus.slices[0].documents[0]
        expected = math.exp(-brute_force_log_prob(params.rsm, doc, state.bias_overrides[0]) / doc.length)
        self.assertAlmostEqual(perplexity(params, [doc], 0, state) / expected, 1.0, delta=1e-9)

    def test_document_average_divides_the_exponent(self):
        params, corpus = tiny_instance(seed=3, docs_per_slice=4)
        state = forward(params, corpus)
        docs = corpus.slices[0].documents
        per_word = perplexity(params, docs, 0, state)
        averaged = perplexity(params, docs, 0, state, document_average=True)
        self.assertAlmostEqual(math.log(averaged), math.log(per_word) / len(docs), places=12)

    def test_ais_perplexity_is_close_to_exact(self):
        params, corpus = tiny_instance(seed=4, docs_per_slice=4)
        state = forward(params, corpus)
        docs = corpus.slices[2].documents
        exact = perplexity(params, docs, 2, state, z_mode='exact')
        approximate = perplexity(params, docs, 2, state, z_mode='ais', rng=np.random.default_rng(0))
        self.assertAlmostEqual(approximate / exact, 1.0, delta=0.05)

    def test_z_mode_resolution(self):
        self.assertEqual(resolve_z_mode('auto', 20), 'exact')
        self.assertEqual(resolve_z_mode('auto', 30), 'ais')
        self.assertEqual(resolve_z_mode('exact', 30), 'exact')
        self.assertRaises(ValueError, lambda: resolve_z_mode('sampled', 3))

    def test_exact_perplexity_refuses_wide_hidden_layer(self):
        partition = partition_function(RsmParams.zeros(2, 25), None, 'exact')
        self.assertRaises(EnumerationLimitError, lambda: partition.log_z(1))

    def test_perplexity_rejects_empty_document_list(self):
        params, corpus = tiny_instance()
        self.assertRaises(ValueError, lambda: perplexity(params, [], 0, forward(params, corpus)))

    def test_single_slice_timestamp_is_that_slice(self):
        params, corpus = tiny_instance(T=1, seed=5)
        predictions = timestamp_predictions(params, corpus)
        self.assertTrue(all(p.predicted_slice == 0 for p in predictions))

    def test_disjoint_regions_are_dated_correctly(self):
        predictions = timestamp_predictions(disjoint_model(), disjoint_corpus(), z_mode='exact')
        self.assertEqual([p.true_slice for p in predictions], [0, 0, 1, 1])
        self.assertEqual([p.predicted_slice for p in predictions], [0, 0, 1, 1])

    def test_timestamp_is_invariant_to_visible_logit_shift(self):
        params = disjoint_model()
        shifted = params.replace(b_v=params.rsm.b_v + 3.0)
        a = timestamp_predictions(params, disjoint_corpus())
        b = timestamp_predictions(shifted, disjoint_corpus())
        self.assertEqual([p.predicted_slice for p in a], [p.predicted_slice for p in b])

    def test_timestamp_predictions_are_independent_of_threads(self):
        params, corpus = tiny_instance(seed=6, docs_per_slice=4)
        a = timestamp_predictions(params, corpus, threads=1)
        b = timestamp_predictions(params, corpus, threads=3)
        self.assertEqual([p.predicted_slice for p in a], [p.predicted_slice for p in b])

    def test_mean_absolute_error_of_perfect_predictions(self):
        self.assertEqual(mean_absolute_error_years(['2000', '2001'], ['2000', '2001']), 0.0)

    def test_mean_absolute_error_of_constant_offset(self):
        self.assertEqual(mean_absolute_error_years([2001, 2002, 2003], [2000, 2001, 2002]), 1.0)

    def test_mean_absolute_error_by_hand(self):
        self.assertEqual(mean_absolute_error_years([2002, 2000, 2004], [2000, 2000, 2000]), 2.0)

    def test_mean_absolute_error_needs_year_labels(self):
        self.assertRaises(ValueError, lambda: mean_absolute_error_years(['early'], ['2000']))
        self.assertRaises(ValueError, lambda: mean_absolute_error_years([], []))

    def topic_fixture(self, params: RnnRsmParams, terms):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(terms),
            slices=[TimeSlice('2000', [Document.from_counts({0: 1})])])
        return corpus, forward(params, corpus)

    def test_zero_weights_give_lexicographic_topics(self):
        params = RnnRsmParams.zeros(4, 2, 2)
        corpus, state = self.topic_fixture(params, ['delta', 'alpha', 'charlie', 'bravo'])
        topics = extract_topics(params, state, corpus.vocabulary, 0, top_n=2)
        self.assertEqual(topics, [['alpha', 'bravo'], ['alpha', 'bravo']])

    def test_dominant_weight_ranks_first(self):
        params = RnnRsmParams.zeros(4, 2, 2)
        params.rsm.W_vh[2, 1] = 10.0
        corpus, state = self.topic_fixture(params, ['delta', 'alpha', 'charlie', 'bravo'])
        topics = extract_topics(params, state, corpus.vocabulary, 0, top_n=3)
        self.assertEqual(topics[1][0], 'charlie')

    def test_topic_distribution_is_one_hot_visible_distribution(self):
        params, corpus = tiny_instance(seed=7)
        state = forward(params, corpus)
        distributions = topic_distributions(params, state.bias_overrides[1])
        for j in range(params.F):
            h = np.zeros(params.F)
            h[j] = 1
            np.testing.assert_array_equal(
                distributions[j], visible_distribution(params.rsm, h, state.bias_overrides[1]))

    def test_top_n_is_clamped_with_a_warning(self):
        params = RnnRsmParams.zeros(3, 2, 2)
        corpus, state = self.topic_fixture(params, ['a', 'b', 'c'])
        with self.assertLogs('tempora.metrics', level='WARNING'):
            topics = extract_topics(params, state, corpus.vocabulary, 0, top_n=10)
        self.assertEqual(len(topics[0]), 3)

    def test_topic_set_covers_every_slice(self):
        params, corpus = tiny_instance(T=3, K=3, F=2, seed=8)
        topics = extract_topic_set(params, corpus, top_n=2)
        self.assertEqual(topics.T, 3)
        self.assertEqual([len(slice_topics) for slice_topics in topics.topics], [2, 2, 2])

    def test_set_cosine_values(self):
        self.assertEqual(set_cosine({'a', 'b'}, {'a', 'b'}), 1.0)
        self.assertEqual(set_cosine({'a'}, {'b'}), 0.0)
        self.assertEqual(set_cosine({'a', 'b'}, {'b', 'c'}), 0.5)
        self.assertEqual(set_cosine(set(), {'a'}), 0.0)
        self.assertEqual(set_cosine({'a', 'b', 'c'}, {'c'}), set_cosine({'c'}, {'a', 'b', 'c'}))

    def test_topic_popularity(self):
        topics = TopicSet(labels=['1', '2'], topics=[[['a', 'b'], ['c', 'd']], [['a', 'c'], ['e', 'f']]])
        self.assertEqual(topic_popularity(topics, ['c', 'd']), [1.0, 0.5])
        self.assertEqual(topic_popularity(topics, ['zzz']), [0.0, 0.0])

    def test_adjacent_similarity_follows_best_topics(self):
        topics = TopicSet(labels=['1', '2', '3'], topics=[[['a', 'b']], [['a', 'c']], [['a', 'c']]])
        self.assertEqual(adjacent_similarity(topics, ['a']), [0.5, 1.0])

    def test_topic_term_drift_bounds(self):
        self.assertEqual(topic_term_drift({'a', 'b'}, {'b', 'a'}), 0.0)
        self.assertEqual(topic_term_drift({'a', 'b'}, {'c', 'd'}), 1.0)

    def test_topic_drifts_rank_hidden_units(self):
        topics = TopicSet(labels=['1', '2', '3'], topics=[
            [['a', 'b'], ['c', 'd'], ['e', 'f']],
            [['a', 'b'], ['c', 'x'], ['e', 'f']],
            [['a', 'b'], ['c', 'x'], ['y', 'z']]])
        drifts = topic_drifts(topics, 0, 2)
        self.assertEqual([d.topic for d in drifts], [2, 1, 0])
        self.assertAlmostEqual(drifts[0].drift, 1.0)
        self.assertAlmostEqual(drifts[1].drift, 0.5)
        self.assertAlmostEqual(drifts[2].drift, 0.0)
        self.assertEqual((drifts[0].first_terms, drifts[0].last_terms), (['e', 'f'], ['y', 'z']))
        self.assertRaises(ValueError, lambda: topic_drifts(topics, 0, 3))

    def test_focus_change_compares_anchor_pairs(self):
        topics = TopicSet(labels=['1', '2', '3'], topics=[[['a', 'b']], [['x']], [['b', 'c']]])
        changes = focus_change(topics, [0, 2])
        self.assertEqual(len(changes), 1)
        self.assertEqual((changes[0].first, changes[0].second), ('1', '3'))
        self.assertEqual(changes[0].similarity, 0.5)
        self.assertRaises(ValueError, lambda: focus_change(topics, [0, 3]))

    def test_longest_run_of_trend(self):
        self.assertEqual(longest_run([0, 1, 1, 1, 0, 1]), 3)
        self.assertEqual(longest_run([]), 0)
        self.assertEqual(longest_run([0, 0]), 0)

    def test_longest_run_matches_brute_force(self):
        rng = np.random.default_rng(9)
        for _ in range(SPAN_PROPERTY_CASES):
            bits = list(rng.integers(0, 2, int(rng.integers(0, 20))))
            text = ''.join(str(b) for b in bits)
            expected = max((len(run) for run in text.split('0')), default=0)
            self.assertEqual(longest_run(bits), expected)

    def test_span_dict_rounds_to_published_value(self):
        trend = TrendSequence(keyword='k', bits=[1] * 19, count=11741)
        self.assertEqual(trend.span, 19)
        self.assertEqual(round(trend.span_dict, 3), 0.002)

    def test_span_dict_is_undefined_without_occurrences(self):
        self.assertIsNone(TrendSequence(keyword='k', bits=[0, 0], count=0).span_dict)

    def test_keyword_trend_resolves_phrases(self):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['machine_translation', 'parsing']),
            slices=[
                TimeSlice('1', [Document.from_counts({1: 2})]),
                TimeSlice('2', [Document.from_counts({0: 3, 1: 1})])])
        topics = TopicSet(labels=['1', '2'], topics=[[['parsing']], [['machine_translation']]])
        trend = keyword_trend(topics, 'machine translation', corpus)
        self.assertEqual(trend.keyword, 'machine_translation')
        self.assertEqual(trend.bits, [0, 1])
        self.assertEqual(trend.count, 3)

    def test_unknown_keyword_has_an_all_zero_trend(self):
        corpus = TemporalCorpus(vocabulary=Vocabulary(['a']), slices=[TimeSlice('1', [Document.from_counts({0: 1})])])
        topics = TopicSet(labels=['1'], topics=[[['a']]])
        with self.assertLogs('tempora.metrics', level='WARNING'):
            trend = keyword_trend(topics, 'neural', corpus)
        self.assertEqual((trend.bits, trend.span, trend.count), ([0], 0, 0))

    def test_avg_span_by_hand(self):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['a', 'b']),
            slices=[
                TimeSlice('1', [Document.from_counts({0: 3, 1: 1})]),
                TimeSlice('2', [Document.from_counts({0: 1})])])
        topics = TopicSet(labels=['1', '2'], topics=[[['a']], [['a']]])
        self.assertEqual(avg_span(topics, corpus), 0.5)

    def test_avg_span_counts_absent_terms_in_the_denominator(self):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['a']),
            slices=[TimeSlice('1', [Document.from_counts({0: 3})]), TimeSlice('2', [Document.from_counts({0: 1})])])
        topics = TopicSet(labels=['1', '2'], topics=[[['a', 'zzz']], [['a']]])
        self.assertEqual(avg_span(topics, corpus), 0.25)

    def test_avg_span_of_empty_topic_set(self):
        corpus = TemporalCorpus(vocabulary=Vocabulary(['a']), slices=[])
        self.assertRaises(ValueError, lambda: avg_span(TopicSet(labels=[], topics=[]), corpus))


class CoherenceTests(TestCase):

    def table_from_text(self, text: str, window: int = 5, vocabulary=None) -> CooccurrenceTable:
        with tempfile.TemporaryDirectory() as d:
            return build_cooccurrence(write_text(d, 'reference.txt', text), window, vocabulary)

    def test_short_line_is_one_window(self):
        table = self.table_from_text('a b c\n')
        self.assertEqual(table.total_windows, 1)
        self.assertEqual(table.joint_count('a', 'b'), 1)
        self.assertEqual(table.joint_count('a', 'c'), 1)
        self.assertEqual(table.joint_count('c', 'b'), 1)

    def test_empty_file_gives_empty_table(self):
        table = self.table_from_text('')
        self.assertEqual(table.total_windows, 0)
        self.assertEqual(table.counts, {})
        self.assertEqual(table.joint, {})

    def test_window_of_one_has_no_joint_counts(self):
        table = self.table_from_text('a b c\n', window=1)
        self.assertEqual(table.total_windows, 3)
        self.assertEqual(table.joint_count('a', 'b'), 0)
        self.assertEqual(table.count('a'), 1)

    def test_sliding_windows_over_a_long_line(self):
        table = self.table_from_text('a b c d\n', window=2)
        self.assertEqual(table.total_windows, 3)
        self.assertEqual(table.count('b'), 2)
        self.assertEqual(table.joint_count('a', 'c'), 0)

    def test_multi_word_terms_are_joined_before_windowing(self):
        table = self.table_from_text(
            'machine translation is hard\n', vocabulary=['machine_translation', 'hard', 'machine'])
        self.assertEqual(table.count('machine_translation'), 1)
        self.assertEqual(table.joint_count('machine_translation', 'hard'), 1)
        self.assertEqual(table.count('machine'), 0)

    def test_phrases_merge_left_to_right(self):
        merged = merge_phrases(['a', 'b', 'c', 'b', 'c'], {'a_b', 'b_c'})
        self.assertEqual(merged, ['a_b', 'c', 'b_c'])

    def test_lines_without_counted_terms_contribute_no_windows(self):
        table = self.table_from_text('a b\nc d\n', vocabulary=['a', 'b'])
        self.assertEqual(table.total_windows, 1)

    def test_table_indexes_like_an_accumulator(self):
        table = CooccurrenceTable(window=5, total_windows=4, counts={'x': 3, 'y': 2}, joint={('x', 'y'): 2})
        self.assertEqual(table.num_docs, 4)
        self.assertEqual(table['x'], 3)
        self.assertEqual(table[('y', 'x')], 2)
        self.assertEqual(table[('x', 'x')], 3)

    def test_vocabulary_restricts_counts(self):
        table = self.table_from_text('a b c\n', vocabulary=['a', 'c'])
        self.assertEqual(set(table.counts), {'a', 'c'})

    def test_npmi_conventions(self):
        always = CooccurrenceTable(window=5, total_windows=4, counts={'x': 2, 'y': 2}, joint={('x', 'y'): 2})
        self.assertAlmostEqual(npmi('x', 'y', always), 1.0, places=9)

        independent = CooccurrenceTable(window=5, total_windows=4, counts={'x': 2, 'y': 2}, joint={('x', 'y'): 1})
        self.assertAlmostEqual(npmi('x', 'y', independent), 0.0, places=9)

        never = CooccurrenceTable(window=5, total_windows=4, counts={'x': 2, 'y': 2})
        self.assertEqual(npmi('x', 'y', never), -1.0)

    def test_npmi_of_empty_table(self):
        self.assertEqual(npmi('x', 'y', CooccurrenceTable(window=5)), -1.0)

    def test_identical_context_vectors_are_fully_coherent(self):
        table = self.table_from_text('x y\nx y\n')
        self.assertAlmostEqual(coherence(['x', 'y'], table), 1.0, places=12)

    def test_coherence_needs_two_words(self):
        self.assertRaises(ValueError, lambda: coherence(['x'], CooccurrenceTable(window=5)))

    def test_missing_word_warns_and_scores_zero(self):
        table = self.table_from_text('x y\n')
        with self.assertLogs('tempora.coherence', level='WARNING'):
            value = coherence(['x', 'zzz'], table)
        self.assertEqual(value, 0.0)

    def test_coherence_summary_per_slice(self):
        table = self.table_from_text('x y\nx y\nz w\n')
        topics = TopicSet(labels=['1'], topics=[[['x', 'y'], ['x', 'y']]])
        summary = coherence_summary(topics, table)
        self.assertEqual(len(summary), 1)
        self.assertEqual(summary[0].label, '1')
        self.assertEqual(len(summary[0].topics), 2)
        self.assertAlmostEqual(summary[0].mean, summary[0].median)

    def test_ranked_coherence_orders_topics_across_slices(self):
        table = self.table_from_text('x y\nx y\n')
        topics = TopicSet(labels=['1', '2'], topics=[[['x', 'y'], ['x', 'zzz']], [['x', 'zzz'], ['x', 'y']]])
        with self.assertLogs('tempora.coherence', level='WARNING'):
            ranked = ranked_coherence(topics, table)
        self.assertEqual([(r.label, r.topic) for r in ranked], [('1', 0), ('2', 1), ('1', 1), ('2', 0)])
        self.assertAlmostEqual(ranked[0].score, 1.0, places=9)
        self.assertEqual(ranked[-1].terms, ['x', 'zzz'])

    def test_table_round_trips_through_file(self):
        table = self.table_from_text('a b c d e f\nb c\n', window=3)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'table.json')
            table.save(path)
            loaded = CooccurrenceTable.load(path)
        self.assertEqual(loaded.total_windows, table.total_windows)
        self.assertEqual(loaded.counts, table.counts)
        self.assertEqual(loaded.joint, table.joint)

    def test_invalid_table_document_is_rejected(self):
        self.assertRaises(ValueError, lambda: CooccurrenceTable.from_dict({'window': 5}))


def skewed_corpus(seed: int, T: int = 2, K: int = 6, used: int = 3, docs_per_slice: int = 6) -> TemporalCorpus:
    """
    Every document draws only from the first `used` terms, so the base
    visible biases have a consistent signal to follow
    """
    rng = np.random.default_rng(seed)
    p = np.zeros(K)
    p[:used] = 1 / used
    slices = [
        TimeSlice(str(t + 1), [
            Document.from_dense(rng.multinomial(int(rng.integers(2, 5)), p)) for _ in range(docs_per_slice)])
        for t in range(T)]
    return TemporalCorpus(vocabulary=Vocabulary([f'w{k}' for k in range(K)]), slices=slices)


def small_config(**overrides) -> TrainConfig:
    settings = dict(
        epochs=3, cd_k=1, learning_rate=0.01, hidden=2, recurrent=2, warm_start=False, threads=1)
    settings.update(overrides)
    return TrainConfig(**settings)


class TrainerTests(TestCase):

    def test_defaults(self):
        config = TrainConfig()
        self.assertEqual(
            (config.epochs, config.cd_k, config.learning_rate, config.hidden),
            (1000, 15, 0.001, 30))

    def test_invalid_config_is_rejected(self):
        self.assertRaises(ValueError, lambda: TrainConfig(cd_k=0))
        self.assertRaises(ValueError, lambda: TrainConfig(activation='relu'))
        self.assertRaises(ValueError, lambda: TrainConfig(z_mode='guess'))

    def test_config_round_trips_through_dict(self):
        config = small_config(momentum=0.5, clip_norm=None)
        self.assertEqual(TrainConfig.from_dict(json.loads(json.dumps(config.to_dict()))), config)

    def test_zero_learning_rate_leaves_parameters_unchanged(self):
        corpus = region_corpus(T=2, terms_per_slice=2, docs_per_slice=3, min_length=1, max_length=3)
        trainer = Trainer(corpus, small_config(learning_rate=0.0))
        initial = trainer.params.copy()
        trainer.run()
        self.assertEqual(trainer.epoch, 3)
        self.assertEqual(trainer.params, initial)

    def test_static_rsm_zero_learning_rate_is_identity(self):
        corpus = region_corpus(T=1, terms_per_slice=4, docs_per_slice=3)
        trained = train_static_rsm(corpus.slices[0], corpus.K, small_config(learning_rate=0.0), np.random.default_rng(5))
        self.assertEqual(trained, RsmParams.random(corpus.K, 2, np.random.default_rng(5)))

    def test_static_rsm_is_deterministic_under_seed(self):
        corpus = region_corpus(T=1, terms_per_slice=4, docs_per_slice=3)
        a = train_static_rsm(corpus.slices[0], corpus.K, small_config(), np.random.default_rng(6))
        b = train_static_rsm(corpus.slices[0], corpus.K, small_config(), np.random.default_rng(6))
        self.assertEqual(a, b)

    def test_static_rsm_fits_a_single_document(self):
        doc = Document.from_counts({0: 3, 1: 2})
        time_slice = TimeSlice('1', [doc])
        config = small_config(epochs=300, learning_rate=0.05)
        rng = np.random.default_rng(7)
        initial = RsmParams.random(5, 2, np.random.default_rng(7))
        trained = train_static_rsm(time_slice, 5, config, rng)
        self.assertGreater(exact_log_prob(trained, doc), exact_log_prob(initial, doc))

    def test_static_sequence_skips_empty_slices(self):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['a', 'b']),
            slices=[TimeSlice('1', [Document.from_counts({0: 1})]), TimeSlice('2', [])])
        with self.assertLogs('tempora.trainer', level='WARNING'):
            models = train_static_sequence(corpus, small_config())
        self.assertIsInstance(models[0], RsmParams)
        self.assertIsNone(models[1])

    def test_warm_start_copies_the_final_slice_rsm(self):
        corpus = region_corpus(T=3, terms_per_slice=3, docs_per_slice=4)
        config = small_config(warm_start=True, warm_start_epochs=4)
        params = warm_start(corpus, config, np.random.default_rng(3))
        rsm = train_static_rsm(corpus.slices[-1], corpus.K, config, np.random.default_rng(3), 4)
        self.assertEqual(params.rsm, rsm)
        np.testing.assert_array_equal(params.b_u, np.zeros(2))
        np.testing.assert_array_equal(params.u0, np.zeros(2))

    def test_warm_start_with_zero_epochs_is_random_initialisation(self):
        corpus = region_corpus(T=2, terms_per_slice=3, docs_per_slice=4)
        params = warm_start(corpus, small_config(warm_start_epochs=0), np.random.default_rng(3))
        self.assertEqual(params.rsm, RsmParams.random(corpus.K, 2, np.random.default_rng(3)))

    def test_warm_start_is_deterministic_under_seed(self):
        corpus = region_corpus(T=2, terms_per_slice=3, docs_per_slice=4)
        config = small_config(warm_start_epochs=3)
        self.assertEqual(
            warm_start(corpus, config, np.random.default_rng(1)),
            warm_start(corpus, config, np.random.default_rng(1)))

    def test_warm_start_falls_back_on_empty_final_slice(self):
        corpus = TemporalCorpus(
            vocabulary=Vocabulary(['a', 'b', 'c']),
            slices=[TimeSlice('1', [Document.from_counts({0: 1, 2: 1})]), TimeSlice('2', [])])
        with self.assertLogs('tempora.trainer', level='WARNING'):
            params = warm_start(corpus, small_config(), np.random.default_rng(3))
        self.assertEqual(params, RnnRsmParams.initialise(3, 2, 2, np.random.default_rng(3)))

    def test_checkpoint_resume_is_bit_identical(self):
        corpus = region_corpus(T=2, terms_per_slice=3, docs_per_slice=4, seed=2)
        config = small_config(momentum=0.5)

        first = Trainer(corpus, config)
        first.step()
        first.step()

        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'model.json')
            save_checkpoint(first.checkpoint(), path)
            second = Trainer.from_checkpoint(load_checkpoint(path), corpus)

        self.assertEqual(second.epoch, 2)
        first.step()
        second.step()
        self.assertEqual(first.params, second.params)

    def test_checkpoint_sidecar_round_trip(self):
        corpus = region_corpus(T=2, terms_per_slice=3, docs_per_slice=4)
        trainer = Trainer(corpus, small_config())
        trainer.step()
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'model.json')
            save_checkpoint(trainer.checkpoint(), path, sidecar=True)
            self.assertTrue(os.path.exists(os.path.join(d, 'model.npz')))
            loaded = load_checkpoint(path)
        self.assertEqual(loaded.params, trainer.params)
        self.assertEqual(loaded.epoch, 1)

    def test_checkpoint_does_not_persist_thread_count(self):
        corpus = region_corpus(T=2, terms_per_slice=3, docs_per_slice=4)
        checkpoint = Trainer(corpus, small_config(threads=4)).checkpoint()
        self.assertIsNone(checkpoint.config.threads)
        self.assertIsNone(Checkpoint.from_dict(checkpoint.to_dict()).config.threads)

    def test_vocabulary_mismatch_is_rejected(self):
        corpus = region_corpus(T=2, terms_per_slice=3, docs_per_slice=4)
        other = region_corpus(T=2, terms_per_slice=4, docs_per_slice=4)
        checkpoint = Trainer(corpus, small_config()).checkpoint()
        self.assertRaises(VocabularyMismatchError, lambda: check_vocabulary(checkpoint, other))
        self.assertRaises(VocabularyMismatchError, lambda: Trainer.from_checkpoint(checkpoint, other))

    def test_non_finite_parameter_names_parameter_and_epoch(self):
        with self.assertRaises(NumericalError) as context:
            check_finite(dict(W_vh=np.zeros(2), W_uu=np.array([1.0, np.nan])), 7)
        self.assertEqual(context.exception.parameter, 'W_uu')
        self.assertEqual(context.exception.epoch, 7)

    def test_training_aborts_on_non_finite_update(self):
        class PoisonedTrainer(Trainer):
            def gradient(self):
                grad = super().gradient()
                grad.b_u = np.full_like(grad.b_u, np.nan)
                return grad

        corpus = region_corpus(T=2, terms_per_slice=2, docs_per_slice=3)
        trainer = PoisonedTrainer(corpus, small_config(clip_norm=None))
        with self.assertRaises(NumericalError) as context:
            trainer.step()
        self.assertEqual(context.exception.parameter, 'b_u')
        self.assertEqual(context.exception.epoch, 1)

    def test_early_stopping_returns_best_checkpoint(self):
        corpus = region_corpus(T=2, terms_per_slice=3, docs_per_slice=8, min_length=2, max_length=5, seed=1)
        train_corpus, held = split_held_out(corpus, 2, seed=0)
        config = small_config(epochs=30, eval_every=2, early_stop_patience=3, z_mode='exact')

        trainer = Trainer(train_corpus, config, held)
        best = trainer.run()

        evaluated = [r.held_out_perplexity for r in trainer.history if r.held_out_perplexity is not None]
        self.assertTrue(evaluated)
        self.assertIsNotNone(best.held_out_perplexity)
        self.assertLessEqual(best.held_out_perplexity, min(evaluated))

    def test_training_is_independent_of_thread_count(self):
        corpus = region_corpus(T=2, terms_per_slice=3, docs_per_slice=5)
        a = train(corpus, small_config(threads=1))
        b = train(corpus, small_config(threads=3))
        self.assertEqual(json.dumps(a.to_dict()), json.dumps(b.to_dict()))

    def test_exact_cost_decreases_on_tiny_corpora(self):
        decreased = 0
        for seed in range(TINY_TRAINING_RUNS):
            corpus = skewed_corpus(seed)
            trainer = Trainer(corpus, small_config(epochs=50, cd_k=5, seed=seed))
            before = exact_sequence_cost(trainer.params, corpus)
            trainer.run()
            decreased += exact_sequence_cost(trainer.params, corpus) < before
        self.assertGreaterEqual(decreased, math.ceil(0.9 * TINY_TRAINING_RUNS))


class SyntheticTests(TestCase):

    def test_region_corpus_is_disjoint_by_slice(self):
        corpus = region_corpus(T=3, terms_per_slice=10, docs_per_slice=30)
        self.assertEqual(corpus.K, 30)
        for t, s in enumerate(corpus.slices):
            counts = s.count_sum(corpus.K)
            self.assertEqual(counts[t * 10:(t + 1) * 10].sum(), counts.sum())

    def test_tiny_instance_is_reproducible(self):
        a_params, a_corpus = tiny_instance(seed=3)
        b_params, b_corpus = tiny_instance(seed=3)
        self.assertEqual(a_params, b_params)
        self.assertEqual(a_corpus, b_corpus)

    def test_end_to_end_on_disjoint_regions(self):
        passing = 0
        for seed in range(SYNTHETIC_SEEDS):
            corpus = region_corpus(T=3, terms_per_slice=10, docs_per_slice=30, seed=seed)
            train_corpus, held = split_held_out(corpus, 5, seed=seed)
            config = TrainConfig(
                epochs=300, cd_k=5, learning_rate=0.01, hidden=5, recurrent=5, seed=seed,
                warm_start=False, threads=1)
            trainer = Trainer(train_corpus, config)

            costs = []
            for epoch in range(config.epochs):
                if epoch % 10 == 0:
                    costs.append(exact_sequence_cost(trainer.params, train_corpus))
                trainer.step()
            medians = [float(np.median(costs[i:i + 10])) for i in range(0, len(costs), 10)]
            passing += all(
                later <= earlier + 0.01 * abs(earlier) for earlier, later in zip(medians, medians[1:])) \
                and medians[-1] < medians[0]

            if seed > 0:
                continue

            predictions = timestamp_predictions(trainer.params, held, context=train_corpus, z_mode='exact')
            accuracy = np.mean([p.true_slice == p.predicted_slice for p in predictions])
            self.assertGreaterEqual(accuracy, 0.9)

            topics = extract_topic_set(trainer.params, train_corpus, top_n=10)
            for t in range(corpus.T):
                region = corpus.vocabulary.terms[t * 10:(t + 1) * 10]
                self.assertGreaterEqual(topic_popularity(topics, region)[t], 0.5)

        self.assertGreaterEqual(passing, math.ceil(0.9 * SYNTHETIC_SEEDS))


class CliTests(TestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.workdir = self.directory.name
        write_manifest(self.workdir, [
            ('2000', 'alpha:2 beta:1\nbeta:3\nalpha:1 gamma:1\n'),
            ('2001', 'gamma:2 delta:2\ndelta:1\nalpha:1 delta:3\n')])
        write_text(self.workdir, 'reference.txt', 'alpha beta gamma\ndelta alpha beta\ngamma delta\n')
        write_text(self.workdir, 'keyterms.json', json.dumps({'early': ['alpha', 'beta']}))

    def tearDown(self):
        self.directory.cleanup()

    def run_cli(self, *args) -> int:
        return main(['--workdir', self.workdir, '--threads', '1', '--log-level', 'ERROR'] + list(args))

    def path(self, name: str) -> str:
        return os.path.join(self.workdir, name)

    def train_tiny(self, out: str = 'model.json', *extra) -> int:
        return self.run_cli(
            'train', 'corpus.json', '--out', out, '--epochs', '3', '--cd-k', '1',
            '--hidden', '3', '--recurrent', '2', '--no-warm-start', *extra)

    def test_ingest_writes_statistics(self):
        self.assertEqual(self.run_cli('ingest', 'corpus.json', '--stats', 'stats.csv'), EXIT_OK)
        rows = read_csv(self.path('stats.csv'))
        self.assertEqual(rows[0], ['label', 'documents', 'tokens'])
        self.assertEqual(rows[1:], [['2000', '3', '8'], ['2001', '3', '9'], ['total', '6', '17']])
        self.assertTrue(os.path.exists(self.path('ingest.manifest.json')))

    def test_ingest_of_missing_manifest_is_an_input_error(self):
        self.assertEqual(self.run_cli('ingest', 'missing.json'), EXIT_INPUT_ERROR)

    def test_ingest_of_malformed_corpus_is_an_input_error(self):
        write_manifest(self.workdir, [('1', 'alpha:one\n')], name='bad.json')
        self.assertEqual(self.run_cli('ingest', 'bad.json'), EXIT_INPUT_ERROR)

    def test_supplied_vocabulary_gives_identical_hashes(self):
        write_text(self.workdir, 'vocab.txt', 'delta\ngamma\nbeta\nalpha\n')
        self.run_cli('ingest', 'corpus.json', '--vocab', 'vocab.txt', '--out', 'a', '--stats', 'a.csv')
        self.run_cli('ingest', 'corpus.json', '--vocab', 'vocab.txt', '--out', 'b', '--stats', 'b.csv')
        self.assertEqual(
            Vocabulary.read(self.path('a/vocabulary.txt')).digest(),
            Vocabulary.read(self.path('b/vocabulary.txt')).digest())

    def test_train_defaults_follow_the_hyperparameter_table(self):
        config = train_config(build_parser().parse_args(['train', 'corpus.json']))
        self.assertEqual(
            (config.epochs, config.cd_k, config.learning_rate, config.hidden),
            (1000, 15, 0.001, 30))

        self.assertEqual(self.run_cli('train', 'corpus.json', '--epochs', '0', '--no-warm-start'), EXIT_OK)
        with open(self.path('train.manifest.json')) as f:
            manifest = json.load(f)
        self.assertEqual(manifest['config']['cd_k'], 15)
        self.assertEqual(manifest['config']['learning_rate'], 0.001)
        self.assertEqual(manifest['config']['hidden'], 30)
        self.assertEqual(manifest['config']['epochs'], 0)
        self.assertEqual(manifest['version'], __version__)
        self.assertIn('corpus.json', manifest['inputs'])

    def test_zero_epochs_checkpoint_equals_initialisation(self):
        self.assertEqual(self.run_cli('train', 'corpus.json', '--epochs', '0', '--no-warm-start'), EXIT_OK)
        checkpoint = load_checkpoint(self.path('model.json'))
        self.assertEqual(checkpoint.epoch, 0)
        self.assertEqual(checkpoint.params, RnnRsmParams.initialise(4, 30, 30, np.random.default_rng(0)))

    def test_training_twice_gives_identical_outputs(self):
        self.assertEqual(self.train_tiny('a.json', '--history', 'a.csv'), EXIT_OK)
        self.assertEqual(
            main(['--workdir', self.workdir, '--threads', '3', '--log-level', 'ERROR',
                  'train', 'corpus.json', '--out', 'b.json', '--history', 'b.csv', '--epochs', '3',
                  '--cd-k', '1', '--hidden', '3', '--recurrent', '2', '--no-warm-start']),
            EXIT_OK)
        for a, b in (('a.json', 'b.json'), ('a.csv', 'b.csv')):
            with open(self.path(a), 'rb') as f, open(self.path(b), 'rb') as g:
                self.assertEqual(f.read(), g.read())

    def test_training_with_held_out_documents(self):
        self.assertEqual(self.train_tiny('model.json', '--held-out', '1', '--z-mode', 'exact'), EXIT_OK)
        rows = read_csv(self.path('history.csv'))
        self.assertEqual(rows[0][-1], 'held_out_sum_perplexity')
        self.assertTrue(rows[-1][-1])

    def test_evaluations_write_csv(self):
        self.assertEqual(self.train_tiny(), EXIT_OK)
        model = ['--checkpoint', 'model.json', '--corpus', 'corpus.json']

        self.assertEqual(self.run_cli('eval', 'perplexity', *model, '--z-mode', 'exact', '--out', 'ppl.csv'), EXIT_OK)
        rows = read_csv(self.path('ppl.csv'))
        self.assertEqual([r[0] for r in rows], ['label', '2000', '2001', 'SumPPL'])
        self.assertAlmostEqual(float(rows[-1][1]), float(rows[1][1]) + float(rows[2][1]))

        self.assertEqual(self.run_cli('eval', 'topics', *model, '--top', '2', '--out', 'topics.csv'), EXIT_OK)
        self.assertEqual(len(read_csv(self.path('topics.csv'))), 1 + 2 * 3 * 2)

        self.assertEqual(self.run_cli('eval', 'timestamp', *model, '--out', 'dates.csv'), EXIT_OK)
        self.assertEqual(len(read_csv(self.path('dates.csv'))), 1 + 6)

        self.assertEqual(
            self.run_cli('eval', 'popularity', *model, '--key-terms', 'keyterms.json', '--out', 'pop.csv'),
            EXIT_OK)
        self.assertEqual(read_csv(self.path('pop.csv'))[0], ['label', 'early'])

        self.assertEqual(self.run_cli('eval', 'drift', *model, '--top', '2', '--out', 'drift.csv'), EXIT_OK)
        self.assertEqual(read_csv(self.path('drift.csv'))[1][:2], ['2000', '2001'])

        self.assertEqual(
            self.run_cli('eval', 'focus', *model, '--anchors', '2000', '2001', '--out', 'focus.csv'), EXIT_OK)
        self.assertEqual(len(read_csv(self.path('focus.csv'))), 2)

        self.assertEqual(
            self.run_cli('eval', 'trend', *model, '--keyword', 'alpha', '--keyword', 'machine translation',
                         '--top', '2', '--out', 'trend.csv'),
            EXIT_OK)
        rows = read_csv(self.path('trend.csv'))
        self.assertEqual(rows[0], ['keyword', 'trend', 'span', 'count', 'span_dict'])
        self.assertEqual(rows[1][3], '4')
        self.assertEqual(rows[2][3:], ['0', ''])

        self.assertEqual(self.run_cli('eval', 'span', *model, '--top', '2', '--out', 'span.csv'), EXIT_OK)
        self.assertEqual(len(read_csv(self.path('span.csv'))), 2)

        self.assertEqual(self.run_cli('cooccurrence', 'reference.txt', '--out', 'cooc.json'), EXIT_OK)
        self.assertEqual(
            self.run_cli('eval', 'coherence', *model, '--top', '2', '--cooccurrence', 'cooc.json',
                         '--out', 'coh.csv'),
            EXIT_OK)
        self.assertEqual(len(read_csv(self.path('coh.csv'))), 1 + 2)
        self.assertTrue(os.path.exists(self.path('eval-coherence.manifest.json')))

    def test_training_with_a_held_out_manifest_on_fewer_terms(self):
        write_manifest(self.workdir, [('2000', 'alpha:1 beta:1\n'), ('2001', 'delta:2\n')], name='held.json')
        self.assertEqual(self.train_tiny('model.json', '--held', 'held.json', '--z-mode', 'exact'), EXIT_OK)
        rows = read_csv(self.path('history.csv'))
        self.assertEqual(rows[0][-1], 'held_out_sum_perplexity')
        self.assertTrue(rows[-1][-1])

    def test_evaluation_corpus_on_fewer_terms_uses_the_model_vocabulary(self):
        self.assertEqual(self.train_tiny(), EXIT_OK)
        self.assertTrue(os.path.exists(self.path('model.vocab.txt')))
        write_manifest(self.workdir, [('2000', 'alpha:1 beta:2\n'), ('2001', 'beta:1\n')], name='subset.json')
        self.assertEqual(
            self.run_cli('eval', 'perplexity', '--checkpoint', 'model.json', '--corpus', 'subset.json',
                         '--z-mode', 'exact', '--out', 'ppl.csv'),
            EXIT_OK)
        self.assertEqual([r[0] for r in read_csv(self.path('ppl.csv'))], ['label', '2000', '2001', 'SumPPL'])

    def test_per_topic_drift_and_coherence(self):
        self.assertEqual(self.train_tiny(), EXIT_OK)
        model = ['--checkpoint', 'model.json', '--corpus', 'corpus.json', '--top', '2']

        self.assertEqual(
            self.run_cli('eval', 'drift', *model, '--out', 'drift.csv', '--per-topic', 'drifts.csv'), EXIT_OK)
        rows = read_csv(self.path('drifts.csv'))
        self.assertEqual(rows[0], ['topic', 'drift', 'first_terms', 'last_terms'])
        self.assertEqual(len(rows), 1 + 3)
        drifts = [float(r[1]) for r in rows[1:]]
        self.assertEqual(drifts, sorted(drifts, reverse=True))

        self.assertEqual(self.run_cli('cooccurrence', 'reference.txt', '--out', 'cooc.json'), EXIT_OK)
        self.assertEqual(
            self.run_cli('eval', 'coherence', *model, '--cooccurrence', 'cooc.json', '--out', 'coh.csv',
                         '--per-topic', 'ranked.csv'),
            EXIT_OK)
        rows = read_csv(self.path('ranked.csv'))
        self.assertEqual(rows[0], ['label', 'topic', 'coherence', 'terms'])
        self.assertEqual(len(rows), 1 + 2 * 3)
        scores = [float(r[2]) for r in rows[1:]]
        self.assertEqual(scores, sorted(scores, reverse=True))

    def test_evaluation_of_mismatched_corpus_is_an_input_error(self):
        self.assertEqual(self.train_tiny(), EXIT_OK)
        write_manifest(self.workdir, [('2000', 'alpha:1 epsilon:1\n')], name='other.json')
        self.assertEqual(
            self.run_cli('eval', 'perplexity', '--checkpoint', 'model.json', '--corpus', 'other.json'),
            EXIT_INPUT_ERROR)

    def test_unknown_evaluation_is_a_key_error(self):
        self.assertRaises(KeyError, lambda: get_evaluation('bleu'))

    def test_oracle_passes_on_a_fresh_tiny_model(self):
        self.assertEqual(self.run_cli('oracle', '--fd-epsilon', '1e-5', '--out', 'oracle.csv'), EXIT_OK)
        rows = read_csv(self.path('oracle.csv'))
        self.assertEqual(rows[0], ['check', 'value', 'tolerance', 'passed'])
        self.assertTrue(all(r[3] == '1' for r in rows[1:]))

    def test_oracle_fails_with_an_impossible_tolerance(self):
        self.assertEqual(self.run_cli('oracle', '--tolerance', '0', '--out', 'oracle.csv'), EXIT_CHECK_FAILED)

    def test_oracle_needs_checkpoint_and_corpus_together(self):
        self.assertEqual(self.run_cli('oracle', '--checkpoint', 'model.json'), EXIT_INPUT_ERROR)

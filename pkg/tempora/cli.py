"""
Command-line entry point.  Every command writes a run manifest
(<command>.manifest.json) into the working directory; data goes to files
or standard output and logs go to standard error.
"""

from argparse import ArgumentParser, Namespace
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Optional, Sequence, Union
import csv
import hashlib
import logging
import os
import sys

import numpy as np

from . import __version__
from .coherence import (
    DEFAULT_WINDOW, CooccurrenceTable, build_cooccurrence, coherence_summary, ranked_coherence)
from .corpus import TemporalCorpus, Vocabulary, ingest, split_held_out, write_corpus
from .dictserializable import read_json, write_json
from .errors import NumericalError
from .metrics import (
    DEFAULT_TOP_N, adjacent_similarity, avg_span, extract_topic_set, focus_change,
    keyword_trend, mean_absolute_error_years, sum_perplexity, timestamp_predictions,
    topic_drifts, topic_popularity, topic_term_drift)
from .oracle import run_battery
from .parallel import resolve_threads
from .synthetic import tiny_instance
from .trainer import (
    Checkpoint, TrainConfig, Trainer, check_vocabulary, load_checkpoint, save_checkpoint)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL = 3

DEFAULTS = TrainConfig()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: Optional[int]
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    started: str = ''
    finished: str = ''
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            h.update(block)
    return h.hexdigest()


class Run(object):
    """
    Path resolution against the working directory plus the bookkeeping
    behind a RunManifest
    """

    def __init__(self, args: Namespace, command: str, config: dict, seed: Optional[int] = None):
        super().__init__()
        self.workdir = args.workdir
        self.threads = args.threads
        self.manifest = RunManifest(command=command, config=config, seed=seed, started=timestamp())

    def path(self, p: Optional[str]) -> Optional[str]:
        if p is None or os.path.isabs(p):
            return p
        return os.path.join(self.workdir, p)

    def input(self, p: str) -> str:
        resolved = self.path(p)
        self.manifest.inputs[p] = file_digest(resolved)
        return resolved

    def corpus(self, manifest: str, vocabulary: Optional[Union[str, Vocabulary]] = None) -> TemporalCorpus:
        path = self.input(manifest)
        entries = read_json(path).get('slices', [])
        base = os.path.dirname(os.path.abspath(path))
        for entry in entries:
            slice_path = entry['file'] if os.path.isabs(entry['file']) else os.path.join(base, entry['file'])
            self.manifest.inputs[slice_path] = file_digest(slice_path)
        if isinstance(vocabulary, str):
            vocabulary = self.input(vocabulary)
        return ingest(path, vocabulary, self.threads)

    def output(self, p: Optional[str]) -> Optional[str]:
        if p is None:
            return None
        resolved = self.path(p)
        directory = os.path.dirname(resolved)
        if directory:
            os.makedirs(directory, exist_ok=True)
        self.manifest.outputs.append(p)
        return resolved

    def finish(self) -> None:
        self.manifest.finished = timestamp()
        name = self.manifest.command.replace(' ', '-')
        os.makedirs(self.workdir, exist_ok=True)
        write_json(self.manifest, os.path.join(self.workdir, f'{name}.manifest.json'), indent=2)


def write_csv(path: Optional[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    if path is None:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
        return

    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def fmt(value: Optional[float]) -> str:
    return '' if value is None else repr(float(value))


def cmd_ingest(args: Namespace) -> int:
    run = Run(args, 'ingest', dict(vocab=args.vocab, out=args.out))
    corpus = run.corpus(args.manifest, args.vocab)

    if args.out:
        write_corpus(corpus, run.output(args.out))

    rows = [[s.label, s.N, s.token_count] for s in corpus.slices]
    rows.append(['total', corpus.document_count, corpus.token_count])
    write_csv(run.output(args.stats), ['label', 'documents', 'tokens'], rows)
    logger.info(f'Vocabulary of {corpus.K} terms, hash {corpus.digest()}')

    run.finish()
    return EXIT_OK


def train_config(args: Namespace) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        cd_k=args.cd_k,
        learning_rate=args.lr,
        hidden=args.hidden,
        recurrent=args.recurrent,
        seed=args.seed,
        early_stop_patience=args.early_stop,
        eval_every=args.eval_every,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        clip_norm=None if args.no_clip else args.clip_norm,
        mean_field_final=args.cd_mean_field_final,
        activation=args.recurrent_activation,
        scale_visible_sum=args.scale_visible_sum,
        warm_start=args.warm_start,
        warm_start_epochs=args.warm_start_epochs,
        batch_size=args.batch_size,
        z_mode=args.z_mode,
        threads=args.threads)


def cmd_train(args: Namespace) -> int:
    config = train_config(args)
    resolved = config.replace(threads=None).to_dict()
    run = Run(args, 'train', resolved, config.seed)
    corpus = run.corpus(args.corpus, args.vocab)

    held = None
    if args.held:
        held = run.corpus(args.held, corpus.vocabulary)
    elif args.held_out:
        corpus, held = split_held_out(corpus, args.held_out, config.seed)

    trainer = Trainer(corpus, config, held)
    checkpoint = trainer.run()
    save_checkpoint(checkpoint, run.output(args.out), sidecar=args.sidecar)
    root, _ = os.path.splitext(args.out)
    corpus.vocabulary.write(run.output(f'{root}.vocab.txt'))
    logger.info(f'Saved checkpoint from epoch {checkpoint.epoch} to {args.out}')

    history = [
        [r.epoch, fmt(r.reconstruction_error), fmt(r.gradient_norm), fmt(r.held_out_perplexity)]
        for r in trainer.history]
    write_csv(
        run.output(args.history),
        ['epoch', 'reconstruction_error', 'gradient_norm', 'held_out_sum_perplexity'],
        history)

    run.finish()
    return EXIT_OK


def model_vocabulary(run: Run, args: Namespace) -> Optional[str]:
    if args.vocab:
        return args.vocab
    root, _ = os.path.splitext(args.checkpoint)
    candidate = f'{root}.vocab.txt'
    return candidate if os.path.exists(run.path(candidate)) else None


def load_model(run: Run, args: Namespace):
    checkpoint = load_checkpoint(run.input(args.checkpoint))
    corpus = run.corpus(args.corpus, model_vocabulary(run, args))
    check_vocabulary(checkpoint, corpus)
    return checkpoint, corpus


def context_corpus(run: Run, args: Namespace, checkpoint: Checkpoint, corpus: TemporalCorpus) -> TemporalCorpus:
    if not args.context:
        return corpus
    context = run.corpus(args.context, corpus.vocabulary)
    check_vocabulary(checkpoint, context)
    return context


def topic_set(checkpoint: Checkpoint, corpus: TemporalCorpus, top_n: int):
    return extract_topic_set(
        checkpoint.params,
        corpus,
        top_n,
        checkpoint.config.activation,
        checkpoint.config.scale_visible_sum)


def read_key_terms(path: str) -> Dict[str, List[str]]:
    return read_json(path, schema='keyterms')


def eval_perplexity(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    context = context_corpus(run, args, checkpoint, corpus)
    result = sum_perplexity(
        checkpoint.params,
        corpus,
        context=context,
        z_mode=args.z_mode,
        activation=checkpoint.config.activation,
        scale_visible_sum=checkpoint.config.scale_visible_sum,
        document_average=args.document_average,
        seed=args.seed,
        threads=run.threads)
    rows = [[label, fmt(value)] for label, value in zip(result.labels, result.values)]
    rows.append(['SumPPL', fmt(result.total)])
    write_csv(run.output(args.out), ['label', 'perplexity'], rows)
    return EXIT_OK


def eval_timestamp(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    context = context_corpus(run, args, checkpoint, corpus)
    predictions = timestamp_predictions(
        checkpoint.params,
        corpus,
        context=context,
        z_mode=args.z_mode,
        activation=checkpoint.config.activation,
        scale_visible_sum=checkpoint.config.scale_visible_sum,
        seed=args.seed,
        threads=run.threads)

    labels = corpus.labels
    rows = [[labels[p.true_slice], labels[p.predicted_slice]] for p in predictions]
    write_csv(run.output(args.out), ['true_label', 'predicted_label'], rows)

    try:
        error = mean_absolute_error_years([r[1] for r in rows], [r[0] for r in rows])
        logger.info(f'Mean absolute error: {error:.3f} years')
    except ValueError as e:
        logger.warning(f'No year error reported: {e}')
    return EXIT_OK


def eval_topics(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    topics = topic_set(checkpoint, corpus, args.top)
    rows = [
        [label, j, rank, term]
        for label, slice_topics in zip(topics.labels, topics.topics)
        for j, topic in enumerate(slice_topics)
        for rank, term in enumerate(topic, start=1)]
    write_csv(run.output(args.out), ['label', 'topic', 'rank', 'term'], rows)
    return EXIT_OK


def eval_popularity(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    topics = topic_set(checkpoint, corpus, args.top)
    key_terms = read_key_terms(run.input(args.key_terms))

    names = sorted(key_terms)
    resolved = {
        name: [resolve_term(corpus.vocabulary, term) for term in key_terms[name]] for name in names}
    columns = [topic_popularity(topics, resolved[name]) for name in names]
    rows = [[label] + [fmt(c[t]) for c in columns] for t, label in enumerate(topics.labels)]
    write_csv(run.output(args.out), ['label'] + names, rows)
    return EXIT_OK


def resolve_term(vocabulary: Vocabulary, term: str) -> str:
    try:
        return vocabulary.resolve(term)
    except ValueError:
        return term


def eval_drift(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    topics = topic_set(checkpoint, corpus, args.top)
    first = topics.labels.index(args.first) if args.first else 0
    last = topics.labels.index(args.last) if args.last else topics.T - 1
    drift = topic_term_drift(topics.slice_terms(first), topics.slice_terms(last))
    write_csv(
        run.output(args.out),
        ['first', 'last', 'topic_term_drift'],
        [[topics.labels[first], topics.labels[last], fmt(drift)]])
    if args.per_topic:
        write_csv(
            run.output(args.per_topic),
            ['topic', 'drift', 'first_terms', 'last_terms'],
            [[d.topic, fmt(d.drift), ' '.join(d.first_terms), ' '.join(d.last_terms)]
             for d in topic_drifts(topics, first, last)])
    return EXIT_OK


def eval_focus(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    topics = topic_set(checkpoint, corpus, args.top)
    if args.anchors:
        anchors = [topics.labels.index(label) for label in args.anchors]
    else:
        anchors = list(range(0, topics.T, args.every))
    rows = [[c.first, c.second, fmt(c.similarity)] for c in focus_change(topics, anchors)]

    if args.key_terms:
        key_terms = read_key_terms(run.input(args.key_terms))
        for name in sorted(key_terms):
            terms = [resolve_term(corpus.vocabulary, term) for term in key_terms[name]]
            for t, value in enumerate(adjacent_similarity(topics, terms), start=1):
                rows.append([f'{name}:{topics.labels[t - 1]}', topics.labels[t], fmt(value)])

    write_csv(run.output(args.out), ['first', 'second', 'similarity'], rows)
    return EXIT_OK


def eval_trend(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    topics = topic_set(checkpoint, corpus, args.top)
    rows = []
    for keyword in args.keyword:
        trend = keyword_trend(topics, keyword, corpus)
        rows.append([
            trend.keyword,
            ''.join(str(b) for b in trend.bits),
            trend.span,
            trend.count,
            fmt(trend.span_dict)])
    write_csv(run.output(args.out), ['keyword', 'trend', 'span', 'count', 'span_dict'], rows)
    return EXIT_OK


def eval_span(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    topics = topic_set(checkpoint, corpus, args.top)
    value = avg_span(topics, corpus)
    write_csv(
        run.output(args.out),
        ['unique_topic_terms', 'avg_span'],
        [[len(topics.unique_terms()), fmt(value)]])
    return EXIT_OK


def eval_coherence(args: Namespace, run: Run) -> int:
    checkpoint, corpus = load_model(run, args)
    topics = topic_set(checkpoint, corpus, args.top)
    table = CooccurrenceTable.load(run.input(args.cooccurrence))
    rows = [[s.label, fmt(s.mean), fmt(s.median)] for s in coherence_summary(topics, table)]
    write_csv(run.output(args.out), ['label', 'mean_coherence', 'median_coherence'], rows)
    if args.per_topic:
        write_csv(
            run.output(args.per_topic),
            ['label', 'topic', 'coherence', 'terms'],
            [[r.label, r.topic, fmt(r.score), ' '.join(r.terms)] for r in ranked_coherence(topics, table)])
    return EXIT_OK


EVALUATIONS = {
    'perplexity': eval_perplexity,
    'timestamp': eval_timestamp,
    'topics': eval_topics,
    'popularity': eval_popularity,
    'drift': eval_drift,
    'focus': eval_focus,
    'trend': eval_trend,
    'span': eval_span,
    'coherence': eval_coherence,
}


def get_evaluation(name: str):
    try:
        return EVALUATIONS[name]
    except KeyError:
        raise KeyError(f'{name} is not a known evaluation')


def cmd_eval(args: Namespace) -> int:
    config = {k: v for k, v in vars(args).items() if k not in ('func', 'workdir', 'threads', 'log_level')}
    run = Run(args, f'eval {args.metric}', config, getattr(args, 'seed', None))
    status = get_evaluation(args.metric)(args, run)
    run.finish()
    return status


def cmd_cooccurrence(args: Namespace) -> int:
    run = Run(args, 'cooccurrence', dict(window=args.window))
    vocabulary = None
    if args.corpus:
        vocabulary = run.corpus(args.corpus, args.vocab).vocabulary
    table = build_cooccurrence(run.input(args.reference), args.window, vocabulary)
    table.save(run.output(args.out))
    run.finish()
    return EXIT_OK


def cmd_oracle(args: Namespace) -> int:
    config = dict(
        fd_epsilon=args.fd_epsilon, tolerance=args.tolerance, max_coordinates=args.max_coordinates)
    run = Run(args, 'oracle', config, args.seed)

    if args.checkpoint:
        checkpoint, corpus = load_model(run, args)
        params = checkpoint.params
        activation = checkpoint.config.activation
        scale_visible_sum = checkpoint.config.scale_visible_sum
    else:
        params, corpus = tiny_instance(seed=args.seed)
        activation, scale_visible_sum = 'tanh', False

    report = run_battery(
        params,
        corpus,
        fd_epsilon=args.fd_epsilon,
        tolerance=args.tolerance,
        activation=activation,
        scale_visible_sum=scale_visible_sum,
        max_coordinates=args.max_coordinates,
        rng=np.random.default_rng(args.seed))

    rows = [[c.name, fmt(c.value), fmt(c.tolerance), int(c.passed)] for c in report.checks]
    write_csv(run.output(args.out), ['check', 'value', 'tolerance', 'passed'], rows)
    run.finish()
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def add_train_arguments(parser: ArgumentParser) -> None:
    parser.add_argument('--epochs', type=int, default=DEFAULTS.epochs)
    parser.add_argument('--cd-k', type=int, default=DEFAULTS.cd_k)
    parser.add_argument('--lr', type=float, default=DEFAULTS.learning_rate)
    parser.add_argument('--hidden', type=int, default=DEFAULTS.hidden)
    parser.add_argument('--recurrent', type=int, default=DEFAULTS.recurrent)
    parser.add_argument('--seed', type=int, default=DEFAULTS.seed)
    parser.add_argument('--early-stop', type=int, default=DEFAULTS.early_stop_patience)
    parser.add_argument('--eval-every', type=int, default=DEFAULTS.eval_every)
    parser.add_argument('--momentum', type=float, default=DEFAULTS.momentum)
    parser.add_argument('--weight-decay', type=float, default=DEFAULTS.weight_decay)
    parser.add_argument('--clip-norm', type=float, default=DEFAULTS.clip_norm)
    parser.add_argument('--no-clip', action='store_true')
    parser.add_argument(
        '--cd-mean-field-final', action='store_true', default=DEFAULTS.mean_field_final)
    parser.add_argument(
        '--no-cd-mean-field-final', dest='cd_mean_field_final', action='store_false')
    parser.add_argument(
        '--recurrent-activation', choices=['tanh', 'logistic'], default=DEFAULTS.activation)
    parser.add_argument('--scale-visible-sum', action='store_true', default=DEFAULTS.scale_visible_sum)
    parser.add_argument('--warm-start', action='store_true', default=DEFAULTS.warm_start)
    parser.add_argument('--no-warm-start', dest='warm_start', action='store_false')
    parser.add_argument('--warm-start-epochs', type=int, default=DEFAULTS.warm_start_epochs)
    parser.add_argument('--batch-size', type=int, default=DEFAULTS.batch_size)
    parser.add_argument('--z-mode', choices=['auto', 'exact', 'ais'], default=DEFAULTS.z_mode)


def add_model_arguments(parser: ArgumentParser) -> None:
    parser.add_argument('--checkpoint', required=True, help='Checkpoint JSON file')
    parser.add_argument('--corpus', required=True, help='Corpus manifest to evaluate')
    parser.add_argument('--vocab', help='Vocabulary file used to ingest the corpus')
    parser.add_argument('--out', help='CSV output file; standard output when absent')


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='tempora', description='Temporal topic modelling with RNN-RSM')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--workdir', default='.', help='Directory all relative paths resolve against')
    parser.add_argument('--threads', type=int, default=None, help='Worker threads (default: TEMPORA_THREADS or all cores)')
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    commands = parser.add_subparsers(dest='command', required=True)

    ingest_parser = commands.add_parser('ingest', help='Parse a corpus and report slice statistics')
    ingest_parser.add_argument('manifest')
    ingest_parser.add_argument('--vocab')
    ingest_parser.add_argument('--out', help='Directory to write the normalised corpus to')
    ingest_parser.add_argument('--stats', help='CSV file for the statistics table')
    ingest_parser.set_defaults(func=cmd_ingest)

    train_parser = commands.add_parser('train', help='Train an RNN-RSM')
    train_parser.add_argument('corpus', help='Corpus manifest')
    train_parser.add_argument('--out', default='model.json', help='Checkpoint file')
    train_parser.add_argument('--vocab')
    train_parser.add_argument('--held', help='Manifest of held-out documents for early stopping')
    train_parser.add_argument('--held-out', type=int, default=0, help='Documents per slice to hold out')
    train_parser.add_argument('--history', default='history.csv', help='Training log CSV')
    train_parser.add_argument('--sidecar', action='store_true', help='Store parameters in a .npz sidecar')
    add_train_arguments(train_parser)
    train_parser.set_defaults(func=cmd_train)

    eval_parser = commands.add_parser('eval', help='Evaluate a checkpoint')
    metrics = eval_parser.add_subparsers(dest='metric', required=True)

    for name in ('perplexity', 'timestamp'):
        p = metrics.add_parser(name)
        add_model_arguments(p)
        p.add_argument('--context', help='Manifest of the documents that drive the recurrent state')
        p.add_argument('--z-mode', choices=['auto', 'exact', 'ais'], default='auto')
        p.add_argument('--seed', type=int, default=0)
        if name == 'perplexity':
            p.add_argument('--document-average', action='store_true')

    p = metrics.add_parser('topics')
    add_model_arguments(p)
    p.add_argument('--top', type=int, default=DEFAULT_TOP_N)

    p = metrics.add_parser('popularity')
    add_model_arguments(p)
    p.add_argument('--top', type=int, default=DEFAULT_TOP_N)
    p.add_argument('--key-terms', required=True, help='JSON file of named key-term sets')

    p = metrics.add_parser('drift')
    add_model_arguments(p)
    p.add_argument('--top', type=int, default=DEFAULT_TOP_N)
    p.add_argument('--first', help='Label of the first slice (default: earliest)')
    p.add_argument('--last', help='Label of the last slice (default: latest)')
    p.add_argument('--per-topic', help='CSV of per-topic drift, largest first')

    p = metrics.add_parser('focus')
    add_model_arguments(p)
    p.add_argument('--top', type=int, default=DEFAULT_TOP_N)
    p.add_argument('--anchors', nargs='+', help='Slice labels to compare pairwise')
    p.add_argument('--every', type=int, default=5, help='Anchor spacing when --anchors is absent')
    p.add_argument('--key-terms', help='Also report adjacent-slice similarity per key-term set')

    p = metrics.add_parser('trend')
    add_model_arguments(p)
    p.add_argument('--top', type=int, default=DEFAULT_TOP_N)
    p.add_argument('--keyword', action='append', required=True)

    p = metrics.add_parser('span')
    add_model_arguments(p)
    p.add_argument('--top', type=int, default=DEFAULT_TOP_N)

    p = metrics.add_parser('coherence')
    add_model_arguments(p)
    p.add_argument('--top', type=int, default=DEFAULT_TOP_N)
    p.add_argument('--cooccurrence', required=True, help='Co-occurrence table JSON')
    p.add_argument('--per-topic', help='CSV of per-topic coherence, highest first')

    eval_parser.set_defaults(func=cmd_eval)

    cooccurrence_parser = commands.add_parser('cooccurrence', help='Count reference-corpus co-occurrence')
    cooccurrence_parser.add_argument('reference', help='Plain-text reference corpus')
    cooccurrence_parser.add_argument('--out', default='cooccurrence.json')
    cooccurrence_parser.add_argument('--window', type=int, default=DEFAULT_WINDOW)
    cooccurrence_parser.add_argument('--corpus', help='Restrict counts to this corpus vocabulary')
    cooccurrence_parser.add_argument('--vocab')
    cooccurrence_parser.set_defaults(func=cmd_cooccurrence)

    oracle_parser = commands.add_parser('oracle', help='Run the exact verification battery')
    oracle_parser.add_argument('--checkpoint')
    oracle_parser.add_argument('--corpus')
    oracle_parser.add_argument('--vocab')
    oracle_parser.add_argument('--out')
    oracle_parser.add_argument('--fd-epsilon', type=float, default=1e-5)
    oracle_parser.add_argument('--tolerance', type=float, default=1e-4)
    oracle_parser.add_argument('--seed', type=int, default=0)
    oracle_parser.add_argument(
        '--max-coordinates', type=int, default=200,
        help='Coordinates sampled per finite-difference check')
    oracle_parser.set_defaults(func=cmd_oracle)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        stream=sys.stderr,
        format='%(asctime)s %(name)s %(levelname)s %(message)s')

    try:
        args.threads = resolve_threads(args.threads)
        if args.command == 'oracle' and bool(args.checkpoint) != bool(args.corpus):
            raise ValueError('--checkpoint and --corpus must be given together')
        return args.func(args)
    except NumericalError as e:
        logger.error(f'Numerical abort: {e}')
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as e:
        logger.error(str(e))
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())

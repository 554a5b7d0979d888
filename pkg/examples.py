import json
import logging

import numpy as np

from tempora import TrainConfig, Trainer, exact_sequence_cost, extract_topic_set, split_held_out, \
    sum_perplexity, timestamp_predictions, topic_popularity, run_battery
from tempora.synthetic import region_corpus, tiny_instance


def region_example():
    corpus = region_corpus(T=3, terms_per_slice=10, docs_per_slice=30)
    train, held = split_held_out(corpus, 5, seed=0)

    config = TrainConfig(
        epochs=300,
        cd_k=5,
        learning_rate=0.01,
        hidden=5,
        recurrent=5,
        warm_start=False,
        eval_every=50,
        z_mode='exact')

    trainer = Trainer(train, config, held)
    best = trainer.run()
    print(f'best held-out SumPPL {best.held_out_perplexity:.3f} at epoch {best.epoch}')
    print(f'exact training cost {exact_sequence_cost(best.params, train):.3f}')

    ppl = sum_perplexity(best.params, held, context=train, z_mode='exact')
    print(json.dumps(dict(zip(ppl.labels, ppl.values)), indent=4))

    predictions = timestamp_predictions(best.params, held, context=train, z_mode='exact')
    accuracy = np.mean([p.true_slice == p.predicted_slice for p in predictions])
    print(f'time-stamp accuracy {accuracy:.2f}')

    topics = extract_topic_set(best.params, train, top_n=10)
    for t, label in enumerate(topics.labels):
        region = corpus.vocabulary.terms[t * 10:(t + 1) * 10]
        print(label, topic_popularity(topics, region), topics.topics[t][0])


def oracle_example():
    params, corpus = tiny_instance(seed=1)
    report = run_battery(params, corpus)
    for check in report.checks:
        print(f'{check.name:>18} {check.value:.3e} {"ok" if check.passed else "FAILED"}')


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    # oracle_example()
    region_example()

__version__ = '0.1.0'

from .corpus import Vocabulary, Document, TimeSlice, TemporalCorpus, ingest, \
    write_corpus, split_held_out, split_fraction
from .rsm import RsmParams, BiasOverride, RsmGradient, hidden_activation, \
    visible_distribution, sample_document, free_energy, cd_gradient
from .rnnrsm import RnnRsmParams, RnnRsmGradient, UnrolledState, forward, \
    sequence_gradient, tanh_backward, logistic_backward
from .oracle import exact_log_z, exact_log_prob, exact_rsm_gradient, \
    exact_slice_gradient, exact_sequence_cost, estimate_log_z, \
    finite_difference_check, run_battery
from .metrics import TopicSet, TrendSequence, perplexity, sum_perplexity, \
    predict_timestamp, timestamp_predictions, mean_absolute_error_years, \
    extract_topics, extract_topic_set, set_cosine, topic_popularity, \
    topic_term_drift, focus_change, adjacent_similarity, keyword_trend, avg_span
from .coherence import CooccurrenceTable, build_cooccurrence, npmi, coherence, \
    coherence_summary
from .trainer import TrainConfig, Checkpoint, Trainer, warm_start, train, \
    train_static_rsm, train_static_sequence, save_checkpoint, load_checkpoint

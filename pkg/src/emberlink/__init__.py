"""emberlink: entity resolution from word-embedding tuple representations.

Tuples become dense vectors (per-attribute averaging or a shared LSTM),
pairs become similarity vectors, a small trainable head classifies
match/non-match, and cosine-LSH blocking with multi-probe search keeps
the comparison count sub-quadratic.
"""

from .blocking import (
    HyperplaneFamily,
    LshConfig,
    LshIndex,
    TuningGoal,
    block_pairs,
    build_index,
    candidates_multiprobe,
    hash_code,
    sample_hyperplanes,
    topn_filter,
    tune_params,
)
from .classifier import (
    DenseHead,
    TrainConfig,
    TrainedModel,
    inject_noise,
    kfold_eval,
    load_model,
    positive_threshold,
    predict,
    sample_negatives,
    save_model,
    train,
)
from .compose import TokenSeq, TupleDR, compose_avg, compose_lstm, tokenize
from .data_model import (
    LabeledPair,
    Record,
    Schema,
    Table,
    align_schemas,
    load_matches,
    load_table,
    write_matches,
    write_table,
)
from .embeddings import (
    CoverageReport,
    EmbeddingDictionary,
    coverage,
    load_embedding_text,
    lookup,
    save_embedding_text,
)
from .errors import (
    ConfigError,
    ContractError,
    DivergenceError,
    EmberlinkError,
    FormatError,
    IntegrityError,
    PreconditionError,
    TrainingError,
)
from .lstm import LstmParams, init_lstm_params
from .metrics import (
    BlockingReport,
    MatchReport,
    pair_completeness,
    precision_recall_f1,
    reduction_ratio,
)
from .retrofit import CoocGraph, RetrofitConfig, build_graph, init_oov, retrofit
from .similarity import (
    sim_cosine_per_attr,
    sim_difference,
    sim_hadamard,
    similarity_vector,
    whole_tuple_cosine,
)
from .synth import SynthConfig, generate, write_benchmark

__version__ = "0.1.0"

"""Toolkit for code-switched ASR pipelines: corpus statistics, n-gram language
modelling with code-switch perplexity decomposition, language-tagged WER/CBA
scoring, confidence-based selection of automatic transcriptions, and a
closed-loop simulator."""

from .alignscore import (
    Alignment,
    ScoreReport,
    aggregate_scores,
    align,
    cba,
    score_corpus,
    score_utterance,
)
from .corpus import (
    CorpusStats,
    Family,
    LanguageId,
    Lexicon,
    ParseConfig,
    TaggedUtterance,
    TagPolicy,
    Token,
    UttClass,
    UttKind,
    classify_utterance,
    corpus_stats,
    language,
    load_lexicon,
    load_lexicons,
    parse_data_dir,
    parse_text_file,
    tag_tokens,
    write_data_dir,
)
from .errors import CswitchError, DataError, OOVWordError
from .ngramlm import (
    AddK,
    EvalConfig,
    InterpolatedModel,
    ModifiedKneserNey,
    NGramCounts,
    NGramModel,
    PerplexityReport,
    WittenBell,
    count_ngrams,
    interpolate_em,
    perplexity,
    prob,
    read_arpa,
    train_lm,
    write_arpa,
)
from .semisup import (
    CandidateTranscription,
    Manifest,
    SelectionResult,
    TrainingSet,
    emit_manifest,
    merge_training_sets,
    read_candidates,
    select_best,
)
from .simrec import (
    LoopConfig,
    LoopReport,
    NoiseProfile,
    NoiseRates,
    ProxyRecognizer,
    corrupt,
    recognize,
    retrain,
    run_loop,
)

__version__ = "0.1.0"

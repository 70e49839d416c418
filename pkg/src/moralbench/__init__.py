"""moralbench: benchmark construction and evaluation for story-moral corpora.

The toolkit ingests story-moral pairs, fits a topic model over morals,
builds four task datasets (moral selection by concept, moral selection by
value preference, story-to-moral, moral-to-story) plus faithfulness
classifier data, runs dense retrieval augmentation, and computes the
automatic metrics, all deterministically at desk scale.
"""

from .corpus import (
    Corpus,
    CorpusStats,
    StoryMoralPair,
    corpus_stats,
    load_corpus,
    make_pair,
    save_corpus,
    split_corpus,
    split_sentences,
    tokenize,
)
from .errors import (
    MoralBenchError,
    ResourceError,
    UnassignableDocumentError,
    ValidationError,
)
from .harness import (
    CandidateScorer,
    RandomBaseline,
    evaluate_generation,
    evaluate_understanding,
    random_chooser,
    score_candidates,
)
from .metrics import (
    BatchItem,
    GenerationBatch,
    MetricReport,
    accuracy,
    avg_length,
    bleu_n,
    coverage,
    distinct_n,
    order_score,
    repetition_n,
)
from .outline import Outline, Phrase, build_outline, first_sentence, rake_extract
from .resources import Lemmatizer, PosLexicon, ResourceSet, load_resources
from .retrieval import (
    ConceptList,
    ExternalVectorStore,
    HashedBowEmbedding,
    RetrievalResources,
    StoryIndex,
    augment_story,
    build_index,
    extract_concepts,
    retrieve,
    retrieve_outlines,
)
from .taskgen import (
    FaithPairRecord,
    Mo2StRecord,
    MoCptRecord,
    MoPrefRecord,
    St2MoRecord,
    build_faithfulness_data,
    build_mo2st,
    build_mocpt,
    build_mopref,
    build_st2mo,
)
from .topics import (
    LdaParams,
    SpecificityReport,
    TopicCountSelection,
    TopicModel,
    assign_topic,
    fit_lda,
    select_topic_count,
    specificity,
    specificity_report,
    top_words,
)

__version__ = "0.1.0"

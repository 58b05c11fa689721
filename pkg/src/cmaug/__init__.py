"""Feature-space multimodal data augmentation for text-video retrieval.

The package covers the full loop: synthetic corpus generation, semantic-class
extraction from captions, same-class candidate selection, stochastic convex
feature mixing (plus noise and synonym-replacement baselines), a dual-encoder
trainer with mined contrastive loss, and semantic ranking metrics (mAP, nDCG,
recall, Rsum).
"""

from .augment import (
    AugmentConfig,
    AugmentedPair,
    AugmentTarget,
    BetaWeight,
    FixedWeight,
    MixRecord,
    NoiseInjection,
    SynonymReplacement,
    augment_pair,
    augment_sample,
    convex_mix,
    mix_caption_features,
    mix_video_features,
    noise_injection,
    sample_mix_weight,
    synonym_replacement,
)
from .corpus import (
    Annotation,
    ConfigError,
    Corpus,
    CorpusFormatError,
    CorpusValidationError,
    GenConfig,
    PairedSample,
    SemanticClassTable,
    build_class_table,
    class_prototypes,
    generate_synthetic,
    load_corpus,
    save_corpus,
    split_corpus,
)
from .metrics import (
    RankedResult,
    average_precision,
    evaluate,
    full_report,
    ndcg,
    rank_gallery,
    recall_at_k,
    relevance_matrix,
    rsum,
    semantic_relevance,
)
from .selection import CandidateIndex, SelectionMode, build_index
from .semantics import Lexicon, Segment
from .trainer import (
    DualEncoder,
    Featurizer,
    Mining,
    MiningLog,
    TrainConfig,
    TrainingDiverged,
    TrainResult,
    contrastive_loss,
    load_checkpoint,
    save_checkpoint,
    score_matrix,
    similarity,
    text_video_scores,
    train,
)

__version__ = "0.1.0"

"""Structured signal extraction from job postings.

Cleans raw postings, splits them into token-bounded chunks, retrieves the
most relevant context per variable, annotates through pluggable backends
with schema-constrained prompts, canonicalizes labels into closed sets, and
scores predictions with composite-label metrics.
"""

from .annotate import (
    AnnotationConfig,
    AnnotationRecord,
    AnnotationStatus,
    annotate_batch,
    annotate_posting,
    annotate_variable,
)
from .backends import (
    AnnotationBackend,
    BackendKind,
    ClassifierServiceBackend,
    Completion,
    CompletionRequest,
    HttpLlmBackend,
    MockBackend,
    RuleBackend,
)
from .canonical import CanonicalizationMap, canonicalize_label, parse_backend_response
from .chunking import Chunk, chunk_text
from .config import PipelineConfig
from .evaluate import (
    EvalReport,
    LabeledPair,
    composite_label,
    evaluate_pairs,
    export_training_data,
    metrics,
    render_report,
    sub_variable_accuracy,
    train_test_split,
)
from .ingest import (
    CleanPosting,
    CorpusStats,
    RawPosting,
    clean_text,
    corpus_stats,
    dedup,
    detect_english,
    filter_null_heavy,
    stratified_sample,
)
from .retrieval import (
    ChunkIndex,
    HashingEmbedder,
    RemoteEmbeddingProvider,
    RetrievalConfig,
    embed_chunks,
    query_top_k,
    retrieve_context,
)
from .rules import RuleSet, extract_signals, preprocess_negations
from .signals import (
    Education,
    EducationLevel,
    Experience,
    JobSignals,
    Remuneration,
    RemoteType,
    RequirementLevel,
    Variable,
    validate_signals,
)

__version__ = "0.1.0"

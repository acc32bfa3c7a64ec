"""Human-in-the-loop incident-response assistant.

Pipeline: SIEM alert parsing -> word-vector embedding -> sliding-window
dedup -> weighted kNN triage -> layered knowledge graph -> graph-backed
context retrieval -> LLM suggestion cards -> analyst decisions -> case
tickets. Everything runs offline by default (builtin lexicon, scripted
suggestion provider, in-memory case backend).
"""

from .alerts import (
    Alert,
    AlertParseError,
    TriageLabel,
    alert_text,
    parse_alert,
    read_alert_file,
)
from .cases import (
    CaseError,
    CaseTicket,
    FakeCaseBackend,
    HttpCaseBackend,
    TicketStatus,
    create_ticket,
    link_ticket,
)
from .classifier import (
    KnnConfig,
    LabeledExample,
    Metrics,
    classify,
    evaluate_cv,
    f1_score,
    fit_weight,
)
from .config import ServiceConfig, build_pipeline, load_config
from .dedup import DedupConfig, DedupFilter, DedupVerdict, OutOfOrderTimestamp
from .embedding import (
    EmbeddingVector,
    Lexicon,
    builtin_lexicon,
    cosine_similarity,
    embed,
    load_lexicon,
    save_lexicon,
)
from .evaluation import (
    CorpusSpec,
    UnsatisfiableSpec,
    generate_corpus,
    load_labeled_corpus,
    run_classifier_eval,
    run_dedup_eval,
)
from .graph import (
    GraphEdge,
    GraphNode,
    LayeredGraph,
    NodeKind,
    Relation,
    load_static,
    neighborhood,
    record_alert,
    record_ticket,
)
from .pipeline import (
    Decision,
    Feedback,
    Pipeline,
    PipelineEvent,
    RunReport,
    Stage,
    Verdict,
)
from .retrieval import ContextBundle, ContextItem, RetrievalConfig, retrieve
from .suggestions import (
    ActionItem,
    HttpChatProvider,
    PromptTemplate,
    ProviderRequest,
    ProviderResponse,
    ScriptedProvider,
    SuggestionCard,
    default_template,
    generate_card,
    parse_response,
)

__version__ = "0.1.0"

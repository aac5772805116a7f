"""Process mining for information-seeking conversation transcripts."""

from ._kernel import BACKEND
from .conformance import (
    Alignment,
    CostFunction,
    FitnessReport,
    Move,
    TraceFitness,
    log_fitness,
    optimal_alignment,
    optimal_cost,
    trace_fitness,
    worst_case_cost,
)
from .discovery import (
    EpisodePattern,
    SuccessionStats,
    TransitionGraph,
    directly_follows,
    extract_model,
    mine_episodes,
    mine_succession,
)
from .evaluation import (
    ErrorDetectionMetrics,
    SuccessPrediction,
    dataset_report,
    predict_success,
    score_error_detection,
)
from .ingest import (
    MappingTable,
    RawConversation,
    apply_mapping,
    builtin_mapping,
    parse_mapping,
    parse_transcripts,
)
from .log import (
    END,
    START,
    Conversation,
    CoreLabel,
    EventLog,
    Label,
    SubLabel,
    Trace,
    Utterance,
    log_statistics,
    reduce_to_log,
)
from .model import (
    ModelDefinition,
    ProcessNet,
    builtin_cor,
    builtin_qrfa,
    from_definition,
    from_transition_graph,
    generate_traces,
    to_dot,
)

__version__ = "0.1.0"

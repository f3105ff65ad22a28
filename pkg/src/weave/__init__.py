"""Evolutionary search engine for EEG analysis-pipeline scripts.

The engine probes a raw data directory for signal constraints, retrieves
architectural priors from a local model-card catalog, conditions a
generative backend to draft candidate pipeline scripts, executes them in a
sandbox under a time budget, scores them with a five-term composite reward,
and evolves a solution tree by refining functional candidates and debugging
broken ones until convergence.
"""

from .catalog import (
    Catalog,
    ModelCard,
    PriorDigest,
    default_catalog,
    load_catalog,
    select_candidates,
    summarize_priors,
)
from .config import AblationFlags, BackendConfig, RunConfig, SearchConfig
from .gateway import (
    GenerationResult,
    MockBackend,
    PromptContext,
    RemoteBackend,
    Role,
    TaskSpec,
    build_prompt,
    generate,
)
from .orchestrator import (
    Action,
    RunReport,
    emit_report,
    route_action,
    run_from_config,
    run_search,
    select_expansion,
)
from .probe import (
    ArtifactQuality,
    ConstraintVector,
    IntrinsicAttributes,
    RecordingInventory,
    extract_constraints,
    parse_edf_header,
    scan_directory,
)
from .reward import (
    RewardBreakdown,
    RewardWeights,
    compose_reward,
    efficiency_term,
    lexical_novelty,
    novelty_term,
)
from .sandbox import (
    ExecOptions,
    ExecStatus,
    ExecutionOutcome,
    MetricReport,
    execute,
    parse_metrics,
    validate_environment,
)
from .spectral import estimate_band_ratio, estimate_powerline
from .tree import (
    LineageTrace,
    NodeStatus,
    Origin,
    SolutionNode,
    SolutionTree,
    TreeJournal,
    replay_journal,
)

__version__ = "0.1.0"

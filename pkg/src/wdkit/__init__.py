"""Corpus-to-report harness for workflow discovery from dialogues.

Load a dialogue corpus, cast it to input/target text pairs for workflow,
action, or turn prediction, send inputs to a generation backend, parse the
generations back into structure, and score them.
"""

from wdkit.corpus import (
    Corpus,
    Diagnostic,
    Dialogue,
    GoldTurn,
    NextStep,
    Speaker,
    Split,
    StepDomain,
    Utterance,
    Workflow,
    WorkflowStep,
    derive_workflow,
    load_abcd,
    load_multiwoz,
)
from wdkit.domains import builtin_domain, builtin_domain_tags
from wdkit.experiments import (
    SplitKind,
    SplitSpec,
    few_shot_sample,
    holdout_step,
    run_experiment,
)
from wdkit.flowparse import (
    ParsedAST,
    ParsedCDS,
    ParsedWD,
    parse_ast,
    parse_cds,
    parse_wd,
)
from wdkit.inference import (
    GenLimits,
    GenRequest,
    GenResponse,
    generate_http,
    generate_oracle,
    generate_replay,
)
from wdkit.metrics import (
    ASTScore,
    CDSScore,
    WDScore,
    align,
    ast_score,
    cascading_eval,
    cds_score,
    evaluate,
    exact_match,
)
from wdkit.stepmatch import (
    MISSING_STEP,
    MatchConfig,
    MatchMode,
    SimilarityProvider,
    lexical_provider,
    match_step,
    normalize,
    remote_provider,
)
from wdkit.taskcast import (
    CastConfig,
    CastSample,
    Task,
    cast_ast,
    cast_cds,
    cast_corpus,
    cast_wd,
)

__version__ = "0.1.0"

__all__ = [
    "ASTScore",
    "CDSScore",
    "CastConfig",
    "CastSample",
    "Corpus",
    "Diagnostic",
    "Dialogue",
    "GenLimits",
    "GenRequest",
    "GenResponse",
    "GoldTurn",
    "MISSING_STEP",
    "MatchConfig",
    "MatchMode",
    "NextStep",
    "ParsedAST",
    "ParsedCDS",
    "ParsedWD",
    "SimilarityProvider",
    "Speaker",
    "Split",
    "SplitKind",
    "SplitSpec",
    "StepDomain",
    "Task",
    "Utterance",
    "WDScore",
    "Workflow",
    "WorkflowStep",
    "align",
    "ast_score",
    "builtin_domain",
    "builtin_domain_tags",
    "cascading_eval",
    "cast_ast",
    "cast_cds",
    "cast_corpus",
    "cast_wd",
    "cds_score",
    "derive_workflow",
    "evaluate",
    "exact_match",
    "few_shot_sample",
    "generate_http",
    "generate_oracle",
    "generate_replay",
    "holdout_step",
    "lexical_provider",
    "load_abcd",
    "load_multiwoz",
    "match_step",
    "normalize",
    "parse_ast",
    "parse_cds",
    "parse_wd",
    "remote_provider",
    "run_experiment",
]

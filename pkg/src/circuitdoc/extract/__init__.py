from .generators import (
    GeneratorClient,
    GeneratorExhausted,
    RecordingGenerator,
    ScriptedGenerator,
    SubprocessGenerator,
    TranscriptGenerator,
)
from .iro import IroState, Query, build_prompt, iro_run, iro_step, retrieval_query
from .params import ParamRecord, format_params, parse_param_text, records_from_json, records_to_json
from .priority import SearchResult, collect_by_priority, po_search, priority_order
from .retrieval import Corpus, retrieve, score_documents, tokenize

__all__ = [
    "Corpus",
    "GeneratorClient",
    "GeneratorExhausted",
    "IroState",
    "ParamRecord",
    "Query",
    "RecordingGenerator",
    "ScriptedGenerator",
    "SearchResult",
    "SubprocessGenerator",
    "TranscriptGenerator",
    "build_prompt",
    "collect_by_priority",
    "format_params",
    "iro_run",
    "iro_step",
    "parse_param_text",
    "po_search",
    "priority_order",
    "records_from_json",
    "records_to_json",
    "retrieval_query",
    "retrieve",
    "score_documents",
    "tokenize",
]

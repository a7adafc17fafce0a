from .backends import BackendCall, BackendError, HttpChatBackend, LlmBackend, MockBackend, ModelParams, ReplayBackend
from .extraction import (
    BuildingContext,
    ConsistencyReport,
    ExtractionFailed,
    ExtractionRequest,
    consistency_run,
    extract,
    read_features,
    write_features,
)
from .parsing import (
    LENIENT,
    STRICT,
    FacadeFeatures,
    Issue,
    ParseOutcome,
    ResponseParseError,
    ValidationReport,
    parse_response,
)
from .prompt import PLACEHOLDER, PromptError, default_template, encode_image, render_prompt, requested_fields
from .schema import ELEMENTS, FEATURE_SCHEMA, FIELD_NAMES, NA, SCALE_FIELDS, SCHEMA_BY_NAME, FieldSpec, Kind

__all__ = [
    "BackendCall",
    "BackendError",
    "BuildingContext",
    "ConsistencyReport",
    "ELEMENTS",
    "ExtractionFailed",
    "ExtractionRequest",
    "FEATURE_SCHEMA",
    "FIELD_NAMES",
    "FacadeFeatures",
    "FieldSpec",
    "HttpChatBackend",
    "Issue",
    "Kind",
    "LENIENT",
    "LlmBackend",
    "MockBackend",
    "ModelParams",
    "NA",
    "PLACEHOLDER",
    "ParseOutcome",
    "PromptError",
    "ReplayBackend",
    "ResponseParseError",
    "SCALE_FIELDS",
    "SCHEMA_BY_NAME",
    "STRICT",
    "ValidationReport",
    "consistency_run",
    "default_template",
    "encode_image",
    "extract",
    "parse_response",
    "read_features",
    "render_prompt",
    "requested_fields",
    "write_features",
]

"""Numerical tensor calculus for Finslerized absolute parallelism spaces."""
from .classify import (
    ChartMap,
    Classification,
    chart_transform_check,
    classification_samples,
    classify,
    verify_special_tables,
)
from .connections import ALL_KINDS, ConnectionKind, ConnectionTriple, ContortionPair, FPContext
from .document import BUNDLED, FrameDocument, load_bundled, load_frame_document, parse_frame_document
from .dsl import evaluate, parse_expression
from .errors import (
    DomainError,
    FPError,
    JetOrderError,
    NotPositiveDefiniteError,
    ParseError,
    SamplingError,
    SingularFrameError,
)
from .identities import IdentityResidual, check_identities, identity_check, identity_names
from .frame import Frame, Tensor, frame_from_metric, sample_points, validate_structure
from .jets import EvalPoint, JetArray, jet_extract, jet_lift
from .oracle import fd_derivative

__all__ = [
    "ALL_KINDS",
    "BUNDLED",
    "ChartMap",
    "Classification",
    "ConnectionKind",
    "ConnectionTriple",
    "ContortionPair",
    "DomainError",
    "EvalPoint",
    "FPContext",
    "FPError",
    "Frame",
    "FrameDocument",
    "IdentityResidual",
    "JetArray",
    "JetOrderError",
    "NotPositiveDefiniteError",
    "ParseError",
    "SamplingError",
    "SingularFrameError",
    "Tensor",
    "chart_transform_check",
    "check_identities",
    "classification_samples",
    "classify",
    "evaluate",
    "fd_derivative",
    "frame_from_metric",
    "identity_check",
    "identity_names",
    "jet_extract",
    "jet_lift",
    "load_bundled",
    "load_frame_document",
    "parse_expression",
    "parse_frame_document",
    "sample_points",
    "validate_structure",
    "verify_special_tables",
]

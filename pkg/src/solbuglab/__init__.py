"""Source-level bug analysis toolkit for Solidity contracts.

Lexes and structurally parses contract sources without a compiler, runs
pattern detectors for common bug kinds, grades severities from effect sets,
and benchmarks external tools against a labeled corpus.
"""

from .detectors import DETECTABLE_BUG_IDS, Finding, UnknownRuleError, detect_all
from .lexer import Token, TokenKind, code_tokens, lex
from .model import SourceModel
from .parser import parse, parse_file
from .taxonomy import (
    BugKind,
    BugRecord,
    Certainty,
    EffectClass,
    Severity,
    UngradeableEffectsError,
    catalog,
    catalog_ids,
    grade_severity,
    kind_by_id,
    merge_records,
)
from .versions import (
    ANY_VERSION,
    PragmaConstraint,
    VersionSyntaxError,
    parse_constraint,
    version_applies,
)

__version__ = "0.1.0"

__all__ = [
    "ANY_VERSION",
    "BugKind",
    "BugRecord",
    "Certainty",
    "DETECTABLE_BUG_IDS",
    "EffectClass",
    "Finding",
    "PragmaConstraint",
    "Severity",
    "SourceModel",
    "Token",
    "TokenKind",
    "UngradeableEffectsError",
    "UnknownRuleError",
    "VersionSyntaxError",
    "catalog",
    "catalog_ids",
    "code_tokens",
    "detect_all",
    "grade_severity",
    "kind_by_id",
    "lex",
    "merge_records",
    "parse",
    "parse_constraint",
    "parse_file",
    "version_applies",
    "__version__",
]

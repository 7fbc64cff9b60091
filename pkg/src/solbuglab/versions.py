"""Compiler version constraints parsed from ``pragma solidity`` directives.

Versions are three-part tuples (major, minor, patch).  A constraint is a
half-open range [lower, upper) where either bound may be absent (unbounded).
All comparison forms found in pragmas are normalized into that shape:

    ^X.Y.Z        -> [X.Y.Z, X.(Y+1).0)     same minor series
    ~X.Y.Z        -> [X.Y.Z, X.(Y+1).0)
    =X.Y.Z, X.Y.Z -> [X.Y.Z, X.Y.(Z+1))    pinned
    >=X.Y.Z       -> [X.Y.Z, +inf)
    >X.Y.Z        -> [X.Y.(Z+1), +inf)
    <=X.Y.Z       -> [-inf, X.Y.(Z+1))
    <X.Y.Z        -> [-inf, X.Y.Z)

Multiple clauses in one directive and multiple directives in one file are
intersected.  An empty intersection is representable and matches nothing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Tuple

Version = Tuple[int, int, int]

_VERSION_RE = re.compile(r"^(\d+)(?:\.(\d+))?(?:\.(\d+))?$")
_CLAUSE_RE = re.compile(r"(\^|~|>=|<=|>|<|=)?\s*(\d+(?:\.\d+){0,2})")


class VersionSyntaxError(ValueError):
    """A version or constraint string could not be parsed."""


def parse_version(text: str) -> Version:
    m = _VERSION_RE.match(text.strip())
    if not m:
        raise VersionSyntaxError(f"not a version: {text!r}")
    major, minor, patch = (int(g) if g else 0 for g in m.groups())
    return (major, minor, patch)


def format_version(v: Version) -> str:
    return ".".join(str(n) for n in v)


def _next_patch(v: Version) -> Version:
    return (v[0], v[1], v[2] + 1)


def _next_minor(v: Version) -> Version:
    return (v[0], v[1] + 1, 0)


@dataclass(frozen=True)
class PragmaConstraint:
    """Half-open compiler version range.

    ``lower`` is inclusive, ``upper`` exclusive; ``None`` means unbounded on
    that side.  ``raw_text`` preserves the source text the range came from.
    """

    raw_text: str = ""
    lower: Optional[Version] = None
    upper: Optional[Version] = None

    def is_empty(self) -> bool:
        return (
            self.lower is not None
            and self.upper is not None
            and self.lower >= self.upper
        )

    def is_unbounded(self) -> bool:
        return self.lower is None and self.upper is None

    def contains(self, version: Version) -> bool:
        if self.is_empty():
            return False
        if self.lower is not None and version < self.lower:
            return False
        if self.upper is not None and version >= self.upper:
            return False
        return True

    def intersect(self, other: "PragmaConstraint") -> "PragmaConstraint":
        lowers = [c.lower for c in (self, other) if c.lower is not None]
        uppers = [c.upper for c in (self, other) if c.upper is not None]
        raw = " ".join(t for t in (self.raw_text, other.raw_text) if t)
        return PragmaConstraint(
            raw_text=raw,
            lower=max(lowers) if lowers else None,
            upper=min(uppers) if uppers else None,
        )

    def overlaps(self, other: "PragmaConstraint") -> bool:
        if self.is_empty() or other.is_empty():
            return False
        merged = self.intersect(other)
        return not merged.is_empty()

    def describe(self) -> str:
        if self.is_empty():
            return "<empty>"
        if self.is_unbounded():
            return "*"
        parts = []
        if self.lower is not None:
            parts.append(">=" + format_version(self.lower))
        if self.upper is not None:
            parts.append("<" + format_version(self.upper))
        return " ".join(parts)


ANY_VERSION = PragmaConstraint()


def constraint_from_clause(op: str, version: Version, raw: str = "") -> PragmaConstraint:
    if op in ("^", "~"):
        return PragmaConstraint(raw, version, _next_minor(version))
    if op in ("", "="):
        return PragmaConstraint(raw, version, _next_patch(version))
    if op == ">=":
        return PragmaConstraint(raw, version, None)
    if op == ">":
        return PragmaConstraint(raw, _next_patch(version), None)
    if op == "<=":
        return PragmaConstraint(raw, None, _next_patch(version))
    if op == "<":
        return PragmaConstraint(raw, None, version)
    raise VersionSyntaxError(f"unknown constraint operator: {op!r}")


def parse_constraint(text: str) -> PragmaConstraint:
    """Parse a constraint expression such as ``^0.4.24`` or ``>=0.4.22 <0.6.0``.

    Clauses are intersected.  ``*`` (or an empty string) means any version.
    Raises VersionSyntaxError when no clause can be read.
    """

    stripped = text.strip()
    if stripped in ("", "*"):
        return PragmaConstraint(raw_text=stripped)
    result = ANY_VERSION
    matched = False
    for m in _CLAUSE_RE.finditer(stripped):
        matched = True
        op = m.group(1) or ""
        version = parse_version(m.group(2))
        result = result.intersect(constraint_from_clause(op, version))
    if not matched:
        raise VersionSyntaxError(f"no version clause in {text!r}")
    return PragmaConstraint(stripped, result.lower, result.upper)


def version_applies(pragma: PragmaConstraint, affected: PragmaConstraint) -> bool:
    """True when the file's declared range intersects the affected range.

    Conservative on purpose: an unbounded pragma (missing or unparseable)
    intersects every non-empty affected range.
    """

    return pragma.overlaps(affected)
